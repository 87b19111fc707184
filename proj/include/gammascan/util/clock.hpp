#pragma once

#include <chrono>
#include <cstdint>
#include <functional>

namespace gammascan::util {

// Unix-seconds clock, injectable so run files can be made byte-reproducible.
using Clock = std::function<std::int64_t()>;

inline std::int64_t system_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

inline Clock system_clock() {
    return [] { return system_now(); };
}

inline Clock fixed_clock(std::int64_t t) {
    return [t] { return t; };
}

}  // namespace gammascan::util
