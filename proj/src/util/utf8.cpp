#include "gammascan/util/utf8.hpp"

#include <cstdio>

#include "gammascan/errors.hpp"

namespace gammascan::util {

void utf8_append(std::string& out, char32_t cp) {
    const std::uint32_t c = static_cast<std::uint32_t>(cp);
    if (c >= 0xD800 && c <= 0xDFFF) {
        throw InvalidValue("surrogate code point U+" + std::to_string(c) + " is not encodable");
    }
    if (c <= 0x7F) {
        out.push_back(static_cast<char>(c));
    } else if (c <= 0x7FF) {
        out.push_back(static_cast<char>(0xC0 | (c >> 6)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c <= 0xFFFF) {
        out.push_back(static_cast<char>(0xE0 | (c >> 12)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c <= 0x10FFFF) {
        out.push_back(static_cast<char>(0xF0 | (c >> 18)));
        out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
        throw InvalidValue("code point out of Unicode range");
    }
}

std::string utf8_encode(char32_t cp) {
    std::string out;
    utf8_append(out, cp);
    return out;
}

std::vector<char32_t> utf8_decode(const std::string& s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char b0 = static_cast<unsigned char>(s[i]);
        std::uint32_t cp = 0;
        std::size_t len = 0;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            len = 2;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            len = 3;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            throw InvalidValue("malformed UTF-8 lead byte at offset " + std::to_string(i));
        }
        if (i + len > s.size()) {
            throw InvalidValue("truncated UTF-8 sequence at offset " + std::to_string(i));
        }
        for (std::size_t k = 1; k < len; ++k) {
            const unsigned char b = static_cast<unsigned char>(s[i + k]);
            if ((b & 0xC0) != 0x80) {
                throw InvalidValue("malformed UTF-8 continuation at offset " + std::to_string(i + k));
            }
            cp = (cp << 6) | (b & 0x3F);
        }
        out.push_back(static_cast<char32_t>(cp));
        i += len;
    }
    return out;
}

std::size_t utf8_length(const std::string& s) { return utf8_decode(s).size(); }

std::string hex_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t cp : utf8_decode(s)) {
        const std::uint32_t c = static_cast<std::uint32_t>(cp);
        char buf[16];
        if (c == '\\') {
            out += "\\\\";
        } else if (c < 0x20 || c == 0x7F) {
            std::snprintf(buf, sizeof buf, "\\x%02x", c);
            out += buf;
        } else if (c < 0x7F) {
            out.push_back(static_cast<char>(c));
        } else {
            std::snprintf(buf, sizeof buf, "\\u{%x}", c);
            out += buf;
        }
    }
    return out;
}

}  // namespace gammascan::util
