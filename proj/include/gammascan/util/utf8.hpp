#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gammascan::util {

// Appends the UTF-8 encoding of a single code point. Rejects surrogates
// and anything above U+10FFFF.
void utf8_append(std::string& out, char32_t cp);

std::string utf8_encode(char32_t cp);

// Decodes a UTF-8 string into code points. Throws InvalidValue on malformed
// input; the perturbation machinery only ever produces well-formed UTF-8.
std::vector<char32_t> utf8_decode(const std::string& s);

std::size_t utf8_length(const std::string& s);

// Display form with all non-printable content escaped: ASCII controls and
// DEL become lowercase \xNN, code points >= U+0080 become \u{...}, and a
// literal backslash doubles. Printable ASCII passes through.
std::string hex_escape(const std::string& s);

}  // namespace gammascan::util
