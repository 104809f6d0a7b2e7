#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ats::text {

struct DecodedChar {
  char32_t code_point;
  std::size_t offset;  // byte offset into the source
  std::size_t length;  // byte length of the encoded form
};

// Lenient UTF-8 decoding: an invalid byte decodes to U+FFFD with length 1,
// so the byte spans always tile the input exactly.
std::vector<DecodedChar> decode_utf8(std::string_view s);
std::string encode_utf8(char32_t cp);

std::size_t count_scalars(std::string_view s);

bool is_whitespace(char32_t cp);
// Unicode general categories P* (punctuation) and S* (symbols).
bool is_punct_or_symbol(char32_t cp);
char32_t to_lower(char32_t cp);
std::string to_lower(std::string_view s);

}  // namespace ats::text
