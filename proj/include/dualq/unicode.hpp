#pragma once

// Thin UTF-8 helpers over ICU's character properties. All functions operate on
// code points and use simple (1:1) case mappings, so lengths are preserved.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dualq::unicode {

/// Decodes UTF-8; ill-formed sequences become U+FFFD.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view cps);
void append(std::string& out, char32_t cp);

bool is_valid_utf8(std::string_view s);

std::size_t length(std::string_view utf8);

bool is_whitespace(char32_t cp);
bool is_alpha(char32_t cp);
/// Letters, digits and combining marks: the characters that may appear inside a word token.
bool is_word_char(char32_t cp);
bool is_punct(char32_t cp);

char32_t to_lower(char32_t cp);
char32_t to_upper(char32_t cp);

std::string to_lower(std::string_view utf8);
std::string to_upper(std::string_view utf8);

/// Trims Unicode whitespace from both ends.
std::string_view trim(std::string_view utf8);

/// Splits on runs of Unicode whitespace, dropping empty pieces.
std::vector<std::string> split_whitespace(std::string_view utf8);

} // namespace dualq::unicode
