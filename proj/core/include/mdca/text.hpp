/// @file text.hpp
/// @brief UTF-8 helpers and the text folding used for bilingual keyword matching.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace mdca::text {

/// Decodes UTF-8; invalid sequences become U+FFFD.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view code_points);

/// Number of code points in a UTF-8 string.
std::size_t utf8_length(std::string_view bytes);

bool is_space(char32_t c);

/// Sentence-level punctuation (ASCII and CJK full-width forms).
bool is_punct(char32_t c);

/// Case fold (ASCII + Latin-1), full-width to half-width fold, ideographic
/// space to ASCII space, and Unicode Roman numerals to ASCII letters.
std::u32string fold(std::u32string_view text);

/// fold() followed by removal of every whitespace code point. This is the
/// form both lexicon synonyms and scanned text are compared in.
std::u32string match_key(std::string_view utf8);

/// Trims Unicode whitespace from both ends.
std::string_view trim(std::string_view utf8);

/// Removes trailing punctuation and whitespace.
std::string_view strip_trailing_punct(std::string_view utf8);

}  // namespace mdca::text
