#pragma once

#include <string>
#include <string_view>

namespace geotweet::text {

inline constexpr char32_t kReplacement = 0xFFFD;

// Decodes one code point starting at s[pos] and advances pos. Invalid or
// truncated sequences yield kReplacement and consume one byte.
char32_t decode_utf8(std::string_view s, std::size_t& pos) noexcept;
void append_utf8(std::string& out, char32_t cp);
bool is_valid_utf8(std::string_view s) noexcept;

// Simple case folding for ASCII, Latin-1, Latin Extended-A, Greek and
// Cyrillic. Other scripts pass through.
char32_t fold_case(char32_t cp) noexcept;

// ASCII spelling of a Latin letter with diacritics ("é" -> "e", "ß" -> "ss"),
// or empty if cp is not such a letter.
std::string_view strip_diacritic(char32_t cp) noexcept;

bool is_space(char32_t cp) noexcept;
// ASCII punctuation plus the Latin-1, General and CJK punctuation blocks.
bool is_punct(char32_t cp) noexcept;

}  // namespace geotweet::text
