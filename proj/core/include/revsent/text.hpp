#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace revsent {

// Shared tokenizer: maximal runs of word characters after ASCII lowercasing.
// Word characters are ASCII letters/digits plus non-ASCII code points outside
// the punctuation, symbol and emoji blocks. Invalid UTF-8 bytes are treated
// as separators.
std::vector<std::string> tokenize(std::string_view text);

// Same definition as tokenize(), without materializing the tokens.
std::size_t token_count(std::string_view text);

struct EnglishHeuristic {
  // Minimum share of alphabetic characters that must be ASCII letters.
  double min_ascii_letter_fraction = 0.9;
};

// True when enough of the alphabetic characters are ASCII letters and the
// text contains at least one ASCII vowel.
bool looks_english(std::string_view text, const EnglishHeuristic& heuristic = {});

// Trims ASCII whitespace from both ends.
std::string_view trim(std::string_view text);

}  // namespace revsent
