#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace revsent {

// word -> polarity strength (positive > 0, negative < 0). Lookups use the
// shared tokenizer's lowercase tokens.
using Lexicon = std::map<std::string, double, std::less<>>;

// Small built-in English review sentiment lexicon.
const Lexicon& default_lexicon();

// "word,weight" CSV with an optional header row.
Lexicon load_lexicon(const std::filesystem::path& path);

// Sum of lexicon weights over the text's tokens.
double lexicon_score(std::string_view text, const Lexicon& lexicon);

}  // namespace revsent
