#include "revsent/lexicon.hpp"

#include "revsent/error.hpp"
#include "revsent/io.hpp"
#include "revsent/text.hpp"

namespace revsent {

const Lexicon& default_lexicon() {
  static const Lexicon lexicon = {
      // positive
      {"amazing", 2.0}, {"awesome", 2.0}, {"beautiful", 1.5}, {"best", 1.5},
      {"brilliant", 2.0}, {"charming", 1.5}, {"comfortable", 1.0}, {"delight", 1.5},
      {"delightful", 2.0}, {"enjoyed", 1.5}, {"excellent", 2.0}, {"fantastic", 2.0},
      {"friendly", 1.0}, {"good", 1.0}, {"great", 1.5}, {"happy", 1.0},
      {"helpful", 1.0}, {"impressive", 1.5}, {"love", 1.5}, {"loved", 1.5},
      {"lovely", 1.5}, {"nice", 1.0}, {"perfect", 2.0}, {"pleasant", 1.0},
      {"recommend", 1.0}, {"reliable", 1.0}, {"satisfied", 1.0}, {"superb", 2.0},
      {"wonderful", 2.0}, {"worth", 1.0},
      // negative
      {"annoying", -1.5}, {"awful", -2.0}, {"bad", -1.0}, {"boring", -1.5},
      {"broken", -1.5}, {"cheap", -0.5}, {"dirty", -1.5}, {"disappointed", -1.5},
      {"disappointing", -1.5}, {"dreadful", -2.0}, {"poor", -1.0}, {"horrible", -2.0},
      {"mediocre", -1.0}, {"noisy", -1.0}, {"refund", -1.0}, {"rude", -1.5},
      {"terrible", -2.0}, {"unhelpful", -1.0}, {"useless", -2.0}, {"waste", -2.0},
      {"worse", -1.5}, {"worst", -2.0}, {"hate", -1.5}, {"hated", -1.5},
      {"faulty", -1.5}, {"overpriced", -1.0}, {"slow", -0.5}, {"flimsy", -1.0},
      {"dull", -1.0}, {"avoid", -1.5},
  };
  return lexicon;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  // parse_csv takes the first line as a header; put it back when it is data.
  CsvTable table = parse_csv(content);
  std::vector<std::vector<std::string>> rows;
  if (table.header.size() == 2 && parse_double(table.header[1])) rows.push_back(table.header);
  rows.insert(rows.end(), table.rows.begin(), table.rows.end());

  Lexicon lexicon;
  for (const auto& row : rows) {
    if (row.size() != 2) throw IoError(path.string() + ": lexicon rows must be word,weight");
    const auto weight = parse_double(row[1]);
    if (!weight) throw IoError(path.string() + ": bad weight for '" + row[0] + "'");
    const auto tokens = tokenize(row[0]);
    if (tokens.size() != 1) throw IoError(path.string() + ": lexicon entry is not one token: '" + row[0] + "'");
    lexicon[tokens.front()] = *weight;
  }
  if (lexicon.empty()) throw IoError(path.string() + ": empty lexicon");
  return lexicon;
}

double lexicon_score(std::string_view text, const Lexicon& lexicon) {
  double score = 0.0;
  for (const auto& token : tokenize(text)) {
    if (const auto it = lexicon.find(token); it != lexicon.end()) score += it->second;
  }
  return score;
}

}  // namespace revsent
