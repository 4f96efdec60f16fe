#include "revsent/text.hpp"

#include <cstdint>

namespace revsent {
namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one code point starting at text[pos] and advances pos. Malformed
// sequences consume a single byte and yield kInvalid.
char32_t next_code_point(std::string_view text, std::size_t& pos) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  if (lead < 0x80) {
    ++pos;
    return lead;
  }
  std::size_t extra = 0;
  char32_t cp = 0;
  if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    ++pos;
    return kInvalid;
  }
  if (pos + extra >= text.size()) {
    ++pos;
    return kInvalid;
  }
  for (std::size_t k = 1; k <= extra; ++k) {
    const auto cont = static_cast<unsigned char>(text[pos + k]);
    if ((cont & 0xC0) != 0x80) {
      ++pos;
      return kInvalid;
    }
    cp = (cp << 6) | (cont & 0x3F);
  }
  pos += extra + 1;
  return cp;
}

bool is_ascii_alpha(char32_t cp) { return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z'); }
bool is_ascii_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

// Non-ASCII code points that are punctuation, symbols, spacing or emoji.
bool is_non_ascii_symbol(char32_t cp) {
  return (cp >= 0x80 && cp <= 0xBF) ||       // Latin-1 controls, punctuation, signs
         cp == 0xD7 || cp == 0xF7 ||         // multiplication / division signs
         (cp >= 0x2000 && cp <= 0x2BFF) ||   // general punctuation .. misc symbols/arrows
         (cp >= 0x2E00 && cp <= 0x2E7F) ||   // supplemental punctuation
         (cp >= 0x3000 && cp <= 0x303F) ||   // CJK symbols and punctuation
         (cp >= 0xFE10 && cp <= 0xFE1F) ||   // vertical forms
         (cp >= 0xFE30 && cp <= 0xFE6F) ||   // CJK compatibility forms, small forms
         (cp >= 0xFF00 && cp <= 0xFF0F) ||   // fullwidth punctuation
         (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) ||
         (cp >= 0xFF5B && cp <= 0xFF65) ||
         (cp >= 0xFE00 && cp <= 0xFE0F) ||   // variation selectors
         cp == 0xFEFF ||                     // byte order mark
         (cp >= 0x1F000 && cp <= 0x1FAFF);   // emoji and pictographs
}

bool is_word_char(char32_t cp) {
  if (cp == kInvalid) return false;
  if (cp < 0x80) return is_ascii_alpha(cp) || is_ascii_digit(cp);
  return !is_non_ascii_symbol(cp);
}

bool is_alphabetic(char32_t cp) {
  if (cp == kInvalid) return false;
  if (cp < 0x80) return is_ascii_alpha(cp);
  return !is_non_ascii_symbol(cp);
}

bool is_ascii_vowel(char32_t cp) {
  switch (cp) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
    case 'A': case 'E': case 'I': case 'O': case 'U':
      return true;
    default:
      return false;
  }
}

template <typename OnToken>
void for_each_token(std::string_view text, OnToken&& on_token) {
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    const char32_t cp = next_code_point(text, pos);
    if (is_word_char(cp)) {
      if (cp < 0x80) {
        current.push_back(static_cast<char>(is_ascii_alpha(cp) ? (cp | 0x20) : cp));
      } else {
        current.append(text.substr(start, pos - start));
      }
    } else if (!current.empty()) {
      on_token(current);
      current.clear();
    }
  }
  if (!current.empty()) on_token(current);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for_each_token(text, [&](const std::string& token) { tokens.push_back(token); });
  return tokens;
}

std::size_t token_count(std::string_view text) {
  std::size_t count = 0;
  for_each_token(text, [&](const std::string&) { ++count; });
  return count;
}

bool looks_english(std::string_view text, const EnglishHeuristic& heuristic) {
  std::size_t alphabetic = 0;
  std::size_t ascii_letters = 0;
  bool has_vowel = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = next_code_point(text, pos);
    if (!is_alphabetic(cp)) continue;
    ++alphabetic;
    if (cp < 0x80) {
      ++ascii_letters;
      has_vowel = has_vowel || is_ascii_vowel(cp);
    }
  }
  if (alphabetic == 0 || !has_vowel) return false;
  return static_cast<double>(ascii_letters) >=
         heuristic.min_ascii_letter_fraction * static_cast<double>(alphabetic);
}

std::string_view trim(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n\v\f";
  const auto first = text.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(kSpace);
  return text.substr(first, last - first + 1);
}

}  // namespace revsent
