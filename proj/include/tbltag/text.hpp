#pragma once

#include <cctype>
#include <string>
#include <vector>

namespace tbltag {

inline std::string lower_ascii(std::string s) {
  for (char& c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s;
}

inline bool is_terminal_punct(char c) {
  return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':';
}

// Tokenizer for utterance text: lowercase, split on whitespace, then detach
// terminal punctuation into its own tokens so that cue patterns like
// "see you" also match "see you then.".
inline std::vector<std::string> tokenize(const std::string& raw) {
  std::vector<std::string> out;
  const std::string text = lower_ascii(raw);
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    std::size_t j = i;
    while (j < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[j]))) {
      ++j;
    }
    if (j > i) {
      std::size_t end = j;
      while (end > i && is_terminal_punct(text[end - 1])) {
        --end;
      }
      if (end > i) {
        out.push_back(text.substr(i, end - i));
      }
      for (std::size_t k = end; k < j; ++k) {
        out.push_back(std::string(1, text[k]));
      }
    }
    i = j;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts,
                        const std::string& sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace tbltag
