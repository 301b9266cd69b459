#include "entrank/tokenizer.hpp"

namespace entrank {

namespace {
bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
}  // namespace

std::size_t WhitespaceTokenizer::count(std::string_view text) const {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::string WhitespaceTokenizer::truncate(std::string_view text, std::size_t max_tokens) const {
  std::size_t n = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_space(text[i])) {
      if (in_word && n == max_tokens) return std::string(text.substr(0, i));
      in_word = false;
    } else if (!in_word) {
      if (n == max_tokens) return std::string(text.substr(0, i));
      in_word = true;
      ++n;
    }
  }
  return std::string(text);
}

}  // namespace entrank
