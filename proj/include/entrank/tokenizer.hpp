#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace entrank {

// Token accounting used to keep scoring units within a model's input limit.
class TokenCounter {
 public:
  virtual ~TokenCounter() = default;

  virtual std::size_t count(std::string_view text) const = 0;

  // Longest token prefix of `text` with at most max_tokens tokens, as text.
  virtual std::string truncate(std::string_view text, std::size_t max_tokens) const = 0;
};

// Whitespace-delimited words. Used by the mock backends and in tests.
class WhitespaceTokenizer final : public TokenCounter {
 public:
  std::size_t count(std::string_view text) const override;
  std::string truncate(std::string_view text, std::size_t max_tokens) const override;
};

inline std::size_t count_tokens(std::string_view text, const TokenCounter& tokenizer) {
  return tokenizer.count(text);
}

}  // namespace entrank
