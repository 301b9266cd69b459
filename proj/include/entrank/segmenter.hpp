#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "entrank/corpus.hpp"
#include "entrank/tokenizer.hpp"

namespace entrank {

enum class Granularity { kSentence, kDocument };

std::string_view to_string(Granularity g);
Granularity parse_granularity(std::string_view text);

struct ScoringUnit {
  std::string doc_id;
  std::size_t unit_index = 0;
  std::string text;
  Granularity granularity = Granularity::kSentence;
  std::size_t token_count = 0;
  // Sentences [first_sentence, first_sentence + sentence_count) of the parent.
  std::size_t first_sentence = 0;
  std::size_t sentence_count = 1;
  bool truncated = false;
};

// Model input accounting: the premise gets whatever the model limit leaves
// after the hypothesis and the pair's special tokens.
class TokenBudget {
 public:
  static constexpr std::size_t kModelLimit = 512;
  static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

  // Throws a config error when nothing is left for the premise.
  static TokenBudget for_query(std::size_t model_limit, std::size_t hypothesis_tokens,
                               std::size_t special_tokens);
  // A bare premise budget, for tests and for unlimited packing.
  static TokenBudget premise_only(std::size_t premise_budget);

  std::size_t model_limit() const { return model_limit_; }
  std::size_t hypothesis_tokens() const { return hypothesis_tokens_; }
  std::size_t special_tokens() const { return special_tokens_; }
  std::size_t premise_budget() const { return premise_budget_; }

 private:
  TokenBudget(std::size_t limit, std::size_t hyp, std::size_t special, std::size_t premise)
      : model_limit_(limit), hypothesis_tokens_(hyp), special_tokens_(special), premise_budget_(premise) {}

  std::size_t model_limit_;
  std::size_t hypothesis_tokens_;
  std::size_t special_tokens_;
  std::size_t premise_budget_;
};

// Rule-based fallback splitter: a boundary follows a run of terminal
// punctuation (. ? !) plus any closing quotes/brackets when whitespace or the
// end of text comes next, unless the period ends a listed abbreviation or a
// single-capital initial, or the position is inside a double-quoted span.
// A blank line is always a boundary.
class SentenceSplitter {
 public:
  SentenceSplitter();
  explicit SentenceSplitter(std::set<std::string> abbreviations);

  // One abbreviation per line, '#' starts a comment line.
  static SentenceSplitter from_file(const std::filesystem::path& path);
  static const std::set<std::string>& default_abbreviations();

  std::vector<std::string> split(std::string_view text) const;

  bool is_abbreviation(std::string_view word_with_period) const;

 private:
  std::set<std::string> abbreviations_;  // lowercase, with trailing period
};

// Dataset sentences verbatim when present, otherwise the rule-based split.
// Whitespace-only sentences are dropped. Token counts are filled when a
// tokenizer is given.
std::vector<ScoringUnit> segment_sentences(const Document& document, const SentenceSplitter& splitter,
                                           const TokenCounter* tokenizer = nullptr);

// Greedy packing of consecutive sentences, joined by one space, while the
// chunk's token count stays within the premise budget. A sentence that alone
// exceeds the budget becomes its own unit, truncated to the budget.
std::vector<ScoringUnit> chunk_document(const Document& document, const TokenBudget& budget,
                                        const TokenCounter& tokenizer, const SentenceSplitter& splitter);

// Truncates over-budget units in place (prefix kept).
void fit_to_budget(std::vector<ScoringUnit>& units, const TokenBudget& budget,
                   const TokenCounter& tokenizer);

// Sentence units (fitted to the budget) or document chunks.
std::vector<ScoringUnit> segment(const Document& document, Granularity granularity,
                                 const TokenBudget& budget, const TokenCounter& tokenizer,
                                 const SentenceSplitter& splitter);

}  // namespace entrank
