#include "entrank/segmenter.hpp"

#include <algorithm>
#include <cctype>

#include "entrank/error.hpp"
#include "entrank/text_io.hpp"

namespace entrank {

namespace {

constexpr const char* kModule = "segmenter";

constexpr std::string_view kLeftDoubleQuote = "\xE2\x80\x9C";
constexpr std::string_view kRightDoubleQuote = "\xE2\x80\x9D";
constexpr std::string_view kRightSingleQuote = "\xE2\x80\x99";

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminal(char c) { return c == '.' || c == '?' || c == '!'; }

bool at(std::string_view text, std::size_t i, std::string_view token) {
  return text.substr(i, token.size()) == token;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Word ending at the period at `period`, without leading opening punctuation.
std::string_view word_before(std::string_view text, std::size_t period) {
  std::size_t begin = period;
  while (begin > 0 && !is_space(text[begin - 1])) --begin;
  std::string_view word = text.substr(begin, period - begin + 1);
  while (!word.empty() && (word.front() == '(' || word.front() == '[' || word.front() == '"' ||
                           word.front() == '\'')) {
    word.remove_prefix(1);
  }
  if (word.substr(0, kLeftDoubleQuote.size()) == kLeftDoubleQuote) word.remove_prefix(kLeftDoubleQuote.size());
  return word;
}

bool is_initial(std::string_view word) {
  return word.size() == 2 && std::isupper(static_cast<unsigned char>(word[0])) && word[1] == '.';
}

std::string truncate_within(std::string_view text, std::size_t budget, const TokenCounter& tokenizer) {
  std::size_t keep = budget;
  std::string out = tokenizer.truncate(text, keep);
  while (keep > 0 && tokenizer.count(out) > budget) {
    --keep;
    out = tokenizer.truncate(text, keep);
  }
  return out;
}

}  // namespace

std::string_view to_string(Granularity g) {
  return g == Granularity::kSentence ? "sentence" : "document";
}

Granularity parse_granularity(std::string_view text) {
  if (text == "sentence" || text == "sent") return Granularity::kSentence;
  if (text == "document" || text == "doc") return Granularity::kDocument;
  config_error(kModule, "unknown granularity '" + std::string(text) + "' (sentence|document)");
}

TokenBudget TokenBudget::for_query(std::size_t model_limit, std::size_t hypothesis_tokens,
                                   std::size_t special_tokens) {
  if (hypothesis_tokens + special_tokens >= model_limit) {
    config_error(kModule, "query of " + std::to_string(hypothesis_tokens) + " tokens plus " +
                              std::to_string(special_tokens) + " special tokens leaves no room within " +
                              std::to_string(model_limit));
  }
  return TokenBudget(model_limit, hypothesis_tokens, special_tokens,
                     model_limit - hypothesis_tokens - special_tokens);
}

TokenBudget TokenBudget::premise_only(std::size_t premise_budget) {
  if (premise_budget < 1) config_error(kModule, "premise budget must be at least 1");
  return TokenBudget(premise_budget, 0, 0, premise_budget);
}

const std::set<std::string>& SentenceSplitter::default_abbreviations() {
  static const std::set<std::string> kDefaults = {
      "mr.",   "mrs.",  "ms.",   "dr.",   "prof.", "sr.",   "jr.",   "st.",    "mt.",   "gen.",
      "col.",  "lt.",   "capt.", "sgt.",  "cmdr.", "gov.",  "sen.",  "rep.",   "pres.", "supt.",
      "insp.", "dy.",   "hon.",  "rev.",  "vs.",   "e.g.",  "i.e.",  "a.m.",   "p.m.",  "u.s.",
      "u.k.",  "u.n.",  "no.",   "nos.",  "jan.",  "feb.",  "mar.",  "apr.",   "jun.",  "jul.",
      "aug.",  "sep.",  "sept.", "oct.",  "nov.",  "dec.",  "inc.",  "ltd.",   "co.",   "corp.",
      "dept.", "govt.", "est.",  "approx.", "fig.", "vol.", "pp.",   "rs.",    "sq.",   "km."};
  return kDefaults;
}

SentenceSplitter::SentenceSplitter() : abbreviations_(default_abbreviations()) {}

SentenceSplitter::SentenceSplitter(std::set<std::string> abbreviations) {
  for (const auto& a : abbreviations) {
    std::string key = lowercase(trim(a));
    if (key.empty()) continue;
    if (key.back() != '.') key += '.';
    abbreviations_.insert(std::move(key));
  }
}

SentenceSplitter SentenceSplitter::from_file(const std::filesystem::path& path) {
  std::set<std::string> list;
  for (const auto& line : split_lines(read_file(path, kModule))) {
    auto word = trim(line);
    if (word.empty() || word.front() == '#') continue;
    list.emplace(word);
  }
  return SentenceSplitter(std::move(list));
}

bool SentenceSplitter::is_abbreviation(std::string_view word) const {
  return abbreviations_.count(lowercase(word)) > 0;
}

std::vector<std::string> SentenceSplitter::split(std::string_view text) const {
  std::vector<std::string> out;
  auto emit = [&](std::size_t begin, std::size_t end) {
    auto piece = trim(text.substr(begin, end - begin));
    if (!piece.empty()) out.emplace_back(piece);
  };

  const std::size_t n = text.size();
  std::size_t start = 0;
  std::size_t i = 0;
  bool in_quote = false;
  while (i < n) {
    const char c = text[i];
    if (c == '\n') {
      in_quote = false;
      std::size_t j = i + 1;
      while (j < n && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r')) ++j;
      if (j < n && text[j] == '\n') {
        emit(start, i);
        start = j + 1;
        i = j + 1;
        continue;
      }
      ++i;
      continue;
    }
    if (c == '"') {
      in_quote = !in_quote;
      ++i;
      continue;
    }
    if (at(text, i, kLeftDoubleQuote)) {
      in_quote = true;
      i += kLeftDoubleQuote.size();
      continue;
    }
    if (at(text, i, kRightDoubleQuote)) {
      in_quote = false;
      i += kRightDoubleQuote.size();
      continue;
    }
    if (!is_terminal(c)) {
      ++i;
      continue;
    }

    std::size_t j = i;
    while (j < n && is_terminal(text[j])) ++j;
    const bool single_period = (j - i == 1) && c == '.';
    while (j < n) {
      if (text[j] == '"' && in_quote) {
        in_quote = false;
        ++j;
      } else if (at(text, j, kRightDoubleQuote)) {
        in_quote = false;
        j += kRightDoubleQuote.size();
      } else if (at(text, j, kRightSingleQuote)) {
        j += kRightSingleQuote.size();
      } else if (text[j] == ')' || text[j] == ']' || text[j] == '\'') {
        ++j;
      } else {
        break;
      }
    }
    if ((j == n || is_space(text[j])) && !in_quote) {
      bool suppress = false;
      if (single_period) {
        const auto word = word_before(text, i);
        suppress = is_abbreviation(word) || is_initial(word);
      }
      if (!suppress) {
        emit(start, j);
        start = j;
      }
    }
    i = j;
  }
  emit(start, n);
  return out;
}

std::vector<ScoringUnit> segment_sentences(const Document& document, const SentenceSplitter& splitter,
                                           const TokenCounter* tokenizer) {
  std::vector<std::string> sentences;
  if (document.sentences) {
    for (const auto& s : *document.sentences) {
      if (!trim(s).empty()) sentences.push_back(s);
    }
  }
  if (sentences.empty()) sentences = splitter.split(document.text);
  if (sentences.empty()) data_error(kModule, "document '" + document.doc_id + "' has no non-empty text");

  std::vector<ScoringUnit> units;
  units.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    ScoringUnit u;
    u.doc_id = document.doc_id;
    u.unit_index = i;
    u.granularity = Granularity::kSentence;
    u.first_sentence = i;
    u.sentence_count = 1;
    u.token_count = tokenizer ? tokenizer->count(sentences[i]) : 0;
    u.text = std::move(sentences[i]);
    units.push_back(std::move(u));
  }
  return units;
}

std::vector<ScoringUnit> chunk_document(const Document& document, const TokenBudget& budget,
                                        const TokenCounter& tokenizer, const SentenceSplitter& splitter) {
  const auto sentences = segment_sentences(document, splitter);
  const std::size_t limit = budget.premise_budget();

  std::vector<ScoringUnit> chunks;
  ScoringUnit current;
  bool open = false;

  auto close = [&] {
    if (!open) return;
    current.unit_index = chunks.size();
    chunks.push_back(std::move(current));
    current = ScoringUnit{};
    open = false;
  };
  auto start_with = [&](const ScoringUnit& s) {
    current = ScoringUnit{};
    current.doc_id = document.doc_id;
    current.granularity = Granularity::kDocument;
    current.first_sentence = s.first_sentence;
    current.sentence_count = 1;
    const std::size_t tokens = tokenizer.count(s.text);
    if (tokens > limit) {
      current.text = truncate_within(s.text, limit, tokenizer);
      current.token_count = tokenizer.count(current.text);
      current.truncated = true;
      open = true;
      close();
      return;
    }
    current.text = s.text;
    current.token_count = tokens;
    open = true;
  };

  for (const auto& s : sentences) {
    if (!open) {
      start_with(s);
      continue;
    }
    std::string candidate = current.text + " " + s.text;
    const std::size_t tokens = tokenizer.count(candidate);
    if (tokens <= limit) {
      current.text = std::move(candidate);
      current.token_count = tokens;
      ++current.sentence_count;
    } else {
      close();
      start_with(s);
    }
  }
  close();
  return chunks;
}

void fit_to_budget(std::vector<ScoringUnit>& units, const TokenBudget& budget,
                   const TokenCounter& tokenizer) {
  const std::size_t limit = budget.premise_budget();
  for (auto& u : units) {
    u.token_count = tokenizer.count(u.text);
    if (u.token_count > limit) {
      u.text = truncate_within(u.text, limit, tokenizer);
      u.token_count = tokenizer.count(u.text);
      u.truncated = true;
    }
  }
}

std::vector<ScoringUnit> segment(const Document& document, Granularity granularity,
                                 const TokenBudget& budget, const TokenCounter& tokenizer,
                                 const SentenceSplitter& splitter) {
  if (granularity == Granularity::kDocument) return chunk_document(document, budget, tokenizer, splitter);
  auto units = segment_sentences(document, splitter, &tokenizer);
  fit_to_budget(units, budget, tokenizer);
  return units;
}

}  // namespace entrank
