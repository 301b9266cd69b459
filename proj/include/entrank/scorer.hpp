#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "entrank/corpus.hpp"
#include "entrank/queries.hpp"
#include "entrank/segmenter.hpp"
#include "entrank/tokenizer.hpp"

namespace entrank {

namespace nli {
class NliModel;
}

enum class NliClass { kContradiction, kNeutral, kEntailment };

// Which NLI class each model output index holds.
class LabelOrder {
 public:
  // Comma-separated or JSON-style list of class names, e.g.
  // "contradiction,neutral,entailment". Must be a permutation.
  static LabelOrder parse(std::string_view text);
  static LabelOrder from_names(const std::vector<std::string>& names);

  std::size_t index_of(NliClass cls) const;
  NliClass at(std::size_t index) const { return order_[index]; }
  std::string to_string() const;

  bool operator==(const LabelOrder&) const = default;

 private:
  std::array<NliClass, 3> order_{NliClass::kContradiction, NliClass::kNeutral, NliClass::kEntailment};
};

enum class Normalization {
  kSoftmax3,                   // entailment component of a 3-way softmax
  kEntailmentVsContradiction,  // 2-way softmax over entailment and contradiction
};

Normalization parse_normalization(std::string_view text);
std::string_view to_string(Normalization n);

double entailment_probability(std::span<const float> logits, const LabelOrder& order,
                              Normalization normalization = Normalization::kSoftmax3);
// Softmax over all outputs, in output order.
std::vector<double> class_probabilities(std::span<const float> logits);

struct UnitScore {
  std::string doc_id;
  std::size_t unit_index = 0;
  std::string task;
  std::string qtype;
  std::string backend_id;
  double probability = 0.0;

  bool operator==(const UnitScore&) const = default;
};

// Which backend to build and how to run it.
struct BackendConfig {
  std::string backend_id = "mock";
  // neural (dlm, rlm, any exported model), marker, oracle, random, cached
  std::string kind = "marker";
  std::optional<std::filesystem::path> model_path;
  std::optional<LabelOrder> label_order;  // overrides the manifest's
  Normalization normalization = Normalization::kSoftmax3;
  // Expected model input limit; checked against the manifest when set.
  std::optional<std::size_t> max_tokens;
  std::size_t batch_size = 16;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  std::string marker = "PROTEST_MARKER";
  bool verify_checksums = true;
};

// Premise/hypothesis scorer. Implementations are safe to call concurrently
// from up to max_parallelism() threads.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const std::string& id() const = 0;
  virtual std::size_t max_parallelism() const { return 1; }

  // Tokenizer whose counts match what score() consumes.
  virtual const TokenCounter& tokenizer() const = 0;
  virtual std::size_t special_tokens() const { return 0; }
  virtual std::size_t max_tokens() const { return TokenBudget::kModelLimit; }

  virtual double score(const ScoringUnit& unit, const Query& query) const = 0;
};

// Premise contains the marker substring -> 1.0, else 0.0.
class MarkerBackend final : public Backend {
 public:
  explicit MarkerBackend(std::string id = "mock", std::string marker = "PROTEST_MARKER");
  const std::string& id() const override { return id_; }
  std::size_t max_parallelism() const override { return 64; }
  const TokenCounter& tokenizer() const override { return tokenizer_; }
  double score(const ScoringUnit& unit, const Query& query) const override;

 private:
  std::string id_;
  std::string marker_;
  WhitespaceTokenizer tokenizer_;
};

// Gold label of the unit's parent document for the query's task.
class GoldOracleBackend final : public Backend {
 public:
  GoldOracleBackend(const Corpus& corpus, std::string id = "oracle");
  const std::string& id() const override { return id_; }
  std::size_t max_parallelism() const override { return 64; }
  const TokenCounter& tokenizer() const override { return tokenizer_; }
  double score(const ScoringUnit& unit, const Query& query) const override;

 private:
  const Corpus& corpus_;
  std::string id_;
  WhitespaceTokenizer tokenizer_;
};

// Uniform [0,1) derived from a hash of (seed, doc_id, unit_index, task,
// query text), so the value never depends on call order.
class RandomBackend final : public Backend {
 public:
  explicit RandomBackend(std::uint64_t seed, std::string id = "random");
  const std::string& id() const override { return id_; }
  std::size_t max_parallelism() const override { return 64; }
  const TokenCounter& tokenizer() const override { return tokenizer_; }
  double score(const ScoringUnit& unit, const Query& query) const override;

 private:
  std::uint64_t seed_;
  std::string id_;
  WhitespaceTokenizer tokenizer_;
};

// In-memory score table keyed by (doc_id, unit_index, task, qtype, backend_id).
class ScoreStore {
 public:
  using Key = std::tuple<std::string, std::size_t, std::string, std::string, std::string>;

  ScoreStore() = default;
  explicit ScoreStore(std::span<const UnitScore> scores);

  // Data error on a duplicate key or a probability outside [0,1].
  void add(const UnitScore& score);
  std::optional<double> find(const Key& key) const;
  std::size_t size() const { return scores_.size(); }
  std::vector<UnitScore> all() const;

 private:
  std::map<Key, double> scores_;
};

// Replays a score cache under the backend id it was written with.
class CachedBackend final : public Backend {
 public:
  CachedBackend(ScoreStore store, std::string id);
  const std::string& id() const override { return id_; }
  std::size_t max_parallelism() const override { return 64; }
  const TokenCounter& tokenizer() const override { return tokenizer_; }
  double score(const ScoringUnit& unit, const Query& query) const override;

 private:
  ScoreStore store_;
  std::string id_;
  WhitespaceTokenizer tokenizer_;
};

// Exported MNLI model.
class NeuralBackend final : public Backend {
 public:
  NeuralBackend(std::shared_ptr<const nli::NliModel> model, const BackendConfig& config);
  ~NeuralBackend() override;

  const std::string& id() const override { return id_; }
  std::size_t max_parallelism() const override;
  const TokenCounter& tokenizer() const override;
  std::size_t special_tokens() const override;
  std::size_t max_tokens() const override;
  double score(const ScoringUnit& unit, const Query& query) const override;

  const LabelOrder& label_order() const { return order_; }
  // All class probabilities in output order.
  std::vector<double> probabilities(std::string_view premise, std::string_view hypothesis) const;

 private:
  std::shared_ptr<const nli::NliModel> model_;
  std::string id_;
  LabelOrder order_;
  Normalization normalization_;
};

// Builds the backend named by config.kind. The corpus is needed by the
// oracle; the store by the cached kind.
std::unique_ptr<Backend> make_backend(const BackendConfig& config, const Corpus* corpus = nullptr,
                                      const ScoreStore* store = nullptr);

double score_pair(const Backend& backend, std::string_view premise, const Query& hypothesis);

struct ScoreOptions {
  std::size_t batch_size = 16;
  std::size_t workers = 1;
};

// One score per unit, in input order whatever the batching or worker count.
// Failures are rethrown naming the unit.
std::vector<UnitScore> score_units(std::span<const ScoringUnit> units, const Query& query, const Backend& backend,
                                   const ScoreOptions& options = {});

// Line-delimited records:
//   {"doc_id": ..., "unit_index": 0, "task": ..., "qtype": ..., "backend_id": ...,
//    "probability": "0.12345678901234567"}
// The probability is a decimal string that round-trips exactly.
void save_cached(const std::filesystem::path& path, std::span<const UnitScore> scores);
std::vector<UnitScore> load_cached(const std::filesystem::path& path);
std::vector<UnitScore> parse_cached(std::string_view contents);

// The units scored against one query. Document chunks depend on the query
// length, so units are stored per (task, qtype).
struct UnitSet {
  std::string task;
  std::string qtype;
  std::vector<ScoringUnit> units;
};

// Line-delimited unit records carrying their task and qtype; kept next to a
// score cache so reports can show the passage behind each score.
void save_units(const std::filesystem::path& path, std::span<const UnitSet> sets);
std::vector<UnitSet> load_units(const std::filesystem::path& path);

}  // namespace entrank
