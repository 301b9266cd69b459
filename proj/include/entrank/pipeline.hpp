#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entrank/corpus.hpp"
#include "entrank/evaluator.hpp"
#include "entrank/queries.hpp"
#include "entrank/ranker.hpp"
#include "entrank/scorer.hpp"
#include "entrank/segmenter.hpp"

namespace entrank {

// Everything one CLI invocation needs.
struct RunConfig {
  std::string adapter = "generic";  // generic | india | protestnews
  std::filesystem::path dataset_path;
  // Registry key for queries; defaults to the adapter's dataset name.
  std::string dataset_name;
  std::vector<std::string> tasks;    // empty: all corpus tasks
  std::vector<std::string> qtypes;   // empty: every registered type
  Granularity granularity = Granularity::kSentence;
  BackendConfig backend;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> subset_size;
  std::vector<double> grid = default_grid();
  std::filesystem::path out_dir = "out";
  bool cache_in = false;
  bool cache_out = false;
  std::optional<std::filesystem::path> cache_file;
  std::filesystem::path queries_path = QueryRegistry::default_path();
  std::optional<std::filesystem::path> abbreviations;
  std::optional<std::filesystem::path> layout;
  std::size_t reading_list_size = 50;
};

// Where each artifact lives under out_dir.
struct OutputLayout {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> cache_override;

  std::filesystem::path scores() const;
  std::filesystem::path units() const;  // next to the score cache
  std::filesystem::path rankings_dir() const;
  std::filesystem::path ranking(const RankingConfig& config) const;
  std::filesystem::path metrics() const;
  std::filesystem::path curves() const;
  std::filesystem::path plot() const;
  std::filesystem::path reading_dir() const;
  std::filesystem::path reading_list(const RankingConfig& config) const;
};

OutputLayout output_layout(const RunConfig& config);

std::string dataset_name(const RunConfig& config);
Corpus load_corpus(const RunConfig& config);
QueryRegistry load_registry(const RunConfig& config);
SentenceSplitter load_splitter(const RunConfig& config);

// (task, qtype) combinations to run. Config error naming the first
// combination missing from the registry.
std::vector<Query> resolve_queries(const RunConfig& config, const Corpus& corpus, const QueryRegistry& registry);

// Backend for config.backend; the cached kind reads the score cache.
std::unique_ptr<Backend> open_backend(const RunConfig& config, const Corpus& corpus);

struct ScoreRun {
  std::vector<UnitSet> units;
  std::vector<UnitScore> scores;
};

// Segments every document for each query under the backend's token budget
// and scores the units.
ScoreRun score_corpus(const RunConfig& config, const Corpus& corpus, std::span<const Query> queries,
                      const Backend& backend, const SentenceSplitter& splitter);

// One ranking per (task, qtype, backend) present in the scores, restricted
// to the configured tasks and qtypes, in sorted config order.
std::vector<Ranking> rank_scores(const RunConfig& config, const Corpus& corpus, std::span<const UnitScore> scores,
                                 const std::string& granularity);

struct Evaluation {
  std::vector<ApResult> results;
  std::vector<RecallCurve> curves;
};

Evaluation evaluate_rankings(const Corpus& corpus, std::span<const Ranking> rankings, std::span<const double> grid);

// Tables, plot and reading lists (the last only when units are given).
void write_report(const OutputLayout& layout, const Evaluation& evaluation, std::span<const Ranking> rankings,
                  std::span<const UnitSet> units, const Corpus* corpus, std::size_t reading_list_size);

// Problems that would stop a run, each naming the offending item. Never
// writes anything except a probe file in out_dir, which it removes.
std::vector<std::string> validate(const RunConfig& config, std::vector<std::string>* notes = nullptr);

// Subcommands; each returns the process exit status or throws Error.
int command_score(const RunConfig& config, std::ostream& out);
int command_rank(const RunConfig& config, std::ostream& out);
int command_eval(const RunConfig& config, std::ostream& out);
int command_report(const RunConfig& config, std::ostream& out);
int command_run(const RunConfig& config, std::ostream& out);
int command_validate(const RunConfig& config, std::ostream& out);
int command_stats(const RunConfig& config, std::ostream& out);

}  // namespace entrank
