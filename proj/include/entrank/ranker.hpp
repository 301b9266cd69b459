#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "entrank/corpus.hpp"
#include "entrank/scorer.hpp"

namespace entrank {

struct DocScore {
  std::string doc_id;
  double score = 0.0;
  std::size_t argmax_unit = 0;
  std::size_t n_units = 0;

  bool operator==(const DocScore&) const = default;
};

struct RankingConfig {
  std::string dataset;
  std::string task;
  std::string qtype;
  std::string granularity;
  std::string backend_id;

  // "dataset/task/qtype/granularity/backend", also used in file names.
  std::string key() const;
  bool operator==(const RankingConfig&) const = default;
  auto operator<=>(const RankingConfig&) const = default;
};

struct Ranking {
  RankingConfig config;
  std::vector<DocScore> entries;
};

// Max over each document's units, in corpus order. argmax_unit is the
// smallest unit index attaining the max. Every corpus document needs at
// least one score, and every score must belong to a corpus document.
std::vector<DocScore> aggregate(std::span<const UnitScore> unit_scores, const Corpus& corpus);

// Score descending, then doc_id ascending. Duplicate ids are a data error;
// with a corpus, coverage of every document is checked too.
Ranking rank(std::vector<DocScore> doc_scores, const RankingConfig& config, const Corpus* corpus = nullptr);

// Tab-separated: "# key=value" config lines, a header, then
// rank, doc_id, score, argmax_unit, n_units. Scores round-trip exactly.
void write_ranking(const Ranking& ranking, const std::filesystem::path& path);
Ranking read_ranking(const std::filesystem::path& path);
Ranking parse_ranking(std::string_view contents);

}  // namespace entrank
