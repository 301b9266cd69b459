#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "entrank/corpus.hpp"
#include "entrank/ranker.hpp"

namespace entrank {

// Gold relevance of each ranked document, in rank order.
using Relevance = std::vector<bool>;

Relevance relevance(const Ranking& ranking, const Corpus& corpus, const std::string& task);

// Documents read at proportion p: ceil(p * n), at least 1. p in (0, 1].
std::size_t documents_read(double p, std::size_t n);

// Positives among the top documents_read(p, n) over all positives.
// Data error when there are no positives.
double recall_at(const Relevance& rel, double p);

struct RecallPoint {
  double proportion = 0.0;
  double recall = 0.0;
};

struct RecallCurve {
  RankingConfig config;
  std::vector<RecallPoint> points;
  std::size_t n_docs = 0;
  std::size_t n_positives = 0;
};

// 0.01, 0.02, ..., 1.00.
std::vector<double> default_grid();
// Config error unless strictly ascending within (0, 1].
void check_grid(std::span<const double> grid);

RecallCurve recall_curve(const Relevance& rel, std::span<const double> grid, const RankingConfig& config = {});

// (1/P) * sum over positive ranks k of (positives in top k) / k.
double average_precision(const Relevance& rel);

struct ApResult {
  RankingConfig config;
  double ap = 0.0;
  std::size_t n_docs = 0;
  std::size_t n_positives = 0;
  // Recall at metric_proportions().
  std::vector<RecallPoint> recall;
};

ApResult evaluate_ap(const Ranking& ranking, const Corpus& corpus);
RecallCurve evaluate_curve(const Ranking& ranking, const Corpus& corpus, std::span<const double> grid);

enum class ConfigDim { kDataset, kTask, kQtype, kGranularity, kBackend };

ConfigDim parse_config_dim(std::string_view text);
std::string_view to_string(ConfigDim dim);
const std::string& config_value(const RankingConfig& config, ConfigDim dim);

struct GroupMean {
  // Values of the grouping dimensions, in the order requested.
  std::vector<std::string> key;
  double mean = 0.0;
  std::size_t count = 0;
};

// Arithmetic mean of ap per distinct combination of the given dimensions,
// groups in ascending key order.
std::vector<GroupMean> mean_ap(std::span<const ApResult> results, std::span<const ConfigDim> group_by);

// Proportions reported as recall@ columns in the metrics file.
std::vector<double> metric_proportions();

// Tab-separated: dataset, task, qtype, granularity, backend, n_docs,
// n_positives, ap, recall@5%, recall@10%, ... Values at full precision.
void write_metrics(const std::filesystem::path& path, std::span<const ApResult> results);
std::vector<ApResult> read_metrics(const std::filesystem::path& path);

// Long format: dataset, task, qtype, granularity, backend, p, recall.
void write_curves(const std::filesystem::path& path, std::span<const RecallCurve> curves);
std::vector<RecallCurve> read_curves(const std::filesystem::path& path);

}  // namespace entrank
