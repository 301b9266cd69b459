#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entrank/corpus.hpp"
#include "entrank/evaluator.hpp"
#include "entrank/ranker.hpp"
#include "entrank/segmenter.hpp"

namespace entrank {

// Round-half-even on the shortest decimal form of value, so 0.125 -> "0.12"
// and 0.135 -> "0.14".
std::string round_half_even(double value, int decimals = 2);

// Short row labels as printed in the result tables: "decl-sent", "def-doc".
std::string short_qtype(const std::string& qtype);
std::string short_granularity(const std::string& granularity);

// SVG with one panel per (dataset, task): x = % of data read [0, 100],
// y = recall [0, 1], one polyline per curve starting at the origin, legend
// entries "backend qtype-granularity". Curves must share their grid.
std::string render_curve_plot(std::span<const RecallCurve> curves);
void emit_curve_plot(std::span<const RecallCurve> curves, const std::filesystem::path& path);

// Matrix view of AP results: rows (backend, qtype-granularity), columns
// dataset:task, both in order of first appearance.
struct MetricTable {
  std::vector<std::string> row_backends;
  std::vector<std::string> row_queries;
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> values;  // [row][column]
};

MetricTable build_table(std::span<const ApResult> results);
std::string render_table_text(const MetricTable& table);
std::string render_table_tsv(const MetricTable& table);

// Writes <stem>.txt (aligned), <stem>.tsv (2-decimal display) and
// <stem>.full.tsv (full precision, one row per result).
void emit_tables(std::span<const ApResult> results, const std::filesystem::path& out_dir,
                 const std::string& stem = "map_table");
std::vector<ApResult> read_full_table(const std::filesystem::path& path);

// Mean AP per (dataset, backend, granularity): rows granularity, columns
// dataset:backend. Same three files as emit_tables.
MetricTable build_average_table(std::span<const ApResult> results);
void emit_average_table(std::span<const ApResult> results, const std::filesystem::path& out_dir,
                        const std::string& stem = "average_map");

struct ReadingRow {
  std::size_t rank = 0;
  std::string doc_id;
  double score = 0.0;
  std::size_t unit_index = 0;
  std::string passage;
  std::optional<bool> gold;
};

struct ReadingList {
  RankingConfig config;
  std::vector<ReadingRow> rows;
};

// Top `limit` documents (all when 0) with the text of their argmax unit.
ReadingList build_reading_list(const Ranking& ranking, std::span<const ScoringUnit> units,
                               const Corpus* corpus = nullptr, std::size_t limit = 0);
void write_reading_list(const ReadingList& list, const std::filesystem::path& path);

}  // namespace entrank
