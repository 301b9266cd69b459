#include "entrank/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "entrank/error.hpp"
#include "entrank/text_io.hpp"

namespace entrank {

namespace {

constexpr const char* kModule = "evaluator";
constexpr std::string_view kConfigHeader = "dataset\ttask\tqtype\tgranularity\tbackend";

std::size_t count_positives(const Relevance& rel) {
  return static_cast<std::size_t>(std::count(rel.begin(), rel.end(), true));
}

std::size_t require_positives(const Relevance& rel) {
  if (rel.empty()) data_error(kModule, "empty ranking");
  const std::size_t p = count_positives(rel);
  if (p == 0) data_error(kModule, "no positive documents; recall and AP are undefined");
  return p;
}

std::string config_cells(const RankingConfig& c) {
  return tsv_cell(c.dataset) + "\t" + tsv_cell(c.task) + "\t" + tsv_cell(c.qtype) + "\t" + tsv_cell(c.granularity) +
         "\t" + tsv_cell(c.backend_id);
}

std::string percent_label(double p) {
  const double pct = p * 100.0;
  if (std::abs(pct - std::round(pct)) < 1e-9) return std::to_string(static_cast<long long>(std::llround(pct))) + "%";
  return format_double(pct) + "%";
}

double number_cell(const std::string& cell, const std::string& where) {
  double v = 0.0;
  if (!parse_double(cell, v)) data_error(kModule, where + "bad number '" + cell + "'");
  return v;
}

std::size_t count_cell(const std::string& cell, const std::string& where) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  data_error(kModule, where + "bad count '" + cell + "'");
}

}  // namespace

Relevance relevance(const Ranking& ranking, const Corpus& corpus, const std::string& task) {
  if (!corpus.has_task(task)) config_error(kModule, "corpus '" + corpus.name() + "' has no task '" + task + "'");
  Relevance rel;
  rel.reserve(ranking.entries.size());
  for (const auto& e : ranking.entries) {
    const Document* doc = corpus.find(e.doc_id);
    if (!doc) data_error(kModule, "ranked document '" + e.doc_id + "' not in corpus");
    rel.push_back(doc->label(task));
  }
  return rel;
}

std::size_t documents_read(double p, std::size_t n) {
  if (!(p > 0.0 && p <= 1.0)) config_error(kModule, "proportion " + format_double(p) + " outside (0, 1]");
  const double x = p * static_cast<double>(n);
  // p*n lands a hair above an integer for grid values like 0.07*100.
  const double nearest = std::round(x);
  const double m = std::abs(x - nearest) <= 1e-9 * static_cast<double>(std::max<std::size_t>(n, 1)) ? nearest
                                                                                                  : std::ceil(x);
  return std::clamp<std::size_t>(static_cast<std::size_t>(m), 1, n);
}

double recall_at(const Relevance& rel, double p) {
  const std::size_t positives = require_positives(rel);
  const std::size_t m = documents_read(p, rel.size());
  const auto hits = static_cast<std::size_t>(std::count(rel.begin(), rel.begin() + static_cast<std::ptrdiff_t>(m), true));
  return static_cast<double>(hits) / static_cast<double>(positives);
}

std::vector<double> default_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 100; ++i) grid.push_back(i / 100.0);
  return grid;
}

std::vector<double> metric_proportions() {
  std::vector<double> out;
  for (int i = 1; i <= 20; ++i) out.push_back(i / 20.0);
  return out;
}

void check_grid(std::span<const double> grid) {
  if (grid.empty()) config_error(kModule, "empty proportion grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] <= 1.0)) {
      config_error(kModule, "grid value " + format_double(grid[i]) + " outside (0, 1]");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) config_error(kModule, "grid is not strictly ascending");
  }
}

RecallCurve recall_curve(const Relevance& rel, std::span<const double> grid, const RankingConfig& config) {
  check_grid(grid);
  RecallCurve curve;
  curve.config = config;
  curve.n_docs = rel.size();
  curve.n_positives = require_positives(rel);
  // Running prefix count; m is non-decreasing along an ascending grid.
  std::size_t read = 0;
  std::size_t hits = 0;
  for (double p : grid) {
    const std::size_t m = documents_read(p, rel.size());
    for (; read < m; ++read) hits += rel[read] ? 1 : 0;
    curve.points.push_back({p, static_cast<double>(hits) / static_cast<double>(curve.n_positives)});
  }
  return curve;
}

double average_precision(const Relevance& rel) {
  const std::size_t positives = require_positives(rel);
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < rel.size(); ++k) {
    if (!rel[k]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(positives);
}

ApResult evaluate_ap(const Ranking& ranking, const Corpus& corpus) {
  const auto rel = relevance(ranking, corpus, ranking.config.task);
  ApResult r;
  r.config = ranking.config;
  r.ap = average_precision(rel);
  r.n_docs = rel.size();
  r.n_positives = count_positives(rel);
  for (double p : metric_proportions()) r.recall.push_back({p, recall_at(rel, p)});
  return r;
}

RecallCurve evaluate_curve(const Ranking& ranking, const Corpus& corpus, std::span<const double> grid) {
  return recall_curve(relevance(ranking, corpus, ranking.config.task), grid, ranking.config);
}

ConfigDim parse_config_dim(std::string_view text) {
  if (text == "dataset") return ConfigDim::kDataset;
  if (text == "task") return ConfigDim::kTask;
  if (text == "qtype") return ConfigDim::kQtype;
  if (text == "granularity") return ConfigDim::kGranularity;
  if (text == "backend") return ConfigDim::kBackend;
  config_error(kModule, "unknown grouping dimension '" + std::string(text) + "'");
}

std::string_view to_string(ConfigDim dim) {
  switch (dim) {
    case ConfigDim::kDataset:
      return "dataset";
    case ConfigDim::kTask:
      return "task";
    case ConfigDim::kQtype:
      return "qtype";
    case ConfigDim::kGranularity:
      return "granularity";
    case ConfigDim::kBackend:
      return "backend";
  }
  return "";
}

const std::string& config_value(const RankingConfig& c, ConfigDim dim) {
  switch (dim) {
    case ConfigDim::kDataset:
      return c.dataset;
    case ConfigDim::kTask:
      return c.task;
    case ConfigDim::kQtype:
      return c.qtype;
    case ConfigDim::kGranularity:
      return c.granularity;
    case ConfigDim::kBackend:
      return c.backend_id;
  }
  return c.dataset;
}

std::vector<GroupMean> mean_ap(std::span<const ApResult> results, std::span<const ConfigDim> group_by) {
  if (results.empty()) data_error(kModule, "mean over an empty group");
  std::map<std::vector<std::string>, std::vector<double>> groups;
  for (const auto& r : results) {
    std::vector<std::string> key;
    for (ConfigDim d : group_by) key.push_back(config_value(r.config, d));
    groups[key].push_back(r.ap);
  }
  std::vector<GroupMean> out;
  for (const auto& [key, values] : groups) {
    double sum = 0.0;
    for (double v : values) sum += v;
    out.push_back({key, sum / static_cast<double>(values.size()), values.size()});
  }
  return out;
}

void write_metrics(const std::filesystem::path& path, std::span<const ApResult> results) {
  std::string out(kConfigHeader);
  out += "\tn_docs\tn_positives\tap";
  const auto props = metric_proportions();
  for (double p : props) out += "\trecall@" + percent_label(p);
  out += '\n';
  for (const auto& r : results) {
    out += config_cells(r.config) + "\t" + std::to_string(r.n_docs) + "\t" + std::to_string(r.n_positives) + "\t" +
           format_double(r.ap);
    for (std::size_t i = 0; i < props.size(); ++i) {
      out += '\t';
      if (i < r.recall.size()) out += format_double(r.recall[i].recall);
    }
    out += '\n';
  }
  write_file(path, out, kModule);
}

std::vector<ApResult> read_metrics(const std::filesystem::path& path) {
  const auto lines = split_lines(read_file(path, kModule));
  if (lines.empty()) data_error(kModule, "metrics file is empty");
  const auto header = split(lines[0], '\t');
  if (header.size() < 8 || join({header.begin(), header.begin() + 5}, "\t") != kConfigHeader || header[7] != "ap") {
    data_error(kModule, "metrics file has an unexpected header");
  }
  std::vector<double> props;
  for (std::size_t i = 8; i < header.size(); ++i) {
    auto label = header[i];
    if (label.rfind("recall@", 0) != 0 || label.back() != '%') data_error(kModule, "bad column '" + label + "'");
    props.push_back(number_cell(label.substr(7, label.size() - 8), "header: ") / 100.0);
  }
  std::vector<ApResult> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const std::string where = "metrics line " + std::to_string(n + 1) + ": ";
    const auto cells = split(lines[n], '\t');
    if (cells.size() != header.size()) data_error(kModule, where + "column count differs from header");
    ApResult r;
    r.config = {cells[0], cells[1], cells[2], cells[3], cells[4]};
    r.n_docs = count_cell(cells[5], where);
    r.n_positives = count_cell(cells[6], where);
    r.ap = number_cell(cells[7], where);
    for (std::size_t i = 0; i < props.size(); ++i) {
      if (cells[8 + i].empty()) continue;
      r.recall.push_back({props[i], number_cell(cells[8 + i], where)});
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_curves(const std::filesystem::path& path, std::span<const RecallCurve> curves) {
  std::string out(kConfigHeader);
  out += "\tn_docs\tn_positives\tp\trecall\n";
  for (const auto& c : curves) {
    const auto prefix = config_cells(c.config) + "\t" + std::to_string(c.n_docs) + "\t" +
                        std::to_string(c.n_positives) + "\t";
    for (const auto& pt : c.points) out += prefix + format_double(pt.proportion) + "\t" + format_double(pt.recall) + "\n";
  }
  write_file(path, out, kModule);
}

std::vector<RecallCurve> read_curves(const std::filesystem::path& path) {
  const auto lines = split_lines(read_file(path, kModule));
  if (lines.empty() || lines[0] != std::string(kConfigHeader) + "\tn_docs\tn_positives\tp\trecall") {
    data_error(kModule, "curve file has an unexpected header");
  }
  std::vector<RecallCurve> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const std::string where = "curve line " + std::to_string(n + 1) + ": ";
    const auto cells = split(lines[n], '\t');
    if (cells.size() != 9) data_error(kModule, where + "expected 9 columns");
    RankingConfig config{cells[0], cells[1], cells[2], cells[3], cells[4]};
    if (out.empty() || !(out.back().config == config)) {
      out.push_back({config, {}, count_cell(cells[5], where), count_cell(cells[6], where)});
    }
    out.back().points.push_back({number_cell(cells[7], where), number_cell(cells[8], where)});
  }
  return out;
}

}  // namespace entrank
