#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "entrank/corpus.hpp"
#include "entrank/evaluator.hpp"

namespace entrank::testing {

std::filesystem::path fixture_dir();
std::filesystem::path data_dir();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Documents "d00", "d01", ... with one sentence each and the given labels
// for a single task.
Corpus labeled_corpus(const std::vector<bool>& labels, const std::string& task = "protest",
                      const std::string& name = "generic");

// Labels with exactly `positives` trues, shuffled by seed.
std::vector<bool> shuffled_labels(std::size_t n, std::size_t positives, std::uint64_t seed);

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr
};

// Runs a shell command and captures its output.
CommandResult run_command(const std::string& command);

std::string slurp(const std::filesystem::path& path);
void spit(const std::filesystem::path& path, const std::string& contents);

// Published per-ranking mAP, one result per table cell.
std::vector<ApResult> published_table();

struct PublishedAverage {
  std::string dataset;
  std::string backend;
  std::string granularity;
  double value = 0.0;
};
std::vector<PublishedAverage> published_averages();

// Minimal reading of a rendered curve plot.
struct PlotCurve {
  std::string backend;
  std::string qtype;
  std::string granularity;
  std::vector<std::pair<double, double>> points;  // pixel coordinates
};
struct PlotPanel {
  std::string dataset;
  std::string task;
  double x = 0, y = 0, width = 0, height = 0;  // frame rect
  std::vector<PlotCurve> curves;
  std::vector<std::string> legend;
};
std::vector<PlotPanel> parse_plot(const std::string& svg);

}  // namespace entrank::testing
