#include "support.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

#include "entrank/text_io.hpp"

namespace entrank::testing {

namespace fs = std::filesystem;

fs::path fixture_dir() { return ENTRANK_FIXTURE_DIR; }
fs::path data_dir() { return ENTRANK_DEFAULT_DATA_DIR; }

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = fs::temp_directory_path() /
                     ("entrank-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
                      std::to_string(rd() % 100000));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create a temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Corpus labeled_corpus(const std::vector<bool>& labels, const std::string& task, const std::string& name) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Document d;
    char id[16];
    std::snprintf(id, sizeof(id), "d%02zu", i);
    d.doc_id = id;
    d.text = "Document " + std::to_string(i) + " text.";
    d.labels[task] = labels[i];
    docs.push_back(std::move(d));
  }
  return Corpus(name, {task}, std::move(docs));
}

std::vector<bool> shuffled_labels(std::size_t n, std::size_t positives, std::uint64_t seed) {
  std::vector<bool> labels(n, false);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(positives), true);
  std::mt19937_64 rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

CommandResult run_command(const std::string& command) {
  CommandResult result;
  FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed: " + command);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) result.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
}

namespace {

std::vector<std::vector<std::string>> fixture_rows(const std::string& name, std::size_t columns) {
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  for (const auto& line : split_lines(slurp(fixture_dir() / name))) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    auto cells = split(line, '\t');
    if (cells.size() != columns) throw std::runtime_error(name + ": bad row '" + line + "'");
    rows.push_back(std::move(cells));
  }
  return rows;
}

double number(const std::string& s) {
  double v = 0;
  if (!parse_double(s, v)) throw std::runtime_error("bad number '" + s + "'");
  return v;
}

std::string attr(const std::string& tag, const std::string& name) {
  const std::regex re(" " + name + "=\"([^\"]*)\"");
  std::smatch m;
  if (!std::regex_search(tag, m, re)) throw std::runtime_error("missing attribute " + name + " in " + tag);
  return m[1];
}

}  // namespace

std::vector<ApResult> published_table() {
  std::vector<ApResult> out;
  for (const auto& c : fixture_rows("published_table.tsv", 6)) {
    ApResult r;
    r.config = {c[3], c[4], c[1], c[2], c[0]};
    r.ap = number(c[5]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PublishedAverage> published_averages() {
  std::vector<PublishedAverage> out;
  for (const auto& c : fixture_rows("published_averages.tsv", 4)) out.push_back({c[0], c[1], c[2], number(c[3])});
  return out;
}

std::vector<PlotPanel> parse_plot(const std::string& svg) {
  std::vector<PlotPanel> panels;
  const std::regex tag_re("<(g class=\"panel\"[^>]*|rect class=\"frame\"[^>]*|polyline class=\"curve\"[^>]*|"
                          "text class=\"legend\"[^>]*)>([^<]*)");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tag_re); it != std::sregex_iterator(); ++it) {
    const std::string tag = " " + (*it)[1].str();
    if (tag.rfind(" g ", 0) == 0) {
      panels.push_back({attr(tag, "data-dataset"), attr(tag, "data-task")});
      continue;
    }
    if (panels.empty()) throw std::runtime_error("plot element outside a panel");
    auto& p = panels.back();
    if (tag.rfind(" rect ", 0) == 0) {
      p.x = number(attr(tag, "x"));
      p.y = number(attr(tag, "y"));
      p.width = number(attr(tag, "width"));
      p.height = number(attr(tag, "height"));
    } else if (tag.rfind(" polyline ", 0) == 0) {
      PlotCurve c{attr(tag, "data-backend"), attr(tag, "data-qtype"), attr(tag, "data-granularity")};
      for (const auto& pair : split(attr(tag, "points"), ' ')) {
        const auto xy = split(pair, ',');
        if (xy.size() != 2) throw std::runtime_error("bad point '" + pair + "'");
        c.points.emplace_back(number(xy[0]), number(xy[1]));
      }
      p.curves.push_back(std::move(c));
    } else {
      p.legend.push_back((*it)[2].str());
    }
  }
  return panels;
}

}  // namespace entrank::testing
