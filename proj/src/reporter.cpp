#include "entrank/reporter.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "entrank/error.hpp"
#include "entrank/text_io.hpp"

namespace entrank {

namespace {

constexpr const char* kModule = "reporter";

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

constexpr double kPanelWidth = 520.0;
constexpr double kPanelHeight = 340.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

template <typename T>
std::size_t index_in(std::vector<T>& list, const T& value) {
  auto it = std::find(list.begin(), list.end(), value);
  if (it != list.end()) return static_cast<std::size_t>(it - list.begin());
  list.push_back(value);
  return list.size() - 1;
}

std::string display(const std::optional<double>& v) { return v ? round_half_even(*v) : "-"; }

void write_table_files(const MetricTable& table, std::span<const ApResult> results,
                       const std::filesystem::path& out_dir, const std::string& stem) {
  write_file(out_dir / (stem + ".txt"), render_table_text(table), kModule);
  write_file(out_dir / (stem + ".tsv"), render_table_tsv(table), kModule);
  std::string full = "dataset\ttask\tqtype\tgranularity\tbackend\tap\n";
  for (const auto& r : results) {
    full += tsv_cell(r.config.dataset) + "\t" + tsv_cell(r.config.task) + "\t" + tsv_cell(r.config.qtype) + "\t" +
            tsv_cell(r.config.granularity) + "\t" + tsv_cell(r.config.backend_id) + "\t" + format_double(r.ap) + "\n";
  }
  write_file(out_dir / (stem + ".full.tsv"), full, kModule);
}

}  // namespace

std::string round_half_even(double value, int decimals) {
  if (!std::isfinite(value)) return format_double(value);
  if (decimals < 0) config_error(kModule, "negative decimal count");
  char buf[512];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
  std::string s(buf, res.ptr);

  bool negative = false;
  if (!s.empty() && s[0] == '-') {
    negative = true;
    s.erase(0, 1);
  }
  const auto dot = s.find('.');
  const std::string int_part = dot == std::string::npos ? s : s.substr(0, dot);
  std::string frac = dot == std::string::npos ? "" : s.substr(dot + 1);
  const auto d = static_cast<std::size_t>(decimals);

  std::string digits = int_part + frac.substr(0, std::min(d, frac.size()));
  if (frac.size() < d) digits.append(d - frac.size(), '0');

  if (frac.size() > d) {
    const char next = frac[d];
    const bool rest_nonzero = frac.find_first_not_of('0', d + 1) != std::string::npos;
    const bool last_odd = ((digits.back() - '0') % 2) == 1;
    if (next > '5' || (next == '5' && (rest_nonzero || last_odd))) {
      std::size_t i = digits.size();
      while (i > 0) {
        --i;
        if (digits[i] == '9') {
          digits[i] = '0';
        } else {
          ++digits[i];
          break;
        }
        if (i == 0) {
          digits.insert(digits.begin(), '1');
        }
      }
    }
  }
  const std::size_t int_len = digits.size() - d;
  std::string out = digits.substr(0, int_len);
  if (d > 0) out += "." + digits.substr(int_len);
  if (negative && out.find_first_not_of("0.") != std::string::npos) out.insert(out.begin(), '-');
  return out;
}

std::string short_qtype(const std::string& qtype) {
  if (qtype == "declarative") return "decl";
  if (qtype == "definitional") return "def";
  return qtype;
}

std::string short_granularity(const std::string& granularity) {
  if (granularity == "sentence") return "sent";
  if (granularity == "document") return "doc";
  return granularity;
}

std::string render_curve_plot(std::span<const RecallCurve> curves) {
  if (curves.empty()) config_error(kModule, "no curves to plot");
  for (const auto& c : curves) {
    if (c.points.size() != curves[0].points.size()) config_error(kModule, "curves do not share a grid");
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      if (c.points[i].proportion != curves[0].points[i].proportion) {
        config_error(kModule, "curves do not share a grid");
      }
    }
  }

  std::vector<std::pair<std::string, std::string>> panels;
  std::vector<std::vector<const RecallCurve*>> members;
  for (const auto& c : curves) {
    const std::size_t k = index_in(panels, std::make_pair(c.config.dataset, c.config.task));
    if (members.size() <= k) members.resize(k + 1);
    members[k].push_back(&c);
  }

  const double plot_w = kPanelWidth - kLeft - kRight;
  const double plot_h = kPanelHeight - kTop - kBottom;
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed2(kPanelWidth) + "\" height=\"" +
         fixed2(kPanelHeight * static_cast<double>(panels.size())) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const double oy = kPanelHeight * static_cast<double>(k);
    auto px = [&](double pct) { return kLeft + plot_w * pct / 100.0; };
    auto py = [&](double r) { return oy + kTop + plot_h * (1.0 - r); };
    const std::string title = panels[k].first + ": " + panels[k].second;

    svg += "<g class=\"panel\" data-dataset=\"" + xml_escape(panels[k].first) + "\" data-task=\"" +
           xml_escape(panels[k].second) + "\">\n";
    svg += "<text x=\"" + fixed2(kLeft + plot_w / 2) + "\" y=\"" + fixed2(oy + kTop - 14) +
           "\" text-anchor=\"middle\" font-size=\"13\">" + xml_escape(title) + "</text>\n";
    svg += "<rect class=\"frame\" x=\"" + fixed2(kLeft) + "\" y=\"" + fixed2(oy + kTop) + "\" width=\"" +
           fixed2(plot_w) + "\" height=\"" + fixed2(plot_h) + "\" fill=\"none\" stroke=\"#000\"/>\n";
    for (int t = 0; t <= 100; t += 20) {
      svg += "<line x1=\"" + fixed2(px(t)) + "\" y1=\"" + fixed2(py(0)) + "\" x2=\"" + fixed2(px(t)) + "\" y2=\"" +
             fixed2(py(0) + 4) + "\" stroke=\"#000\"/>";
      svg += "<text class=\"xtick\" x=\"" + fixed2(px(t)) + "\" y=\"" + fixed2(py(0) + 16) +
             "\" text-anchor=\"middle\">" + std::to_string(t) + "</text>\n";
    }
    for (int t = 0; t <= 10; t += 2) {
      const double r = t / 10.0;
      svg += "<line x1=\"" + fixed2(kLeft - 4) + "\" y1=\"" + fixed2(py(r)) + "\" x2=\"" + fixed2(kLeft) + "\" y2=\"" +
             fixed2(py(r)) + "\" stroke=\"#000\"/>";
      svg += "<text class=\"ytick\" x=\"" + fixed2(kLeft - 7) + "\" y=\"" + fixed2(py(r) + 4) +
             "\" text-anchor=\"end\">" + fixed2(r).substr(0, 3) + "</text>\n";
    }
    svg += "<text x=\"" + fixed2(kLeft + plot_w / 2) + "\" y=\"" + fixed2(oy + kPanelHeight - 12) +
           "\" text-anchor=\"middle\">% of data read</text>\n";
    svg += "<text x=\"14\" y=\"" + fixed2(oy + kTop + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
           fixed2(oy + kTop + plot_h / 2) + ")\">recall</text>\n";

    for (std::size_t i = 0; i < members[k].size(); ++i) {
      const auto& c = *members[k][i];
      const char* color = kPalette[i % std::size(kPalette)];
      std::string pts = fixed2(px(0)) + "," + fixed2(py(0));
      for (const auto& p : c.points) pts += " " + fixed2(px(p.proportion * 100.0)) + "," + fixed2(py(p.recall));
      const std::string label =
          c.config.backend_id + " " + short_qtype(c.config.qtype) + "-" + short_granularity(c.config.granularity);
      svg += "<polyline class=\"curve\" data-backend=\"" + xml_escape(c.config.backend_id) + "\" data-qtype=\"" +
             xml_escape(c.config.qtype) + "\" data-granularity=\"" + xml_escape(c.config.granularity) +
             "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
      const double ly = oy + kTop + 10 + 16 * static_cast<double>(i);
      const double lx = kLeft + plot_w + 12;
      svg += "<line x1=\"" + fixed2(lx) + "\" y1=\"" + fixed2(ly) + "\" x2=\"" + fixed2(lx + 18) + "\" y2=\"" +
             fixed2(ly) + "\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>";
      svg += "<text class=\"legend\" x=\"" + fixed2(lx + 22) + "\" y=\"" + fixed2(ly + 4) + "\">" + xml_escape(label) +
             "</text>\n";
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void emit_curve_plot(std::span<const RecallCurve> curves, const std::filesystem::path& path) {
  write_file(path, render_curve_plot(curves), kModule);
}

MetricTable build_table(std::span<const ApResult> results) {
  if (results.empty()) config_error(kModule, "no results to tabulate");
  MetricTable t;
  std::vector<std::pair<std::string, std::string>> rows;
  std::set<RankingConfig> seen;
  for (const auto& r : results) {
    if (!seen.insert(r.config).second) data_error(kModule, "duplicate result for " + r.config.key());
    const std::size_t row = index_in(
        rows, std::make_pair(r.config.backend_id,
                             short_qtype(r.config.qtype) + "-" + short_granularity(r.config.granularity)));
    const std::size_t col = index_in(t.columns, r.config.dataset + ":" + r.config.task);
    if (t.values.size() <= row) t.values.resize(row + 1);
    for (auto& v : t.values) v.resize(t.columns.size());
    t.values[row][col] = r.ap;
  }
  for (auto& v : t.values) v.resize(t.columns.size());
  for (const auto& [backend, query] : rows) {
    t.row_backends.push_back(backend);
    t.row_queries.push_back(query);
  }
  return t;
}

std::string render_table_text(const MetricTable& t) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"backend", "query"});
  for (const auto& c : t.columns) cells[0].push_back(c);
  for (std::size_t r = 0; r < t.values.size(); ++r) {
    std::vector<std::string> row = {t.row_backends[r], t.row_queries[r]};
    for (const auto& v : t.values[r]) row.push_back(display(v));
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += "  ";
      // Labels left-aligned, values right-aligned.
      const std::size_t pad = width[i] - row[i].size();
      if (i < 2) {
        line += row[i] + std::string(pad, ' ');
      } else {
        line += std::string(pad, ' ') + row[i];
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::string render_table_tsv(const MetricTable& t) {
  std::string out = "backend\tquery";
  for (const auto& c : t.columns) out += "\t" + tsv_cell(c);
  out += "\n";
  for (std::size_t r = 0; r < t.values.size(); ++r) {
    out += tsv_cell(t.row_backends[r]) + "\t" + tsv_cell(t.row_queries[r]);
    for (const auto& v : t.values[r]) out += "\t" + display(v);
    out += "\n";
  }
  return out;
}

void emit_tables(std::span<const ApResult> results, const std::filesystem::path& out_dir, const std::string& stem) {
  write_table_files(build_table(results), results, out_dir, stem);
}

std::vector<ApResult> read_full_table(const std::filesystem::path& path) {
  const auto lines = split_lines(read_file(path, kModule));
  if (lines.empty() || lines[0] != "dataset\ttask\tqtype\tgranularity\tbackend\tap") {
    data_error(kModule, path.string() + ": unexpected header");
  }
  std::vector<ApResult> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto cells = split(lines[n], '\t');
    if (cells.size() != 6) data_error(kModule, path.string() + ":" + std::to_string(n + 1) + ": expected 6 columns");
    ApResult r;
    r.config = {cells[0], cells[1], cells[2], cells[3], cells[4]};
    if (!parse_double(cells[5], r.ap)) {
      data_error(kModule, path.string() + ":" + std::to_string(n + 1) + ": bad value '" + cells[5] + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

MetricTable build_average_table(std::span<const ApResult> results) {
  if (results.empty()) config_error(kModule, "no results to average");
  const ConfigDim dims[] = {ConfigDim::kDataset, ConfigDim::kBackend, ConfigDim::kGranularity};
  const auto means = mean_ap(results, dims);

  // Row and column order follow first appearance in the results.
  MetricTable t;
  std::vector<std::string> rows;
  for (const auto& r : results) {
    index_in(rows, short_granularity(r.config.granularity));
    index_in(t.columns, r.config.dataset + ":" + r.config.backend_id);
  }
  t.values.assign(rows.size(), std::vector<std::optional<double>>(t.columns.size()));
  for (const auto& m : means) {
    const std::size_t row = index_in(rows, short_granularity(m.key[2]));
    const std::size_t col = index_in(t.columns, m.key[0] + ":" + m.key[1]);
    t.values[row][col] = m.mean;
  }
  for (const auto& r : rows) {
    t.row_backends.push_back("mean");
    t.row_queries.push_back(r);
  }
  return t;
}

void emit_average_table(std::span<const ApResult> results, const std::filesystem::path& out_dir,
                        const std::string& stem) {
  const auto table = build_average_table(results);
  write_file(out_dir / (stem + ".txt"), render_table_text(table), kModule);
  write_file(out_dir / (stem + ".tsv"), render_table_tsv(table), kModule);
  const ConfigDim dims[] = {ConfigDim::kDataset, ConfigDim::kBackend, ConfigDim::kGranularity};
  std::string full = "dataset\tbackend\tgranularity\tcount\tmean_ap\n";
  for (const auto& m : mean_ap(results, dims)) {
    full += tsv_cell(m.key[0]) + "\t" + tsv_cell(m.key[1]) + "\t" + tsv_cell(m.key[2]) + "\t" +
            std::to_string(m.count) + "\t" + format_double(m.mean) + "\n";
  }
  write_file(out_dir / (stem + ".full.tsv"), full, kModule);
}

ReadingList build_reading_list(const Ranking& ranking, std::span<const ScoringUnit> units, const Corpus* corpus,
                               std::size_t limit) {
  std::map<std::pair<std::string, std::size_t>, const ScoringUnit*> by_key;
  for (const auto& u : units) by_key[{u.doc_id, u.unit_index}] = &u;

  ReadingList list;
  list.config = ranking.config;
  const std::size_t n = limit == 0 ? ranking.entries.size() : std::min(limit, ranking.entries.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = ranking.entries[i];
    auto it = by_key.find({e.doc_id, e.argmax_unit});
    if (it == by_key.end()) {
      data_error(kModule, "no unit text for (" + e.doc_id + ", " + std::to_string(e.argmax_unit) + ")");
    }
    ReadingRow row{i + 1, e.doc_id, e.score, e.argmax_unit, it->second->text, std::nullopt};
    if (corpus) {
      if (const Document* doc = corpus->find(e.doc_id); doc && corpus->has_task(ranking.config.task)) {
        row.gold = doc->label(ranking.config.task);
      }
    }
    list.rows.push_back(std::move(row));
  }
  return list;
}

void write_reading_list(const ReadingList& list, const std::filesystem::path& path) {
  std::string out = "rank\tdoc_id\tscore\tunit_index\tgold\tpassage\n";
  for (const auto& r : list.rows) {
    out += std::to_string(r.rank) + "\t" + tsv_cell(r.doc_id) + "\t" + format_double(r.score) + "\t" +
           std::to_string(r.unit_index) + "\t" + (r.gold ? (*r.gold ? "1" : "0") : "") + "\t" + tsv_cell(r.passage) +
           "\n";
  }
  write_file(path, out, kModule);
}

}  // namespace entrank
