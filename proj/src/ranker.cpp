#include "entrank/ranker.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "entrank/error.hpp"
#include "entrank/text_io.hpp"

namespace entrank {

namespace {

constexpr const char* kModule = "ranker";
constexpr std::string_view kHeader = "rank\tdoc_id\tscore\targmax_unit\tn_units";

bool ranked_before(const DocScore& a, const DocScore& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

}  // namespace

std::string RankingConfig::key() const {
  return dataset + "/" + task + "/" + qtype + "/" + granularity + "/" + backend_id;
}

std::vector<DocScore> aggregate(std::span<const UnitScore> unit_scores, const Corpus& corpus) {
  if (!unit_scores.empty()) {
    const auto& first = unit_scores.front();
    for (const auto& s : unit_scores) {
      if (s.task != first.task || s.qtype != first.qtype || s.backend_id != first.backend_id) {
        config_error(kModule, "scores mix configurations (" + first.task + "/" + first.qtype + "/" +
                                  first.backend_id + " and " + s.task + "/" + s.qtype + "/" + s.backend_id + ")");
      }
    }
  }

  std::unordered_map<std::string, DocScore> best;
  std::unordered_map<std::string, std::unordered_set<std::size_t>> seen_units;
  for (const auto& s : unit_scores) {
    if (!corpus.find(s.doc_id)) data_error(kModule, "score for unknown document '" + s.doc_id + "'");
    if (!seen_units[s.doc_id].insert(s.unit_index).second) {
      data_error(kModule, "document '" + s.doc_id + "' has two scores for unit " + std::to_string(s.unit_index));
    }
    auto [it, inserted] = best.try_emplace(s.doc_id, DocScore{s.doc_id, s.probability, s.unit_index, 0});
    DocScore& d = it->second;
    ++d.n_units;
    if (inserted) continue;
    if (s.probability > d.score || (s.probability == d.score && s.unit_index < d.argmax_unit)) {
      d.score = s.probability;
      d.argmax_unit = s.unit_index;
    }
  }

  std::vector<DocScore> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus.documents()) {
    auto it = best.find(doc.doc_id);
    if (it == best.end()) data_error(kModule, "document '" + doc.doc_id + "' has no scored units");
    out.push_back(it->second);
  }
  return out;
}

Ranking rank(std::vector<DocScore> doc_scores, const RankingConfig& config, const Corpus* corpus) {
  std::unordered_set<std::string> ids;
  for (const auto& d : doc_scores) {
    if (!ids.insert(d.doc_id).second) data_error(kModule, "duplicate doc_id '" + d.doc_id + "' in ranking input");
  }
  if (corpus) {
    for (const auto& doc : corpus->documents()) {
      if (!ids.count(doc.doc_id)) data_error(kModule, "ranking misses document '" + doc.doc_id + "'");
    }
    if (ids.size() != corpus->size()) data_error(kModule, "ranking holds documents outside the corpus");
  }
  std::sort(doc_scores.begin(), doc_scores.end(), ranked_before);
  return Ranking{config, std::move(doc_scores)};
}

void write_ranking(const Ranking& ranking, const std::filesystem::path& path) {
  const auto& c = ranking.config;
  std::string out;
  out += "# dataset=" + tsv_cell(c.dataset) + "\n";
  out += "# task=" + tsv_cell(c.task) + "\n";
  out += "# qtype=" + tsv_cell(c.qtype) + "\n";
  out += "# granularity=" + tsv_cell(c.granularity) + "\n";
  out += "# backend=" + tsv_cell(c.backend_id) + "\n";
  out += kHeader;
  out += '\n';
  std::size_t r = 0;
  for (const auto& e : ranking.entries) {
    out += std::to_string(++r) + "\t" + tsv_cell(e.doc_id) + "\t" + format_double(e.score) + "\t" +
           std::to_string(e.argmax_unit) + "\t" + std::to_string(e.n_units) + "\n";
  }
  write_file(path, out, kModule);
}

Ranking parse_ranking(std::string_view contents) {
  Ranking ranking;
  bool header = false;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(contents)) {
    ++line_no;
    const std::string where = "ranking line " + std::to_string(line_no) + ": ";
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = trim(std::string_view(line).substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string key(body.substr(0, eq));
      const std::string value(body.substr(eq + 1));
      auto& c = ranking.config;
      if (key == "dataset") c.dataset = value;
      else if (key == "task") c.task = value;
      else if (key == "qtype") c.qtype = value;
      else if (key == "granularity") c.granularity = value;
      else if (key == "backend") c.backend_id = value;
      continue;
    }
    if (!header) {
      if (line != kHeader) data_error(kModule, where + "unexpected header '" + line + "'");
      header = true;
      continue;
    }
    const auto cells = split(line, '\t');
    if (cells.size() != 5) data_error(kModule, where + "expected 5 columns");
    DocScore d;
    d.doc_id = cells[1];
    std::size_t rank_value = 0;
    try {
      rank_value = std::stoull(cells[0]);
      d.argmax_unit = std::stoull(cells[3]);
      d.n_units = std::stoull(cells[4]);
    } catch (const std::exception&) {
      data_error(kModule, where + "bad integer column");
    }
    if (!parse_double(cells[2], d.score)) data_error(kModule, where + "bad score '" + cells[2] + "'");
    if (rank_value != ranking.entries.size() + 1) data_error(kModule, where + "ranks are not consecutive");
    ranking.entries.push_back(std::move(d));
  }
  if (!header) data_error(kModule, "ranking file has no header");
  for (std::size_t i = 1; i < ranking.entries.size(); ++i) {
    if (!ranked_before(ranking.entries[i - 1], ranking.entries[i])) {
      data_error(kModule, "ranking is not in score-descending, doc_id-ascending order at rank " +
                              std::to_string(i + 1));
    }
  }
  return ranking;
}

Ranking read_ranking(const std::filesystem::path& path) { return parse_ranking(read_file(path, kModule)); }

}  // namespace entrank
