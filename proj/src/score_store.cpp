#include <json.hpp>

#include "entrank/error.hpp"
#include "entrank/scorer.hpp"
#include "entrank/text_io.hpp"

namespace entrank {

using nlohmann::json;

namespace {

constexpr const char* kModule = "scorer";

std::string where(std::size_t line) { return "line " + std::to_string(line) + ": "; }

void check_probability(double p, const std::string& context) {
  if (!(p >= 0.0 && p <= 1.0)) data_error(kModule, context + "probability " + format_double(p) + " outside [0,1]");
}

template <typename Fn>
void for_each_line(std::string_view contents, Fn&& fn) {
  std::size_t line_no = 0;
  for (const auto& line : split_lines(contents)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      data_error(kModule, where(line_no) + "malformed record: " + e.what());
    }
    if (!record.is_object()) data_error(kModule, where(line_no) + "record is not an object");
    try {
      fn(record, line_no);
    } catch (const json::exception& e) {
      data_error(kModule, where(line_no) + "schema violation: " + e.what());
    }
  }
}

std::string string_field(const json& r, const char* name, std::size_t line) {
  auto it = r.find(name);
  if (it == r.end() || !it->is_string()) data_error(kModule, where(line) + "missing string field '" + name + "'");
  return it->get<std::string>();
}

std::size_t index_field(const json& r, const char* name, std::size_t line) {
  auto it = r.find(name);
  if (it == r.end() || !it->is_number_unsigned()) {
    data_error(kModule, where(line) + "missing non-negative integer field '" + name + "'");
  }
  return it->get<std::size_t>();
}

}  // namespace

ScoreStore::ScoreStore(std::span<const UnitScore> scores) {
  for (const auto& s : scores) add(s);
}

void ScoreStore::add(const UnitScore& s) {
  const std::string id = "(" + s.doc_id + ", " + std::to_string(s.unit_index) + ", " + s.task + ", " + s.qtype +
                         ", " + s.backend_id + ")";
  check_probability(s.probability, id + ": ");
  if (!scores_.emplace(Key{s.doc_id, s.unit_index, s.task, s.qtype, s.backend_id}, s.probability).second) {
    data_error(kModule, "duplicate score " + id);
  }
}

std::optional<double> ScoreStore::find(const Key& key) const {
  auto it = scores_.find(key);
  if (it == scores_.end()) return std::nullopt;
  return it->second;
}

std::vector<UnitScore> ScoreStore::all() const {
  std::vector<UnitScore> out;
  out.reserve(scores_.size());
  for (const auto& [k, p] : scores_) {
    out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), std::get<4>(k), p});
  }
  return out;
}

void save_cached(const std::filesystem::path& path, std::span<const UnitScore> scores) {
  std::string out;
  for (const auto& s : scores) {
    check_probability(s.probability, s.doc_id + ": ");
    json r;
    r["doc_id"] = s.doc_id;
    r["unit_index"] = s.unit_index;
    r["task"] = s.task;
    r["qtype"] = s.qtype;
    r["backend_id"] = s.backend_id;
    r["probability"] = format_double(s.probability);
    out += r.dump();
    out += '\n';
  }
  write_file(path, out, kModule);
}

std::vector<UnitScore> parse_cached(std::string_view contents) {
  std::vector<UnitScore> out;
  ScoreStore seen;
  for_each_line(contents, [&](const json& r, std::size_t line) {
    UnitScore s;
    s.doc_id = string_field(r, "doc_id", line);
    s.unit_index = index_field(r, "unit_index", line);
    s.task = string_field(r, "task", line);
    s.qtype = string_field(r, "qtype", line);
    s.backend_id = string_field(r, "backend_id", line);
    const auto text = string_field(r, "probability", line);
    if (!parse_double(text, s.probability)) data_error(kModule, where(line) + "probability '" + text + "' is not a number");
    check_probability(s.probability, where(line));
    try {
      seen.add(s);
    } catch (const Error& e) {
      data_error(kModule, where(line) + e.what());
    }
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<UnitScore> load_cached(const std::filesystem::path& path) {
  return parse_cached(read_file(path, kModule));
}

void save_units(const std::filesystem::path& path, std::span<const UnitSet> sets) {
  std::string out;
  for (const auto& set : sets) {
    for (const auto& u : set.units) {
      json r;
      r["task"] = set.task;
      r["qtype"] = set.qtype;
      r["doc_id"] = u.doc_id;
      r["unit_index"] = u.unit_index;
      r["granularity"] = std::string(to_string(u.granularity));
      r["text"] = u.text;
      r["token_count"] = u.token_count;
      r["first_sentence"] = u.first_sentence;
      r["sentence_count"] = u.sentence_count;
      r["truncated"] = u.truncated;
      out += r.dump();
      out += '\n';
    }
  }
  write_file(path, out, kModule);
}

std::vector<UnitSet> load_units(const std::filesystem::path& path) {
  std::vector<UnitSet> out;
  for_each_line(read_file(path, kModule), [&](const json& r, std::size_t line) {
    const auto task = string_field(r, "task", line);
    const auto qtype = string_field(r, "qtype", line);
    ScoringUnit u;
    u.doc_id = string_field(r, "doc_id", line);
    u.unit_index = index_field(r, "unit_index", line);
    u.granularity = parse_granularity(string_field(r, "granularity", line));
    u.text = string_field(r, "text", line);
    u.token_count = r.value("token_count", std::size_t{0});
    u.first_sentence = r.value("first_sentence", std::size_t{0});
    u.sentence_count = r.value("sentence_count", std::size_t{1});
    u.truncated = r.value("truncated", false);
    if (out.empty() || out.back().task != task || out.back().qtype != qtype) out.push_back({task, qtype, {}});
    out.back().units.push_back(std::move(u));
  });
  return out;
}

}  // namespace entrank
