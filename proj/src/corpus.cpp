#include "entrank/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "entrank/error.hpp"
#include "entrank/random.hpp"
#include "entrank/text_io.hpp"

namespace entrank {

using nlohmann::json;

namespace {

constexpr const char* kModule = "corpus";

std::string where(std::size_t line) { return "line " + std::to_string(line) + ": "; }

// Identifiers arrive as strings or integers depending on the dataset.
std::optional<std::string> id_value(const json& record, const std::string& field) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  if (it->is_number_unsigned()) return std::to_string(it->get<unsigned long long>());
  return std::nullopt;
}

bool label_value(const json& value, const std::string& context) {
  if (value.is_boolean()) return value.get<bool>();
  if (value.is_number()) return value.get<double>() != 0.0;
  if (value.is_string()) {
    const auto s = value.get<std::string>();
    if (s == "true" || s == "True" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "False" || s == "0" || s == "no" || s.empty()) return false;
  }
  data_error(kModule, context + "label value is not boolean: " + value.dump());
}

json parse_record(std::string_view line, std::size_t line_no) {
  try {
    json record = json::parse(line);
    if (!record.is_object()) data_error(kModule, where(line_no) + "malformed record: not an object");
    return record;
  } catch (const json::parse_error& e) {
    data_error(kModule, where(line_no) + "malformed record: " + e.what());
  }
}

template <typename Fn>
void for_each_record(std::string_view contents, Fn&& fn) {
  const auto lines = split_lines(contents);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    fn(parse_record(lines[i], i + 1), i + 1);
  }
}

}  // namespace

bool Document::label(const std::string& task) const {
  auto it = labels.find(task);
  return it != labels.end() && it->second;
}

Corpus::Corpus(std::string name, std::vector<std::string> tasks,
               std::vector<Document> documents, ExpectedCorpusStats expected)
    : name_(std::move(name)),
      tasks_(std::move(tasks)),
      documents_(std::move(documents)),
      expected_(std::move(expected)) {
  if (tasks_.empty()) data_error(kModule, "corpus '" + name_ + "' has no tasks");
  if (documents_.empty()) data_error(kModule, "corpus '" + name_ + "' has no documents");
  std::set<std::string> seen_tasks;
  for (const auto& t : tasks_) {
    if (!seen_tasks.insert(t).second) data_error(kModule, "duplicate task '" + t + "'");
  }
  index_.reserve(documents_.size());
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const auto& doc = documents_[i];
    if (!index_.emplace(doc.doc_id, i).second) {
      data_error(kModule, "duplicate doc_id '" + doc.doc_id + "'");
    }
    for (const auto& t : tasks_) {
      if (!doc.labels.count(t)) {
        data_error(kModule, "document '" + doc.doc_id + "' has no label for task '" + t + "'");
      }
    }
  }
}

bool Corpus::has_task(std::string_view task) const {
  return std::find(tasks_.begin(), tasks_.end(), task) != tasks_.end();
}

const Document* Corpus::find(std::string_view doc_id) const {
  auto it = index_.find(std::string(doc_id));
  return it == index_.end() ? nullptr : &documents_[it->second];
}

const Document& Corpus::at(std::string_view doc_id) const {
  const Document* doc = find(doc_id);
  if (!doc) data_error(kModule, "unknown doc_id '" + std::string(doc_id) + "'");
  return *doc;
}

Corpus parse_generic(std::string_view contents, const FormatConfig& format) {
  std::vector<Document> docs;
  std::vector<std::string> tasks = format.tasks;
  std::set<std::string> seen;

  for_each_record(contents, [&](const json& record, std::size_t line) {
    Document doc;
    auto id = id_value(record, format.doc_id_field);
    if (!id) data_error(kModule, where(line) + "missing required field '" + format.doc_id_field + "'");
    doc.doc_id = *id;
    if (!seen.insert(doc.doc_id).second) {
      data_error(kModule, where(line) + "duplicate doc_id '" + doc.doc_id + "'");
    }

    if (auto it = record.find(format.sentences_field); it != record.end() && !it->is_null()) {
      if (!it->is_array()) data_error(kModule, where(line) + "'" + format.sentences_field + "' is not an array");
      std::vector<std::string> sentences;
      for (const auto& s : *it) {
        if (!s.is_string()) data_error(kModule, where(line) + "sentence is not a string");
        sentences.push_back(s.get<std::string>());
      }
      doc.sentences = std::move(sentences);
    }

    if (auto it = record.find(format.text_field); it != record.end() && it->is_string()) {
      doc.text = it->get<std::string>();
    } else if (doc.sentences) {
      doc.text = join(*doc.sentences, " ");
    } else {
      data_error(kModule, where(line) + "missing required field '" + format.text_field + "'");
    }

    auto labels = record.find(format.labels_field);
    if (labels == record.end() || !labels->is_object()) {
      data_error(kModule, where(line) + "missing required field '" + format.labels_field + "'");
    }
    if (tasks.empty()) {
      for (const auto& [key, _] : labels->items()) tasks.push_back(key);
      if (tasks.empty()) data_error(kModule, where(line) + "record has no task labels");
    }
    for (const auto& [key, value] : labels->items()) {
      doc.labels[key] = label_value(value, where(line));
    }
    for (const auto& t : tasks) {
      if (!doc.labels.count(t)) {
        data_error(kModule, where(line) + "document '" + doc.doc_id + "' missing label for task '" + t + "'");
      }
    }
    docs.push_back(std::move(doc));
  });

  return Corpus(format.name, std::move(tasks), std::move(docs));
}

Corpus ingest_generic(const std::filesystem::path& path, const FormatConfig& format) {
  return parse_generic(read_file(path, kModule), format);
}

void export_generic(const Corpus& corpus, const std::filesystem::path& path) {
  std::string out;
  for (const auto& doc : corpus.documents()) {
    json record;
    record["doc_id"] = doc.doc_id;
    record["text"] = doc.text;
    if (doc.sentences) record["sentences"] = *doc.sentences;
    json labels = json::object();
    for (const auto& t : corpus.tasks()) labels[t] = doc.label(t);
    record["labels"] = labels;
    out += record.dump();
    out += '\n';
  }
  write_file(path, out, kModule);
}

const std::vector<std::string>& india_police_tasks() {
  static const std::vector<std::string> kTasks = {"kill", "arrest", "fail", "force", "any_action"};
  return kTasks;
}

ExpectedCorpusStats india_police_expected() {
  ExpectedCorpusStats e;
  e.documents = 1257;
  e.sentences = 21391;
  e.tasks = {{"kill", {50, 3.98}},
             {"arrest", {128, 10.17}},
             {"fail", {114, 9.05}},
             {"force", {90, 7.15}},
             {"any_action", {457, 36.24}}};
  return e;
}

ExpectedCorpusStats protestnews_expected_full() {
  ExpectedCorpusStats e;
  e.documents = 9327;
  e.tasks = {{"protest", {1912, 20.51}}};
  return e;
}

IndiaLayout load_india_layout(const std::filesystem::path& path) {
  IndiaLayout layout;
  json cfg;
  try {
    cfg = json::parse(read_file(path, kModule));
  } catch (const json::exception& e) {
    config_error(kModule, "layout file " + path.string() + ": " + e.what());
  }
  auto take = [&](const char* key, std::string& field) {
    if (cfg.contains(key)) field = cfg.at(key).get<std::string>();
  };
  take("doc_file", layout.doc_file);
  take("sent_file", layout.sent_file);
  take("doc_id_field", layout.doc_id_field);
  take("doc_text_field", layout.doc_text_field);
  take("doc_labels_field", layout.doc_labels_field);
  take("sent_doc_id_field", layout.sent_doc_id_field);
  take("sent_index_field", layout.sent_index_field);
  take("sent_text_field", layout.sent_text_field);
  take("sent_labels_field", layout.sent_labels_field);
  if (cfg.contains("task_keys")) {
    layout.task_keys.clear();
    for (const auto& [task, key] : cfg.at("task_keys").items()) {
      layout.task_keys[task] = key.get<std::string>();
    }
  }
  return layout;
}

Corpus ingest_india_police(const std::filesystem::path& dir, const IndiaLayout& layout) {
  namespace fs = std::filesystem;
  fs::path root = dir;
  if (!fs::exists(root / layout.doc_file) && fs::exists(root / "data" / "final" / layout.doc_file)) {
    root = root / "data" / "final";
  }
  for (const auto& f : {layout.doc_file, layout.sent_file}) {
    if (!fs::exists(root / f)) {
      data_error(kModule, "layout mismatch: expected " + (root / f).string());
    }
  }
  for (const auto& t : india_police_tasks()) {
    if (!layout.task_keys.count(t)) config_error(kModule, "layout has no label key for task '" + t + "'");
  }

  struct Pending {
    std::string doc_id;
    std::optional<std::string> text;
    std::optional<std::map<std::string, bool>> doc_labels;
    // (sentence index or arrival order, text, labels)
    std::vector<std::tuple<long long, std::string, std::map<std::string, bool>>> sents;
  };
  std::vector<Pending> pending;
  std::unordered_map<std::string, std::size_t> index;

  auto read_labels = [&](const json& obj, const std::string& context) {
    std::map<std::string, bool> labels;
    for (const auto& t : india_police_tasks()) {
      const auto& key = layout.task_keys.at(t);
      auto it = obj.find(key);
      if (it == obj.end()) data_error(kModule, context + "layout mismatch: label key '" + key + "' absent");
      labels[t] = label_value(*it, context);
    }
    return labels;
  };

  for_each_record(read_file(root / layout.doc_file, kModule), [&](const json& rec, std::size_t line) {
    const std::string ctx = layout.doc_file + " " + where(line);
    auto id = id_value(rec, layout.doc_id_field);
    if (!id) data_error(kModule, ctx + "layout mismatch: no '" + layout.doc_id_field + "' field");
    if (index.count(*id)) data_error(kModule, ctx + "duplicate doc_id '" + *id + "'");
    Pending p;
    p.doc_id = *id;
    if (auto it = rec.find(layout.doc_text_field); it != rec.end() && it->is_string()) {
      p.text = it->get<std::string>();
    }
    if (auto it = rec.find(layout.doc_labels_field); it != rec.end() && it->is_object()) {
      p.doc_labels = read_labels(*it, ctx);
    }
    index.emplace(p.doc_id, pending.size());
    pending.push_back(std::move(p));
  });

  long long arrival = 0;
  for_each_record(read_file(root / layout.sent_file, kModule), [&](const json& rec, std::size_t line) {
    const std::string ctx = layout.sent_file + " " + where(line);
    auto id = id_value(rec, layout.sent_doc_id_field);
    if (!id) data_error(kModule, ctx + "layout mismatch: no '" + layout.sent_doc_id_field + "' field");
    auto it = index.find(*id);
    if (it == index.end()) data_error(kModule, ctx + "sentence references unknown document '" + *id + "'");
    auto text = rec.find(layout.sent_text_field);
    if (text == rec.end() || !text->is_string()) {
      data_error(kModule, ctx + "layout mismatch: no '" + layout.sent_text_field + "' field");
    }
    long long order = arrival++;
    if (auto idx = rec.find(layout.sent_index_field); idx != rec.end() && idx->is_number_integer()) {
      order = idx->get<long long>();
    }
    auto labels = rec.find(layout.sent_labels_field);
    if (labels == rec.end() || !labels->is_object()) {
      data_error(kModule, ctx + "layout mismatch: no '" + layout.sent_labels_field + "' object");
    }
    pending[it->second].sents.emplace_back(order, text->get<std::string>(), read_labels(*labels, ctx));
  });

  std::vector<Document> docs;
  docs.reserve(pending.size());
  std::map<std::string, std::size_t> disagreements;
  for (auto& p : pending) {
    std::stable_sort(p.sents.begin(), p.sents.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
    Document doc;
    doc.doc_id = p.doc_id;
    for (const auto& t : india_police_tasks()) doc.labels[t] = false;
    if (!p.sents.empty()) {
      std::vector<std::string> sentences;
      for (auto& [order, text, labels] : p.sents) {
        for (const auto& [t, v] : labels) doc.labels[t] = doc.labels[t] || v;
        sentences.push_back(std::move(text));
      }
      doc.sentences = std::move(sentences);
    }
    doc.text = p.text ? *p.text : (doc.sentences ? join(*doc.sentences, " ") : std::string());
    if (p.doc_labels) {
      for (const auto& [t, v] : *p.doc_labels) {
        if (v != doc.labels[t]) ++disagreements[t];
      }
    }
    docs.push_back(std::move(doc));
  }

  Corpus corpus(std::string(kIndiaPoliceName), india_police_tasks(), std::move(docs),
                india_police_expected());
  for (const auto& [task, n] : disagreements) {
    corpus.add_note("doc-level file disagrees with OR of sentence labels for task '" + task +
                    "' on " + std::to_string(n) + " documents");
  }
  return corpus;
}

Corpus ingest_protestnews(const std::filesystem::path& path,
                          std::optional<std::size_t> subset_size, std::uint64_t seed,
                          const ProtestNewsLayout& layout) {
  std::vector<Document> all;
  for_each_record(read_file(path, kModule), [&](const json& rec, std::size_t line) {
    auto id = id_value(rec, layout.id_field);
    if (!id) data_error(kModule, where(line) + "missing required field '" + layout.id_field + "'");
    auto text = rec.find(layout.text_field);
    if (text == rec.end() || !text->is_string()) {
      data_error(kModule, where(line) + "missing required field '" + layout.text_field + "'");
    }
    auto label = rec.find(layout.label_field);
    if (label == rec.end()) data_error(kModule, where(line) + "missing required field '" + layout.label_field + "'");
    Document doc;
    doc.doc_id = *id;
    doc.text = text->get<std::string>();
    doc.labels["protest"] = label_value(*label, where(line));
    all.push_back(std::move(doc));
  });

  ExpectedCorpusStats expected;
  std::vector<Document> docs;
  if (!subset_size || *subset_size == all.size()) {
    docs = std::move(all);
    expected = protestnews_expected_full();
  } else {
    if (*subset_size > all.size()) {
      config_error(kModule, "subset size " + std::to_string(*subset_size) + " exceeds the " +
                                std::to_string(all.size()) + " available documents");
    }
    for (std::size_t i : sample_without_replacement(all.size(), *subset_size, seed)) {
      docs.push_back(std::move(all[i]));
    }
  }
  return Corpus(std::string(kProtestNewsName), {"protest"}, std::move(docs), std::move(expected));
}

StatsReport verify_stats(const Corpus& corpus) {
  StatsReport report;
  report.documents = corpus.size();
  for (const auto& doc : corpus.documents()) {
    if (doc.sentences) report.sentences += doc.sentences->size();
  }
  const auto& expected = corpus.expected();
  if (expected.documents && *expected.documents != report.documents) {
    report.mismatches.push_back("documents: " + std::to_string(report.documents) + " != expected " +
                                std::to_string(*expected.documents));
  }
  if (expected.sentences && *expected.sentences != report.sentences) {
    report.mismatches.push_back("sentences: " + std::to_string(report.sentences) + " != expected " +
                                std::to_string(*expected.sentences));
  }
  for (const auto& task : corpus.tasks()) {
    TaskLabelSummary s;
    s.task = task;
    s.total = corpus.size();
    for (const auto& doc : corpus.documents()) s.positives += doc.label(task) ? 1 : 0;
    s.fraction = static_cast<double>(s.positives) / static_cast<double>(s.total);
    if (auto it = expected.tasks.find(task); it != expected.tasks.end()) {
      s.expected = it->second;
      s.matches_expected = s.positives == it->second.positives;
      if (!s.matches_expected) {
        report.mismatches.push_back(task + ": " + std::to_string(s.positives) + " positives != expected " +
                                    std::to_string(it->second.positives));
      }
    }
    report.tasks.push_back(std::move(s));
  }
  return report;
}

std::string format_stats(const StatsReport& report) {
  std::ostringstream out;
  char buf[128];
  out << report.documents << " documents, " << report.sentences << " sentences\n";
  for (const auto& s : report.tasks) {
    std::snprintf(buf, sizeof(buf), "  %-12s %zu/%zu (%.2f%%)", s.task.c_str(), s.positives, s.total,
                  100.0 * s.fraction);
    out << buf;
    if (s.expected) {
      std::snprintf(buf, sizeof(buf), "  expected %zu (published %.2f%%) %s", s.expected->positives,
                    s.expected->published_percent, s.matches_expected ? "ok" : "MISMATCH");
      out << buf;
    }
    out << '\n';
  }
  out << (report.ok() ? "stats match\n" : "stats mismatch\n");
  return out.str();
}

}  // namespace entrank
