#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace entrank {

struct Document {
  std::string doc_id;
  std::string text;
  // Dataset-provided segmentation, in article order.
  std::optional<std::vector<std::string>> sentences;
  std::map<std::string, bool> labels;

  bool label(const std::string& task) const;
};

// Published reference counts for a task.
struct ExpectedStat {
  std::size_t positives = 0;
  // Percentage as printed in the source table, e.g. 3.98.
  double published_percent = 0.0;
};

struct ExpectedCorpusStats {
  std::optional<std::size_t> documents;
  std::optional<std::size_t> sentences;
  std::map<std::string, ExpectedStat> tasks;
};

// Immutable labeled document collection. Construction validates that
// documents and tasks are non-empty, ids are unique and every document
// carries a label for every task.
class Corpus {
 public:
  Corpus(std::string name, std::vector<std::string> tasks,
         std::vector<Document> documents, ExpectedCorpusStats expected = {});

  const std::string& name() const { return name_; }
  const std::vector<std::string>& tasks() const { return tasks_; }
  const std::vector<Document>& documents() const { return documents_; }
  const ExpectedCorpusStats& expected() const { return expected_; }
  std::size_t size() const { return documents_.size(); }

  bool has_task(std::string_view task) const;
  const Document* find(std::string_view doc_id) const;
  const Document& at(std::string_view doc_id) const;

  // Free-form ingestion notes (e.g. label disagreements in a source file).
  const std::vector<std::string>& notes() const { return notes_; }
  void add_note(std::string note) { notes_.push_back(std::move(note)); }

 private:
  std::string name_;
  std::vector<std::string> tasks_;
  std::vector<Document> documents_;
  ExpectedCorpusStats expected_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> notes_;
};

// Field names of the line-delimited generic record format.
struct FormatConfig {
  std::string name = "generic";
  std::string doc_id_field = "doc_id";
  std::string text_field = "text";
  std::string sentences_field = "sentences";
  std::string labels_field = "labels";
  // Required tasks. Empty means: take the label keys of the first record.
  std::vector<std::string> tasks;
};

Corpus ingest_generic(const std::filesystem::path& path, const FormatConfig& format = {});
Corpus parse_generic(std::string_view contents, const FormatConfig& format = {});
// Writes the corpus in the generic format; ingest_generic reads it back.
void export_generic(const Corpus& corpus, const std::filesystem::path& path);

inline constexpr std::string_view kIndiaPoliceName = "india";
inline constexpr std::string_view kProtestNewsName = "protestnews";

const std::vector<std::string>& india_police_tasks();
ExpectedCorpusStats india_police_expected();
ExpectedCorpusStats protestnews_expected_full();

// Where the released India Police Events files live and what they call
// things. Loadable from a JSON object with the same member names.
struct IndiaLayout {
  std::string doc_file = "doc_level.jsonl";
  std::string sent_file = "sent_level.jsonl";
  std::string doc_id_field = "doc_id";
  std::string doc_text_field = "doc_text";
  std::string doc_labels_field = "label";
  std::string sent_doc_id_field = "doc_id";
  std::string sent_index_field = "sent_id";
  std::string sent_text_field = "sent_text";
  std::string sent_labels_field = "label";
  // task name -> key used inside the label objects
  std::map<std::string, std::string> task_keys = {
      {"kill", "killing"}, {"arrest", "arrest"}, {"fail", "fail"},
      {"force", "force"},  {"any_action", "any_action"}};
};

IndiaLayout load_india_layout(const std::filesystem::path& path);

// Reads the doc-level and sentence-level files. Document labels are the OR
// of the sentence labels; sentences are attached in sentence-id order.
Corpus ingest_india_police(const std::filesystem::path& dir, const IndiaLayout& layout = {});

struct ProtestNewsLayout {
  std::string id_field = "id";
  std::string text_field = "text";
  std::string label_field = "label";
};

// Seeded sample of subset_size documents (all when nullopt), in file order.
Corpus ingest_protestnews(const std::filesystem::path& path,
                          std::optional<std::size_t> subset_size, std::uint64_t seed,
                          const ProtestNewsLayout& layout = {});

struct TaskLabelSummary {
  std::string task;
  std::size_t positives = 0;
  std::size_t total = 0;
  double fraction = 0.0;
  std::optional<ExpectedStat> expected;
  bool matches_expected = true;
};

struct StatsReport {
  std::size_t documents = 0;
  std::size_t sentences = 0;
  std::vector<TaskLabelSummary> tasks;
  // Human-readable mismatches against the corpus's expected stats.
  std::vector<std::string> mismatches;

  bool ok() const { return mismatches.empty(); }
};

StatsReport verify_stats(const Corpus& corpus);
std::string format_stats(const StatsReport& report);

}  // namespace entrank
