// entrank: rank news documents by NLI entailment probability and evaluate
// the rankings.
//
//   entrank run --adapter india --dataset-path data/india --backend dlm \
//       --model-path models/dlm --query-type declarative --granularity sentence --out-dir out

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "entrank/error.hpp"
#include "entrank/pipeline.hpp"
#include "entrank/text_io.hpp"

namespace {

using entrank::RunConfig;

struct Flags {
  std::string adapter = "generic";
  std::string dataset_path;
  std::string dataset_name;
  std::string tasks;
  std::string query_types;
  std::string granularity = "sentence";
  std::string backend = "mock";
  std::string backend_id;
  std::string model_path;
  std::string label_order;
  std::string normalization = "softmax3";
  std::string marker = "PROTEST_MARKER";
  std::size_t batch_size = 16;
  std::size_t workers = 1;
  std::string cache;
  std::string cache_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> subset_size;
  std::string grid;
  std::string out_dir = "out";
  std::string queries;
  std::string abbreviations;
  std::string layout;
  std::size_t reading_list_size = 50;
  bool no_verify = false;
};

std::vector<std::string> comma_list(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& part : entrank::split(text, ',')) {
    auto t = std::string(entrank::trim(part));
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

void add_common(CLI::App& cmd, Flags& f) {
  cmd.add_option("--adapter", f.adapter, "Dataset adapter: generic, india, protestnews")
      ->check(CLI::IsMember({"generic", "india", "protestnews"}));
  cmd.add_option("--dataset-path", f.dataset_path, "Dataset file (generic, protestnews) or directory (india)");
  cmd.add_option("--dataset-name", f.dataset_name, "Query registry dataset key (default: from the adapter)");
  cmd.add_option("--tasks", f.tasks, "Comma-separated tasks (default: all)");
  cmd.add_option("--query-type", f.query_types, "Comma-separated query types (default: all registered)");
  cmd.add_option("--granularity", f.granularity, "sentence or document");
  cmd.add_option("--backend", f.backend,
                 "mock, oracle, random, cached, or an exported model id such as dlm or rlm");
  cmd.add_option("--backend-id", f.backend_id, "Backend id written to scores (default: --backend)");
  cmd.add_option("--model-path", f.model_path, "Exported model directory (default: $ENTRANK_MODEL_DIR/<backend>)");
  cmd.add_option("--label-order", f.label_order, "Override the model's class order, e.g. contradiction,neutral,entailment");
  cmd.add_option("--normalization", f.normalization, "softmax3 or entail_vs_contra");
  cmd.add_option("--marker", f.marker, "Marker substring for the mock backend");
  cmd.add_option("--batch-size", f.batch_size, "Units per scoring batch")->check(CLI::PositiveNumber);
  cmd.add_option("--workers", f.workers, "Scoring threads")->check(CLI::PositiveNumber);
  cmd.add_option("--cache", f.cache, "in: read scores from the cache; out: write them")
      ->check(CLI::IsMember({"in", "out"}));
  cmd.add_option("--cache-file", f.cache_file, "Score cache path (default: <out-dir>/scores.jsonl)");
  cmd.add_option("--seed", f.seed, "Seed for sampling and the random backend");
  cmd.add_option("--subset-size", f.subset_size, "ProtestNews documents to sample");
  cmd.add_option("--grid", f.grid, "Comma-separated proportions in (0,1] (default: 0.01..1.00)");
  cmd.add_option("--out-dir", f.out_dir, "Output directory");
  cmd.add_option("--queries", f.queries, "Query registry file");
  cmd.add_option("--abbreviations", f.abbreviations, "Abbreviation list for the sentence splitter");
  cmd.add_option("--layout", f.layout, "JSON overrides for the India Police Events file layout");
  cmd.add_option("--reading-list-size", f.reading_list_size, "Rows per reading list (0: all)");
  cmd.add_flag("--no-verify-checksums", f.no_verify, "Skip model checksum verification");
}

RunConfig to_config(const Flags& f) {
  RunConfig c;
  c.adapter = f.adapter;
  c.dataset_path = f.dataset_path;
  c.dataset_name = f.dataset_name;
  c.tasks = comma_list(f.tasks);
  c.qtypes = comma_list(f.query_types);
  if (c.qtypes.size() == 1 && c.qtypes[0] == "all") c.qtypes.clear();
  c.granularity = entrank::parse_granularity(f.granularity);
  c.seed = f.seed;
  c.subset_size = f.subset_size;
  c.out_dir = f.out_dir;
  c.cache_in = f.cache == "in";
  c.cache_out = f.cache == "out";
  if (!f.cache_file.empty()) c.cache_file = f.cache_file;
  if (!f.queries.empty()) c.queries_path = f.queries;
  if (!f.abbreviations.empty()) c.abbreviations = f.abbreviations;
  if (!f.layout.empty()) c.layout = f.layout;
  c.reading_list_size = f.reading_list_size;
  if (!f.grid.empty()) {
    c.grid.clear();
    for (const auto& g : comma_list(f.grid)) {
      double v = 0.0;
      if (!entrank::parse_double(g, v)) entrank::config_error("cli", "bad grid value '" + g + "'");
      c.grid.push_back(v);
    }
  }

  auto& b = c.backend;
  b.backend_id = f.backend_id.empty() ? f.backend : f.backend_id;
  b.batch_size = f.batch_size;
  b.workers = f.workers;
  b.seed = f.seed.value_or(0);
  b.marker = f.marker;
  b.normalization = entrank::parse_normalization(f.normalization);
  b.verify_checksums = !f.no_verify;
  if (!f.label_order.empty()) b.label_order = entrank::LabelOrder::parse(f.label_order);
  if (f.backend == "mock" || f.backend == "marker") {
    b.kind = "marker";
  } else if (f.backend == "oracle" || f.backend == "random" || f.backend == "cached") {
    b.kind = f.backend;
  } else {
    b.kind = "neural";
    if (!f.model_path.empty()) {
      b.model_path = f.model_path;
    } else if (const char* env = std::getenv("ENTRANK_MODEL_DIR"); env && *env) {
      b.model_path = std::filesystem::path(env) / f.backend;
    }
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot document triage: rank documents by entailment probability and evaluate the rankings."};
  app.require_subcommand(1);

  Flags flags;
  using Command = int (*)(const RunConfig&, std::ostream&);
  const std::vector<std::tuple<const char*, const char*, Command>> commands = {
      {"score", "Segment and score documents; write the score cache", entrank::command_score},
      {"rank", "Aggregate cached scores into rankings", entrank::command_rank},
      {"eval", "Evaluate rankings: AP and recall curves", entrank::command_eval},
      {"report", "Tables, plot and reading lists from evaluation files", entrank::command_report},
      {"run", "Score (or read the cache), rank, evaluate and report", entrank::command_run},
      {"validate", "List configuration problems without running", entrank::command_validate},
      {"stats", "Corpus label statistics against the published counts", entrank::command_stats},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common(*sub, flags);
    subs.emplace_back(sub, fn);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const RunConfig config = to_config(flags);
    for (const auto& [sub, fn] : subs) {
      if (sub->parsed()) return fn(config, std::cout);
    }
  } catch (const entrank::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return entrank::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
