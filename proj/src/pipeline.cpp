#include "entrank/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "entrank/error.hpp"
#include "entrank/nli/nli_model.hpp"
#include "entrank/reporter.hpp"
#include "entrank/text_io.hpp"

namespace entrank {

namespace fs = std::filesystem;

namespace {

constexpr const char* kModule = "cli";

std::string file_safe(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += keep ? c : '_';
  }
  return out;
}

std::string file_stem(const RankingConfig& c) {
  return file_safe(c.dataset) + "__" + file_safe(c.task) + "__" + file_safe(c.qtype) + "__" +
         file_safe(c.granularity) + "__" + file_safe(c.backend_id);
}

bool seed_needed(const RunConfig& config) {
  return config.backend.kind == "random" || (config.adapter == "protestnews" && config.subset_size);
}

std::string canonical_qtype(const std::string& text) { return std::string(to_string(parse_query_type(text))); }

// Granularity recorded in the units file wins over the flag.
std::string effective_granularity(const RunConfig& config, std::span<const UnitSet> units) {
  for (const auto& set : units) {
    if (!set.units.empty()) return std::string(to_string(set.units.front().granularity));
  }
  return std::string(to_string(config.granularity));
}

std::vector<UnitSet> load_units_if_present(const OutputLayout& layout) {
  if (!fs::exists(layout.units())) return {};
  return load_units(layout.units());
}

void print_summary(const Evaluation& evaluation, std::ostream& out) {
  if (evaluation.results.empty()) return;
  out << render_table_text(build_table(evaluation.results));
}

std::vector<Ranking> read_rankings_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) data_error(kModule, "no rankings directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".tsv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) data_error(kModule, "no rankings in " + dir.string());
  std::vector<Ranking> out;
  for (const auto& f : files) out.push_back(read_ranking(f));
  return out;
}

}  // namespace

fs::path OutputLayout::scores() const { return cache_override ? *cache_override : out_dir / "scores.jsonl"; }

fs::path OutputLayout::units() const {
  auto p = scores();
  return p.replace_extension(".units.jsonl");
}

fs::path OutputLayout::rankings_dir() const { return out_dir / "rankings"; }
fs::path OutputLayout::ranking(const RankingConfig& c) const { return rankings_dir() / (file_stem(c) + ".tsv"); }
fs::path OutputLayout::metrics() const { return out_dir / "metrics.tsv"; }
fs::path OutputLayout::curves() const { return out_dir / "curves.tsv"; }
fs::path OutputLayout::plot() const { return out_dir / "recall_curves.svg"; }
fs::path OutputLayout::reading_dir() const { return out_dir / "reading"; }
fs::path OutputLayout::reading_list(const RankingConfig& c) const { return reading_dir() / (file_stem(c) + ".tsv"); }

OutputLayout output_layout(const RunConfig& config) { return OutputLayout{config.out_dir, config.cache_file}; }

std::string dataset_name(const RunConfig& config) {
  if (!config.dataset_name.empty()) return config.dataset_name;
  if (config.adapter == "india") return std::string(kIndiaPoliceName);
  if (config.adapter == "protestnews") return std::string(kProtestNewsName);
  return "generic";
}

Corpus load_corpus(const RunConfig& config) {
  if (config.dataset_path.empty()) config_error(kModule, "no dataset path (--dataset-path)");
  if (seed_needed(config) && !config.seed) config_error(kModule, "--seed is required for sampling and the random backend");
  if (config.adapter == "india") {
    const IndiaLayout layout = config.layout ? load_india_layout(*config.layout) : IndiaLayout{};
    return ingest_india_police(config.dataset_path, layout);
  }
  if (config.adapter == "protestnews") {
    return ingest_protestnews(config.dataset_path, config.subset_size, config.seed.value_or(0));
  }
  if (config.adapter == "generic") {
    FormatConfig format;
    format.name = dataset_name(config);
    return ingest_generic(config.dataset_path, format);
  }
  config_error(kModule, "unknown adapter '" + config.adapter + "' (generic|india|protestnews)");
}

QueryRegistry load_registry(const RunConfig& config) { return QueryRegistry::load(config.queries_path); }

SentenceSplitter load_splitter(const RunConfig& config) {
  return config.abbreviations ? SentenceSplitter::from_file(*config.abbreviations) : SentenceSplitter();
}

std::vector<Query> resolve_queries(const RunConfig& config, const Corpus& corpus, const QueryRegistry& registry) {
  const std::string dataset = dataset_name(config);
  std::vector<std::string> tasks = config.tasks.empty() ? corpus.tasks() : config.tasks;
  for (const auto& t : tasks) {
    if (!corpus.has_task(t)) config_error(kModule, "corpus '" + corpus.name() + "' has no task '" + t + "'");
  }
  std::vector<QueryType> types;
  for (const auto& q : config.qtypes) types.push_back(parse_query_type(q));

  std::vector<Query> out;
  for (const auto& task : tasks) {
    if (types.empty()) {
      auto all = registry.queries_for(dataset, task);
      if (all.empty()) config_error(kModule, "no queries registered for (" + dataset + ", " + task + ")");
      out.insert(out.end(), all.begin(), all.end());
    } else {
      for (QueryType t : types) out.push_back(registry.get(dataset, task, t));
    }
  }
  return out;
}

std::unique_ptr<Backend> open_backend(const RunConfig& config, const Corpus& corpus) {
  if (config.backend.kind == "cached") {
    const ScoreStore store(load_cached(output_layout(config).scores()));
    return make_backend(config.backend, &corpus, &store);
  }
  return make_backend(config.backend, &corpus);
}

ScoreRun score_corpus(const RunConfig& config, const Corpus& corpus, std::span<const Query> queries,
                      const Backend& backend, const SentenceSplitter& splitter) {
  ScoreRun run;
  const ScoreOptions options{config.backend.batch_size, config.backend.workers};
  for (const auto& query : queries) {
    const auto budget = TokenBudget::for_query(backend.max_tokens(), backend.tokenizer().count(query.text),
                                               backend.special_tokens());
    UnitSet set{query.task, std::string(to_string(query.qtype)), {}};
    for (const auto& doc : corpus.documents()) {
      auto units = segment(doc, config.granularity, budget, backend.tokenizer(), splitter);
      std::move(units.begin(), units.end(), std::back_inserter(set.units));
    }
    auto scores = score_units(set.units, query, backend, options);
    std::move(scores.begin(), scores.end(), std::back_inserter(run.scores));
    run.units.push_back(std::move(set));
  }
  return run;
}

std::vector<Ranking> rank_scores(const RunConfig& config, const Corpus& corpus, std::span<const UnitScore> scores,
                                 const std::string& granularity) {
  std::set<std::string> tasks(config.tasks.begin(), config.tasks.end());
  std::set<std::string> qtypes;
  for (const auto& q : config.qtypes) qtypes.insert(canonical_qtype(q));

  std::map<std::tuple<std::string, std::string, std::string>, std::vector<UnitScore>> groups;
  for (const auto& s : scores) {
    if (!tasks.empty() && !tasks.count(s.task)) continue;
    if (!qtypes.empty() && !qtypes.count(s.qtype)) continue;
    groups[{s.task, s.qtype, s.backend_id}].push_back(s);
  }
  if (groups.empty()) data_error(kModule, "no scores match the requested tasks and query types");

  std::vector<Ranking> out;
  for (const auto& [key, group] : groups) {
    const auto& [task, qtype, backend] = key;
    RankingConfig rc{dataset_name(config), task, qtype, granularity, backend};
    try {
      out.push_back(rank(aggregate(group, corpus), rc, &corpus));
    } catch (const Error& e) {
      throw Error(e.kind(), kModule, rc.key() + ": " + e.what());
    }
  }
  return out;
}

Evaluation evaluate_rankings(const Corpus& corpus, std::span<const Ranking> rankings, std::span<const double> grid) {
  Evaluation ev;
  for (const auto& r : rankings) {
    try {
      ev.results.push_back(evaluate_ap(r, corpus));
      ev.curves.push_back(evaluate_curve(r, corpus, grid));
    } catch (const Error& e) {
      throw Error(e.kind(), kModule, r.config.key() + ": " + e.what());
    }
  }
  return ev;
}

void write_report(const OutputLayout& layout, const Evaluation& evaluation, std::span<const Ranking> rankings,
                  std::span<const UnitSet> units, const Corpus* corpus, std::size_t reading_list_size) {
  emit_tables(evaluation.results, layout.out_dir);
  emit_average_table(evaluation.results, layout.out_dir);
  emit_curve_plot(evaluation.curves, layout.plot());
  if (units.empty()) return;
  for (const auto& r : rankings) {
    auto it = std::find_if(units.begin(), units.end(), [&](const UnitSet& s) {
      return s.task == r.config.task && s.qtype == r.config.qtype;
    });
    if (it == units.end()) continue;
    write_reading_list(build_reading_list(r, it->units, corpus, reading_list_size), layout.reading_list(r.config));
  }
}

std::vector<std::string> validate(const RunConfig& config, std::vector<std::string>* notes) {
  std::vector<std::string> problems;
  auto note = [&](std::string s) {
    if (notes) notes->push_back(std::move(s));
  };
  auto attempt = [&](auto&& fn) {
    try {
      fn();
      return true;
    } catch (const Error& e) {
      problems.push_back(e.what());
    } catch (const std::exception& e) {
      problems.push_back(std::string("[cli] ") + e.what());
    }
    return false;
  };

  for (const auto& q : config.qtypes) attempt([&] { parse_query_type(q); });
  if (seed_needed(config) && !config.seed) problems.push_back("[cli] --seed is required for sampling and the random backend");

  if (config.dataset_path.empty()) {
    problems.push_back("[cli] no dataset path (--dataset-path)");
  } else if (!fs::exists(config.dataset_path)) {
    problems.push_back("[corpus] missing dataset path " + config.dataset_path.string());
  } else {
    std::optional<Corpus> corpus;
    if (attempt([&] { corpus.emplace(load_corpus(config)); })) {
      const auto report = verify_stats(*corpus);
      const bool has_expected = corpus->expected().documents || !corpus->expected().tasks.empty();
      if (!report.ok()) {
        for (const auto& m : report.mismatches) problems.push_back("[corpus] stats mismatch: " + m);
      } else {
        note(std::to_string(report.documents) + " documents" + (has_expected ? ", stats match" : ""));
      }
      for (const auto& n : corpus->notes()) note(n);
      std::optional<QueryRegistry> registry;
      if (attempt([&] { registry.emplace(load_registry(config)); })) {
        const std::string dataset = dataset_name(config);
        const auto tasks = config.tasks.empty() ? corpus->tasks() : config.tasks;
        for (const auto& task : tasks) {
          if (!corpus->has_task(task)) {
            problems.push_back("[cli] corpus has no task '" + task + "'");
            continue;
          }
          if (config.qtypes.empty()) {
            if (registry->queries_for(dataset, task).empty()) {
              problems.push_back("[queries] no queries registered for (" + dataset + ", " + task + ")");
            }
            continue;
          }
          for (const auto& q : config.qtypes) {
            try {
              if (!registry->find(dataset, task, parse_query_type(q))) {
                problems.push_back("[queries] unresolved query (" + dataset + ", " + task + ", " + q + ")");
              }
            } catch (const Error&) {
              // reported above
            }
          }
        }
      }
    }
  }

  if (config.abbreviations && !fs::exists(*config.abbreviations)) {
    problems.push_back("[segmenter] missing abbreviation file " + config.abbreviations->string());
  }
  const auto layout = output_layout(config);
  if (config.cache_in) {
    if (!fs::exists(layout.scores())) {
      problems.push_back("[scorer] missing score cache " + layout.scores().string());
    } else {
      attempt([&] { note(std::to_string(load_cached(layout.scores()).size()) + " cached scores"); });
    }
  } else if (config.backend.kind == "neural") {
    if (!config.backend.model_path) {
      problems.push_back("[scorer] backend '" + config.backend.backend_id + "' needs --model-path or ENTRANK_MODEL_DIR");
    } else {
      attempt([&] {
        const auto m = nli::read_manifest(*config.backend.model_path, config.backend.verify_checksums);
        note("model " + m.backend_id + " (" + m.source_checkpoint + "), checksums verified");
      });
    }
  }

  // Write-permission probe.
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  const auto probe = config.out_dir / ".entrank_write_probe";
  {
    std::ofstream f(probe);
    if (ec || !f) {
      problems.push_back("[cli] out-dir " + config.out_dir.string() + " is not writable");
    }
  }
  fs::remove(probe, ec);
  return problems;
}

int command_score(const RunConfig& config, std::ostream& out) {
  const auto corpus = load_corpus(config);
  const auto registry = load_registry(config);
  const auto queries = resolve_queries(config, corpus, registry);
  const auto backend = open_backend(config, corpus);
  const auto run = score_corpus(config, corpus, queries, *backend, load_splitter(config));
  const auto layout = output_layout(config);
  save_cached(layout.scores(), run.scores);
  save_units(layout.units(), run.units);
  out << "scored " << run.scores.size() << " units for " << queries.size() << " queries -> "
      << layout.scores().string() << "\n";
  return 0;
}

int command_rank(const RunConfig& config, std::ostream& out) {
  const auto corpus = load_corpus(config);
  const auto layout = output_layout(config);
  const auto units = load_units_if_present(layout);
  const auto rankings = rank_scores(config, corpus, load_cached(layout.scores()), effective_granularity(config, units));
  for (const auto& r : rankings) write_ranking(r, layout.ranking(r.config));
  out << "wrote " << rankings.size() << " rankings to " << layout.rankings_dir().string() << "\n";
  return 0;
}

int command_eval(const RunConfig& config, std::ostream& out) {
  check_grid(config.grid);
  const auto corpus = load_corpus(config);
  const auto layout = output_layout(config);
  const auto rankings = read_rankings_dir(layout.rankings_dir());
  const auto ev = evaluate_rankings(corpus, rankings, config.grid);
  write_metrics(layout.metrics(), ev.results);
  write_curves(layout.curves(), ev.curves);
  print_summary(ev, out);
  return 0;
}

int command_report(const RunConfig& config, std::ostream& out) {
  const auto layout = output_layout(config);
  Evaluation ev;
  ev.results = read_metrics(layout.metrics());
  ev.curves = read_curves(layout.curves());
  std::vector<Ranking> rankings;
  std::vector<UnitSet> units;
  std::optional<Corpus> corpus;
  if (fs::is_directory(layout.rankings_dir())) rankings = read_rankings_dir(layout.rankings_dir());
  units = load_units_if_present(layout);
  if (!config.dataset_path.empty()) corpus.emplace(load_corpus(config));
  write_report(layout, ev, rankings, units, corpus ? &*corpus : nullptr, config.reading_list_size);
  print_summary(ev, out);
  return 0;
}

int command_run(const RunConfig& config, std::ostream& out) {
  check_grid(config.grid);
  const auto corpus = load_corpus(config);
  const auto layout = output_layout(config);

  ScoreRun run;
  if (config.cache_in) {
    run.scores = load_cached(layout.scores());
    run.units = load_units_if_present(layout);
  } else {
    const auto registry = load_registry(config);
    const auto queries = resolve_queries(config, corpus, registry);
    const auto backend = open_backend(config, corpus);
    run = score_corpus(config, corpus, queries, *backend, load_splitter(config));
    if (config.cache_out) {
      save_cached(layout.scores(), run.scores);
      save_units(layout.units(), run.units);
    }
  }

  const auto rankings = rank_scores(config, corpus, run.scores, effective_granularity(config, run.units));
  for (const auto& r : rankings) write_ranking(r, layout.ranking(r.config));

  const auto ev = evaluate_rankings(corpus, rankings, config.grid);
  write_metrics(layout.metrics(), ev.results);
  write_curves(layout.curves(), ev.curves);
  write_report(layout, ev, rankings, run.units, &corpus, config.reading_list_size);
  print_summary(ev, out);
  return 0;
}

int command_validate(const RunConfig& config, std::ostream& out) {
  std::vector<std::string> notes;
  const auto problems = validate(config, &notes);
  for (const auto& n : notes) out << "ok: " << n << "\n";
  for (const auto& p : problems) out << "problem: " << p << "\n";
  out << (problems.empty() ? "configuration is valid" : std::to_string(problems.size()) + " problem(s)") << "\n";
  return 0;
}

int command_stats(const RunConfig& config, std::ostream& out) {
  const auto corpus = load_corpus(config);
  const auto report = verify_stats(corpus);
  out << format_stats(report);
  for (const auto& n : corpus.notes()) out << "note: " << n << "\n";
  return 0;
}

}  // namespace entrank
