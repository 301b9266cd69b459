#include "entrank/scorer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "entrank/error.hpp"
#include "entrank/nli/nli_model.hpp"
#include "entrank/random.hpp"
#include "entrank/text_io.hpp"

namespace entrank {

namespace {

constexpr const char* kModule = "scorer";

constexpr std::string_view kClassNames[] = {"contradiction", "neutral", "entailment"};

NliClass parse_class(std::string_view name) {
  std::string lower(trim(name));
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (std::size_t i = 0; i < 3; ++i) {
    if (lower == kClassNames[i]) return static_cast<NliClass>(i);
  }
  config_error(kModule, "unknown NLI class '" + std::string(name) + "'");
}

}  // namespace

LabelOrder LabelOrder::from_names(const std::vector<std::string>& names) {
  if (names.size() != 3) {
    config_error(kModule, "label order needs 3 classes, got " + std::to_string(names.size()));
  }
  LabelOrder order;
  std::array<bool, 3> seen{};
  for (std::size_t i = 0; i < 3; ++i) {
    const NliClass cls = parse_class(names[i]);
    if (seen[static_cast<std::size_t>(cls)]) {
      config_error(kModule, "label order repeats '" + std::string(kClassNames[static_cast<std::size_t>(cls)]) + "'");
    }
    seen[static_cast<std::size_t>(cls)] = true;
    order.order_[i] = cls;
  }
  return order;
}

LabelOrder LabelOrder::parse(std::string_view text) {
  std::string cleaned;
  for (char c : text) {
    if (c != '[' && c != ']' && c != '"') cleaned += c;
  }
  std::vector<std::string> names;
  for (const auto& part : split(cleaned, ',')) names.emplace_back(trim(part));
  return from_names(names);
}

std::size_t LabelOrder::index_of(NliClass cls) const {
  for (std::size_t i = 0; i < 3; ++i) {
    if (order_[i] == cls) return i;
  }
  return 0;  // unreachable for a valid permutation
}

std::string LabelOrder::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < 3; ++i) {
    if (i) out += ',';
    out += kClassNames[static_cast<std::size_t>(order_[i])];
  }
  return out;
}

Normalization parse_normalization(std::string_view text) {
  if (text == "softmax3" || text == "3class") return Normalization::kSoftmax3;
  if (text == "entail_vs_contra" || text == "2class") return Normalization::kEntailmentVsContradiction;
  config_error(kModule, "unknown normalization '" + std::string(text) + "' (softmax3|entail_vs_contra)");
}

std::string_view to_string(Normalization n) {
  return n == Normalization::kSoftmax3 ? "softmax3" : "entail_vs_contra";
}

std::vector<double> class_probabilities(std::span<const float> logits) {
  if (logits.empty()) backend_error(kModule, "empty logits");
  double m = logits[0];
  for (float v : logits) m = std::max<double>(m, v);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(static_cast<double>(logits[i]) - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double entailment_probability(std::span<const float> logits, const LabelOrder& order, Normalization normalization) {
  if (logits.size() != 3) backend_error(kModule, "expected 3 logits, got " + std::to_string(logits.size()));
  const std::size_t e = order.index_of(NliClass::kEntailment);
  if (normalization == Normalization::kSoftmax3) return class_probabilities(logits)[e];
  const std::size_t c = order.index_of(NliClass::kContradiction);
  const float pair[2] = {logits[e], logits[c]};
  return class_probabilities(pair)[0];
}

MarkerBackend::MarkerBackend(std::string id, std::string marker) : id_(std::move(id)), marker_(std::move(marker)) {
  if (marker_.empty()) config_error(kModule, "marker backend needs a non-empty marker");
}

double MarkerBackend::score(const ScoringUnit& unit, const Query&) const {
  return unit.text.find(marker_) != std::string::npos ? 1.0 : 0.0;
}

GoldOracleBackend::GoldOracleBackend(const Corpus& corpus, std::string id) : corpus_(corpus), id_(std::move(id)) {}

double GoldOracleBackend::score(const ScoringUnit& unit, const Query& query) const {
  const Document* doc = corpus_.find(unit.doc_id);
  if (!doc) data_error(kModule, "oracle has no document '" + unit.doc_id + "'");
  auto it = doc->labels.find(query.task);
  if (it == doc->labels.end()) data_error(kModule, "oracle has no '" + query.task + "' label for " + unit.doc_id);
  return it->second ? 1.0 : 0.0;
}

RandomBackend::RandomBackend(std::uint64_t seed, std::string id) : seed_(seed), id_(std::move(id)) {}

double RandomBackend::score(const ScoringUnit& unit, const Query& query) const {
  std::uint64_t h = splitmix64(seed_);
  h = fnv1a64(unit.doc_id, h);
  h = splitmix64(h ^ unit.unit_index);
  h = fnv1a64(query.task, h);
  h = fnv1a64(query.text, h);
  return to_unit(splitmix64(h));
}

CachedBackend::CachedBackend(ScoreStore store, std::string id) : store_(std::move(store)), id_(std::move(id)) {}

double CachedBackend::score(const ScoringUnit& unit, const Query& query) const {
  const auto p = store_.find({unit.doc_id, unit.unit_index, query.task, std::string(to_string(query.qtype)), id_});
  if (!p) {
    data_error(kModule, "score cache has no entry for (" + unit.doc_id + ", " + std::to_string(unit.unit_index) +
                            ", " + query.task + ", " + std::string(to_string(query.qtype)) + ", " + id_ + ")");
  }
  return *p;
}

NeuralBackend::NeuralBackend(std::shared_ptr<const nli::NliModel> model, const BackendConfig& config)
    : model_(std::move(model)), id_(config.backend_id), normalization_(config.normalization) {
  const auto& m = model_->manifest();
  if (m.label_order.size() != 3) {
    backend_error(kModule, "model has " + std::to_string(m.label_order.size()) + " classes; NLI needs 3");
  }
  order_ = config.label_order ? *config.label_order : LabelOrder::from_names(m.label_order);
  if (config.max_tokens && *config.max_tokens != m.max_tokens) {
    config_error(kModule, "backend max_tokens " + std::to_string(*config.max_tokens) + " differs from the model's " +
                              std::to_string(m.max_tokens));
  }
}

NeuralBackend::~NeuralBackend() = default;

std::size_t NeuralBackend::max_parallelism() const {
  return std::max(1u, std::thread::hardware_concurrency());
}

const TokenCounter& NeuralBackend::tokenizer() const { return model_->tokenizer(); }
std::size_t NeuralBackend::special_tokens() const { return model_->manifest().special_tokens(); }
std::size_t NeuralBackend::max_tokens() const { return model_->manifest().max_tokens; }

double NeuralBackend::score(const ScoringUnit& unit, const Query& query) const {
  const auto logits = model_->logits(unit.text, query.text);
  return entailment_probability(logits, order_, normalization_);
}

std::vector<double> NeuralBackend::probabilities(std::string_view premise, std::string_view hypothesis) const {
  return class_probabilities(model_->logits(premise, hypothesis));
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config, const Corpus* corpus, const ScoreStore* store) {
  if (config.kind == "marker") return std::make_unique<MarkerBackend>(config.backend_id, config.marker);
  if (config.kind == "oracle") {
    if (!corpus) config_error(kModule, "oracle backend needs the corpus");
    return std::make_unique<GoldOracleBackend>(*corpus, config.backend_id);
  }
  if (config.kind == "random") return std::make_unique<RandomBackend>(config.seed, config.backend_id);
  if (config.kind == "cached") {
    if (!store) config_error(kModule, "cached backend needs a score cache");
    return std::make_unique<CachedBackend>(*store, config.backend_id);
  }
  if (config.kind == "neural") {
    if (!config.model_path) config_error(kModule, "backend '" + config.backend_id + "' needs a model path");
    auto model = std::make_shared<nli::NliModel>(nli::NliModel::load(*config.model_path, config.verify_checksums));
    return std::make_unique<NeuralBackend>(std::move(model), config);
  }
  config_error(kModule, "unknown backend kind '" + config.kind + "'");
}

double score_pair(const Backend& backend, std::string_view premise, const Query& hypothesis) {
  ScoringUnit unit;
  unit.text = std::string(premise);
  return backend.score(unit, hypothesis);
}

std::vector<UnitScore> score_units(std::span<const ScoringUnit> units, const Query& query, const Backend& backend,
                                   const ScoreOptions& options) {
  if (units.empty()) config_error(kModule, "no units to score");
  if (options.batch_size == 0) config_error(kModule, "batch size must be positive");

  const std::string qtype(to_string(query.qtype));
  std::vector<UnitScore> out(units.size());
  const std::size_t batches = (units.size() + options.batch_size - 1) / options.batch_size;
  const std::size_t lanes =
      std::max<std::size_t>(1, std::min({options.workers, backend.max_parallelism(), batches}));

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::size_t failed_at = units.size();
  std::exception_ptr failure;

  auto run_lane = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= batches) return;
      const std::size_t begin = b * options.batch_size;
      const std::size_t end = std::min(units.size(), begin + options.batch_size);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          const double p = backend.score(units[i], query);
          if (!(p >= 0.0 && p <= 1.0)) {
            backend_error(kModule, "probability " + format_double(p) + " outside [0,1]");
          }
          out[i] = {units[i].doc_id, units[i].unit_index, query.task, qtype, backend.id(), p};
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          // Keep the earliest failing unit so the report does not depend on scheduling.
          if (i < failed_at) {
            failed_at = i;
            failure = std::current_exception();
          }
          break;
        }
      }
    }
  };

  if (lanes == 1) {
    run_lane();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(lanes);
    for (std::size_t t = 0; t < lanes; ++t) threads.emplace_back(run_lane);
    for (auto& t : threads) t.join();
  }

  if (failure) {
    const auto& u = units[failed_at];
    const std::string where = "unit (" + u.doc_id + ", " + std::to_string(u.unit_index) + ") of query " +
                              query.task + "/" + qtype + ": ";
    try {
      std::rethrow_exception(failure);
    } catch (const Error& e) {
      throw Error(e.kind(), kModule, where + e.what());
    } catch (const std::exception& e) {
      backend_error(kModule, where + e.what());
    }
  }
  return out;
}

}  // namespace entrank
