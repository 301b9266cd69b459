#include "entrank/nli/nli_model.hpp"

#include <algorithm>

#include <json.hpp>

#include "entrank/error.hpp"
#include "entrank/nli/checksum.hpp"
#include "entrank/nli/safetensors.hpp"
#include "entrank/text_io.hpp"

namespace entrank::nli {

namespace {

constexpr const char* kModule = "scorer";
constexpr int kPremise = -1;
constexpr int kHypothesis = -2;

ManifestFile read_entry(const nlohmann::json& files, const char* name) {
  if (!files.contains(name)) backend_error(kModule, std::string("manifest: missing files.") + name);
  const auto& f = files.at(name);
  return {f.at("path").get<std::string>(), f.value("sha256", std::string())};
}

void verify(const std::filesystem::path& dir, const ManifestFile& f) {
  if (f.sha256.empty()) backend_error(kModule, "manifest: no checksum for " + f.path);
  const auto path = dir / f.path;
  if (!std::filesystem::exists(path)) backend_error(kModule, "model file missing: " + path.string());
  const auto actual = sha256_file(path);
  if (actual != f.sha256) {
    backend_error(kModule, "checksum mismatch for " + path.string() + ": manifest " + f.sha256 + ", file " + actual);
  }
}

}  // namespace

ExportManifest ExportManifest::parse(std::string_view json_text) {
  ExportManifest m;
  try {
    const auto j = nlohmann::json::parse(json_text);
    m.backend_id = j.at("backend_id").get<std::string>();
    m.source_checkpoint = j.value("source_checkpoint", std::string());
    m.revision = j.value("revision", std::string());
    m.max_tokens = j.value("max_tokens", std::size_t{512});
    m.label_order = j.at("label_order").get<std::vector<std::string>>();
    m.pair_template = j.at("pair_template").get<std::vector<std::string>>();
    if (j.contains("unk_token") && j["unk_token"].is_string()) m.unk_token = j["unk_token"].get<std::string>();
    const auto& files = j.at("files");
    m.model = read_entry(files, "model");
    m.config = read_entry(files, "config");
    m.vocab = read_entry(files, "vocab");
    m.merges = read_entry(files, "merges");
  } catch (const nlohmann::json::exception& e) {
    backend_error(kModule, std::string("manifest: ") + e.what());
  }
  for (auto& name : m.label_order) {
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  }
  if (std::count(m.pair_template.begin(), m.pair_template.end(), "$A") != 1 ||
      std::count(m.pair_template.begin(), m.pair_template.end(), "$B") != 1) {
    backend_error(kModule, "manifest: pair_template needs exactly one $A and one $B");
  }
  if (m.max_tokens == 0) backend_error(kModule, "manifest: max_tokens must be positive");
  return m;
}

std::size_t ExportManifest::special_tokens() const { return pair_template.size() - 2; }

ExportManifest read_manifest(const std::filesystem::path& dir, bool verify_checksums) {
  std::string text;
  try {
    text = read_file(dir / "manifest.json", kModule);
  } catch (const Error& e) {
    backend_error(kModule, e.what());
  }
  auto m = ExportManifest::parse(text);
  if (verify_checksums) {
    for (const auto* f : {&m.model, &m.config, &m.vocab, &m.merges}) verify(dir, *f);
  }
  return m;
}

NliModel NliModel::load(const std::filesystem::path& dir, bool verify_checksums) {
  NliModel model;
  model.manifest_ = read_manifest(dir, verify_checksums);
  const auto& m = model.manifest_;

  std::string config_text;
  try {
    config_text = read_file(dir / m.config.path, kModule);
  } catch (const Error& e) {
    backend_error(kModule, e.what());
  }
  const auto config = EncoderConfig::parse(config_text);
  if (config.labels.size() != m.label_order.size()) {
    backend_error(kModule, "manifest lists " + std::to_string(m.label_order.size()) + " labels, model has " +
                               std::to_string(config.labels.size()));
  }
  // Named checkpoint classes must agree with the manifest.
  for (std::size_t i = 0; i < config.labels.size(); ++i) {
    const auto& name = config.labels[i];
    if (name.rfind("label_", 0) == 0) continue;
    if (name != m.label_order[i]) {
      backend_error(kModule, "label_order[" + std::to_string(i) + "] is '" + m.label_order[i] +
                                 "' but the checkpoint calls it '" + name + "'");
    }
  }

  const auto weights = TensorFile::load(dir / m.model.path);
  model.classifier_ = SequenceClassifier::create(config, weights);
  model.tokenizer_ = std::make_shared<BpeTokenizer>(
      BpeTokenizer::load(dir / m.vocab.path, dir / m.merges.path, m.unk_token));

  for (const auto& item : m.pair_template) {
    if (item == "$A") {
      model.template_ids_.push_back(kPremise);
    } else if (item == "$B") {
      model.template_ids_.push_back(kHypothesis);
    } else {
      auto id = model.tokenizer_->token_id(item);
      if (!id) backend_error(kModule, "special token '" + item + "' not in vocabulary");
      model.template_ids_.push_back(*id);
    }
  }
  return model;
}

std::vector<int> NliModel::encode_pair(std::string_view premise, std::string_view hypothesis,
                                       std::vector<int>* token_types) const {
  const auto a = tokenizer_->encode(premise);
  const auto b = tokenizer_->encode(hypothesis);
  const std::size_t total = a.size() + b.size() + manifest_.special_tokens();
  if (total > manifest_.max_tokens) {
    backend_error(kModule, "input of " + std::to_string(total) + " tokens exceeds the " +
                               std::to_string(manifest_.max_tokens) + "-token limit");
  }
  std::vector<int> ids;
  ids.reserve(total);
  if (token_types) token_types->clear();
  int segment = 0;
  for (int t : template_ids_) {
    if (t == kHypothesis && config().type_vocab_size > 1) segment = 1;
    const std::vector<int>* part = t == kPremise ? &a : t == kHypothesis ? &b : nullptr;
    const std::size_t before = ids.size();
    if (part) {
      ids.insert(ids.end(), part->begin(), part->end());
    } else {
      ids.push_back(t);
    }
    if (token_types) token_types->insert(token_types->end(), ids.size() - before, segment);
  }
  return ids;
}

std::vector<float> NliModel::logits(std::string_view premise, std::string_view hypothesis) const {
  std::vector<int> types;
  const auto ids = encode_pair(premise, hypothesis, &types);
  return classifier_->logits(ids, types);
}

}  // namespace entrank::nli
