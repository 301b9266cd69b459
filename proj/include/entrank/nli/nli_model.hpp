#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entrank/nli/bpe_tokenizer.hpp"
#include "entrank/nli/transformer.hpp"

namespace entrank::nli {

struct ManifestFile {
  std::string path;  // relative to the manifest's directory
  std::string sha256;
};

// manifest.json written by the export step next to the model files:
//
//   {
//     "backend_id": "dlm",
//     "source_checkpoint": "microsoft/deberta-large-mnli",
//     "revision": "<commit>",
//     "max_tokens": 512,
//     "label_order": ["contradiction", "neutral", "entailment"],
//     "pair_template": ["[CLS]", "$A", "[SEP]", "$B", "[SEP]"],
//     "unk_token": "[UNK]",
//     "files": {"model": {"path": ..., "sha256": ...}, "config": ..., "vocab": ..., "merges": ...}
//   }
//
// label_order names the class at each output index. In pair_template, $A is
// the premise, $B the hypothesis, anything else a special token.
struct ExportManifest {
  std::string backend_id;
  std::string source_checkpoint;
  std::string revision;
  std::size_t max_tokens = 512;
  std::vector<std::string> label_order;
  std::vector<std::string> pair_template;
  std::optional<std::string> unk_token;
  ManifestFile model;
  ManifestFile config;
  ManifestFile vocab;
  ManifestFile merges;

  static ExportManifest parse(std::string_view json_text);
  std::size_t special_tokens() const;
};

// Reads <dir>/manifest.json and checks every listed file's SHA-256.
ExportManifest read_manifest(const std::filesystem::path& dir, bool verify_checksums = true);

// An exported MNLI classifier: tokenizer, encoder and manifest metadata.
class NliModel {
 public:
  static NliModel load(const std::filesystem::path& dir, bool verify_checksums = true);

  const ExportManifest& manifest() const { return manifest_; }
  const BpeTokenizer& tokenizer() const { return *tokenizer_; }
  const EncoderConfig& config() const { return classifier_->config(); }

  // Template-expanded ids. Throws a backend error past max_tokens.
  std::vector<int> encode_pair(std::string_view premise, std::string_view hypothesis,
                               std::vector<int>* token_types = nullptr) const;

  // Raw logits in the model's output order.
  std::vector<float> logits(std::string_view premise, std::string_view hypothesis) const;

 private:
  NliModel() = default;

  ExportManifest manifest_;
  std::shared_ptr<BpeTokenizer> tokenizer_;
  std::shared_ptr<SequenceClassifier> classifier_;
  std::vector<int> template_ids_;  // -1 for $A, -2 for $B
};

}  // namespace entrank::nli
