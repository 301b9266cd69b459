#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entrank/nli/safetensors.hpp"

namespace entrank::nli {

enum class Architecture { kRoberta, kDeberta };

// Subset of a Hugging Face config.json needed for inference.
struct EncoderConfig {
  Architecture architecture = Architecture::kRoberta;
  int vocab_size = 0;
  int hidden_size = 0;
  int num_layers = 0;
  int num_heads = 0;
  int intermediate_size = 0;
  int max_position_embeddings = 512;
  int type_vocab_size = 0;
  int pad_token_id = 0;
  float layer_norm_eps = 1e-5f;
  std::string hidden_act = "gelu";
  std::string pooler_hidden_act = "gelu";
  // DeBERTa disentangled attention.
  bool relative_attention = false;
  bool position_biased_input = true;
  int max_relative_positions = -1;
  bool content_to_position = false;
  bool position_to_content = false;
  // Class names by output index, lowercased ("label_0" when unnamed).
  std::vector<std::string> labels;

  static EncoderConfig parse(std::string_view config_json);
};

// Transformer encoder with a sequence-classification head. Stateless after
// construction; logits() may be called concurrently.
class SequenceClassifier {
 public:
  virtual ~SequenceClassifier() = default;

  static std::unique_ptr<SequenceClassifier> create(const EncoderConfig& config, const TensorFile& weights);

  const EncoderConfig& config() const { return config_; }

  // Unpadded single sequence. token_types may be empty (all zero).
  virtual std::vector<float> logits(std::span<const int> ids, std::span<const int> token_types) const = 0;

 protected:
  explicit SequenceClassifier(EncoderConfig config) : config_(std::move(config)) {}

  EncoderConfig config_;
};

}  // namespace entrank::nli
