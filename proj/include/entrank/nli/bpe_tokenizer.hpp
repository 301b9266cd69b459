#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "entrank/tokenizer.hpp"

namespace entrank::nli {

// Byte-level BPE as used by the GPT-2, RoBERTa and DeBERTa (v1) vocabularies:
// regex pre-tokenization, bytes mapped onto printable code points, then
// rank-ordered pair merges from merges.txt. No prefix space is added.
class BpeTokenizer final : public TokenCounter {
 public:
  static BpeTokenizer load(const std::filesystem::path& vocab_json,
                           const std::filesystem::path& merges_txt,
                           std::optional<std::string> unk_token = std::nullopt);
  static BpeTokenizer from_strings(std::string_view vocab_json, std::string_view merges_txt,
                                   std::optional<std::string> unk_token = std::nullopt);

  std::vector<int> encode(std::string_view text) const;
  std::string decode(std::span<const int> ids) const;
  std::optional<int> token_id(std::string_view token) const;
  std::size_t vocab_size() const { return vocab_.size(); }

  // Pieces produced by the pre-tokenization regex, as raw text.
  std::vector<std::string> pretokenize(std::string_view text) const;

  std::size_t count(std::string_view text) const override;
  std::string truncate(std::string_view text, std::size_t max_tokens) const override;

 private:
  BpeTokenizer() = default;

  // Appends ids and each token's byte length for one pre-token.
  void encode_piece(std::string_view piece, std::vector<int>& ids, std::vector<std::size_t>* byte_lens) const;
  std::vector<int> encode_impl(std::string_view text, std::vector<std::size_t>* byte_lens) const;

  std::unordered_map<std::string, int> vocab_;
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> merge_ranks_;
  std::optional<int> unk_id_;
  std::array<std::string, 256> byte_to_symbol_;
  std::unordered_map<std::string, unsigned char> symbol_to_byte_;
};

}  // namespace entrank::nli
