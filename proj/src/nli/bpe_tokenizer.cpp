#include "entrank/nli/bpe_tokenizer.hpp"

#include <unicode/uchar.h>

#include <climits>

#include <json.hpp>

#include "entrank/error.hpp"
#include "entrank/text_io.hpp"

namespace entrank::nli {

namespace {

constexpr const char* kModule = "scorer";

std::string utf8_encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

struct CodePoint {
  char32_t value;
  std::size_t offset;
  std::size_t length;
};

// Invalid sequences decode to U+FFFD covering one byte.
std::vector<CodePoint> decode_utf8(std::string_view s) {
  std::vector<CodePoint> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = 0xFFFD;
    if (b0 < 0x80) {
      cp = b0;
    } else {
      std::size_t need = 0;
      char32_t acc = 0;
      if ((b0 & 0xE0) == 0xC0) {
        need = 1;
        acc = b0 & 0x1F;
      } else if ((b0 & 0xF0) == 0xE0) {
        need = 2;
        acc = b0 & 0x0F;
      } else if ((b0 & 0xF8) == 0xF0) {
        need = 3;
        acc = b0 & 0x07;
      }
      bool ok = need > 0 && i + need < s.size();
      for (std::size_t k = 1; ok && k <= need; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) ok = false;
        acc = (acc << 6) | (b & 0x3F);
      }
      if (ok) {
        cp = acc;
        len = need + 1;
      }
    }
    out.push_back({cp, i, len});
    i += len;
  }
  return out;
}

bool is_letter(char32_t cp) { return (U_GET_GC_MASK(static_cast<UChar32>(cp)) & U_GC_L_MASK) != 0; }
bool is_number(char32_t cp) { return (U_GET_GC_MASK(static_cast<UChar32>(cp)) & U_GC_N_MASK) != 0; }
bool is_ws(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0; }
bool is_other(char32_t cp) { return !is_ws(cp) && !is_letter(cp) && !is_number(cp); }

// Byte ranges matched by
//   's|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+
std::vector<std::pair<std::size_t, std::size_t>> pretokenize_ranges(std::string_view text) {
  const auto cps = decode_utf8(text);
  const std::size_t n = cps.size();
  std::vector<std::pair<std::size_t, std::size_t>> out;
  auto byte_at = [&](std::size_t k) { return k < n ? cps[k].offset : text.size(); };

  std::size_t i = 0;
  while (i < n) {
    const char32_t c = cps[i].value;
    std::size_t j = i;

    if (c == U'\'' && i + 1 < n) {
      static const std::u32string_view kSuffixes[] = {U"s", U"t", U"re", U"ve", U"m", U"ll", U"d"};
      for (auto suffix : kSuffixes) {
        bool match = true;
        for (std::size_t k = 0; match && k < suffix.size(); ++k) {
          match = i + 1 + k < n && cps[i + 1 + k].value == suffix[k];
        }
        if (match) {
          j = i + 1 + suffix.size();
          break;
        }
      }
    }
    if (j == i) {
      const std::size_t body = (c == U' ' && i + 1 < n) ? i + 1 : i;
      const char32_t b = cps[body].value;
      bool (*cls)(char32_t) = nullptr;
      if (is_letter(b)) {
        cls = is_letter;
      } else if (is_number(b)) {
        cls = is_number;
      } else if (is_other(b)) {
        cls = is_other;
      }
      if (cls && (body == i || c == U' ')) {
        j = body;
        while (j < n && cls(cps[j].value)) ++j;
      }
    }
    if (j == i && is_ws(c)) {
      std::size_t end = i;
      while (end < n && is_ws(cps[end].value)) ++end;
      if (end == n || end - i == 1) {
        j = end;
      } else {
        j = end - 1;  // leave one space to prefix the next word
      }
    }
    if (j == i) j = i + 1;
    out.emplace_back(byte_at(i), byte_at(j));
    i = j;
  }
  return out;
}

}  // namespace

BpeTokenizer BpeTokenizer::from_strings(std::string_view vocab_json, std::string_view merges_txt,
                                        std::optional<std::string> unk_token) {
  BpeTokenizer tok;

  // GPT-2 byte -> printable code point table.
  std::vector<int> printable;
  for (int b = '!'; b <= '~'; ++b) printable.push_back(b);
  for (int b = 0xA1; b <= 0xAC; ++b) printable.push_back(b);
  for (int b = 0xAE; b <= 0xFF; ++b) printable.push_back(b);
  std::array<bool, 256> is_printable{};
  for (int b : printable) is_printable[b] = true;
  int extra = 0;
  for (int b = 0; b < 256; ++b) {
    const char32_t cp = is_printable[b] ? static_cast<char32_t>(b) : static_cast<char32_t>(256 + extra++);
    tok.byte_to_symbol_[b] = utf8_encode(cp);
    tok.symbol_to_byte_[tok.byte_to_symbol_[b]] = static_cast<unsigned char>(b);
  }

  nlohmann::json vocab;
  try {
    vocab = nlohmann::json::parse(vocab_json);
  } catch (const nlohmann::json::exception& e) {
    backend_error(kModule, std::string("vocab.json: ") + e.what());
  }
  int max_id = -1;
  for (const auto& [token, id] : vocab.items()) {
    const int v = id.get<int>();
    tok.vocab_[token] = v;
    max_id = std::max(max_id, v);
  }
  tok.id_to_token_.assign(static_cast<std::size_t>(max_id + 1), std::string());
  for (const auto& [token, id] : tok.vocab_) tok.id_to_token_[static_cast<std::size_t>(id)] = token;

  int rank = 0;
  for (const auto& line : split_lines(merges_txt)) {
    if (line.empty() || line.rfind("#version", 0) == 0) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos) backend_error(kModule, "merges.txt: malformed line '" + line + "'");
    tok.merge_ranks_.emplace(line, rank++);
  }

  if (unk_token) {
    auto it = tok.vocab_.find(*unk_token);
    if (it == tok.vocab_.end()) backend_error(kModule, "unknown token '" + *unk_token + "' not in vocabulary");
    tok.unk_id_ = it->second;
  }
  return tok;
}

BpeTokenizer BpeTokenizer::load(const std::filesystem::path& vocab_json,
                                const std::filesystem::path& merges_txt,
                                std::optional<std::string> unk_token) {
  std::string vocab, merges;
  try {
    vocab = read_file(vocab_json, kModule);
    merges = read_file(merges_txt, kModule);
  } catch (const Error& e) {
    backend_error(kModule, std::string("tokenizer load failed: ") + e.what());
  }
  return from_strings(vocab, merges, std::move(unk_token));
}

std::vector<std::string> BpeTokenizer::pretokenize(std::string_view text) const {
  std::vector<std::string> out;
  for (auto [b, e] : pretokenize_ranges(text)) out.emplace_back(text.substr(b, e - b));
  return out;
}

void BpeTokenizer::encode_piece(std::string_view piece, std::vector<int>& ids,
                                std::vector<std::size_t>* byte_lens) const {
  // Symbols with their byte spans.
  std::vector<std::string> symbols;
  std::vector<std::size_t> lens;
  symbols.reserve(piece.size());
  for (unsigned char b : piece) {
    symbols.push_back(byte_to_symbol_[b]);
    lens.push_back(1);
  }

  std::string key;
  while (symbols.size() > 1) {
    int best_rank = INT_MAX;
    std::size_t best = 0;
    for (std::size_t k = 0; k + 1 < symbols.size(); ++k) {
      key.assign(symbols[k]).append(" ").append(symbols[k + 1]);
      auto it = merge_ranks_.find(key);
      if (it != merge_ranks_.end() && it->second < best_rank) {
        best_rank = it->second;
        best = k;
      }
    }
    if (best_rank == INT_MAX) break;
    const std::string first = symbols[best];
    const std::string second = symbols[best + 1];
    std::vector<std::string> merged;
    std::vector<std::size_t> merged_lens;
    merged.reserve(symbols.size());
    for (std::size_t k = 0; k < symbols.size();) {
      if (k + 1 < symbols.size() && symbols[k] == first && symbols[k + 1] == second) {
        merged.push_back(first + second);
        merged_lens.push_back(lens[k] + lens[k + 1]);
        k += 2;
      } else {
        merged.push_back(symbols[k]);
        merged_lens.push_back(lens[k]);
        ++k;
      }
    }
    symbols = std::move(merged);
    lens = std::move(merged_lens);
  }

  for (std::size_t k = 0; k < symbols.size(); ++k) {
    auto it = vocab_.find(symbols[k]);
    if (it != vocab_.end()) {
      ids.push_back(it->second);
    } else if (unk_id_) {
      ids.push_back(*unk_id_);
    } else {
      backend_error(kModule, "token '" + symbols[k] + "' not in vocabulary and no unknown token");
    }
    if (byte_lens) byte_lens->push_back(lens[k]);
  }
}

std::vector<int> BpeTokenizer::encode_impl(std::string_view text, std::vector<std::size_t>* byte_lens) const {
  std::vector<int> ids;
  for (auto [b, e] : pretokenize_ranges(text)) encode_piece(text.substr(b, e - b), ids, byte_lens);
  return ids;
}

std::vector<int> BpeTokenizer::encode(std::string_view text) const { return encode_impl(text, nullptr); }

std::string BpeTokenizer::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) continue;
    const std::string& token = id_to_token_[static_cast<std::size_t>(id)];
    for (const auto& cp : decode_utf8(token)) {
      auto it = symbol_to_byte_.find(std::string(token.substr(cp.offset, cp.length)));
      if (it != symbol_to_byte_.end()) {
        out += static_cast<char>(it->second);
      } else {
        out += token.substr(cp.offset, cp.length);
      }
    }
  }
  return out;
}

std::optional<int> BpeTokenizer::token_id(std::string_view token) const {
  auto it = vocab_.find(std::string(token));
  if (it == vocab_.end()) return std::nullopt;
  return it->second;
}

std::size_t BpeTokenizer::count(std::string_view text) const { return encode(text).size(); }

std::string BpeTokenizer::truncate(std::string_view text, std::size_t max_tokens) const {
  std::vector<std::size_t> lens;
  const auto ids = encode_impl(text, &lens);
  if (ids.size() <= max_tokens) return std::string(text);
  // A cut inside a word can re-encode into more pieces; keep fewer tokens
  // until the prefix fits.
  for (std::size_t keep = max_tokens;; --keep) {
    std::size_t bytes = 0;
    for (std::size_t k = 0; k < keep; ++k) bytes += lens[k];
    // Back off to a UTF-8 character boundary.
    while (bytes > 0 && bytes < text.size() && (static_cast<unsigned char>(text[bytes]) & 0xC0) == 0x80) --bytes;
    std::string prefix(text.substr(0, bytes));
    if (keep == 0 || count(prefix) <= max_tokens) return prefix;
  }
}

}  // namespace entrank::nli
