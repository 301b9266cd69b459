#include "entrank/nli/transformer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "entrank/error.hpp"

namespace entrank::nli {

namespace {

constexpr const char* kModule = "scorer";

using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<float, 1, Eigen::Dynamic>;

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

Matrix to_matrix(const Tensor& t, const std::string& name) {
  if (t.shape.size() != 2) backend_error(kModule, "tensor '" + name + "' is not 2-D");
  Matrix m(t.shape[0], t.shape[1]);
  std::copy(t.data.begin(), t.data.end(), m.data());
  return m;
}

RowVector to_vector(const Tensor& t, const std::string& name) {
  if (t.shape.size() != 1) backend_error(kModule, "tensor '" + name + "' is not 1-D");
  RowVector v(t.shape[0]);
  std::copy(t.data.begin(), t.data.end(), v.data());
  return v;
}

class Weights {
 public:
  Weights(const TensorFile& file, std::string prefix) : file_(file), prefix_(std::move(prefix)) {}

  Matrix matrix(const std::string& name, Eigen::Index rows, Eigen::Index cols) const {
    Matrix m = to_matrix(file_.get(prefix_ + name), prefix_ + name);
    if (m.rows() != rows || m.cols() != cols) {
      backend_error(kModule, "tensor '" + prefix_ + name + "' has shape " + std::to_string(m.rows()) + "x" +
                                 std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                                 std::to_string(cols));
    }
    return m;
  }
  RowVector vector(const std::string& name, Eigen::Index size) const {
    RowVector v = to_vector(file_.get(prefix_ + name), prefix_ + name);
    if (v.size() != size) backend_error(kModule, "tensor '" + prefix_ + name + "' has wrong length");
    return v;
  }
  bool has(const std::string& name) const { return file_.contains(prefix_ + name); }
  Weights sub(const std::string& name) const { return Weights(file_, prefix_ + name); }

 private:
  const TensorFile& file_;
  std::string prefix_;
};

struct Linear {
  Matrix weight;  // out x in
  RowVector bias;  // empty when absent

  Linear() = default;
  Linear(const Weights& w, Eigen::Index out, Eigen::Index in, bool with_bias = true)
      : weight(w.matrix("weight", out, in)) {
    if (with_bias) bias = w.vector("bias", out);
  }

  Matrix operator()(const Matrix& x) const {
    Matrix y = x * weight.transpose();
    if (bias.size()) y.rowwise() += bias;
    return y;
  }
};

struct LayerNorm {
  RowVector gamma;
  RowVector beta;
  float eps = 1e-5f;

  LayerNorm() = default;
  LayerNorm(const Weights& w, Eigen::Index size, float eps_) : gamma(w.vector("weight", size)),
                                                                beta(w.vector("bias", size)), eps(eps_) {}

  Matrix operator()(const Matrix& x) const {
    Matrix y(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const float mean = x.row(r).mean();
      const RowVector centered = x.row(r).array() - mean;
      const float var = centered.squaredNorm() / static_cast<float>(x.cols());
      y.row(r) = (centered / std::sqrt(var + eps)).cwiseProduct(gamma) + beta;
    }
    return y;
  }
};

void activate(Matrix& x, const std::string& act) {
  if (act == "gelu") {
    x = x.unaryExpr([](float v) { return 0.5f * v * (1.0f + std::erf(v * static_cast<float>(M_SQRT1_2))); });
  } else if (act == "gelu_new" || act == "gelu_pytorch_tanh") {
    x = x.unaryExpr([](float v) {
      constexpr float k = 0.7978845608028654f;
      return 0.5f * v * (1.0f + std::tanh(k * (v + 0.044715f * v * v * v)));
    });
  } else if (act == "relu") {
    x = x.cwiseMax(0.0f);
  } else if (act == "tanh") {
    x = x.array().tanh().matrix();
  } else {
    backend_error(kModule, "unsupported activation '" + act + "'");
  }
}

void softmax_rows(Matrix& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const float m = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - m).exp().matrix();
    s.row(r) /= s.row(r).sum();
  }
}

struct FeedForward {
  Linear intermediate;
  Linear output;
  LayerNorm norm;
  std::string act;

  Matrix operator()(const Matrix& x) const {
    Matrix h = intermediate(x);
    activate(h, act);
    return norm(output(h) + x);
  }
};

FeedForward load_ffn(const Weights& layer, const EncoderConfig& c) {
  FeedForward f;
  f.intermediate = Linear(layer.sub("intermediate.dense."), c.intermediate_size, c.hidden_size);
  f.output = Linear(layer.sub("output.dense."), c.hidden_size, c.intermediate_size);
  f.norm = LayerNorm(layer.sub("output.LayerNorm."), c.hidden_size, c.layer_norm_eps);
  f.act = c.hidden_act;
  return f;
}

// ---------------------------------------------------------------------------
// RoBERTa: absolute positions, standard scaled dot-product attention, and a
// dense-tanh-dense head on the first token.

class RobertaClassifier final : public SequenceClassifier {
 public:
  RobertaClassifier(const EncoderConfig& c, const TensorFile& file) : SequenceClassifier(c) {
    const Weights root(file, "roberta.");
    const Index h = c.hidden_size;
    word_ = root.matrix("embeddings.word_embeddings.weight", c.vocab_size, h);
    position_ = root.matrix("embeddings.position_embeddings.weight", c.max_position_embeddings, h);
    if (c.type_vocab_size > 0) type_ = root.matrix("embeddings.token_type_embeddings.weight", c.type_vocab_size, h);
    embed_norm_ = LayerNorm(root.sub("embeddings.LayerNorm."), h, c.layer_norm_eps);
    for (int l = 0; l < c.num_layers; ++l) {
      const Weights w = root.sub("encoder.layer." + std::to_string(l) + ".");
      Layer layer;
      layer.query = Linear(w.sub("attention.self.query."), h, h);
      layer.key = Linear(w.sub("attention.self.key."), h, h);
      layer.value = Linear(w.sub("attention.self.value."), h, h);
      layer.attn_out = Linear(w.sub("attention.output.dense."), h, h);
      layer.attn_norm = LayerNorm(w.sub("attention.output.LayerNorm."), h, c.layer_norm_eps);
      layer.ffn = load_ffn(w, c);
      layers_.push_back(std::move(layer));
    }
    const Weights head(file, "classifier.");
    head_dense_ = Linear(head.sub("dense."), h, h);
    head_out_ = Linear(head.sub("out_proj."), static_cast<Index>(c.labels.size()), h);
  }

  std::vector<float> logits(std::span<const int> ids, std::span<const int> token_types) const override {
    const auto& c = config_;
    const Index n = static_cast<Index>(ids.size());
    if (n + c.pad_token_id + 1 > c.max_position_embeddings) {
      backend_error(kModule, "sequence of " + std::to_string(n) + " tokens exceeds position table");
    }
    Matrix x(n, c.hidden_size);
    for (Index i = 0; i < n; ++i) {
      x.row(i) = word_.row(checked_id(ids[static_cast<std::size_t>(i)])) +
                 position_.row(c.pad_token_id + 1 + i);
      if (type_.size()) {
        const int tt = token_types.empty() ? 0 : token_types[static_cast<std::size_t>(i)];
        x.row(i) += type_.row(tt);
      }
    }
    x = embed_norm_(x);

    const Index heads = c.num_heads;
    const Index hd = c.hidden_size / heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(hd));
    for (const auto& layer : layers_) {
      const Matrix q = layer.query(x);
      const Matrix k = layer.key(x);
      const Matrix v = layer.value(x);
      Matrix context(n, c.hidden_size);
      for (Index hh = 0; hh < heads; ++hh) {
        Matrix s = (q.middleCols(hh * hd, hd) * k.middleCols(hh * hd, hd).transpose()) * scale;
        softmax_rows(s);
        context.middleCols(hh * hd, hd) = s * v.middleCols(hh * hd, hd);
      }
      const Matrix attn = layer.attn_norm(layer.attn_out(context) + x);
      x = layer.ffn(attn);
    }

    Matrix cls = x.topRows(1);
    Matrix pooled = head_dense_(cls);
    activate(pooled, "tanh");
    const Matrix out = head_out_(pooled);
    return std::vector<float>(out.data(), out.data() + out.size());
  }

 private:
  using Index = Eigen::Index;

  struct Layer {
    Linear query, key, value, attn_out;
    LayerNorm attn_norm;
    FeedForward ffn;
  };

  Index checked_id(int id) const {
    if (id < 0 || id >= config_.vocab_size) backend_error(kModule, "token id " + std::to_string(id) + " out of range");
    return id;
  }

  Matrix word_, position_, type_;
  LayerNorm embed_norm_;
  std::vector<Layer> layers_;
  Linear head_dense_, head_out_;
};

// ---------------------------------------------------------------------------
// DeBERTa (v1): relative-position embeddings shared across layers, combined
// projection with per-head interleaved q/k/v, content-to-position and
// position-to-content terms, and a pooler on the first token.

class DebertaClassifier final : public SequenceClassifier {
 public:
  DebertaClassifier(const EncoderConfig& c, const TensorFile& file) : SequenceClassifier(c) {
    const Weights root(file, "deberta.");
    const Index h = c.hidden_size;
    word_ = root.matrix("embeddings.word_embeddings.weight", c.vocab_size, h);
    if (c.position_biased_input) {
      position_ = root.matrix("embeddings.position_embeddings.weight", c.max_position_embeddings, h);
    }
    if (c.type_vocab_size > 0) type_ = root.matrix("embeddings.token_type_embeddings.weight", c.type_vocab_size, h);
    embed_norm_ = LayerNorm(root.sub("embeddings.LayerNorm."), h, c.layer_norm_eps);

    max_relative_ = c.max_relative_positions < 1 ? c.max_position_embeddings : c.max_relative_positions;
    if (c.relative_attention) rel_embeddings_ = root.matrix("encoder.rel_embeddings.weight", 2 * max_relative_, h);

    for (int l = 0; l < c.num_layers; ++l) {
      const Weights w = root.sub("encoder.layer." + std::to_string(l) + ".");
      const Weights self = w.sub("attention.self.");
      Layer layer;
      layer.in_proj = Linear(self.sub("in_proj."), 3 * h, h, /*with_bias=*/false);
      layer.q_bias = self.vector("q_bias", h);
      layer.v_bias = self.vector("v_bias", h);
      if (c.relative_attention && c.content_to_position) {
        layer.pos_proj = Linear(self.sub("pos_proj."), h, h, /*with_bias=*/false);
      }
      if (c.relative_attention && c.position_to_content) {
        layer.pos_q_proj = Linear(self.sub("pos_q_proj."), h, h);
      }
      layer.attn_out = Linear(w.sub("attention.output.dense."), h, h);
      layer.attn_norm = LayerNorm(w.sub("attention.output.LayerNorm."), h, c.layer_norm_eps);
      layer.ffn = load_ffn(w, c);
      layers_.push_back(std::move(layer));
    }
    pooler_ = Linear(Weights(file, "pooler.dense."), h, h);
    classifier_ = Linear(Weights(file, "classifier."), static_cast<Index>(c.labels.size()), h);
  }

  std::vector<float> logits(std::span<const int> ids, std::span<const int> token_types) const override {
    const auto& c = config_;
    const Index n = static_cast<Index>(ids.size());
    if (position_.size() && n > c.max_position_embeddings) {
      backend_error(kModule, "sequence of " + std::to_string(n) + " tokens exceeds position table");
    }
    Matrix x(n, c.hidden_size);
    for (Index i = 0; i < n; ++i) {
      x.row(i) = word_.row(checked_id(ids[static_cast<std::size_t>(i)]));
      if (position_.size()) x.row(i) += position_.row(i);
      if (type_.size()) {
        const int tt = token_types.empty() ? 0 : token_types[static_cast<std::size_t>(i)];
        x.row(i) += type_.row(tt);
      }
    }
    x = embed_norm_(x);

    const Index heads = c.num_heads;
    const Index hd = c.hidden_size / heads;
    const int n_pos_terms = (c.content_to_position ? 1 : 0) + (c.position_to_content ? 1 : 0);
    const float scale = std::sqrt(static_cast<float>(hd) * static_cast<float>(1 + n_pos_terms));

    // Relative distance i - j is looked up at clamp(i - j + span, 0, 2 span - 1)
    // in the window of 2 span embeddings centred on max_relative_.
    const Index span = std::min<Index>(n, max_relative_);
    Matrix rel;
    if (c.relative_attention) rel = rel_embeddings_.middleRows(max_relative_ - span, 2 * span);
    auto bucket = [span](Index i, Index j) { return std::clamp<Index>(i - j + span, 0, 2 * span - 1); };

    for (const auto& layer : layers_) {
      const Matrix qkv = layer.in_proj(x);
      Matrix pos_key, pos_query;
      if (c.relative_attention && c.content_to_position) pos_key = layer.pos_proj(rel);
      if (c.relative_attention && c.position_to_content) pos_query = layer.pos_q_proj(rel) / scale;

      Matrix context(n, c.hidden_size);
      for (Index hh = 0; hh < heads; ++hh) {
        Matrix q = qkv.middleCols(hh * 3 * hd, hd);
        const Matrix k = qkv.middleCols(hh * 3 * hd + hd, hd);
        Matrix v = qkv.middleCols(hh * 3 * hd + 2 * hd, hd);
        q.rowwise() += layer.q_bias.segment(hh * hd, hd);
        v.rowwise() += layer.v_bias.segment(hh * hd, hd);
        q /= scale;

        Matrix s = q * k.transpose();
        if (pos_key.size()) {
          const Matrix c2p = q * pos_key.middleCols(hh * hd, hd).transpose();  // n x 2span
          for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) s(i, j) += c2p(i, bucket(i, j));
        }
        if (pos_query.size()) {
          const Matrix p2c = k * pos_query.middleCols(hh * hd, hd).transpose();  // n x 2span
          for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) s(i, j) += p2c(j, bucket(i, j));
        }
        softmax_rows(s);
        context.middleCols(hh * hd, hd) = s * v;
      }
      const Matrix attn = layer.attn_norm(layer.attn_out(context) + x);
      x = layer.ffn(attn);
    }

    Matrix pooled = pooler_(x.topRows(1));
    activate(pooled, c.pooler_hidden_act);
    const Matrix out = classifier_(pooled);
    return std::vector<float>(out.data(), out.data() + out.size());
  }

 private:
  using Index = Eigen::Index;

  struct Layer {
    Linear in_proj;
    RowVector q_bias, v_bias;
    Linear pos_proj, pos_q_proj;
    Linear attn_out;
    LayerNorm attn_norm;
    FeedForward ffn;
  };

  Index checked_id(int id) const {
    if (id < 0 || id >= config_.vocab_size) backend_error(kModule, "token id " + std::to_string(id) + " out of range");
    return id;
  }

  Matrix word_, position_, type_;
  LayerNorm embed_norm_;
  Index max_relative_ = 0;
  Matrix rel_embeddings_;
  std::vector<Layer> layers_;
  Linear pooler_, classifier_;
};

}  // namespace

EncoderConfig EncoderConfig::parse(std::string_view config_json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(config_json);
  } catch (const nlohmann::json::exception& e) {
    backend_error(kModule, std::string("config.json: ") + e.what());
  }
  EncoderConfig c;
  try {
    const auto type = j.value("model_type", std::string());
    if (type == "roberta") {
      c.architecture = Architecture::kRoberta;
      c.layer_norm_eps = 1e-5f;
      c.pad_token_id = 1;
      c.type_vocab_size = 1;
    } else if (type == "deberta") {
      c.architecture = Architecture::kDeberta;
      c.layer_norm_eps = 1e-7f;
      c.pad_token_id = 0;
      c.type_vocab_size = 0;
    } else {
      backend_error(kModule, "unsupported model_type '" + type + "' (roberta|deberta)");
    }
    c.vocab_size = j.at("vocab_size").get<int>();
    c.hidden_size = j.at("hidden_size").get<int>();
    c.num_layers = j.at("num_hidden_layers").get<int>();
    c.num_heads = j.at("num_attention_heads").get<int>();
    c.intermediate_size = j.at("intermediate_size").get<int>();
    c.max_position_embeddings = j.value("max_position_embeddings", 512);
    c.type_vocab_size = j.value("type_vocab_size", c.type_vocab_size);
    if (j.contains("pad_token_id") && j["pad_token_id"].is_number()) c.pad_token_id = j["pad_token_id"].get<int>();
    c.layer_norm_eps = j.value("layer_norm_eps", c.layer_norm_eps);
    c.hidden_act = j.value("hidden_act", std::string("gelu"));
    c.pooler_hidden_act = j.value("pooler_hidden_act", std::string("gelu"));
    if (c.architecture == Architecture::kDeberta) {
      c.relative_attention = j.value("relative_attention", false);
      c.position_biased_input = j.value("position_biased_input", true);
      c.max_relative_positions = j.value("max_relative_positions", -1);
      std::vector<std::string> pos_types;
      if (j.contains("pos_att_type") && j["pos_att_type"].is_string()) {
        std::string s = lower(j["pos_att_type"].get<std::string>());
        std::size_t start = 0;
        while (start <= s.size()) {
          auto bar = s.find('|', start);
          if (bar == std::string::npos) bar = s.size();
          if (bar > start) pos_types.push_back(s.substr(start, bar - start));
          start = bar + 1;
        }
      } else if (j.contains("pos_att_type") && j["pos_att_type"].is_array()) {
        for (const auto& p : j["pos_att_type"]) pos_types.push_back(lower(p.get<std::string>()));
      }
      for (const auto& p : pos_types) {
        if (p == "c2p") c.content_to_position = true;
        else if (p == "p2c") c.position_to_content = true;
        else backend_error(kModule, "unsupported pos_att_type '" + p + "'");
      }
      if (j.value("talking_head", false)) backend_error(kModule, "talking-head attention is not supported");
    }
    int num_labels = 0;
    if (j.contains("id2label")) {
      num_labels = static_cast<int>(j["id2label"].size());
      c.labels.assign(static_cast<std::size_t>(num_labels), std::string());
      for (const auto& [idx, name] : j["id2label"].items()) {
        const int i = std::stoi(idx);
        if (i < 0 || i >= num_labels) backend_error(kModule, "id2label index out of range");
        c.labels[static_cast<std::size_t>(i)] = lower(name.get<std::string>());
      }
    } else {
      num_labels = j.value("num_labels", 3);
      for (int i = 0; i < num_labels; ++i) c.labels.push_back("label_" + std::to_string(i));
    }
  } catch (const nlohmann::json::exception& e) {
    backend_error(kModule, std::string("config.json: ") + e.what());
  }
  if (c.hidden_size <= 0 || c.num_heads <= 0 || c.hidden_size % c.num_heads != 0) {
    backend_error(kModule, "hidden size must be a positive multiple of the head count");
  }
  return c;
}

std::unique_ptr<SequenceClassifier> SequenceClassifier::create(const EncoderConfig& config,
                                                               const TensorFile& weights) {
  if (config.architecture == Architecture::kRoberta) return std::make_unique<RobertaClassifier>(config, weights);
  return std::make_unique<DebertaClassifier>(config, weights);
}

}  // namespace entrank::nli
