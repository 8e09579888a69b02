#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "naim/common.hpp"
#include "naim/data.hpp"
#include "naim/optim.hpp"
#include "naim/tape.hpp"

namespace naim {

struct NaimConfig {
  std::size_t embed_dim = 6;
  std::size_t layers = 6;
  std::size_t heads = 3;
  std::size_t ff_dim = 1000;
  bool embedding_bias = false;   // the default setup eliminates the embedding bias
  bool double_masking = true;    // false -> classic column-only masking (leak baseline)
  double ln_eps = 1e-5;

  std::size_t head_dim() const { return embed_dim / heads; }

  void validate() const {
    if (embed_dim == 0 || layers == 0 || heads == 0 || ff_dim == 0)
      throw DataError("NaimConfig: all dimensions must be positive");
    if (embed_dim % heads != 0)
      throw DataError("NaimConfig: embed_dim (" + std::to_string(embed_dim) +
                      ") must be divisible by heads (" + std::to_string(heads) + ")");
  }
};

struct ModelFeature {
  bool categorical = false;
  std::size_t cardinality = 0;  // k_i for categoricals; 0 for numericals
};

struct ModelSpec {
  std::vector<ModelFeature> features;
  std::size_t n_classes = 2;

  std::size_t m() const { return features.size(); }

  static ModelSpec from(const Preprocessor& prep) {
    ModelSpec s;
    s.n_classes = prep.schema.class_count();
    for (std::size_t f = 0; f < prep.schema.feature_count(); ++f) {
      const bool cat = prep.schema.features[f].kind == FeatureKind::Categorical;
      s.features.push_back(ModelFeature{cat, cat ? prep.cardinality(f) : 0});
    }
    return s;
  }
};

// Trainable arrays only. The padding row of every lookup table (the row a
// missing feature selects) is not stored at all: lookups of missing features
// route to a constant zero row on the tape, which both freezes it at exactly
// zero and keeps it out of the optimizer — the two frozen-row requirements.
// Categorical tables hold the k_i real codes; numerical "tables" hold the
// single present row.
struct NaimParameters {
  NaimConfig config;
  ModelSpec spec;

  std::vector<Tensor> embed;       // per feature: cat [k_i x d], num [1 x d]
  std::vector<Tensor> embed_bias;  // per feature [1 x d]; empty unless config.embedding_bias

  struct Layer {
    std::vector<Tensor> wq, wk, wv;              // per head [d x d_h]
    Tensor wo;                                   // [h*d_h x d]
    Tensor ln1_g, ln1_b;                         // [1 x d]
    Tensor ff_w1, ff_b1, ff_w2, ff_b2;           // d -> ff_dim -> d
    Tensor ln2_g, ln2_b;                         // [1 x d]
  };
  std::vector<Layer> layers;
  Tensor final_g, final_b;  // [1 x d]
  Tensor fc_w, fc_b;        // [m*d x C], [1 x C]

  // Fixed registration order; shared by the optimizer and the checkpoint.
  std::vector<NamedParam> named() {
    std::vector<NamedParam> out;
    for (std::size_t i = 0; i < embed.size(); ++i) out.push_back({"embed." + std::to_string(i), &embed[i]});
    for (std::size_t i = 0; i < embed_bias.size(); ++i)
      out.push_back({"embed_bias." + std::to_string(i), &embed_bias[i]});
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string pre = "layer." + std::to_string(l) + ".";
      for (std::size_t a = 0; a < layers[l].wq.size(); ++a) {
        const std::string h = pre + "head." + std::to_string(a) + ".";
        out.push_back({h + "wq", &layers[l].wq[a]});
        out.push_back({h + "wk", &layers[l].wk[a]});
        out.push_back({h + "wv", &layers[l].wv[a]});
      }
      out.push_back({pre + "wo", &layers[l].wo});
      out.push_back({pre + "ln1.gain", &layers[l].ln1_g});
      out.push_back({pre + "ln1.bias", &layers[l].ln1_b});
      out.push_back({pre + "ff.w1", &layers[l].ff_w1});
      out.push_back({pre + "ff.b1", &layers[l].ff_b1});
      out.push_back({pre + "ff.w2", &layers[l].ff_w2});
      out.push_back({pre + "ff.b2", &layers[l].ff_b2});
      out.push_back({pre + "ln2.gain", &layers[l].ln2_g});
      out.push_back({pre + "ln2.bias", &layers[l].ln2_b});
    }
    out.push_back({"final_norm.gain", &final_g});
    out.push_back({"final_norm.bias", &final_b});
    out.push_back({"fc.weight", &fc_w});
    out.push_back({"fc.bias", &fc_b});
    return out;
  }
};

// Glorot-uniform weights (per-tensor RNG streams derived from the seed and the
// parameter name), gains 1, biases 0.
inline NaimParameters init_naim(const NaimConfig& config, const ModelSpec& spec, std::uint64_t seed) {
  config.validate();
  if (spec.n_classes < 2) throw DataError("init_naim: need >= 2 classes");
  if (spec.features.empty()) throw DataError("init_naim: need >= 1 feature");
  const std::size_t d = config.embed_dim;
  const std::size_t dh = config.head_dim();

  NaimParameters p;
  p.config = config;
  p.spec = spec;

  auto named_rng = [&](const std::string& name) { return Rng(mix64({seed, hash_str(name)})); };
  auto glorot = [&](const std::string& name, std::size_t fin, std::size_t fout, std::vector<std::size_t> shape) {
    Rng rng = named_rng(name);
    return glorot_uniform(fin, fout, std::move(shape), rng);
  };

  for (std::size_t i = 0; i < spec.features.size(); ++i) {
    const std::string name = "embed." + std::to_string(i);
    if (spec.features[i].categorical) {
      const std::size_t k = spec.features[i].cardinality;
      p.embed.push_back(glorot(name, std::max<std::size_t>(k, 1), d, {k, d}));
    } else {
      p.embed.push_back(glorot(name, 1, d, {1, d}));
    }
  }
  if (config.embedding_bias)
    for (std::size_t i = 0; i < spec.features.size(); ++i) p.embed_bias.push_back(Tensor::zeros({1, d}));

  for (std::size_t l = 0; l < config.layers; ++l) {
    NaimParameters::Layer layer;
    const std::string pre = "layer." + std::to_string(l) + ".";
    for (std::size_t a = 0; a < config.heads; ++a) {
      const std::string h = pre + "head." + std::to_string(a) + ".";
      layer.wq.push_back(glorot(h + "wq", d, dh, {d, dh}));
      layer.wk.push_back(glorot(h + "wk", d, dh, {d, dh}));
      layer.wv.push_back(glorot(h + "wv", d, dh, {d, dh}));
    }
    layer.wo = glorot(pre + "wo", config.heads * dh, d, {config.heads * dh, d});
    layer.ln1_g = Tensor::full({1, d}, 1.0);
    layer.ln1_b = Tensor::zeros({1, d});
    layer.ff_w1 = glorot(pre + "ff.w1", d, config.ff_dim, {d, config.ff_dim});
    layer.ff_b1 = Tensor::zeros({1, config.ff_dim});
    layer.ff_w2 = glorot(pre + "ff.w2", config.ff_dim, d, {config.ff_dim, d});
    layer.ff_b2 = Tensor::zeros({1, d});
    layer.ln2_g = Tensor::full({1, d}, 1.0);
    layer.ln2_b = Tensor::zeros({1, d});
    p.layers.push_back(std::move(layer));
  }
  p.final_g = Tensor::full({1, d}, 1.0);
  p.final_b = Tensor::zeros({1, d});
  const std::size_t m = spec.features.size();
  p.fc_w = glorot("fc.weight", m * d, spec.n_classes, {m * d, spec.n_classes});
  p.fc_b = Tensor::zeros({1, spec.n_classes});
  return p;
}

// Parameter tensors registered as leaves on a tape, in named() order.
struct TapeModel {
  const NaimParameters* params = nullptr;
  std::vector<Tape::NodeId> ordered;  // same order as NaimParameters::named()
  std::vector<Tape::NodeId> embed, embed_bias;
  struct Layer {
    std::vector<Tape::NodeId> wq, wk, wv;
    Tape::NodeId wo{}, ln1_g{}, ln1_b{}, ff_w1{}, ff_b1{}, ff_w2{}, ff_b2{}, ln2_g{}, ln2_b{};
  };
  std::vector<Layer> layers;
  Tape::NodeId final_g{}, final_b{}, fc_w{}, fc_b{};
};

inline TapeModel bind_model(Tape& tape, NaimParameters& params) {
  TapeModel tm;
  tm.params = &params;
  const std::vector<NamedParam> named = params.named();
  for (const NamedParam& np : named) tm.ordered.push_back(tape.leaf(*np.value));
  std::size_t at = 0;
  const std::size_t F = params.spec.features.size();
  for (std::size_t i = 0; i < F; ++i) tm.embed.push_back(tm.ordered[at++]);
  if (params.config.embedding_bias)
    for (std::size_t i = 0; i < F; ++i) tm.embed_bias.push_back(tm.ordered[at++]);
  for (std::size_t l = 0; l < params.config.layers; ++l) {
    TapeModel::Layer layer;
    for (std::size_t a = 0; a < params.config.heads; ++a) {
      layer.wq.push_back(tm.ordered[at++]);
      layer.wk.push_back(tm.ordered[at++]);
      layer.wv.push_back(tm.ordered[at++]);
    }
    layer.wo = tm.ordered[at++];
    layer.ln1_g = tm.ordered[at++];
    layer.ln1_b = tm.ordered[at++];
    layer.ff_w1 = tm.ordered[at++];
    layer.ff_b1 = tm.ordered[at++];
    layer.ff_w2 = tm.ordered[at++];
    layer.ff_b2 = tm.ordered[at++];
    layer.ln2_g = tm.ordered[at++];
    layer.ln2_b = tm.ordered[at++];
    tm.layers.push_back(std::move(layer));
  }
  tm.final_g = tm.ordered[at++];
  tm.final_b = tm.ordered[at++];
  tm.fc_w = tm.ordered[at++];
  tm.fc_b = tm.ordered[at++];
  return tm;
}

// Attention matrices captured during a forward pass: [layer][head] -> m x m.
struct AttentionTrace {
  std::vector<std::vector<Tensor>> layers;
};

// Scaled-dot-product attention over feature tokens with missing tokens
// excluded from every softmax normalization (blocked columns emit exact 0).
// With double_masking the rows of missing tokens are then zeroed exactly, so
// A[i][j] == 0 whenever token i or j is missing; without it (the classic
// variant) missing rows still carry a present-column mixture — the leak this
// model exists to remove. An all-missing sample yields an all-zero output.
inline Tape::NodeId masked_attention(Tape& tape, Tape::NodeId q, Tape::NodeId k, Tape::NodeId v,
                                     const std::vector<std::uint8_t>& present, bool double_masking,
                                     Tensor* capture_attention = nullptr) {
  const std::size_t m = tape.value(q).rows();
  const std::size_t dh = tape.value(q).cols();
  if (present.size() != m) throw ShapeError("masked_attention: mask length must match token count");
  std::vector<std::uint8_t> blocked(m);
  bool any_present = false;
  for (std::size_t i = 0; i < m; ++i) {
    blocked[i] = present[i] ? 0 : 1;
    any_present |= (present[i] != 0);
  }
  if (!any_present) {
    if (capture_attention) *capture_attention = Tensor::zeros({m, m});
    std::vector<Tape::RowSpec> zero(m);  // defaults to kZeroRow
    return tape.gather_rows(std::move(zero), tape.value(v).cols());
  }
  Tape::NodeId scores = tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / std::sqrt(static_cast<double>(dh)));
  Tape::NodeId a = tape.softmax_rows(scores, blocked);
  if (double_masking) a = tape.zero_rows(a, blocked);
  if (capture_attention) *capture_attention = tape.value(a);
  return tape.matmul(a, v);
}

inline Tape::NodeId double_masked_attention(Tape& tape, Tape::NodeId q, Tape::NodeId k, Tape::NodeId v,
                                            const std::vector<std::uint8_t>& present,
                                            Tensor* capture_attention = nullptr) {
  return masked_attention(tape, q, k, v, present, true, capture_attention);
}

inline Tape::NodeId classic_masked_attention(Tape& tape, Tape::NodeId q, Tape::NodeId k, Tape::NodeId v,
                                             const std::vector<std::uint8_t>& present,
                                             Tensor* capture_attention = nullptr) {
  return masked_attention(tape, q, k, v, present, false, capture_attention);
}

namespace detail {

inline std::size_t categorical_code(const NaimParameters& p, std::size_t i, double value) {
  if (!std::isfinite(value))
    throw DataError("embed: feature " + std::to_string(i) + " categorical code must be finite");
  const double r = std::nearbyint(value);
  if (std::fabs(value - r) > 1e-9 || r < 0)
    throw DataError("embed: feature " + std::to_string(i) + " categorical code must be a non-negative integer");
  const auto code = static_cast<std::size_t>(r);
  if (code >= p.spec.features[i].cardinality)
    throw DataError("embed: feature " + std::to_string(i) + " code " + std::to_string(code) +
                    " out of range (cardinality " + std::to_string(p.spec.features[i].cardinality) + ")");
  return code;
}

}  // namespace detail

// Token matrix [m x d]: row i is feature i's embedding. Missing features pull
// the constant zero row; numerical embeddings are the present row scaled by
// the (normalized) value. Values at missing positions are never read.
inline Tape::NodeId embed_sample(Tape& tape, const TapeModel& tm, const std::vector<double>& values,
                                 const std::vector<std::uint8_t>& present) {
  const NaimParameters& p = *tm.params;
  const std::size_t F = p.spec.features.size();
  if (values.size() != F || present.size() != F)
    throw DataError("embed_sample: sample arity does not match the schema");
  std::vector<Tape::RowSpec> specs(F);
  for (std::size_t i = 0; i < F; ++i) {
    if (!present[i]) continue;  // stays kZeroRow
    if (p.spec.features[i].categorical) {
      specs[i] = Tape::RowSpec{tm.embed[i], detail::categorical_code(p, i, values[i]), 1.0};
    } else {
      if (!std::isfinite(values[i]))
        throw DataError("embed_sample: feature " + std::to_string(i) + " has a non-finite value");
      specs[i] = Tape::RowSpec{tm.embed[i], 0, values[i]};
    }
  }
  Tape::NodeId x = tape.gather_rows(std::move(specs), p.config.embed_dim);
  if (p.config.embedding_bias) {
    std::vector<Tape::RowSpec> bias(F);
    for (std::size_t i = 0; i < F; ++i) bias[i] = Tape::RowSpec{tm.embed_bias[i], 0, 1.0};
    x = tape.add(x, tape.gather_rows(std::move(bias), p.config.embed_dim));
  }
  return x;
}

// Post-norm encoder layer: multi-head masked attention -> add & norm ->
// position-wise FF (affine, ReLU, affine) -> add & norm. The same presence
// mask is used at every layer.
inline Tape::NodeId encoder_layer(Tape& tape, const TapeModel& tm, std::size_t l, Tape::NodeId x,
                                  const std::vector<std::uint8_t>& present,
                                  std::vector<Tensor>* head_attention = nullptr) {
  const NaimParameters& p = *tm.params;
  const TapeModel::Layer& lw = tm.layers[l];
  std::vector<Tape::NodeId> heads;
  for (std::size_t a = 0; a < p.config.heads; ++a) {
    Tape::NodeId q = tape.matmul(x, lw.wq[a]);
    Tape::NodeId k = tape.matmul(x, lw.wk[a]);
    Tape::NodeId v = tape.matmul(x, lw.wv[a]);
    Tensor* capture = nullptr;
    if (head_attention) {
      head_attention->emplace_back();
      capture = &head_attention->back();
    }
    heads.push_back(masked_attention(tape, q, k, v, present, p.config.double_masking, capture));
  }
  Tape::NodeId cat = p.config.heads == 1 ? heads[0] : tape.concat_cols(heads);
  Tape::NodeId proj = tape.matmul(cat, lw.wo);
  Tape::NodeId x1 = tape.layer_norm(tape.add(x, proj), lw.ln1_g, lw.ln1_b, p.config.ln_eps);
  Tape::NodeId ff = tape.linear(tape.relu(tape.linear(x1, lw.ff_w1, lw.ff_b1)), lw.ff_w2, lw.ff_b2);
  return tape.layer_norm(tape.add(x1, ff), lw.ln2_g, lw.ln2_b, p.config.ln_eps);
}

// Full forward graph for one sample: embeddings -> L encoder layers -> final
// per-token layer norm -> flatten -> FC. Returns the [1 x C] logits node.
inline Tape::NodeId forward(Tape& tape, const TapeModel& tm, const std::vector<double>& values,
                            const std::vector<std::uint8_t>& present, AttentionTrace* trace = nullptr) {
  const NaimParameters& p = *tm.params;
  Tape::NodeId x = embed_sample(tape, tm, values, present);
  if (trace) trace->layers.assign(p.config.layers, {});
  for (std::size_t l = 0; l < p.config.layers; ++l)
    x = encoder_layer(tape, tm, l, x, present, trace ? &trace->layers[l] : nullptr);
  x = tape.layer_norm(x, tm.final_g, tm.final_b, p.config.ln_eps);
  Tape::NodeId flat = tape.reshape(x, {1, p.spec.m() * p.config.embed_dim});
  return tape.linear(flat, tm.fc_w, tm.fc_b);
}

// --- tape-free conveniences -------------------------------------------------

inline Tensor embed_categorical(NaimParameters& p, std::size_t i, std::optional<std::size_t> code) {
  Tape tape;
  TapeModel tm = bind_model(tape, p);
  std::vector<Tape::RowSpec> spec(1);
  if (code) spec[0] = Tape::RowSpec{tm.embed[i], detail::categorical_code(p, i, static_cast<double>(*code)), 1.0};
  Tape::NodeId x = tape.gather_rows(std::move(spec), p.config.embed_dim);
  if (p.config.embedding_bias) x = tape.add(x, tm.embed_bias[i]);
  return tape.value(x);
}

inline Tensor embed_numerical(NaimParameters& p, std::size_t i, double value, bool present) {
  Tape tape;
  TapeModel tm = bind_model(tape, p);
  if (present && !std::isfinite(value)) throw DataError("embed_numerical: non-finite value");
  std::vector<Tape::RowSpec> spec(1);
  if (present) spec[0] = Tape::RowSpec{tm.embed[i], 0, value};
  Tape::NodeId x = tape.gather_rows(std::move(spec), p.config.embed_dim);
  if (p.config.embedding_bias) x = tape.add(x, tm.embed_bias[i]);
  return tape.value(x);
}

inline Tensor forward_logits(NaimParameters& p, const std::vector<double>& values,
                             const std::vector<std::uint8_t>& present, AttentionTrace* trace = nullptr) {
  Tape tape;
  TapeModel tm = bind_model(tape, p);
  return tape.value(forward(tape, tm, values, present, trace));
}

inline std::vector<double> softmax_vec(const Tensor& logits) {
  double mx = logits.data[0];
  for (double v : logits.data) mx = std::max(mx, v);
  double z = 0.0;
  std::vector<double> out(logits.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(logits.data[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

inline std::vector<double> predict_proba(NaimParameters& p, const std::vector<double>& values,
                                         const std::vector<std::uint8_t>& present) {
  return softmax_vec(forward_logits(p, values, present));
}

}  // namespace naim
