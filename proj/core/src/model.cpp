#include "stutterkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stutterkit/error.hpp"
#include "stutterkit/loss.hpp"

namespace stutterkit {

Gradients::Gradients(const ParameterRegistry& registry) {
  buffers_.resize(registry.size());
  present_.resize(registry.size());
  for (std::size_t i = 0; i < registry.size(); ++i) {
    present_[i] = registry[i].trainable;
    if (present_[i]) buffers_[i].assign(registry[i].numel(), 0.0);
  }
}

void Gradients::zero() {
  for (auto& b : buffers_) std::fill(b.begin(), b.end(), 0.0);
}

void Gradients::add(const Gradients& other) {
  for (std::size_t i = 0; i < buffers_.size(); ++i) {
    if (!present_[i]) continue;
    auto& dst = buffers_[i];
    const auto& src = other.buffers_[i];
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
}

void Gradients::scale(double factor) {
  for (auto& b : buffers_) {
    for (double& v : b) v *= factor;
  }
}

bool Gradients::all_finite() const {
  for (const auto& b : buffers_) {
    for (double v : b) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

namespace {

// Registry lookups for one encoder layer.
struct LayerSlots {
  std::size_t q_w, q_b, k_w, v_w, v_b, o_w, o_b, ln1_g, ln1_b, fc1_w, fc1_b, fc2_w, fc2_b, ln2_g, ln2_b;
  std::ptrdiff_t k_b = -1;
};

struct Slots {
  std::size_t conv1_w, conv1_b, conv2_w, conv2_b, positions;
  std::vector<LayerSlots> layers;
  std::size_t final_g, final_b, proj_w, proj_b, cls_w, cls_b;

  Slots(const ParameterRegistry& r, const ModelConfig& cfg) {
    conv1_w = r.index_of("conv1.weight");
    conv1_b = r.index_of("conv1.bias");
    conv2_w = r.index_of("conv2.weight");
    conv2_b = r.index_of("conv2.bias");
    positions = r.index_of("embed_positions");
    for (int k = 0; k < cfg.n_layers; ++k) {
      const std::string pre = "layers." + std::to_string(k) + ".";
      LayerSlots s{};
      s.q_w = r.index_of(pre + "self_attn.q_proj.weight");
      s.q_b = r.index_of(pre + "self_attn.q_proj.bias");
      s.k_w = r.index_of(pre + "self_attn.k_proj.weight");
      if (cfg.attention_key_bias) s.k_b = static_cast<std::ptrdiff_t>(r.index_of(pre + "self_attn.k_proj.bias"));
      s.v_w = r.index_of(pre + "self_attn.v_proj.weight");
      s.v_b = r.index_of(pre + "self_attn.v_proj.bias");
      s.o_w = r.index_of(pre + "self_attn.out_proj.weight");
      s.o_b = r.index_of(pre + "self_attn.out_proj.bias");
      s.ln1_g = r.index_of(pre + "self_attn_layer_norm.weight");
      s.ln1_b = r.index_of(pre + "self_attn_layer_norm.bias");
      s.fc1_w = r.index_of(pre + "fc1.weight");
      s.fc1_b = r.index_of(pre + "fc1.bias");
      s.fc2_w = r.index_of(pre + "fc2.weight");
      s.fc2_b = r.index_of(pre + "fc2.bias");
      s.ln2_g = r.index_of(pre + "final_layer_norm.weight");
      s.ln2_b = r.index_of(pre + "final_layer_norm.bias");
      layers.push_back(s);
    }
    final_g = r.index_of("post_encoder_layernorm.weight");
    final_b = r.index_of("post_encoder_layernorm.bias");
    proj_w = r.index_of("projector.weight");
    proj_b = r.index_of("projector.bias");
    cls_w = r.index_of("classifier.weight");
    cls_b = r.index_of("classifier.bias");
  }
};

ConstMatrixMap mat(const ParameterRegistry& r, std::size_t i) { return r[i].matrix(); }

RowRef row(const ParameterRegistry& r, std::size_t i) {
  return Eigen::Map<const RowVector>(r[i].data(), static_cast<Eigen::Index>(r[i].numel()));
}

nn::ConvStemParams stem_params(const ParameterRegistry& r, const Slots& s) {
  return {mat(r, s.conv1_w), r[s.conv1_b].data(), mat(r, s.conv2_w), r[s.conv2_b].data()};
}

nn::EncoderLayerParams layer_params(const ParameterRegistry& r, const ModelConfig& cfg, const LayerSlots& s) {
  const double* k_bias = s.k_b >= 0 ? r[static_cast<std::size_t>(s.k_b)].data() : nullptr;
  return nn::EncoderLayerParams{
      nn::AttentionParams{mat(r, s.q_w), r[s.q_b].data(), mat(r, s.k_w), k_bias, mat(r, s.v_w), r[s.v_b].data(),
                          mat(r, s.o_w), r[s.o_b].data(), cfg.n_heads},
      row(r, s.ln1_g),
      row(r, s.ln1_b),
      nn::FfnParams{mat(r, s.fc1_w), r[s.fc1_b].data(), mat(r, s.fc2_w), r[s.fc2_b].data(), cfg.ffn_activation},
      row(r, s.ln2_g),
      row(r, s.ln2_b),
      cfg.norm_placement,
      cfg.layer_norm_eps,
  };
}

nn::EncoderLayerGrads layer_grads(Gradients& g, const LayerSlots& s) {
  nn::EncoderLayerGrads out;
  out.attn.q = {g.data(s.q_w), g.data(s.q_b)};
  out.attn.k = {g.data(s.k_w), s.k_b >= 0 ? g.data(static_cast<std::size_t>(s.k_b)) : nullptr};
  out.attn.v = {g.data(s.v_w), g.data(s.v_b)};
  out.attn.o = {g.data(s.o_w), g.data(s.o_b)};
  out.ln1 = {g.data(s.ln1_g), g.data(s.ln1_b)};
  out.ffn.fc1 = {g.data(s.fc1_w), g.data(s.fc1_b)};
  out.ffn.fc2 = {g.data(s.fc2_w), g.data(s.fc2_b)};
  out.ln2 = {g.data(s.ln2_g), g.data(s.ln2_b)};
  return out;
}

bool layer_trainable(const ParameterRegistry& r, const LayerSlots& s) {
  for (std::size_t i : {s.q_w, s.q_b, s.k_w, s.v_w, s.v_b, s.o_w, s.o_b, s.ln1_g, s.ln1_b, s.fc1_w, s.fc1_b, s.fc2_w,
                        s.fc2_b, s.ln2_g, s.ln2_b}) {
    if (r[i].trainable) return true;
  }
  return s.k_b >= 0 && r[static_cast<std::size_t>(s.k_b)].trainable;
}

struct Trace {
  nn::ConvStemCache stem;
  std::vector<nn::EncoderLayerCache> layers;
  nn::LayerNormCache final_norm;
  Eigen::Index n_pos = 0;
  Vector pooled;
  Vector projected;
};

Logits run_forward(const Matrix& features, const ParameterRegistry& r, const ModelConfig& cfg, const Slots& s,
                   Trace* trace) {
  if (features.rows() != cfg.n_mels) {
    throw Error(Errc::shape_mismatch, "expected " + std::to_string(cfg.n_mels) + " mel bins, got " +
                                          std::to_string(features.rows()));
  }
  if (!features.allFinite()) throw Error(Errc::non_finite_input, "spectrogram contains NaN or Inf");

  Matrix x = nn::conv_stem(features, stem_params(r, s), trace != nullptr ? &trace->stem : nullptr);
  const Eigen::Index n_pos = x.rows();
  if (n_pos > cfg.max_positions) {
    throw Error(Errc::shape_mismatch, std::to_string(n_pos) + " positions exceed max_positions " +
                                          std::to_string(cfg.max_positions));
  }
  x += mat(r, s.positions).topRows(n_pos);

  if (trace != nullptr) {
    trace->n_pos = n_pos;
    trace->layers.resize(s.layers.size());
  }
  for (std::size_t k = 0; k < s.layers.size(); ++k) {
    x = nn::encoder_layer_forward(x, layer_params(r, cfg, s.layers[k]), trace != nullptr ? &trace->layers[k] : nullptr);
  }

  const Matrix normed =
      nn::layer_norm(x, row(r, s.final_g), row(r, s.final_b), cfg.layer_norm_eps,
                     trace != nullptr ? &trace->final_norm : nullptr);
  const Vector pooled = normed.colwise().mean().transpose();
  const Vector projected = mat(r, s.proj_w) * pooled + ConstVectorMap(r[s.proj_b].data(), cfg.d_proj);
  const Vector scores = mat(r, s.cls_w) * projected + ConstVectorMap(r[s.cls_b].data(), cfg.n_classes);
  if (!scores.allFinite()) throw Error(Errc::non_finite_activation, "non-finite logits");

  if (trace != nullptr) {
    trace->pooled = pooled;
    trace->projected = projected;
  }
  Logits out;
  for (std::size_t i = 0; i < kNumClasses; ++i) out.values[i] = scores(static_cast<Eigen::Index>(i));
  return out;
}

void add_outer(double* dst, const Vector& lhs, const Vector& rhs) {
  if (dst == nullptr) return;
  MatrixMap(dst, lhs.size(), rhs.size()).noalias() += lhs * rhs.transpose();
}

void add_vec(double* dst, const Vector& v) {
  if (dst == nullptr) return;
  VectorMap(dst, v.size()) += v;
}

}  // namespace

Logits forward(const Matrix& features, const ParameterRegistry& registry, const ModelConfig& cfg) {
  const Slots slots(registry, cfg);
  return run_forward(features, registry, cfg, slots, nullptr);
}

Logits forward(const LogMelSpectrogram& spec, const ParameterRegistry& registry, const ModelConfig& cfg) {
  return forward(spec.values, registry, cfg);
}

double forward_backward(const Matrix& features, const LabelVector& target, const ParameterRegistry& r,
                        const ModelConfig& cfg, Gradients& grads, double weight) {
  const Slots s(r, cfg);
  Trace trace;
  const Logits logits = run_forward(features, r, cfg, s, &trace);
  const double loss = bce_with_logits(logits.values, target);

  const auto dz = bce_with_logits_grad(logits.values, target);
  Vector d_logits(cfg.n_classes);
  for (std::size_t i = 0; i < kNumClasses; ++i) d_logits(static_cast<Eigen::Index>(i)) = dz[i] * weight;

  add_outer(grads.data(s.cls_w), d_logits, trace.projected);
  add_vec(grads.data(s.cls_b), d_logits);
  const Vector d_projected = mat(r, s.cls_w).transpose() * d_logits;
  add_outer(grads.data(s.proj_w), d_projected, trace.pooled);
  add_vec(grads.data(s.proj_b), d_projected);
  const Vector d_pooled = mat(r, s.proj_w).transpose() * d_projected;

  // Backpropagation stops below the lowest trainable stage.
  const bool fe_trainable = r[s.conv1_w].trainable || r[s.conv1_b].trainable || r[s.conv2_w].trainable ||
                            r[s.conv2_b].trainable || r[s.positions].trainable;
  std::vector<bool> trainable_below(s.layers.size() + 1, fe_trainable);
  for (std::size_t k = 0; k < s.layers.size(); ++k) {
    trainable_below[k + 1] = trainable_below[k] || layer_trainable(r, s.layers[k]);
  }
  const bool below_final = trainable_below[s.layers.size()];
  const bool final_trainable = r[s.final_g].trainable || r[s.final_b].trainable;
  if (!below_final && !final_trainable) return loss;

  const Matrix d_normed = Matrix::Ones(trace.n_pos, 1) * (d_pooled.transpose() / static_cast<double>(trace.n_pos));
  Matrix dx = nn::layer_norm_backward(trace.final_norm, row(r, s.final_g), d_normed, grads.data(s.final_g),
                                      grads.data(s.final_b), below_final);
  if (!below_final) return loss;

  for (std::size_t k = s.layers.size(); k-- > 0;) {
    if (!trainable_below[k + 1]) return loss;
    const bool want_input = trainable_below[k];
    dx = nn::encoder_layer_backward(trace.layers[k], layer_params(r, cfg, s.layers[k]), dx,
                                    layer_grads(grads, s.layers[k]), want_input);
  }
  if (!fe_trainable) return loss;

  if (double* dp = grads.data(s.positions)) {
    MatrixMap(dp, cfg.max_positions, cfg.d_model).topRows(trace.n_pos) += dx;
  }
  nn::conv_stem_backward(trace.stem, stem_params(r, s), dx, {grads.data(s.conv1_w), grads.data(s.conv1_b)},
                         {grads.data(s.conv2_w), grads.data(s.conv2_b)});
  return loss;
}

}  // namespace stutterkit
