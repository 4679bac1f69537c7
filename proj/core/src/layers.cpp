#include "stutterkit/layers.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "stutterkit/error.hpp"

namespace stutterkit::nn {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

void add_bias(Matrix& y, const double* bias) {
  if (bias == nullptr) return;
  y.rowwise() += ConstVectorMap(bias, y.cols()).transpose();
}

void accumulate_bias_grad(const Matrix& dy, double* dbias) {
  if (dbias == nullptr) return;
  VectorMap(dbias, dy.cols()) += dy.colwise().sum().transpose();
}

void check_shape(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::shape_mismatch, what);
}

}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

Matrix activate(const Matrix& pre, Activation act) {
  if (act == Activation::relu) return pre.cwiseMax(0.0);
  return pre.unaryExpr([](double v) { return gelu(v); });
}

Matrix activate_backward(const Matrix& pre, const Matrix& upstream, Activation act) {
  if (act == Activation::relu) {
    return upstream.binaryExpr(pre, [](double g, double p) { return p > 0.0 ? g : 0.0; });
  }
  return upstream.binaryExpr(pre, [](double g, double p) { return g * gelu_grad(p); });
}

Matrix linear(const Matrix& x, MatRef weight, const double* bias) {
  check_shape(x.cols() == weight.cols(), "linear: input width " + std::to_string(x.cols()) +
                                             " != weight fan-in " + std::to_string(weight.cols()));
  Matrix y(x.rows(), weight.rows());
  y.noalias() = x * weight.transpose();
  add_bias(y, bias);
  return y;
}

Matrix linear_backward(const Matrix& x, MatRef weight, const Matrix& dy, ParamGrads grads, bool want_input) {
  if (grads.weight != nullptr) {
    MatrixMap(grads.weight, weight.rows(), weight.cols()).noalias() += dy.transpose() * x;
  }
  accumulate_bias_grad(dy, grads.bias);
  if (!want_input) return {};
  Matrix dx(dy.rows(), weight.cols());
  dx.noalias() = dy * weight;
  return dx;
}

Eigen::Index conv_output_length(Eigen::Index t, int stride) { return (t + 2 - 3) / stride + 1; }

Matrix im2col(const Matrix& x, int stride) {
  const Eigen::Index t_in = x.rows();
  const Eigen::Index c_in = x.cols();
  const Eigen::Index t_out = conv_output_length(t_in, stride);
  Matrix cols = Matrix::Zero(t_out, c_in * 3);
  for (Eigen::Index t = 0; t < t_out; ++t) {
    for (int k = 0; k < 3; ++k) {
      const Eigen::Index src = t * stride + k - 1;
      if (src < 0 || src >= t_in) continue;
      for (Eigen::Index c = 0; c < c_in; ++c) cols(t, c * 3 + k) = x(src, c);
    }
  }
  return cols;
}

Matrix conv1d(const Matrix& x, MatRef weight, const double* bias, int stride) {
  check_shape(weight.cols() == x.cols() * 3, "conv1d: weight expects " + std::to_string(weight.cols() / 3) +
                                                 " input channels, got " + std::to_string(x.cols()));
  return linear(im2col(x, stride), weight, bias);
}

Matrix conv1d_backward(const Matrix& x, MatRef weight, const Matrix& dy, int stride, ParamGrads grads,
                       bool want_input) {
  const Matrix cols = im2col(x, stride);
  const Matrix dcols = linear_backward(cols, weight, dy, grads, want_input);
  if (!want_input) return {};
  Matrix dx = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index t = 0; t < dcols.rows(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const Eigen::Index src = t * stride + k - 1;
      if (src < 0 || src >= x.rows()) continue;
      for (Eigen::Index c = 0; c < x.cols(); ++c) dx(src, c) += dcols(t, c * 3 + k);
    }
  }
  return dx;
}

Matrix conv_stem(const Matrix& spectrogram, const ConvStemParams& p, ConvStemCache* cache) {
  check_shape(spectrogram.cols() > 0 && spectrogram.cols() % 2 == 0,
              "conv_stem: frame count must be even and positive, got " + std::to_string(spectrogram.cols()));
  Matrix input = spectrogram.transpose();
  Matrix pre1 = conv1d(input, p.conv1_w, p.conv1_b, 1);
  Matrix out1 = activate(pre1, Activation::gelu);
  check_shape(p.conv2_w.cols() == out1.cols() * 3, "conv_stem: conv2 fan-in does not match conv1 width");
  Matrix pre2 = conv1d(out1, p.conv2_w, p.conv2_b, 2);
  Matrix out = activate(pre2, Activation::gelu);
  if (cache != nullptr) {
    cache->input = std::move(input);
    cache->conv1_pre = std::move(pre1);
    cache->conv1_out = std::move(out1);
    cache->conv2_pre = std::move(pre2);
  }
  return out;
}

void conv_stem_backward(const ConvStemCache& cache, const ConvStemParams& p, const Matrix& dy, ParamGrads conv1,
                        ParamGrads conv2) {
  const bool need_conv1 = conv1.weight != nullptr || conv1.bias != nullptr;
  const Matrix d_pre2 = activate_backward(cache.conv2_pre, dy, Activation::gelu);
  const Matrix d_out1 = conv1d_backward(cache.conv1_out, p.conv2_w, d_pre2, 2, conv2, need_conv1);
  if (!need_conv1) return;
  const Matrix d_pre1 = activate_backward(cache.conv1_pre, d_out1, Activation::gelu);
  conv1d_backward(cache.input, p.conv1_w, d_pre1, 1, conv1, false);
}

Matrix sinusoidal_positions(Eigen::Index n_pos, Eigen::Index d) {
  if (d % 2 != 0) throw Error(Errc::invalid_argument, "positional dimension must be even");
  Matrix table(n_pos, d);
  for (Eigen::Index i = 0; i < d / 2; ++i) {
    const double inv_freq = std::pow(10000.0, -static_cast<double>(2 * i) / static_cast<double>(d));
    for (Eigen::Index pos = 0; pos < n_pos; ++pos) {
      const double angle = static_cast<double>(pos) * inv_freq;
      table(pos, 2 * i) = std::sin(angle);
      table(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return table;
}

Matrix layer_norm(const Matrix& x, RowRef gamma, RowRef beta, double eps, LayerNormCache* cache) {
  check_shape(gamma.size() == x.cols() && beta.size() == x.cols(), "layer_norm: parameter width mismatch");
  const Vector mean = x.rowwise().mean();
  Matrix xhat = x.colwise() - mean;
  const Vector var = xhat.array().square().rowwise().mean();
  const Vector inv_std = (var.array() + eps).rsqrt();
  xhat.array().colwise() *= inv_std.array();
  Matrix y = (xhat.array().rowwise() * gamma.array()).rowwise() + beta.array();
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv_std;
  }
  return y;
}

Matrix layer_norm_backward(const LayerNormCache& cache, RowRef gamma, const Matrix& dy, double* dgamma,
                           double* dbeta, bool want_input) {
  const Eigen::Index n = dy.cols();
  if (dgamma != nullptr) {
    VectorMap(dgamma, n) += (dy.array() * cache.xhat.array()).colwise().sum().matrix().transpose();
  }
  if (dbeta != nullptr) VectorMap(dbeta, n) += dy.colwise().sum().transpose();
  if (!want_input) return {};
  const Matrix dxhat = dy.array().rowwise() * gamma.array();
  const Vector sum_dxhat = dxhat.rowwise().sum();
  const Vector sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).rowwise().sum();
  Matrix dx = (dxhat * static_cast<double>(n)).colwise() - sum_dxhat;
  dx -= (cache.xhat.array().colwise() * sum_dxhat_xhat.array()).matrix();
  dx.array().colwise() *= cache.inv_std.array() / static_cast<double>(n);
  return dx;
}

Matrix softmax_rows(const Matrix& scores) {
  Matrix p = scores.colwise() - scores.rowwise().maxCoeff();
  p = p.array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

Matrix multi_head_attention(const Matrix& q, const Matrix& k, const Matrix& v, int n_heads,
                            std::vector<Matrix>* probs) {
  check_shape(q.cols() == k.cols() && q.cols() == v.cols() && k.rows() == v.rows(),
              "attention: Q/K/V shapes disagree");
  check_shape(n_heads > 0 && q.cols() % n_heads == 0, "attention: width not divisible by head count");
  if (!q.allFinite() || !k.allFinite() || !v.allFinite()) {
    throw Error(Errc::non_finite_input, "attention received NaN or Inf");
  }
  const Eigen::Index dk = q.cols() / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Matrix out(q.rows(), q.cols());
  if (probs != nullptr) probs->assign(static_cast<std::size_t>(n_heads), Matrix{});
  for (int h = 0; h < n_heads; ++h) {
    const Eigen::Index off = h * dk;
    Matrix scores(q.rows(), k.rows());
    scores.noalias() = q.middleCols(off, dk) * k.middleCols(off, dk).transpose();
    scores *= scale;
    Matrix p = softmax_rows(scores);
    out.middleCols(off, dk).noalias() = p * v.middleCols(off, dk);
    if (probs != nullptr) (*probs)[static_cast<std::size_t>(h)] = std::move(p);
  }
  return out;
}

Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionParams& p) {
  return linear(multi_head_attention(q, k, v, p.n_heads), p.o_w, p.o_b);
}

Matrix self_attention(const Matrix& x, const AttentionParams& p, AttentionCache* cache) {
  Matrix q = linear(x, p.q_w, p.q_b);
  Matrix k = linear(x, p.k_w, p.k_b);
  Matrix v = linear(x, p.v_w, p.v_b);
  std::vector<Matrix> probs;
  Matrix heads = multi_head_attention(q, k, v, p.n_heads, cache != nullptr ? &probs : nullptr);
  Matrix out = linear(heads, p.o_w, p.o_b);
  if (cache != nullptr) {
    cache->input = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->heads = std::move(heads);
  }
  return out;
}

Matrix self_attention_backward(const AttentionCache& cache, const AttentionParams& p, const Matrix& dy,
                               AttentionGrads grads, bool want_input) {
  const Matrix d_heads = linear_backward(cache.heads, p.o_w, dy, grads.o, true);
  const Eigen::Index width = cache.q.cols();
  const Eigen::Index dk = width / p.n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  Matrix dq(cache.q.rows(), width);
  Matrix dk_all(cache.k.rows(), width);
  Matrix dv(cache.v.rows(), width);
  for (int h = 0; h < p.n_heads; ++h) {
    const Eigen::Index off = h * dk;
    const Matrix& prob = cache.probs[static_cast<std::size_t>(h)];
    const auto d_out = d_heads.middleCols(off, dk);
    Matrix d_prob(prob.rows(), prob.cols());
    d_prob.noalias() = d_out * cache.v.middleCols(off, dk).transpose();
    dv.middleCols(off, dk).noalias() = prob.transpose() * d_out;
    const Vector row_dot = (d_prob.array() * prob.array()).rowwise().sum();
    Matrix d_scores = prob.array() * (d_prob.colwise() - row_dot).array();
    d_scores *= scale;
    dq.middleCols(off, dk).noalias() = d_scores * cache.k.middleCols(off, dk);
    dk_all.middleCols(off, dk).noalias() = d_scores.transpose() * cache.q.middleCols(off, dk);
  }

  Matrix dx_q = linear_backward(cache.input, p.q_w, dq, grads.q, want_input);
  Matrix dx_k = linear_backward(cache.input, p.k_w, dk_all, grads.k, want_input);
  Matrix dx_v = linear_backward(cache.input, p.v_w, dv, grads.v, want_input);
  if (!want_input) return {};
  return dx_q + dx_k + dx_v;
}

Matrix ffn(const Matrix& x, const FfnParams& p, FfnCache* cache) {
  Matrix pre = linear(x, p.w1, p.b1);
  Matrix hidden = activate(pre, p.act);
  Matrix out = linear(hidden, p.w2, p.b2);
  if (cache != nullptr) {
    cache->input = x;
    cache->hidden_pre = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return out;
}

Matrix ffn_backward(const FfnCache& cache, const FfnParams& p, const Matrix& dy, FfnGrads grads, bool want_input) {
  const Matrix d_hidden = linear_backward(cache.hidden, p.w2, dy, grads.fc2, true);
  const Matrix d_pre = activate_backward(cache.hidden_pre, d_hidden, p.act);
  return linear_backward(cache.input, p.w1, d_pre, grads.fc1, want_input);
}

namespace {

void require_finite(const Matrix& m, const char* where) {
  if (!m.allFinite()) throw Error(Errc::non_finite_activation, std::string("non-finite values after ") + where);
}

}  // namespace

Matrix encoder_layer_forward(const Matrix& x, const EncoderLayerParams& p, EncoderLayerCache* cache) {
  AttentionCache* attn_cache = cache != nullptr ? &cache->attn : nullptr;
  FfnCache* ffn_cache = cache != nullptr ? &cache->ffn : nullptr;
  LayerNormCache* ln1_cache = cache != nullptr ? &cache->ln1 : nullptr;
  LayerNormCache* ln2_cache = cache != nullptr ? &cache->ln2 : nullptr;

  Matrix z;
  if (p.placement == NormPlacement::post) {
    const Matrix y = layer_norm(x + self_attention(x, p.attn, attn_cache), p.ln1_gamma, p.ln1_beta, p.eps, ln1_cache);
    require_finite(y, "attention block");
    z = layer_norm(y + ffn(y, p.ffn, ffn_cache), p.ln2_gamma, p.ln2_beta, p.eps, ln2_cache);
  } else {
    const Matrix y = x + self_attention(layer_norm(x, p.ln1_gamma, p.ln1_beta, p.eps, ln1_cache), p.attn, attn_cache);
    require_finite(y, "attention block");
    z = y + ffn(layer_norm(y, p.ln2_gamma, p.ln2_beta, p.eps, ln2_cache), p.ffn, ffn_cache);
  }
  require_finite(z, "feed-forward block");
  return z;
}

Matrix encoder_layer_backward(const EncoderLayerCache& cache, const EncoderLayerParams& p, const Matrix& dz,
                              EncoderLayerGrads grads, bool want_input) {
  if (p.placement == NormPlacement::post) {
    const Matrix ds2 = layer_norm_backward(cache.ln2, p.ln2_gamma, dz, grads.ln2.weight, grads.ln2.bias, true);
    const Matrix dy = ds2 + ffn_backward(cache.ffn, p.ffn, ds2, grads.ffn, true);
    const Matrix ds1 = layer_norm_backward(cache.ln1, p.ln1_gamma, dy, grads.ln1.weight, grads.ln1.bias, true);
    Matrix d_attn_in = self_attention_backward(cache.attn, p.attn, ds1, grads.attn, want_input);
    if (!want_input) return {};
    return ds1 + d_attn_in;
  }
  const Matrix d_ln2_out = ffn_backward(cache.ffn, p.ffn, dz, grads.ffn, true);
  const Matrix dy = dz + layer_norm_backward(cache.ln2, p.ln2_gamma, d_ln2_out, grads.ln2.weight, grads.ln2.bias, true);
  const bool need_ln1_out = want_input || grads.ln1.weight != nullptr || grads.ln1.bias != nullptr;
  const Matrix d_ln1_out = self_attention_backward(cache.attn, p.attn, dy, grads.attn, need_ln1_out);
  if (!need_ln1_out) return {};
  Matrix d_ln1_in = layer_norm_backward(cache.ln1, p.ln1_gamma, d_ln1_out, grads.ln1.weight, grads.ln1.bias, want_input);
  if (!want_input) return {};
  return dy + d_ln1_in;
}

}  // namespace stutterkit::nn
