#pragma once

// Encoder building blocks with hand-written backward passes.
//
// Sequences are [T x features] row-major matrices. Weight matrices follow the
// [out x in] convention, so a linear map is y = x W^T + b. Backward functions
// accumulate (+=) parameter gradients into caller-owned buffers; a null
// buffer means "frozen, skip".

#include <vector>

#include "stutterkit/tensor.hpp"

namespace stutterkit::nn {

enum class Activation { gelu, relu };
enum class NormPlacement { pre, post };

double gelu(double x);
double gelu_grad(double x);

Matrix activate(const Matrix& pre, Activation act);
/// upstream * act'(pre)
Matrix activate_backward(const Matrix& pre, const Matrix& upstream, Activation act);

struct ParamGrads {
  double* weight = nullptr;
  double* bias = nullptr;
};

Matrix linear(const Matrix& x, MatRef weight, const double* bias);
/// Returns dx when want_input, otherwise an empty matrix.
Matrix linear_backward(const Matrix& x, MatRef weight, const Matrix& dy, ParamGrads grads, bool want_input);

/// Kernel-3, padding-1 convolution over time. x is [T x C_in]; weight is
/// [C_out x C_in*3] (the [C_out][C_in][3] tensor flattened).
Eigen::Index conv_output_length(Eigen::Index t, int stride);
Matrix im2col(const Matrix& x, int stride);
Matrix conv1d(const Matrix& x, MatRef weight, const double* bias, int stride);
Matrix conv1d_backward(const Matrix& x, MatRef weight, const Matrix& dy, int stride, ParamGrads grads,
                       bool want_input);

struct ConvStemParams {
  MatRef conv1_w;
  const double* conv1_b;
  MatRef conv2_w;
  const double* conv2_b;
};

struct ConvStemCache {
  Matrix input;      // [T x n_mels]
  Matrix conv1_pre;  // [T x d]
  Matrix conv1_out;
  Matrix conv2_pre;  // [T/2 x d]
};

/// spectrogram is [n_mels x T] with T even; output is [T/2 x d_model]:
/// GELU(conv2_stride2(GELU(conv1(x)))).
Matrix conv_stem(const Matrix& spectrogram, const ConvStemParams& p, ConvStemCache* cache = nullptr);
void conv_stem_backward(const ConvStemCache& cache, const ConvStemParams& p, const Matrix& dy, ParamGrads conv1,
                        ParamGrads conv2);

/// Column 2i holds sin(pos / 10000^(2i/d)), column 2i+1 the matching cosine.
Matrix sinusoidal_positions(Eigen::Index n_pos, Eigen::Index d);

struct LayerNormCache {
  Matrix xhat;
  Vector inv_std;
};

Matrix layer_norm(const Matrix& x, RowRef gamma, RowRef beta, double eps, LayerNormCache* cache = nullptr);
Matrix layer_norm_backward(const LayerNormCache& cache, RowRef gamma, const Matrix& dy, double* dgamma,
                           double* dbeta, bool want_input);

/// Row-wise softmax, max-subtracted.
Matrix softmax_rows(const Matrix& scores);

/// Scaled dot-product attention per head on already-projected Q, K, V
/// ([T x n_heads*d_k]); returns the concatenated head outputs. When probs is
/// given it receives one [T x T] matrix per head.
Matrix multi_head_attention(const Matrix& q, const Matrix& k, const Matrix& v, int n_heads,
                            std::vector<Matrix>* probs = nullptr);

struct AttentionParams {
  MatRef q_w;
  const double* q_b;
  MatRef k_w;
  const double* k_b;  // null: no key bias
  MatRef v_w;
  const double* v_b;
  MatRef o_w;
  const double* o_b;
  int n_heads;
};

struct AttentionCache {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> probs;
  Matrix heads;
};

struct AttentionGrads {
  ParamGrads q, k, v, o;
};

/// Output projection of multi_head_attention over precomputed Q, K, V.
Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionParams& p);
Matrix self_attention(const Matrix& x, const AttentionParams& p, AttentionCache* cache = nullptr);
Matrix self_attention_backward(const AttentionCache& cache, const AttentionParams& p, const Matrix& dy,
                               AttentionGrads grads, bool want_input);

struct FfnParams {
  MatRef w1;
  const double* b1;
  MatRef w2;
  const double* b2;
  Activation act;
};

struct FfnCache {
  Matrix input;
  Matrix hidden_pre;
  Matrix hidden;
};

struct FfnGrads {
  ParamGrads fc1, fc2;
};

Matrix ffn(const Matrix& x, const FfnParams& p, FfnCache* cache = nullptr);
Matrix ffn_backward(const FfnCache& cache, const FfnParams& p, const Matrix& dy, FfnGrads grads, bool want_input);

struct EncoderLayerParams {
  AttentionParams attn;
  RowRef ln1_gamma;
  RowRef ln1_beta;
  FfnParams ffn;
  RowRef ln2_gamma;
  RowRef ln2_beta;
  NormPlacement placement;
  double eps;
};

struct EncoderLayerCache {
  LayerNormCache ln1, ln2;
  AttentionCache attn;
  FfnCache ffn;
};

struct EncoderLayerGrads {
  AttentionGrads attn;
  ParamGrads ln1;  // weight = gamma, bias = beta
  FfnGrads ffn;
  ParamGrads ln2;
};

/// post: y = LN1(x + Attn(x)); z = LN2(y + FFN(y))
/// pre:  y = x + Attn(LN1(x)); z = y + FFN(LN2(y))
/// Throws NonFiniteActivation if the output is not finite.
Matrix encoder_layer_forward(const Matrix& x, const EncoderLayerParams& p, EncoderLayerCache* cache = nullptr);
Matrix encoder_layer_backward(const EncoderLayerCache& cache, const EncoderLayerParams& p, const Matrix& dz,
                              EncoderLayerGrads grads, bool want_input);

}  // namespace stutterkit::nn
