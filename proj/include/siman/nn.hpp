#ifndef SIMAN_NN_HPP
#define SIMAN_NN_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "siman/binarize.hpp"
#include "siman/tensor.hpp"

namespace siman {

// How a conv layer turns its real weights into the +/-1 weights used in the
// forward pass. none = keep real weights (float layer).
enum class BinMode { none, siman, siman1, sign_baseline };

// Elementwise sign with sign(0) := +1; output entries are exactly +/-1.
Tensor sign_activation(const Tensor& x);

// Piecewise-polynomial surrogate gradient for the sign activation:
// 2+2x on [-1,0), 2-2x on [0,1), 0 elsewhere.
Tensor activation_grad_mask(const Tensor& x);

// Straight-through estimator: the weight gradient is the gradient w.r.t. the
// +/-1 proxy, passed through unchanged.
Tensor ste_weight_grad(const Tensor& upstream);

struct BinarizedFilter {
  std::vector<double> signs;  // +/-1 per weight
  double beta = 0.0;          // mean |w| of the filter
};

// Per-filter weight binarization. siman: half-half code mapped {0,1}->{-1,+1};
// siman1: angle-optimal code mapped the same way; sign_baseline: sign(w).
BinarizedFilter binarize_layer_forward(std::span<const double> w, BinMode mode);

// One trainable tensor plus its gradient buffer and decay group.
struct ParamRef {
  Tensor* value;
  Tensor* grad;
  bool binarized;  // true iff the tensor belongs to a binarized conv layer
};

// 2D convolution, no bias. Weight is stored [out_c, in_c*kh*kw] so each row
// is one filter vector. Binarized modes pad the input with pad_value = -1
// (bit 0 under the packed representation); float mode pads with 0.
struct Conv2d {
  std::size_t in_c = 0, out_c = 0, kh = 3, kw = 3, stride = 1, pad = 1;
  BinMode mode = BinMode::none;
  Tensor weight;
  Tensor grad_weight;

  Conv2d() = default;
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t stride_, BinMode mode_);

  std::size_t patch_size() const { return in_c * kh * kw; }
  double pad_value() const { return mode == BinMode::none ? 0.0 : -1.0; }
  bool binarized() const { return mode != BinMode::none; }

  // The +/-1 weights and betas used by the last forward pass (binarized
  // modes only); recomputed from the real weights every call.
  const Tensor& effective_weight() const { return eff_weight_; }
  const std::vector<double>& betas() const { return betas_; }

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);  // fills grad_weight, returns grad_x

 private:
  Tensor eff_weight_;           // what the conv actually multiplies with
  std::vector<double> betas_;   // per-filter scale (binarized modes)
  Tensor cols_;                 // cached im2col, [N, K, OH*OW]
  std::vector<std::size_t> in_shape_;
};

struct BatchNorm2d {
  std::size_t channels = 0;
  double eps = 1e-5;
  double momentum = 0.1;
  Tensor gamma, beta, running_mean, running_var;
  Tensor grad_gamma, grad_beta;

  BatchNorm2d() = default;
  explicit BatchNorm2d(std::size_t c);

  Tensor forward(const Tensor& x, bool train);
  Tensor backward(const Tensor& grad_out);

 private:
  Tensor xhat_;
  std::vector<double> invstd_;
  std::vector<std::size_t> in_shape_;
};

struct SignAct {
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out) const;

 private:
  Tensor input_;
};

struct GlobalAvgPool {
  Tensor forward(const Tensor& x);  // [N,C,H,W] -> [N,C]
  Tensor backward(const Tensor& grad_out) const;

 private:
  std::vector<std::size_t> in_shape_;
};

struct Linear {
  std::size_t in = 0, out = 0;
  Tensor weight, bias;  // [out, in], [out]
  Tensor grad_weight, grad_bias;

  Linear() = default;
  Linear(std::size_t in_, std::size_t out_);

  Tensor forward(const Tensor& x);  // [N, in] -> [N, out]
  Tensor backward(const Tensor& grad_out);

 private:
  Tensor input_;
};

struct LossResult {
  double loss = 0.0;
  std::size_t correct = 0;
  Tensor grad_logits;
};

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

struct ModelSpec {
  std::size_t in_c = 3, in_h = 32, in_w = 32;
  std::size_t classes = 10;
  std::array<std::size_t, 4> widths = {16, 32, 64, 64};
  BinMode bin_mode = BinMode::siman;
};

// Small conv classifier: float 3x3 conv + BN + sign, then three binarized
// 3x3 conv blocks (stride 2 where the width changes, identity skip where
// shapes match), global average pool and a float linear head. The first and
// last layers stay full-precision.
class ConvNetS {
 public:
  explicit ConvNetS(const ModelSpec& spec);

  void init_params(std::uint64_t seed);

  Tensor forward(const Tensor& x, bool train);
  void backward(const Tensor& grad_logits);

  std::vector<ParamRef> params();
  std::vector<Conv2d*> binarized_convs();
  std::vector<const Conv2d*> binarized_convs() const;

  const ModelSpec& spec() const { return spec_; }
  bool all_finite() const;

  Conv2d conv1, conv2, conv3, conv4;
  BatchNorm2d bn1, bn2, bn3, bn4;
  Linear fc;

 private:
  ModelSpec spec_;
  SignAct s1_, s2_, s3_;
  GlobalAvgPool gap_;
};

}  // namespace siman

#endif
