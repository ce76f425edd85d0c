#include "siman/nn.hpp"

#include <algorithm>
#include <cmath>

#include "siman/rng.hpp"

namespace siman {

Tensor sign_activation(const Tensor& x) {
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] >= 0.0 ? 1.0 : -1.0;
  return y;
}

Tensor activation_grad_mask(const Tensor& x) {
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double v = x.data[i];
    if (v >= -1.0 && v < 0.0) {
      y.data[i] = 2.0 + 2.0 * v;
    } else if (v >= 0.0 && v < 1.0) {
      y.data[i] = 2.0 - 2.0 * v;
    } else {
      y.data[i] = 0.0;
    }
  }
  return y;
}

Tensor ste_weight_grad(const Tensor& upstream) { return upstream; }

BinarizedFilter binarize_layer_forward(std::span<const double> w, BinMode mode) {
  if (w.empty()) throw error(errc::invalid_args, "binarize_layer_forward: empty filter");
  WeightVector wv(w.begin(), w.end());
  BinarizedFilter out;
  out.signs.resize(w.size());

  switch (mode) {
    case BinMode::siman:
    case BinMode::siman1: {
      BinaryCode code =
          mode == BinMode::siman ? half_half_binarize(wv) : optimal_binarize(wv);
      for (std::size_t i = 0; i < w.size(); ++i) out.signs[i] = 2.0 * code.bits[i] - 1.0;
      break;
    }
    case BinMode::sign_baseline: {
      SignCode code = sign_binarize_scaled(wv);
      for (std::size_t i = 0; i < w.size(); ++i) out.signs[i] = code.bits[i];
      break;
    }
    case BinMode::none:
      throw error(errc::invalid_args, "binarize_layer_forward: layer is not binarized");
  }

  double sum_abs = 0.0;
  for (double x : w) sum_abs += std::fabs(x);
  out.beta = sum_abs / static_cast<double>(w.size());
  return out;
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t stride_,
               BinMode mode_)
    : in_c(in_channels), out_c(out_channels), stride(stride_), mode(mode_) {
  weight = Tensor({out_c, patch_size()});
  grad_weight = Tensor({out_c, patch_size()});
}

namespace {

struct ConvDims {
  std::size_t n, h, w, oh, ow, patch;
};

ConvDims conv_dims(const Conv2d& c, const std::vector<std::size_t>& shape) {
  if (shape.size() != 4 || shape[1] != c.in_c)
    throw error(errc::shape_mismatch, "conv2d: expected [N, in_c, H, W] input");
  ConvDims d;
  d.n = shape[0];
  d.h = shape[2];
  d.w = shape[3];
  if (d.h + 2 * c.pad < c.kh || d.w + 2 * c.pad < c.kw)
    throw error(errc::bad_geometry, "conv2d: kernel larger than padded input");
  d.oh = (d.h + 2 * c.pad - c.kh) / c.stride + 1;
  d.ow = (d.w + 2 * c.pad - c.kw) / c.stride + 1;
  d.patch = c.patch_size();
  return d;
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x) {
  ConvDims d = conv_dims(*this, x.shape);
  in_shape_ = x.shape;
  const std::size_t plane = d.oh * d.ow;

  // Effective weights: real weights for float layers, the +/-1 codes
  // otherwise. Beta stays out of the multiply-accumulate so the +/-1 path
  // stays an exact integer sum; it is applied once per output below.
  if (binarized()) {
    eff_weight_ = Tensor({out_c, d.patch});
    betas_.resize(out_c);
    for (std::size_t f = 0; f < out_c; ++f) {
      BinarizedFilter bf = binarize_layer_forward(
          std::span(weight.data.data() + f * d.patch, d.patch), mode);
      betas_[f] = bf.beta;
      for (std::size_t k = 0; k < d.patch; ++k) {
        eff_weight_.data[f * d.patch + k] = bf.signs[k];
      }
    }
  } else {
    eff_weight_ = weight;
  }

  cols_ = Tensor({d.n, d.patch, plane});
  const double padv = pad_value();
  const auto ipad = static_cast<std::ptrdiff_t>(pad);
  for (std::size_t n = 0; n < d.n; ++n) {
    const double* xs = x.data.data() + n * in_c * d.h * d.w;
    double* cols = cols_.data.data() + n * d.patch * plane;
    std::size_t k = 0;
    for (std::size_t c = 0; c < in_c; ++c) {
      for (std::size_t ky = 0; ky < kh; ++ky) {
        for (std::size_t kx = 0; kx < kw; ++kx, ++k) {
          double* row = cols + k * plane;
          for (std::size_t oy = 0; oy < d.oh; ++oy) {
            std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - ipad;
            for (std::size_t ox = 0; ox < d.ow; ++ox) {
              std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - ipad;
              bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(d.h) &&
                            ix < static_cast<std::ptrdiff_t>(d.w);
              row[oy * d.ow + ox] =
                  inside ? xs[(c * d.h + static_cast<std::size_t>(iy)) * d.w +
                              static_cast<std::size_t>(ix)]
                         : padv;
            }
          }
        }
      }
    }
  }

  Tensor out({d.n, out_c, d.oh, d.ow});
  for (std::size_t n = 0; n < d.n; ++n) {
    const double* cols = cols_.data.data() + n * d.patch * plane;
    double* os = out.data.data() + n * out_c * plane;
    for (std::size_t f = 0; f < out_c; ++f) {
      double* orow = os + f * plane;
      const double* wrow = eff_weight_.data.data() + f * d.patch;
      for (std::size_t k = 0; k < d.patch; ++k) {
        double wk = wrow[k];
        if (wk == 0.0) continue;
        const double* crow = cols + k * plane;
        for (std::size_t p = 0; p < plane; ++p) orow[p] += wk * crow[p];
      }
      if (binarized()) {
        double b = betas_[f];
        for (std::size_t p = 0; p < plane; ++p) orow[p] *= b;
      }
    }
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  ConvDims d = conv_dims(*this, in_shape_);
  const std::size_t plane = d.oh * d.ow;
  if (grad_out.shape != std::vector<std::size_t>{d.n, out_c, d.oh, d.ow})
    throw error(errc::shape_mismatch, "conv2d backward: grad shape mismatch");

  // Binarized forward ends with a per-filter beta scale, so fold beta into
  // the upstream gradient once; the STE then passes dL/d(+/-1 code) through
  // to the real weights unchanged.
  const Tensor* gsrc = &grad_out;
  Tensor scaled;
  if (binarized()) {
    scaled = grad_out;
    for (std::size_t n = 0; n < d.n; ++n) {
      for (std::size_t f = 0; f < out_c; ++f) {
        double b = betas_[f];
        double* g = scaled.data.data() + (n * out_c + f) * plane;
        for (std::size_t p = 0; p < plane; ++p) g[p] *= b;
      }
    }
    gsrc = &scaled;
  }

  // dL/d(effective weight), then mapped back onto the real weights.
  Tensor grad_eff({out_c, d.patch});
  Tensor grad_x(in_shape_);
  std::vector<double> gcols(d.patch * plane);
  const auto ipad = static_cast<std::ptrdiff_t>(pad);

  for (std::size_t n = 0; n < d.n; ++n) {
    const double* cols = cols_.data.data() + n * d.patch * plane;
    const double* gs = gsrc->data.data() + n * out_c * plane;

    for (std::size_t f = 0; f < out_c; ++f) {
      const double* grow = gs + f * plane;
      double* gw = grad_eff.data.data() + f * d.patch;
      for (std::size_t k = 0; k < d.patch; ++k) {
        const double* crow = cols + k * plane;
        double acc = 0.0;
        for (std::size_t p = 0; p < plane; ++p) acc += grow[p] * crow[p];
        gw[k] += acc;
      }
    }

    std::fill(gcols.begin(), gcols.end(), 0.0);
    for (std::size_t f = 0; f < out_c; ++f) {
      const double* grow = gs + f * plane;
      const double* wrow = eff_weight_.data.data() + f * d.patch;
      for (std::size_t k = 0; k < d.patch; ++k) {
        double wk = wrow[k];
        if (wk == 0.0) continue;
        double* crow = gcols.data() + k * plane;
        for (std::size_t p = 0; p < plane; ++p) crow[p] += wk * grow[p];
      }
    }

    double* gx = grad_x.data.data() + n * in_c * d.h * d.w;
    std::size_t k = 0;
    for (std::size_t c = 0; c < in_c; ++c) {
      for (std::size_t ky = 0; ky < kh; ++ky) {
        for (std::size_t kx = 0; kx < kw; ++kx, ++k) {
          const double* crow = gcols.data() + k * plane;
          for (std::size_t oy = 0; oy < d.oh; ++oy) {
            std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - ipad;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
            for (std::size_t ox = 0; ox < d.ow; ++ox) {
              std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - ipad;
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
              gx[(c * d.h + static_cast<std::size_t>(iy)) * d.w +
                 static_cast<std::size_t>(ix)] += crow[oy * d.ow + ox];
            }
          }
        }
      }
    }
  }

  for (std::size_t i = 0; i < grad_weight.size(); ++i) {
    grad_weight.data[i] += grad_eff.data[i];
  }
  return grad_x;
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(std::size_t c) : channels(c) {
  gamma = Tensor({c});
  beta = Tensor({c});
  running_mean = Tensor({c});
  running_var = Tensor({c});
  grad_gamma = Tensor({c});
  grad_beta = Tensor({c});
  gamma.fill(1.0);
  running_var.fill(1.0);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
  if (x.shape.size() != 4 || x.shape[1] != channels)
    throw error(errc::shape_mismatch, "batchnorm: expected [N, C, H, W] input");
  in_shape_ = x.shape;
  const std::size_t n = x.shape[0], hw = x.shape[2] * x.shape[3];
  const std::size_t m = n * hw;

  Tensor out(x.shape);
  xhat_ = Tensor(x.shape);
  invstd_.assign(channels, 0.0);

  for (std::size_t c = 0; c < channels; ++c) {
    double mean, var;
    if (train) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* p = x.data.data() + (i * channels + c) * hw;
        for (std::size_t j = 0; j < hw; ++j) s += p[j];
      }
      mean = s / static_cast<double>(m);
      double sv = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* p = x.data.data() + (i * channels + c) * hw;
        for (std::size_t j = 0; j < hw; ++j) {
          double dlt = p[j] - mean;
          sv += dlt * dlt;
        }
      }
      var = sv / static_cast<double>(m);
      running_mean.data[c] = (1.0 - momentum) * running_mean.data[c] + momentum * mean;
      running_var.data[c] = (1.0 - momentum) * running_var.data[c] + momentum * var;
    } else {
      mean = running_mean.data[c];
      var = running_var.data[c];
    }
    double inv = 1.0 / std::sqrt(var + eps);
    invstd_[c] = inv;
    double g = gamma.data[c], b = beta.data[c];
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = x.data.data() + (i * channels + c) * hw;
      double* xh = xhat_.data.data() + (i * channels + c) * hw;
      double* o = out.data.data() + (i * channels + c) * hw;
      for (std::size_t j = 0; j < hw; ++j) {
        xh[j] = (p[j] - mean) * inv;
        o[j] = g * xh[j] + b;
      }
    }
  }
  return out;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  const std::size_t n = in_shape_[0], hw = in_shape_[2] * in_shape_[3];
  const double m = static_cast<double>(n * hw);
  Tensor grad_x(in_shape_);

  for (std::size_t c = 0; c < channels; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* g = grad_out.data.data() + (i * channels + c) * hw;
      const double* xh = xhat_.data.data() + (i * channels + c) * hw;
      for (std::size_t j = 0; j < hw; ++j) {
        sum_g += g[j];
        sum_gx += g[j] * xh[j];
      }
    }
    grad_gamma.data[c] += sum_gx;
    grad_beta.data[c] += sum_g;

    double scale = gamma.data[c] * invstd_[c] / m;
    for (std::size_t i = 0; i < n; ++i) {
      const double* g = grad_out.data.data() + (i * channels + c) * hw;
      const double* xh = xhat_.data.data() + (i * channels + c) * hw;
      double* gx = grad_x.data.data() + (i * channels + c) * hw;
      for (std::size_t j = 0; j < hw; ++j) {
        gx[j] = scale * (m * g[j] - sum_g - xh[j] * sum_gx);
      }
    }
  }
  return grad_x;
}

// ---------------------------------------------------------------------------

Tensor SignAct::forward(const Tensor& x) {
  input_ = x;
  return sign_activation(x);
}

Tensor SignAct::backward(const Tensor& grad_out) const {
  Tensor mask = activation_grad_mask(input_);
  Tensor grad(input_.shape);
  for (std::size_t i = 0; i < grad.size(); ++i) grad.data[i] = grad_out.data[i] * mask.data[i];
  return grad;
}

Tensor GlobalAvgPool::forward(const Tensor& x) {
  if (x.shape.size() != 4) throw error(errc::shape_mismatch, "gap: expected [N, C, H, W]");
  in_shape_ = x.shape;
  const std::size_t n = x.shape[0], c = x.shape[1], hw = x.shape[2] * x.shape[3];
  Tensor out({n, c});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* p = x.data.data() + (i * c + ch) * hw;
      double s = 0.0;
      for (std::size_t j = 0; j < hw; ++j) s += p[j];
      out.data[i * c + ch] = s / static_cast<double>(hw);
    }
  }
  return out;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) const {
  const std::size_t n = in_shape_[0], c = in_shape_[1], hw = in_shape_[2] * in_shape_[3];
  Tensor grad(in_shape_);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double g = grad_out.data[i * c + ch] / static_cast<double>(hw);
      double* p = grad.data.data() + (i * c + ch) * hw;
      for (std::size_t j = 0; j < hw; ++j) p[j] = g;
    }
  }
  return grad;
}

Linear::Linear(std::size_t in_, std::size_t out_) : in(in_), out(out_) {
  weight = Tensor({out, in});
  bias = Tensor({out});
  grad_weight = Tensor({out, in});
  grad_bias = Tensor({out});
}

Tensor Linear::forward(const Tensor& x) {
  if (x.shape.size() != 2 || x.shape[1] != in)
    throw error(errc::shape_mismatch, "linear: expected [N, in] input");
  input_ = x;
  const std::size_t n = x.shape[0];
  Tensor y({n, out});
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.data.data() + i * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* w = weight.data.data() + o * in;
      double s = bias.data[o];
      for (std::size_t k = 0; k < in; ++k) s += w[k] * xi[k];
      y.data[i * out + o] = s;
    }
  }
  return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const std::size_t n = input_.shape[0];
  Tensor grad_x({n, in});
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = input_.data.data() + i * in;
    const double* g = grad_out.data.data() + i * out;
    double* gx = grad_x.data.data() + i * in;
    for (std::size_t o = 0; o < out; ++o) {
      grad_bias.data[o] += g[o];
      double* gw = grad_weight.data.data() + o * in;
      const double* w = weight.data.data() + o * in;
      for (std::size_t k = 0; k < in; ++k) {
        gw[k] += g[o] * xi[k];
        gx[k] += g[o] * w[k];
      }
    }
  }
  return grad_x;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.shape.size() != 2 || logits.shape[0] != labels.size())
    throw error(errc::shape_mismatch, "softmax_ce: logits/labels mismatch");
  const std::size_t n = logits.shape[0], k = logits.shape[1];
  LossResult r;
  r.grad_logits = Tensor(logits.shape);

  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits.data.data() + i * k;
    double mx = z[0];
    std::size_t arg = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (z[j] > mx) {
        mx = z[j];
        arg = j;
      }
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) denom += std::exp(z[j] - mx);
    int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= k)
      throw error(errc::invalid_args, "softmax_ce: label out of range");
    r.loss += -(z[static_cast<std::size_t>(label)] - mx - std::log(denom));
    if (arg == static_cast<std::size_t>(label)) ++r.correct;
    double* g = r.grad_logits.data.data() + i * k;
    for (std::size_t j = 0; j < k; ++j) {
      double p = std::exp(z[j] - mx) / denom;
      g[j] = (p - (j == static_cast<std::size_t>(label) ? 1.0 : 0.0)) / static_cast<double>(n);
    }
  }
  r.loss /= static_cast<double>(n);
  return r;
}

// ---------------------------------------------------------------------------
// ConvNetS

ConvNetS::ConvNetS(const ModelSpec& spec)
    : conv1(spec.in_c, spec.widths[0], 1, BinMode::none),
      conv2(spec.widths[0], spec.widths[1], 2, spec.bin_mode),
      conv3(spec.widths[1], spec.widths[2], 2, spec.bin_mode),
      conv4(spec.widths[2], spec.widths[3], 1, spec.bin_mode),
      bn1(spec.widths[0]),
      bn2(spec.widths[1]),
      bn3(spec.widths[2]),
      bn4(spec.widths[3]),
      fc(spec.widths[3], spec.classes),
      spec_(spec) {}

void ConvNetS::init_params(std::uint64_t seed) {
  Rng rng(seed);
  auto kaiming = [&rng](Tensor& w, std::size_t fan_in) {
    double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& x : w.data) x = std_dev * rng.next_gauss();
  };
  kaiming(conv1.weight, conv1.patch_size());
  kaiming(conv2.weight, conv2.patch_size());
  kaiming(conv3.weight, conv3.patch_size());
  kaiming(conv4.weight, conv4.patch_size());
  double fc_std = std::sqrt(1.0 / static_cast<double>(fc.in));
  for (double& x : fc.weight.data) x = fc_std * rng.next_gauss();
  fc.bias.fill(0.0);
}

Tensor ConvNetS::forward(const Tensor& x, bool train) {
  Tensor x1 = bn1.forward(conv1.forward(x), train);
  Tensor a1 = s1_.forward(x1);
  Tensor x2 = bn2.forward(conv2.forward(a1), train);
  Tensor a2 = s2_.forward(x2);
  Tensor x3 = bn3.forward(conv3.forward(a2), train);
  Tensor a3 = s3_.forward(x3);
  Tensor x4 = bn4.forward(conv4.forward(a3), train);
  // Identity skip: conv4 keeps channel count and resolution.
  for (std::size_t i = 0; i < x4.size(); ++i) x4.data[i] += x3.data[i];
  return fc.forward(gap_.forward(x4));
}

void ConvNetS::backward(const Tensor& grad_logits) {
  Tensor dx4 = gap_.backward(fc.backward(grad_logits));
  Tensor da3 = conv4.backward(bn4.backward(dx4));
  Tensor dx3 = s3_.backward(da3);
  for (std::size_t i = 0; i < dx3.size(); ++i) dx3.data[i] += dx4.data[i];
  Tensor da2 = conv3.backward(bn3.backward(dx3));
  Tensor dx2 = s2_.backward(da2);
  Tensor da1 = conv2.backward(bn2.backward(dx2));
  Tensor dx1 = s1_.backward(da1);
  conv1.backward(bn1.backward(dx1));
}

std::vector<ParamRef> ConvNetS::params() {
  std::vector<ParamRef> p;
  auto add_conv = [&p](Conv2d& c) {
    p.push_back({&c.weight, &c.grad_weight, c.binarized()});
  };
  auto add_bn = [&p](BatchNorm2d& b) {
    p.push_back({&b.gamma, &b.grad_gamma, false});
    p.push_back({&b.beta, &b.grad_beta, false});
  };
  add_conv(conv1);
  add_bn(bn1);
  add_conv(conv2);
  add_bn(bn2);
  add_conv(conv3);
  add_bn(bn3);
  add_conv(conv4);
  add_bn(bn4);
  p.push_back({&fc.weight, &fc.grad_weight, false});
  p.push_back({&fc.bias, &fc.grad_bias, false});
  return p;
}

std::vector<Conv2d*> ConvNetS::binarized_convs() { return {&conv2, &conv3, &conv4}; }

std::vector<const Conv2d*> ConvNetS::binarized_convs() const {
  return {&conv2, &conv3, &conv4};
}

bool ConvNetS::all_finite() const {
  auto& self = const_cast<ConvNetS&>(*this);
  for (const ParamRef& p : self.params()) {
    if (!p.value->all_finite()) return false;
  }
  return true;
}

}  // namespace siman
