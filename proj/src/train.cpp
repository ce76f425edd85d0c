#include "siman/train.hpp"

#include <cmath>
#include <numeric>

namespace siman {

double cosine_lr(double lr0, std::size_t epoch, std::size_t total_epochs) {
  if (total_epochs == 0) return lr0;
  double frac = static_cast<double>(epoch) / static_cast<double>(total_epochs);
  return 0.5 * lr0 * (1.0 + std::cos(3.14159265358979323846 * frac));
}

void SgdState::init(const std::vector<ParamRef>& params) {
  velocity.clear();
  velocity.reserve(params.size());
  for (const ParamRef& p : params) velocity.emplace_back(p.value->shape);
}

void sgd_step(std::vector<ParamRef>& params, SgdState& state, const TrainConfig& config,
              double lr) {
  if (state.velocity.size() != params.size())
    throw error(errc::invalid_args, "sgd_step: state not initialized for these params");
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamRef& p = params[i];
    if (!p.grad->all_finite()) throw error(errc::non_finite, "sgd_step: non-finite gradient");
    double decay = p.binarized ? config.weight_decay_binarized : config.weight_decay_other;
    Tensor& v = state.velocity[i];
    for (std::size_t j = 0; j < p.value->size(); ++j) {
      double g = p.grad->data[j] + decay * p.value->data[j];
      v.data[j] = config.momentum * v.data[j] + g;
      p.value->data[j] -= lr * v.data[j];
    }
  }
}

namespace {

void zero_grads(std::vector<ParamRef>& params) {
  for (ParamRef& p : params) p.grad->fill(0.0);
}

FilterStats filter_stats(std::span<const double> wspan) {
  WeightVector w(wspan.begin(), wspan.end());
  const std::size_t n = w.size();

  FilterStats fs;
  BinaryCode opt = optimal_binarize(w);
  fs.p_plus = static_cast<double>(opt.ones) / static_cast<double>(n);
  fs.cos_siman = objective_value(w, opt);

  std::vector<double> abs_w(n), opt_dir(n), sign_dir(n), half_pm1(n);
  BinaryCode half = half_half_binarize(w);
  double norm = 0.0, dot_half = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    abs_w[i] = std::fabs(w[i]);
    opt_dir[i] = opt.bits[i];
    sign_dir[i] = w[i] >= 0.0 ? 1.0 : -1.0;
    half_pm1[i] = 2.0 * half.bits[i] - 1.0;
    norm += w[i] * w[i];
    dot_half += w[i] * half_pm1[i];
  }
  norm = std::sqrt(norm);
  fs.cos_siman_pm1 = dot_half / (norm * std::sqrt(static_cast<double>(n)));
  double sum_abs = std::accumulate(abs_w.begin(), abs_w.end(), 0.0);
  fs.cos_sign = sum_abs / (norm * std::sqrt(static_cast<double>(n)));
  fs.qerr_siman = quantization_error(abs_w, opt_dir);
  fs.qerr_sign = quantization_error(w, sign_dir);
  return fs;
}

Tensor make_batch(const Dataset& ds, std::span<const std::size_t> indices, std::size_t c,
                  std::size_t h, std::size_t w, bool augment_images, Rng* aug_rng) {
  Tensor batch({indices.size(), c, h, w});
  const std::size_t sample_len = c * h * w;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Sample& s = ds.samples[indices[i]];
    if (s.values.size() != sample_len)
      throw error(errc::shape_mismatch, "train: sample size does not match model input");
    if (augment_images && ds.image) {
      Sample a = augment(s, c, h, w, *aug_rng);
      std::copy(a.values.begin(), a.values.end(), batch.data.begin() + i * sample_len);
    } else {
      std::copy(s.values.begin(), s.values.end(), batch.data.begin() + i * sample_len);
    }
  }
  return batch;
}

std::vector<int> batch_labels(const Dataset& ds, std::span<const std::size_t> indices) {
  std::vector<int> labels(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) labels[i] = ds.samples[indices[i]].label;
  return labels;
}

}  // namespace

std::vector<LayerStats> layer_stats(const ConvNetS& model) {
  std::vector<LayerStats> out;
  std::size_t index = 0;
  for (const Conv2d* conv : model.binarized_convs()) {
    LayerStats ls;
    ls.layer_index = index++;
    ls.filter_length = conv->patch_size();
    ls.filters.reserve(conv->out_c);
    for (std::size_t f = 0; f < conv->out_c; ++f) {
      ls.filters.push_back(filter_stats(
          std::span(conv->weight.data.data() + f * ls.filter_length, ls.filter_length)));
    }
    double inv = 1.0 / static_cast<double>(ls.filters.size());
    for (const FilterStats& fs : ls.filters) {
      ls.mean_p_plus += fs.p_plus * inv;
      ls.mean_cos_siman += fs.cos_siman * inv;
      ls.mean_cos_siman_pm1 += fs.cos_siman_pm1 * inv;
      ls.mean_cos_sign += fs.cos_sign * inv;
      ls.mean_qerr_siman += fs.qerr_siman * inv;
      ls.mean_qerr_sign += fs.qerr_sign * inv;
    }
    out.push_back(std::move(ls));
  }
  return out;
}

double evaluate(ConvNetS& model, const Dataset& ds, std::size_t batch_size) {
  if (ds.samples.empty()) throw error(errc::dataset_empty, "evaluate: empty dataset");
  const ModelSpec& spec = model.spec();
  std::vector<std::size_t> idx(ds.samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});

  std::size_t correct = 0;
  for (std::size_t start = 0; start < idx.size(); start += batch_size) {
    std::size_t len = std::min(batch_size, idx.size() - start);
    std::span<const std::size_t> part(idx.data() + start, len);
    Tensor batch = make_batch(ds, part, spec.in_c, spec.in_h, spec.in_w, false, nullptr);
    Tensor logits = model.forward(batch, false);
    auto labels = batch_labels(ds, part);
    LossResult r = softmax_cross_entropy(logits, labels);
    correct += r.correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.samples.size());
}

std::vector<EpochMetrics> train(ConvNetS& model, const Dataset& train_ds,
                                const Dataset& test_ds, const TrainConfig& config,
                                bool augment_images) {
  if (train_ds.samples.empty()) throw error(errc::dataset_empty, "train: empty dataset");
  if (!(config.learning_rate >= 0.0) || config.momentum < 0.0 || config.momentum >= 1.0 ||
      config.batch_size == 0)
    throw error(errc::invalid_args, "train: invalid config");

  const ModelSpec& spec = model.spec();
  auto params = model.params();
  SgdState sgd;
  sgd.init(params);

  Rng shuffle_rng(config.seed);
  Rng aug_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> order(train_ds.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<EpochMetrics> metrics;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double lr = cosine_lr(config.learning_rate, epoch, config.epochs);

    // Fisher-Yates, fixed by the shuffle stream.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = shuffle_rng.next_below(i);
      std::swap(order[i - 1], order[j]);
    }

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::size_t len = std::min(config.batch_size, order.size() - start);
      std::span<const std::size_t> part(order.data() + start, len);
      Tensor batch =
          make_batch(train_ds, part, spec.in_c, spec.in_h, spec.in_w, augment_images, &aug_rng);
      auto labels = batch_labels(train_ds, part);

      zero_grads(params);
      Tensor logits = model.forward(batch, true);
      LossResult r = softmax_cross_entropy(logits, labels);
      if (!std::isfinite(r.loss)) throw error(errc::non_finite, "train: non-finite loss");
      model.backward(r.grad_logits);
      sgd_step(params, sgd, config, lr);
      if (!model.all_finite()) throw error(errc::non_finite, "train: non-finite parameter");

      loss_sum += r.loss * static_cast<double>(len);
      correct += r.correct;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.lr = lr;
    m.train_loss = loss_sum / static_cast<double>(order.size());
    m.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
    m.test_acc = test_ds.samples.empty() ? 0.0 : evaluate(model, test_ds);

    auto stats = layer_stats(model);
    if (!stats.empty()) {
      double inv = 1.0 / static_cast<double>(stats.size());
      for (const LayerStats& ls : stats) {
        m.mean_p_plus += ls.mean_p_plus * inv;
        m.mean_cos_siman += ls.mean_cos_siman * inv;
        m.mean_cos_sign += ls.mean_cos_sign * inv;
      }
    }
    metrics.push_back(m);
  }
  return metrics;
}

}  // namespace siman
