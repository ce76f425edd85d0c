#ifndef SIMAN_TRAIN_HPP
#define SIMAN_TRAIN_HPP

#include <cstdint>
#include <vector>

#include "siman/data_io.hpp"
#include "siman/nn.hpp"

namespace siman {

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  std::size_t epochs = 0;
  std::size_t batch_size = 64;
  double weight_decay_other = 5e-4;      // l2 on float layers
  double weight_decay_binarized = 0.0;   // 0 removes l2 from binarized layers
  std::uint64_t seed = 0;
};

// Cosine schedule: 0.5 * lr0 * (1 + cos(pi * epoch / total)).
double cosine_lr(double lr0, std::size_t epoch, std::size_t total_epochs);

struct SgdState {
  std::vector<Tensor> velocity;
  void init(const std::vector<ParamRef>& params);
};

// Momentum SGD over all params; the l2 term is added to the gradient with
// the coefficient of the param's decay group. Throws errc::non_finite on a
// non-finite gradient.
void sgd_step(std::vector<ParamRef>& params, SgdState& state, const TrainConfig& config,
              double lr);

struct FilterStats {
  double p_plus = 0.0;         // ones(optimal code) / n
  double cos_siman = 0.0;      // cos(|w|, optimal {0,1} code)
  double cos_siman_pm1 = 0.0;  // cos(w, 2*half_half - 1), the +/-1 reading
  double cos_sign = 0.0;       // cos(w, sign(w)) (scaled-sign baseline)
  double qerr_siman = 0.0;     // ||w||^2 sin^2 between |w| and optimal code
  double qerr_sign = 0.0;      // same metric for the sign baseline
};

struct LayerStats {
  std::size_t layer_index = 0;
  std::size_t filter_length = 0;
  std::vector<FilterStats> filters;
  double mean_p_plus = 0.0;
  double mean_cos_siman = 0.0;
  double mean_cos_siman_pm1 = 0.0;
  double mean_cos_sign = 0.0;
  double mean_qerr_siman = 0.0;
  double mean_qerr_sign = 0.0;
};

std::vector<LayerStats> layer_stats(const ConvNetS& model);

struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double mean_p_plus = 0.0;
  double mean_cos_siman = 0.0;
  double mean_cos_sign = 0.0;
};

// Deterministic end-to-end training loop: fixed init is the caller's job
// (model.init_params), shuffling and augmentation draws are derived from
// config.seed only.
std::vector<EpochMetrics> train(ConvNetS& model, const Dataset& train_ds,
                                const Dataset& test_ds, const TrainConfig& config,
                                bool augment_images);

double evaluate(ConvNetS& model, const Dataset& ds, std::size_t batch_size = 256);

}  // namespace siman

#endif
