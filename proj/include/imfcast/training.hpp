#pragma once

// Seeded mini-batch training with early stopping. The monitor slice is the
// chronologically last fraction of the train windows; it never contributes
// gradients, and the best-monitor parameters are restored at the end.
// Given (seed, config, data), trained parameters are bitwise reproducible.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "imfcast/nn.hpp"
#include "imfcast/optimizer.hpp"
#include "imfcast/series.hpp"

namespace imfcast {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  int max_epochs = 50;  // 50 for the MLP, 100 for the LSTM
  int patience = 5;
  double monitor_fraction = 0.1;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (patience < 0) throw std::invalid_argument("patience must be >= 0");
    if (!(monitor_fraction > 0.0) || !(monitor_fraction < 1.0)) {
      throw std::invalid_argument("monitor_fraction must lie in (0,1)");
    }
  }
};

struct TrainHistory {
  std::vector<double> train_loss;    // per epoch, gradient slice
  std::vector<double> monitor_loss;  // per epoch, held-out slice
  int best_epoch = -1;
  int stopped_epoch = -1;  // last epoch that ran
};

namespace detail {

inline double forward_one(const MlpModel& m, const double* window, std::size_t window_len,
                          std::size_t channels) {
  return mlp_forward(m, std::span<const double>(window, window_len * channels));
}

inline double forward_one(const LstmModel& m, const double* window, std::size_t window_len,
                          std::size_t /*channels*/) {
  return lstm_forward(m, window, window_len);
}

inline double backward_batch(const MlpModel& m, std::span<const double* const> xs,
                             std::span<const double> ys, std::size_t /*window_len*/,
                             MlpGradients& g, std::vector<double>& flat) {
  const double loss = mlp_backward(m, xs, ys, g);
  g.to_flat(flat);
  return loss;
}

inline double backward_batch(const LstmModel& m, std::span<const double* const> xs,
                             std::span<const double> ys, std::size_t window_len,
                             LstmGradients& g, std::vector<double>& flat) {
  const double loss = lstm_backward(m, xs, ys, window_len, g);
  g.to_flat(flat);
  return loss;
}

template <typename Model>
double slice_mse(const Model& m, const WindowedDataset& d, std::size_t begin, std::size_t end) {
  double acc = 0.0;
  for (std::size_t s = begin; s < end; ++s) {
    const double err = forward_one(m, d.input(s), d.window, d.channels) - d.targets_scaled[s];
    acc += err * err;
  }
  return acc / static_cast<double>(end - begin);
}

template <typename Model>
struct GradientsFor;

template <>
struct GradientsFor<MlpModel> {
  using type = MlpGradients;
};

template <>
struct GradientsFor<LstmModel> {
  using type = LstmGradients;
};

}  // namespace detail

template <typename Model>
TrainHistory train(Model& model, const WindowedDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = data.num_samples();
  if (n < 2) {
    throw std::invalid_argument("train: dataset needs at least 2 samples, got " +
                                std::to_string(n));
  }
  if (data.targets_scaled.size() != n) {
    throw std::invalid_argument("train: dataset targets were never scaled");
  }
  const std::size_t monitor_count =
      std::max<std::size_t>(1, static_cast<std::size_t>(
                                   std::floor(cfg.monitor_fraction * static_cast<double>(n))));
  const std::size_t grad_count = n - monitor_count;
  if (grad_count < 1) {
    throw std::invalid_argument("train: monitor slice leaves no gradient samples");
  }
  // Full-batch fallback for small datasets.
  const std::size_t batch = grad_count < 2 * cfg.batch_size ? grad_count : cfg.batch_size;

  SeededRng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(grad_count);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> params;
  model.to_flat(params);
  AdamState adam(params.size());
  const AdamConfig adam_cfg{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon};

  TrainHistory hist;
  std::vector<double> best_params = params;
  double best_loss = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;

  typename detail::GradientsFor<Model>::type grads;
  std::vector<double> grad_flat;
  std::vector<const double*> xs(batch);
  std::vector<double> ys(batch);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < grad_count; start += batch) {
      const std::size_t count = std::min(batch, grad_count - start);  // remainder batch is used
      xs.resize(count);
      ys.resize(count);
      for (std::size_t b = 0; b < count; ++b) {
        const std::size_t s = order[start + b];
        xs[b] = data.input(s);
        ys[b] = data.targets_scaled[s];
      }
      const double batch_loss = detail::backward_batch(
          model, std::span<const double* const>(xs.data(), count),
          std::span<const double>(ys.data(), count), data.window, grads, grad_flat);
      epoch_loss += batch_loss * static_cast<double>(count);
      adam_update(params, grad_flat, adam, adam_cfg);
      model.from_flat(params);
    }
    epoch_loss /= static_cast<double>(grad_count);
    const double monitor = detail::slice_mse(model, data, grad_count, n);
    if (!std::isfinite(epoch_loss) || !std::isfinite(monitor)) {
      throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                               " (train " + std::to_string(epoch_loss) + ", monitor " +
                               std::to_string(monitor) + ")");
    }
    hist.train_loss.push_back(epoch_loss);
    hist.monitor_loss.push_back(monitor);
    hist.stopped_epoch = epoch;
    if (monitor < best_loss) {
      best_loss = monitor;
      best_params = params;
      hist.best_epoch = epoch;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs > cfg.patience) break;
    }
  }
  model.from_flat(best_params);
  return hist;
}

// -----------------------------------------------------------------------
// Trained model bundle: parameters plus everything needed to rebuild the
// windows it was trained on (scalers, window length, channel selection).
// -----------------------------------------------------------------------

enum class ModelKind { mlp, lstm };

inline const char* to_string(ModelKind k) { return k == ModelKind::mlp ? "mlp" : "lstm"; }

struct ForecastModel {
  ModelKind kind = ModelKind::mlp;
  MlpModel mlp;
  LstmModel lstm;
  std::size_t window = 0;
  std::size_t channels = 0;
  std::vector<std::string> channel_names;
  Scaler input_scaler;
  Scaler target_scaler;  // single channel, original series units
  TrainConfig train_config;
  double split_fraction = 0.75;
  std::string config_digest;  // digest of the pipeline config that trained it

  double forward_scaled(const double* window_ptr) const {
    if (kind == ModelKind::mlp) {
      return mlp_forward(mlp, std::span<const double>(window_ptr, window * channels));
    }
    return lstm_forward(lstm, window_ptr, window);
  }
};

// One prediction per sample, inverse-scaled back to original units.
inline std::vector<double> predict_series(const ForecastModel& fm, const WindowedDataset& d) {
  if (d.window != fm.window || d.channels != fm.channels) {
    throw std::invalid_argument("predict_series: dataset shape does not match the model (window " +
                                std::to_string(d.window) + "x" + std::to_string(d.channels) +
                                " vs " + std::to_string(fm.window) + "x" +
                                std::to_string(fm.channels) + ")");
  }
  std::vector<double> out(d.num_samples());
  for (std::size_t s = 0; s < d.num_samples(); ++s) {
    out[s] = fm.target_scaler.inverse(fm.forward_scaled(d.input(s)), 0);
  }
  return out;
}

}  // namespace imfcast
