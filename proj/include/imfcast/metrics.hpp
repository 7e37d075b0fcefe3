#pragma once

// Forecast-quality metrics in original units over the validation block.

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace imfcast {

struct MetricsBundle {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> mape;  // percent; absent when a target trips the zero guard
  std::optional<double> r2;    // absent for constant targets (SStot ~ 0)
  std::string mape_omitted_reason;
  std::string r2_omitted_reason;
};

inline MetricsBundle compute_metrics(std::span<const double> targets,
                                     std::span<const double> predictions) {
  if (targets.empty()) throw std::invalid_argument("compute_metrics: empty input");
  if (targets.size() != predictions.size()) {
    throw std::invalid_argument("compute_metrics: length mismatch (" +
                                std::to_string(targets.size()) + " vs " +
                                std::to_string(predictions.size()) + ")");
  }
  const double n = static_cast<double>(targets.size());
  MetricsBundle out;
  double sum_sq = 0.0, sum_abs = 0.0, sum_pct = 0.0, target_mean = 0.0;
  bool mape_safe = true;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!std::isfinite(targets[i]) || !std::isfinite(predictions[i])) {
      throw std::invalid_argument("compute_metrics: non-finite value at index " +
                                  std::to_string(i));
    }
    const double e = predictions[i] - targets[i];
    sum_sq += e * e;
    sum_abs += std::abs(e);
    target_mean += targets[i];
    if (std::abs(targets[i]) > 1e-9) {
      sum_pct += std::abs(e / targets[i]);
    } else {
      mape_safe = false;
    }
  }
  out.mse = sum_sq / n;
  out.rmse = std::sqrt(out.mse);
  out.mae = sum_abs / n;
  if (mape_safe) {
    out.mape = 100.0 * sum_pct / n;
  } else {
    out.mape_omitted_reason = "target below zero guard (|y| <= 1e-9)";
  }
  target_mean /= n;
  double ss_tot = 0.0;
  for (const double y : targets) {
    const double d = y - target_mean;
    ss_tot += d * d;
  }
  if (ss_tot < 1e-12) {
    out.r2_omitted_reason = "constant targets (SStot < 1e-12)";
  } else {
    out.r2 = 1.0 - sum_sq / ss_tot;
  }
  return out;
}

}  // namespace imfcast
