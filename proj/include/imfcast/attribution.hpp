#pragma once

// Attribution of one-step forecasts to input channels: DeepLIFT rescale and
// product rules propagated through the MLP and the unrolled LSTM, averaged
// over a set of background baselines, plus an exact Shapley oracle (coalition
// enumeration over whole channels) used to verify the propagation.
//
// Every rule preserves summation-to-delta, so per-baseline attributions sum
// to f(x) - f(x') up to the documented near-zero fallback.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "imfcast/nn.hpp"
#include "imfcast/rng.hpp"
#include "imfcast/series.hpp"

namespace imfcast {

enum class Nonlin { tanh_fn, logistic_fn, identity };

inline double nonlin_value(Nonlin n, double x) {
  switch (n) {
    case Nonlin::tanh_fn: return std::tanh(x);
    case Nonlin::logistic_fn: return logistic(x);
    default: return x;
  }
}

inline double nonlin_derivative(Nonlin n, double x) {
  switch (n) {
    case Nonlin::tanh_fn: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Nonlin::logistic_fn: {
      const double s = logistic(x);
      return s * (1.0 - s);
    }
    default: return 1.0;
  }
}

// Below this input delta the rescale ratio degrades to the analytic
// derivative at the midpoint.
inline constexpr double kRescaleDeltaFloor = 1e-7;

// DeepLIFT rescale rule: delta-out over delta-in, with the midpoint
// derivative as the near-zero limit.
inline double rescale_multiplier(Nonlin nonlin, double x_in, double ref_in, double x_out,
                                 double ref_out) {
  const double din = x_in - ref_in;
  if (std::abs(din) > kRescaleDeltaFloor) return (x_out - ref_out) / din;
  return nonlin_derivative(nonlin, 0.5 * (x_in + ref_in));
}

// Shapley split of a 2-player bilinear game uv - u'v'. Exact:
// phi_u + phi_v = uv - u'v', and a player at its reference gets zero.
inline std::pair<double, double> product_split(double u, double u_ref, double v, double v_ref) {
  const double phi_u = (u - u_ref) * (v + v_ref) * 0.5;
  const double phi_v = (v - v_ref) * (u + u_ref) * 0.5;
  return {phi_u, phi_v};
}

// Background windows drawn from train samples; the expectation over inputs
// is realized by averaging attributions over these references.
struct BaselineSet {
  std::size_t window = 0;
  std::size_t channels = 0;
  std::size_t count = 0;
  std::vector<double> windows;  // count x window x channels
  std::uint64_t seed = 0;

  const double* window_ptr(std::size_t b) const {
    return windows.data() + b * window * channels;
  }
};

inline BaselineSet draw_baselines(const WindowedDataset& train_data, std::size_t count,
                                  std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("draw_baselines: need at least one baseline");
  const std::size_t n = train_data.num_samples();
  BaselineSet b;
  b.window = train_data.window;
  b.channels = train_data.channels;
  b.seed = seed;
  std::vector<std::size_t> chosen;
  if (count >= n) {
    chosen.resize(n);
    for (std::size_t i = 0; i < n; ++i) chosen[i] = i;
  } else {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    SeededRng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(idx[i], idx[i + rng.below(n - i)]);
    }
    chosen.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(chosen.begin(), chosen.end());
  }
  b.count = chosen.size();
  const std::size_t stride = b.window * b.channels;
  b.windows.resize(b.count * stride);
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const double* src = train_data.input(chosen[i]);
    std::copy(src, src + stride, b.windows.begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return b;
}

// Per-sample attribution: phi[n][k] is the contribution of channel k at lag
// n, in scaled model units.
struct AttributionMatrix {
  std::size_t window = 0;
  std::size_t channels = 0;
  std::vector<double> phi;  // window x channels
  double prediction = 0.0;
  double mean_baseline_prediction = 0.0;

  double at(std::size_t n, std::size_t k) const { return phi[n * channels + k]; }
  double channel_sum(std::size_t k) const {
    double acc = 0.0;
    for (std::size_t n = 0; n < window; ++n) acc += phi[n * channels + k];
    return acc;
  }
};

struct SingleAttribution {
  std::vector<double> phi;  // window x channels
  double f_x = 0.0;
  double f_ref = 0.0;
};

// --------------------------------------------------------------------------
// MLP propagation: linear rule through both dense layers, rescale through
// the hidden nonlinearity.
// --------------------------------------------------------------------------
inline SingleAttribution deepshap_single(const MlpModel& m, const double* x,
                                         const double* ref, std::size_t window,
                                         std::size_t channels) {
  const std::size_t d = window * channels;
  if (d != m.input_size) throw std::invalid_argument("deepshap: window/model shape mismatch");
  MlpTrace tx, tr;
  SingleAttribution out;
  out.f_x = mlp_forward(m, std::span<const double>(x, d), &tx);
  out.f_ref = mlp_forward(m, std::span<const double>(ref, d), &tr);
  if (!std::isfinite(out.f_x) || !std::isfinite(out.f_ref)) {
    throw std::runtime_error("deepshap: non-finite activations");
  }
  const Nonlin nl = m.hidden_activation == Activation::tanh_fn ? Nonlin::tanh_fn : Nonlin::identity;
  std::vector<double> mz(m.hidden_size);
  for (std::size_t j = 0; j < m.hidden_size; ++j) {
    mz[j] = m.w2[j] * rescale_multiplier(nl, tx.z1[j], tr.z1[j], tx.a1[j], tr.a1[j]);
  }
  out.phi.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double mi = 0.0;
    const double* wrow = m.w1.data.data() + i * m.hidden_size;
    for (std::size_t j = 0; j < m.hidden_size; ++j) mi += wrow[j] * mz[j];
    out.phi[i] = mi * (x[i] - ref[i]);
  }
  return out;
}

// --------------------------------------------------------------------------
// LSTM propagation: the network is unrolled through time; multipliers flow
// back through both the hidden-state and the cell-state paths. Gate products
// (f*c, i*g, o*tanh(c)) are split with the exact bilinear rule, gate
// nonlinearities use rescale. Initial states are zero for input and
// reference alike, so deltas vanish there and those paths drop out.
// --------------------------------------------------------------------------
inline SingleAttribution deepshap_single(const LstmModel& m, const double* x,
                                         const double* ref, std::size_t window,
                                         std::size_t channels) {
  if (channels != m.input_size) {
    throw std::invalid_argument("deepshap: window/model shape mismatch");
  }
  const std::size_t u = m.units;
  std::vector<LstmStepTrace> tx, tr;
  SingleAttribution out;
  out.f_x = lstm_forward(m, x, window, &tx);
  out.f_ref = lstm_forward(m, ref, window, &tr);
  if (!std::isfinite(out.f_x) || !std::isfinite(out.f_ref)) {
    throw std::runtime_error("deepshap: non-finite activations");
  }
  out.phi.assign(window * channels, 0.0);

  std::vector<double> mh(u), mc(u, 0.0);
  for (std::size_t j = 0; j < u; ++j) mh[j] = m.w_out[j];  // dense head, linear rule
  std::vector<double> mzi(u), mzf(u), mzo(u), mzg(u), mh_prev(u), mc_prev(u);

  for (std::size_t n = window; n-- > 0;) {
    const LstmStepTrace& a = tx[n];
    const LstmStepTrace& b = tr[n];
    for (std::size_t j = 0; j < u; ++j) {
      // h = o * tanh(c): product split, then rescale through tanh(c).
      const double m_o = mh[j] * 0.5 * (a.tanh_c[j] + b.tanh_c[j]);
      const double m_tc = mh[j] * 0.5 * (a.o[j] + b.o[j]);
      const double m_c =
          mc[j] + m_tc * rescale_multiplier(Nonlin::tanh_fn, a.c[j], b.c[j], a.tanh_c[j],
                                            b.tanh_c[j]);
      // c = f * c_prev + i * g: two product splits share the cell multiplier.
      const double m_f = m_c * 0.5 * (a.c_prev[j] + b.c_prev[j]);
      mc_prev[j] = m_c * 0.5 * (a.f[j] + b.f[j]);
      const double m_i = m_c * 0.5 * (a.g[j] + b.g[j]);
      const double m_g = m_c * 0.5 * (a.i[j] + b.i[j]);
      // Gate nonlinearities.
      mzi[j] = m_i * rescale_multiplier(Nonlin::logistic_fn, a.zi[j], b.zi[j], a.i[j], b.i[j]);
      mzf[j] = m_f * rescale_multiplier(Nonlin::logistic_fn, a.zf[j], b.zf[j], a.f[j], b.f[j]);
      mzo[j] = m_o * rescale_multiplier(Nonlin::logistic_fn, a.zo[j], b.zo[j], a.o[j], b.o[j]);
      mzg[j] = m_g * rescale_multiplier(Nonlin::tanh_fn, a.zg[j], b.zg[j], a.g[j], b.g[j]);
    }
    // Linear rule into this step's inputs and into the previous hidden state.
    for (std::size_t k = 0; k < channels; ++k) {
      const double* wi = m.w_i.data.data() + k * u;
      const double* wf = m.w_f.data.data() + k * u;
      const double* wo = m.w_o.data.data() + k * u;
      const double* wg = m.w_g.data.data() + k * u;
      double acc = 0.0;
      for (std::size_t j = 0; j < u; ++j) {
        acc += wi[j] * mzi[j] + wf[j] * mzf[j] + wo[j] * mzo[j] + wg[j] * mzg[j];
      }
      out.phi[n * channels + k] = acc * (x[n * channels + k] - ref[n * channels + k]);
    }
    for (std::size_t k = 0; k < u; ++k) {
      const double* ui = m.u_i.data.data() + k * u;
      const double* uf = m.u_f.data.data() + k * u;
      const double* uo = m.u_o.data.data() + k * u;
      const double* ug = m.u_g.data.data() + k * u;
      double acc = 0.0;
      for (std::size_t j = 0; j < u; ++j) {
        acc += ui[j] * mzi[j] + uf[j] * mzf[j] + uo[j] * mzo[j] + ug[j] * mzg[j];
      }
      mh_prev[k] = acc;
    }
    mh = mh_prev;
    mc = mc_prev;
  }
  return out;
}

// Averages single-baseline attributions over the background set; local
// accuracy holds per baseline before the averaging.
template <typename Model>
AttributionMatrix deepshap(const Model& model, const double* window_ptr,
                           std::size_t window, std::size_t channels,
                           const BaselineSet& baselines) {
  if (baselines.count < 1) throw std::invalid_argument("deepshap: empty baseline set");
  if (baselines.window != window || baselines.channels != channels) {
    throw std::invalid_argument("deepshap: baseline/window shape mismatch");
  }
  AttributionMatrix out;
  out.window = window;
  out.channels = channels;
  out.phi.assign(window * channels, 0.0);
  double ref_mean = 0.0;
  for (std::size_t b = 0; b < baselines.count; ++b) {
    const SingleAttribution single =
        deepshap_single(model, window_ptr, baselines.window_ptr(b), window, channels);
    for (std::size_t i = 0; i < out.phi.size(); ++i) out.phi[i] += single.phi[i];
    ref_mean += single.f_ref;
    out.prediction = single.f_x;
  }
  const double inv = 1.0 / static_cast<double>(baselines.count);
  for (double& v : out.phi) v *= inv;
  out.mean_baseline_prediction = ref_mean * inv;
  return out;
}

// --------------------------------------------------------------------------
// Exact Shapley oracle. Players are whole channels; "absent" replaces a
// channel's lags with the baseline's. All 2^K coalitions are enumerated.
// --------------------------------------------------------------------------
template <typename F>
std::vector<double> exact_shapley_fn(F&& f, const double* x, const double* ref,
                                     std::size_t window, std::size_t channels) {
  if (channels > 15) {
    throw std::invalid_argument("exact_shapley: more than 15 players (got " +
                                std::to_string(channels) + ")");
  }
  const std::size_t n_masks = std::size_t{1} << channels;
  std::vector<double> value(n_masks);
  std::vector<double> composite(window * channels);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    for (std::size_t n = 0; n < window; ++n) {
      for (std::size_t k = 0; k < channels; ++k) {
        const bool present = (mask >> k) & 1u;
        composite[n * channels + k] = present ? x[n * channels + k] : ref[n * channels + k];
      }
    }
    value[mask] = f(composite.data());
  }
  // w(s) = s! (K-1-s)! / K!
  std::vector<double> fact(channels + 1, 1.0);
  for (std::size_t i = 1; i <= channels; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  std::vector<double> weight(channels);
  for (std::size_t s = 0; s < channels; ++s) {
    weight[s] = fact[s] * fact[channels - 1 - s] / fact[channels];
  }
  std::vector<double> phi(channels, 0.0);
  for (std::size_t k = 0; k < channels; ++k) {
    const std::size_t bit = std::size_t{1} << k;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      const auto s = static_cast<std::size_t>(std::popcount(mask));
      phi[k] += weight[s] * (value[mask | bit] - value[mask]);
    }
  }
  return phi;
}

inline std::vector<double> exact_shapley(const MlpModel& m, const double* x, const double* ref,
                                         std::size_t window, std::size_t channels) {
  return exact_shapley_fn(
      [&](const double* w) {
        return mlp_forward(m, std::span<const double>(w, window * channels));
      },
      x, ref, window, channels);
}

inline std::vector<double> exact_shapley(const LstmModel& m, const double* x, const double* ref,
                                         std::size_t window, std::size_t channels) {
  return exact_shapley_fn([&](const double* w) { return lstm_forward(m, w, window); }, x, ref,
                          window, channels);
}

// --------------------------------------------------------------------------
// Per-IMF importance aggregation.
// --------------------------------------------------------------------------
struct AttributionReport {
  std::string model_tag;
  std::vector<std::string> channel_names;
  std::vector<double> mean_shap;  // mean over samples of |sum over lags|
  std::vector<double> percent;    // normalized to 100
  std::size_t sample_count = 0;
  bool degenerate = false;   // all attributions were zero
  bool abs_per_lag = false;  // alternative score: sum over lags of |phi|
};

inline AttributionReport aggregate_importance(const std::vector<AttributionMatrix>& matrices,
                                              std::vector<std::string> channel_names = {},
                                              std::string model_tag = {},
                                              bool abs_per_lag = false) {
  if (matrices.empty()) throw std::invalid_argument("aggregate_importance: no samples");
  const std::size_t k = matrices.front().channels;
  AttributionReport rep;
  rep.model_tag = std::move(model_tag);
  rep.sample_count = matrices.size();
  rep.abs_per_lag = abs_per_lag;
  rep.mean_shap.assign(k, 0.0);
  rep.percent.assign(k, 0.0);
  for (const AttributionMatrix& m : matrices) {
    if (m.channels != k) throw std::invalid_argument("aggregate_importance: inconsistent shapes");
    for (std::size_t c = 0; c < k; ++c) {
      double score;
      if (abs_per_lag) {
        score = 0.0;
        for (std::size_t n = 0; n < m.window; ++n) score += std::abs(m.at(n, c));
      } else {
        score = std::abs(m.channel_sum(c));
      }
      rep.mean_shap[c] += score;
    }
  }
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    rep.mean_shap[c] /= static_cast<double>(matrices.size());
    total += rep.mean_shap[c];
  }
  if (total > 0.0) {
    for (std::size_t c = 0; c < k; ++c) rep.percent[c] = 100.0 * rep.mean_shap[c] / total;
  } else {
    rep.degenerate = true;
  }
  if (channel_names.size() == k) {
    rep.channel_names = std::move(channel_names);
  } else {
    for (std::size_t c = 0; c < k; ++c) rep.channel_names.push_back("channel_" + std::to_string(c + 1));
  }
  return rep;
}

// Shannon entropy (nats) of the percent vector; higher = relevance spread
// more evenly across channels.
inline double percent_entropy(const AttributionReport& rep) {
  double h = 0.0;
  for (const double pct : rep.percent) {
    const double p = pct / 100.0;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace imfcast
