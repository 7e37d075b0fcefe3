#pragma once

// Synthetic fixture series used by the test suites and shipped through the
// fixture generator tool. Every generator is deterministic.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "imfcast/rng.hpp"
#include "imfcast/series.hpp"

namespace imfcast {

namespace detail {

inline Series with_ticks(std::string name, std::vector<double> values) {
  Series s;
  s.name = std::move(name);
  s.values = std::move(values);
  s.timestamps.resize(s.values.size());
  for (std::size_t i = 0; i < s.timestamps.size(); ++i) {
    s.timestamps[i] = static_cast<std::int64_t>(i);
  }
  return s;
}

}  // namespace detail

inline Series make_constant_series(std::size_t n = 512, double value = 5.0) {
  return detail::with_ticks("constant", std::vector<double>(n, value));
}

// sin(2*pi*10*t) + sin(2*pi*t), t in [0,1]. IMF_1 should isolate the fast
// tone; the slow tone lands in a later channel.
inline Series make_two_tone_series(std::size_t n = 2000) {
  std::vector<double> v(n);
  const double two_pi = 6.283185307179586476925286766559;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    v[i] = std::sin(two_pi * 10.0 * t) + std::sin(two_pi * t);
  }
  return detail::with_ticks("two_tone", std::move(v));
}

inline double two_tone_fast_component(std::size_t i, std::size_t n) {
  const double two_pi = 6.283185307179586476925286766559;
  const double t = static_cast<double>(i) / static_cast<double>(n - 1);
  return std::sin(two_pi * 10.0 * t);
}

inline double two_tone_slow_component(std::size_t i, std::size_t n) {
  const double two_pi = 6.283185307179586476925286766559;
  const double t = static_cast<double>(i) / static_cast<double>(n - 1);
  return std::sin(two_pi * t);
}

// Dominant upward trend with two oscillations fast enough to survive as
// separate IMFs; the residual channel of the decomposition carries almost
// all of the next-step signal.
inline Series make_trend_tones_series(std::size_t n = 2000) {
  std::vector<double> v(n);
  const double two_pi = 6.283185307179586476925286766559;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    v[i] = 100.0 + 0.05 * x + 3.0 * std::sin(two_pi * x / 50.0) +
           2.0 * std::sin(two_pi * x / 120.0);
  }
  return detail::with_ticks("trend_tones", std::move(v));
}

// Trend plus seeded Gaussian noise; used by the ablation checks.
inline Series make_trend_noise_series(std::size_t n = 1500, std::uint64_t seed = 2024) {
  SeededRng rng(seed);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = 100.0 + 0.06 * static_cast<double>(i) + 1.5 * rng.normal();
  }
  return detail::with_ticks("trend_noise", std::move(v));
}

inline Series make_random_walk_series(std::size_t n = 5000, std::uint64_t seed = 7) {
  SeededRng rng(seed);
  std::vector<double> v(n);
  double level = 100.0;
  for (std::size_t i = 0; i < n; ++i) {
    level += rng.normal();
    v[i] = level;
  }
  return detail::with_ticks("random_walk", std::move(v));
}

}  // namespace imfcast
