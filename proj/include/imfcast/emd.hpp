#pragma once

// Empirical Mode Decomposition: extrema detection, cubic-spline envelopes,
// sifting with the standard-deviation stopping criterion, and the full
// IMFs-plus-residual decomposition.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "imfcast/series.hpp"
#include "imfcast/spline.hpp"

namespace imfcast {

struct ExtremaSet {
  std::vector<std::size_t> maxima;  // interior indices, strictly increasing
  std::vector<std::size_t> minima;

  std::size_t count() const { return maxima.size() + minima.size(); }
};

enum class BoundaryPolicy { mirror, clamp };

struct SiftConfig {
  double sd_threshold = 0.2;
  int max_sift_iterations = 100;
  int max_imfs = 16;
  BoundaryPolicy boundary = BoundaryPolicy::mirror;
  // Envelope-mean tolerance as a fraction of the candidate's RMS; a strict
  // zero is unattainable in finite precision.
  double envelope_mean_tolerance = 0.05;

  void validate() const {
    if (!(sd_threshold > 0.0)) throw std::invalid_argument("sd_threshold must be > 0");
    if (max_sift_iterations < 1) throw std::invalid_argument("max_sift_iterations must be >= 1");
    if (max_imfs < 1) throw std::invalid_argument("max_imfs must be >= 1");
  }
};

// Interior strict extrema; a plateau reports its lower-midpoint index.
inline ExtremaSet find_extrema(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 3) {
    throw std::invalid_argument("find_extrema: need at least 3 samples");
  }
  ExtremaSet out;
  std::size_t a = 0;
  while (a < n) {
    std::size_t b = a;
    while (b + 1 < n && v[b + 1] == v[a]) ++b;
    if (a > 0 && b + 1 < n) {
      const double left = v[a - 1];
      const double right = v[b + 1];
      const std::size_t mid = (a + b) / 2;  // lower midpoint
      if (left < v[a] && right < v[a]) {
        out.maxima.push_back(mid);
      } else if (left > v[a] && right > v[a]) {
        out.minima.push_back(mid);
      }
    }
    a = b + 1;
  }
  return out;
}

// Sign changes; a run of exact zeros counts one crossing when the signs on
// its two sides differ.
inline std::size_t count_zero_crossings(const std::vector<double>& v) {
  std::size_t crossings = 0;
  int last_sign = 0;
  for (const double x : v) {
    const int s = (x > 0.0) - (x < 0.0);
    if (s == 0) continue;
    if (last_sign != 0 && s != last_sign) ++crossings;
    last_sign = s;
  }
  return crossings;
}

namespace detail {

struct Knots {
  std::vector<double> x, y;
};

// Extend the knot list past the signal ends. Mirror reflects up to two
// extrema about each end sample; clamp pins the end samples themselves.
// Ends that already carry a knot are left alone.
inline Knots extend_knots(const std::vector<double>& v,
                          const std::vector<std::size_t>& idx, BoundaryPolicy policy) {
  const auto last = static_cast<double>(v.size() - 1);
  Knots k;
  if (policy == BoundaryPolicy::mirror) {
    if (!idx.empty() && idx.front() > 0) {
      const std::size_t take = idx.size() > 1 ? 2 : 1;
      for (std::size_t j = take; j-- > 0;) {  // farthest reflection first keeps x sorted
        k.x.push_back(-static_cast<double>(idx[j]));
        k.y.push_back(v[idx[j]]);
      }
    }
  } else {
    if (idx.empty() || idx.front() > 0) {
      k.x.push_back(0.0);
      k.y.push_back(v.front());
    }
  }
  for (const std::size_t i : idx) {
    k.x.push_back(static_cast<double>(i));
    k.y.push_back(v[i]);
  }
  if (policy == BoundaryPolicy::mirror) {
    if (!idx.empty() && static_cast<double>(idx.back()) < last) {
      const std::size_t take = idx.size() > 1 ? 2 : 1;
      for (std::size_t j = 0; j < take; ++j) {
        const std::size_t src = idx[idx.size() - 1 - j];
        k.x.push_back(2.0 * last - static_cast<double>(src));
        k.y.push_back(v[src]);
      }
    }
  } else {
    if (idx.empty() || static_cast<double>(idx.back()) < last) {
      k.x.push_back(last);
      k.y.push_back(v.back());
    }
  }
  return k;
}

inline std::vector<double> line_through_endpoints(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> out(n);
  const double y0 = v.front();
  const double slope = (v.back() - y0) / static_cast<double>(n - 1);
  for (std::size_t t = 0; t < n; ++t) out[t] = y0 + slope * static_cast<double>(t);
  return out;
}

}  // namespace detail

// Natural cubic spline through the given extrema, sampled at every index.
// Throws when fewer than two knots remain even after boundary extension;
// callers fall back to the line through the signal endpoints.
inline std::vector<double> cubic_envelope(const std::vector<double>& v,
                                          const std::vector<std::size_t>& extrema_indices,
                                          BoundaryPolicy policy) {
  const auto knots = detail::extend_knots(v, extrema_indices, policy);
  if (knots.x.size() < 2) {
    throw std::invalid_argument("cubic_envelope: fewer than 2 knots after boundary extension");
  }
  const auto spline = CubicSpline<double>::fit(knots.x, knots.y);
  std::vector<double> out(v.size());
  for (std::size_t t = 0; t < v.size(); ++t) out[t] = spline(static_cast<double>(t));
  return out;
}

namespace detail {

inline std::vector<double> envelope_or_line(const std::vector<double>& v,
                                            const std::vector<std::size_t>& idx,
                                            BoundaryPolicy policy) {
  const auto knots = extend_knots(v, idx, policy);
  if (knots.x.size() < 2) return line_through_endpoints(v);
  const auto spline = CubicSpline<double>::fit(knots.x, knots.y);
  std::vector<double> out(v.size());
  for (std::size_t t = 0; t < v.size(); ++t) out[t] = spline(static_cast<double>(t));
  return out;
}

}  // namespace detail

struct ImfCheck {
  bool passes = false;
  std::size_t extrema_count = 0;
  std::size_t crossing_count = 0;
  double max_envelope_mean = 0.0;
};

// Tolerant IMF test: extrema and zero-crossing counts differ by at most one
// and the max/min envelope mean stays below tolerance * RMS everywhere.
inline ImfCheck check_imf_conditions(const std::vector<double>& v,
                                     double tolerance_factor = 0.05,
                                     BoundaryPolicy policy = BoundaryPolicy::mirror) {
  if (v.size() < 3) {
    throw std::invalid_argument("check_imf_conditions: need at least 3 samples");
  }
  const ExtremaSet ex = find_extrema(v);
  ImfCheck out;
  out.extrema_count = ex.count();
  out.crossing_count = count_zero_crossings(v);

  const auto upper = detail::envelope_or_line(v, ex.maxima, policy);
  const auto lower = detail::envelope_or_line(v, ex.minima, policy);
  double max_abs_mean = 0.0;
  double sumsq = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    max_abs_mean = std::max(max_abs_mean, std::abs(0.5 * (upper[t] + lower[t])));
    sumsq += v[t] * v[t];
  }
  out.max_envelope_mean = max_abs_mean;
  const double rms = std::sqrt(sumsq / static_cast<double>(v.size()));

  const std::size_t hi = std::max(out.extrema_count, out.crossing_count);
  const std::size_t lo = std::min(out.extrema_count, out.crossing_count);
  out.passes = (hi - lo) <= 1 && max_abs_mean <= tolerance_factor * rms;
  return out;
}

struct SiftResult {
  std::vector<double> imf;
  int iterations = 0;
  bool converged = false;  // false when the iteration cap cut sifting short
};

// Repeated envelope-mean subtraction, h <- h - (upper+lower)/2, until the
// SD criterion sum((h_prev-h)^2 / (h_prev^2+eps)) drops below threshold,
// the IMF conditions pass, or the iteration cap is reached.
inline SiftResult sift(const std::vector<double>& input, const SiftConfig& config = {}) {
  config.validate();
  if (input.size() < 3 || find_extrema(input).count() < 3) {
    throw std::invalid_argument("sift: input needs at least 3 interior extrema");
  }
  constexpr double kSdEps = 1e-12;
  SiftResult r;
  r.imf = input;
  std::vector<double> next(input.size());
  for (;;) {
    if (check_imf_conditions(r.imf, config.envelope_mean_tolerance, config.boundary).passes) {
      r.converged = true;
      break;
    }
    if (r.iterations >= config.max_sift_iterations) break;
    const ExtremaSet ex = find_extrema(r.imf);
    if (ex.count() < 3) break;
    const auto upper = detail::envelope_or_line(r.imf, ex.maxima, config.boundary);
    const auto lower = detail::envelope_or_line(r.imf, ex.minima, config.boundary);
    double sd = 0.0;
    for (std::size_t t = 0; t < r.imf.size(); ++t) {
      next[t] = r.imf[t] - 0.5 * (upper[t] + lower[t]);
      const double d = r.imf[t] - next[t];
      sd += d * d / (r.imf[t] * r.imf[t] + kSdEps);
    }
    r.imf.swap(next);
    ++r.iterations;
    if (sd < config.sd_threshold) {
      r.converged = true;
      break;
    }
  }
  return r;
}

struct Decomposition {
  std::vector<std::vector<double>> imfs;  // index 0 = highest frequency
  std::vector<double> residual;
  std::size_t source_length = 0;
  SiftConfig config;
  bool hit_max_imfs = false;

  std::size_t channel_count() const { return imfs.size() + 1; }
};

// Peels IMFs off successive residuals until the residual is monotone-or-flat
// (fewer than 3 interior extrema) or max_imfs is reached. A degenerate
// series yields zero IMFs with the residual equal to the source.
inline Decomposition decompose(const Series& series, const SiftConfig& config = {}) {
  validate_series(series);
  config.validate();
  Decomposition d;
  d.source_length = series.values.size();
  d.config = config;
  d.residual = series.values;
  while (static_cast<int>(d.imfs.size()) < config.max_imfs) {
    if (find_extrema(d.residual).count() < 3) break;
    SiftResult r = sift(d.residual, config);
    for (std::size_t t = 0; t < d.residual.size(); ++t) d.residual[t] -= r.imf[t];
    d.imfs.push_back(std::move(r.imf));
  }
  d.hit_max_imfs = static_cast<int>(d.imfs.size()) == config.max_imfs &&
                   find_extrema(d.residual).count() >= 3;
  return d;
}

// Bridge into the dataset layer: one column per IMF, residual last when
// requested.
inline ChannelMatrix channel_matrix(const Decomposition& d, bool include_residual = true) {
  const std::size_t cols = d.imfs.size() + (include_residual ? 1 : 0);
  if (cols == 0) {
    throw std::invalid_argument("channel_matrix: decomposition has no channels");
  }
  ChannelMatrix m(d.source_length, cols);
  for (std::size_t c = 0; c < d.imfs.size(); ++c) {
    m.channel_names.push_back("imf_" + std::to_string(c + 1));
    for (std::size_t t = 0; t < d.source_length; ++t) m.at(t, c) = d.imfs[c][t];
  }
  if (include_residual) {
    m.channel_names.push_back("residual");
    for (std::size_t t = 0; t < d.source_length; ++t) m.at(t, cols - 1) = d.residual[t];
  }
  return m;
}

}  // namespace imfcast
