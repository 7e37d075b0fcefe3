#pragma once

// Univariate series data model: chronological splitting, per-channel
// scaling and sliding-window dataset construction. Everything here is a
// pure function of its inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace imfcast {

struct Series {
  std::string name;
  std::vector<std::int64_t> timestamps;  // day ordinals or plain ticks, strictly increasing
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

inline void validate_series(const Series& s) {
  if (s.values.size() < 3) {
    throw std::invalid_argument("series '" + s.name + "': need at least 3 observations, got " +
                                std::to_string(s.values.size()));
  }
  if (s.timestamps.size() != s.values.size()) {
    throw std::invalid_argument("series '" + s.name + "': timestamp/value length mismatch");
  }
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (!std::isfinite(s.values[i])) {
      throw std::invalid_argument("series '" + s.name + "': non-finite value at index " +
                                  std::to_string(i));
    }
    if (i > 0 && s.timestamps[i] <= s.timestamps[i - 1]) {
      throw std::invalid_argument("series '" + s.name + "': timestamps not strictly increasing at index " +
                                  std::to_string(i));
    }
  }
}

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // half-open

  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
};

struct SplitSpec {
  double train_fraction = 0.75;
  IndexRange train_range;
  IndexRange val_range;
};

// Contiguous, exhaustive, no shuffling. Boundary = floor(fraction * length).
inline SplitSpec chronological_split(std::size_t length, double fraction) {
  if (!(fraction > 0.0) || !(fraction < 1.0)) {
    throw std::invalid_argument("split fraction must lie in (0,1), got " + std::to_string(fraction));
  }
  if (length < 8) {
    throw std::invalid_argument("series too short to split: length " + std::to_string(length));
  }
  const auto boundary =
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(length)));
  if (boundary < 1 || boundary >= length) {
    throw std::invalid_argument("split leaves an empty side: boundary " + std::to_string(boundary) +
                                " of " + std::to_string(length));
  }
  SplitSpec spec;
  spec.train_fraction = fraction;
  spec.train_range = {0, boundary};
  spec.val_range = {boundary, length};
  return spec;
}

// Rows are time, columns are channels (IMF_1 ... IMF_K, residual last when
// configured).
struct ChannelMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major
  std::vector<std::string> channel_names;

  ChannelMatrix() = default;
  ChannelMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
};

enum class ScalingKind { min_max, standardize };

// Per-channel affine transform fitted exclusively on train rows. Constant
// channels degrade to the identity and are flagged so callers can warn.
struct Scaler {
  ScalingKind kind = ScalingKind::min_max;
  IndexRange fitted_range;
  std::vector<double> offset;  // min (min_max) or mean (standardize)
  std::vector<double> scale;   // max-min or stddev; 1.0 for constant channels
  std::vector<std::uint8_t> constant;

  std::size_t channels() const { return offset.size(); }

  double transform(double v, std::size_t c) const { return (v - offset[c]) / scale[c]; }
  double inverse(double v, std::size_t c) const { return v * scale[c] + offset[c]; }

  ChannelMatrix apply(const ChannelMatrix& m) const {
    if (m.cols != channels()) {
      throw std::invalid_argument("scaler/matrix channel mismatch");
    }
    ChannelMatrix out = m;
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t c = 0; c < m.cols; ++c) {
        out.at(r, c) = transform(m.at(r, c), c);
      }
    }
    return out;
  }
};

inline Scaler fit_scaler(const ChannelMatrix& m, IndexRange train_range,
                         ScalingKind kind = ScalingKind::min_max) {
  if (train_range.empty()) {
    throw std::invalid_argument("fit_scaler: empty train range");
  }
  if (train_range.end > m.rows) {
    throw std::invalid_argument("fit_scaler: train range exceeds matrix rows");
  }
  Scaler s;
  s.kind = kind;
  s.fitted_range = train_range;
  s.offset.assign(m.cols, 0.0);
  s.scale.assign(m.cols, 1.0);
  s.constant.assign(m.cols, 0);
  for (std::size_t c = 0; c < m.cols; ++c) {
    if (kind == ScalingKind::min_max) {
      double lo = m.at(train_range.begin, c);
      double hi = lo;
      for (std::size_t r = train_range.begin; r < train_range.end; ++r) {
        const double v = m.at(r, c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi > lo) {
        s.offset[c] = lo;
        s.scale[c] = hi - lo;
      } else {
        s.constant[c] = 1;  // identity transform
      }
    } else {
      double mean = 0.0;
      for (std::size_t r = train_range.begin; r < train_range.end; ++r) mean += m.at(r, c);
      mean /= static_cast<double>(train_range.size());
      double var = 0.0;
      for (std::size_t r = train_range.begin; r < train_range.end; ++r) {
        const double d = m.at(r, c) - mean;
        var += d * d;
      }
      var /= static_cast<double>(train_range.size());
      const double sd = std::sqrt(var);
      if (sd > 0.0) {
        s.offset[c] = mean;
        s.scale[c] = sd;
      } else {
        s.constant[c] = 1;
      }
    }
  }
  return s;
}

// Sliding windows over K channels with next-step targets taken from the
// original (unscaled) series. Scaled targets are filled by scale_targets.
struct WindowedDataset {
  std::size_t window = 0;
  std::size_t channels = 0;
  std::vector<double> inputs;   // sample-major, [s][n][k]
  std::vector<double> targets;  // original units
  std::vector<double> targets_scaled;
  std::vector<std::size_t> sample_time_index;  // global index of the target (t+1)

  std::size_t num_samples() const { return targets.size(); }
  const double* input(std::size_t s) const { return inputs.data() + s * window * channels; }
};

inline WindowedDataset make_windows(const ChannelMatrix& m, const Series& original,
                                    IndexRange range, std::size_t window_len) {
  if (window_len < 1) {
    throw std::invalid_argument("make_windows: window length must be >= 1");
  }
  if (range.end > m.rows || m.rows != original.values.size()) {
    throw std::invalid_argument("make_windows: range/matrix/series shape mismatch");
  }
  if (range.size() < window_len + 1) {
    throw std::invalid_argument("make_windows: range of length " + std::to_string(range.size()) +
                                " cannot hold a window of " + std::to_string(window_len) +
                                " plus a target");
  }
  WindowedDataset d;
  d.window = window_len;
  d.channels = m.cols;
  const std::size_t n = range.size() - window_len;
  d.inputs.resize(n * window_len * m.cols);
  d.targets.resize(n);
  d.sample_time_index.resize(n);
  std::size_t s = 0;
  for (std::size_t t = range.begin + window_len - 1; t + 1 < range.end; ++t, ++s) {
    double* dst = d.inputs.data() + s * window_len * m.cols;
    for (std::size_t nlag = 0; nlag < window_len; ++nlag) {
      const std::size_t r = t - window_len + 1 + nlag;
      for (std::size_t c = 0; c < m.cols; ++c) {
        dst[nlag * m.cols + c] = m.at(r, c);
      }
    }
    d.targets[s] = original.values[t + 1];
    d.sample_time_index[s] = t + 1;
  }
  return d;
}

// Target scaler is a 1-channel Scaler fitted on the original series.
inline void scale_targets(WindowedDataset& d, const Scaler& target_scaler) {
  if (target_scaler.channels() != 1) {
    throw std::invalid_argument("scale_targets: target scaler must have one channel");
  }
  d.targets_scaled.resize(d.targets.size());
  for (std::size_t s = 0; s < d.targets.size(); ++s) {
    d.targets_scaled[s] = target_scaler.transform(d.targets[s], 0);
  }
}

// 1-column matrix view of a series, for fitting the target scaler.
inline ChannelMatrix as_matrix(const Series& s) {
  ChannelMatrix m(s.values.size(), 1);
  m.channel_names = {s.name};
  for (std::size_t i = 0; i < s.values.size(); ++i) m.at(i, 0) = s.values[i];
  return m;
}

}  // namespace imfcast
