#pragma once

// Experiment configuration: a flat key=value text file. Unknown keys are
// errors. The canonical serialization feeds the config digest recorded in
// every output.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "imfcast/csv.hpp"
#include "imfcast/emd.hpp"
#include "imfcast/rng.hpp"
#include "imfcast/series.hpp"

namespace imfcast {

struct PipelineConfig {
  std::string input_path;
  std::string value_column = "Close";
  std::string model = "mlp";  // mlp | lstm | both
  std::size_t window = 10;
  double split_fraction = 0.75;
  SiftConfig sift;
  bool include_residual = true;
  ScalingKind scaling = ScalingKind::min_max;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  int mlp_epochs = 50;
  int lstm_epochs = 100;
  int patience = 5;
  double monitor_fraction = 0.1;
  std::uint64_t seed = 42;
  std::size_t background = 100;  // baseline windows for attribution
  // Channel score: |sum of phi over lags| by default; the sum-of-|phi|
  // alternative sits behind this switch and is recorded in the report.
  bool score_abs_per_lag = false;
  std::vector<std::size_t> exclude_imfs;  // 1-based channel indices dropped in the ablation run
  std::string out_dir = "out";

  void validate() const {
    if (model != "mlp" && model != "lstm" && model != "both") {
      throw std::invalid_argument("model must be mlp, lstm or both (got '" + model + "')");
    }
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    if (!(split_fraction > 0.0) || !(split_fraction < 1.0)) {
      throw std::invalid_argument("split must lie in (0,1)");
    }
    if (background < 1) throw std::invalid_argument("background must be >= 1");
    sift.validate();
  }
};

namespace detail {

inline std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += (i ? "," : "") + std::to_string(v[i]);
  }
  return out;
}

inline std::vector<std::size_t> parse_size_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoul(tok));
  }
  return out;
}

}  // namespace detail

inline void apply_config_key(PipelineConfig& c, const std::string& key, const std::string& value) {
  if (key == "input") c.input_path = value;
  else if (key == "column") c.value_column = value;
  else if (key == "model") c.model = value;
  else if (key == "window") c.window = std::stoul(value);
  else if (key == "split") c.split_fraction = std::stod(value);
  else if (key == "sd_threshold") c.sift.sd_threshold = std::stod(value);
  else if (key == "max_sift_iterations") c.sift.max_sift_iterations = std::stoi(value);
  else if (key == "max_imfs") c.sift.max_imfs = std::stoi(value);
  else if (key == "envelope_mean_tolerance") c.sift.envelope_mean_tolerance = std::stod(value);
  else if (key == "boundary") {
    if (value == "mirror") c.sift.boundary = BoundaryPolicy::mirror;
    else if (value == "clamp") c.sift.boundary = BoundaryPolicy::clamp;
    else throw std::invalid_argument("boundary must be mirror or clamp (got '" + value + "')");
  } else if (key == "include_residual") c.include_residual = value == "true" || value == "1";
  else if (key == "scaling") {
    if (value == "minmax") c.scaling = ScalingKind::min_max;
    else if (value == "standardize") c.scaling = ScalingKind::standardize;
    else throw std::invalid_argument("scaling must be minmax or standardize (got '" + value + "')");
  } else if (key == "learning_rate") c.learning_rate = std::stod(value);
  else if (key == "batch_size") c.batch_size = std::stoul(value);
  else if (key == "mlp_epochs") c.mlp_epochs = std::stoi(value);
  else if (key == "lstm_epochs") c.lstm_epochs = std::stoi(value);
  else if (key == "patience") c.patience = std::stoi(value);
  else if (key == "monitor_fraction") c.monitor_fraction = std::stod(value);
  else if (key == "seed") c.seed = std::stoull(value);
  else if (key == "background") c.background = std::stoul(value);
  else if (key == "score_mode") {
    if (value == "abs_sum_over_lags") c.score_abs_per_lag = false;
    else if (value == "sum_of_abs_per_lag") c.score_abs_per_lag = true;
    else throw std::invalid_argument("score_mode must be abs_sum_over_lags or sum_of_abs_per_lag");
  }
  else if (key == "exclude_imfs") c.exclude_imfs = detail::parse_size_list(value);
  else if (key == "out") c.out_dir = value;
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

inline PipelineConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  PipelineConfig c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    try {
      apply_config_key(c, line.substr(0, eq), line.substr(eq + 1));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

// Canonical form: fixed key order, %.17g reals. Serves both the config echo
// and the digest. The output directory is deliberately not part of the
// experiment identity, so runs into different directories stay comparable.
inline std::string serialize_config(const PipelineConfig& c) {
  std::ostringstream out;
  out << "input=" << c.input_path << '\n';
  out << "column=" << c.value_column << '\n';
  out << "model=" << c.model << '\n';
  out << "window=" << c.window << '\n';
  out << "split=" << format_double(c.split_fraction) << '\n';
  out << "sd_threshold=" << format_double(c.sift.sd_threshold) << '\n';
  out << "max_sift_iterations=" << c.sift.max_sift_iterations << '\n';
  out << "max_imfs=" << c.sift.max_imfs << '\n';
  out << "envelope_mean_tolerance=" << format_double(c.sift.envelope_mean_tolerance) << '\n';
  out << "boundary=" << (c.sift.boundary == BoundaryPolicy::mirror ? "mirror" : "clamp") << '\n';
  out << "include_residual=" << (c.include_residual ? "true" : "false") << '\n';
  out << "scaling=" << (c.scaling == ScalingKind::min_max ? "minmax" : "standardize") << '\n';
  out << "learning_rate=" << format_double(c.learning_rate) << '\n';
  out << "batch_size=" << c.batch_size << '\n';
  out << "mlp_epochs=" << c.mlp_epochs << '\n';
  out << "lstm_epochs=" << c.lstm_epochs << '\n';
  out << "patience=" << c.patience << '\n';
  out << "monitor_fraction=" << format_double(c.monitor_fraction) << '\n';
  out << "seed=" << c.seed << '\n';
  out << "background=" << c.background << '\n';
  out << "score_mode=" << (c.score_abs_per_lag ? "sum_of_abs_per_lag" : "abs_sum_over_lags")
      << '\n';
  out << "exclude_imfs=" << detail::join_sizes(c.exclude_imfs) << '\n';
  return out.str();
}

inline std::string config_digest(const PipelineConfig& c) {
  const std::string s = serialize_config(c);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(s.data(), s.size())));
  return buf;
}

}  // namespace imfcast
