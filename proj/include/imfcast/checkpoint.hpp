#pragma once

// Versioned text checkpoint for a trained forecaster: parameters, training
// configuration, scalers and window/channel metadata. Values are written
// with %.17g, so save -> load -> save reproduces the file byte for byte.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "imfcast/csv.hpp"
#include "imfcast/training.hpp"

namespace imfcast {

inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline void write_vector(std::ofstream& out, const std::string& key,
                         const std::vector<double>& v) {
  out << key;
  for (const double x : v) out << ' ' << format_double(x);
  out << '\n';
}

inline void write_scaler(std::ofstream& out, const std::string& prefix, const Scaler& s) {
  out << prefix << "_kind " << (s.kind == ScalingKind::min_max ? "minmax" : "standardize")
      << '\n';
  out << prefix << "_range " << s.fitted_range.begin << ' ' << s.fitted_range.end << '\n';
  write_vector(out, prefix + "_offset", s.offset);
  write_vector(out, prefix + "_scale", s.scale);
  out << prefix << "_constant";
  for (const auto f : s.constant) out << ' ' << int(f);
  out << '\n';
}

class LineReader {
 public:
  explicit LineReader(const std::string& path) : in_(path), path_(path) {
    if (!in_) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  }

  // Returns the rest of the line after the expected key.
  std::string expect(const std::string& key) {
    std::string line;
    if (!std::getline(in_, line)) {
      throw std::runtime_error("'" + path_ + "': truncated checkpoint, expected '" + key + "'");
    }
    if (line.rfind(key, 0) != 0 || (line.size() > key.size() && line[key.size()] != ' ')) {
      throw std::runtime_error("'" + path_ + "': expected key '" + key + "', got '" + line + "'");
    }
    return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
  }

  std::vector<double> expect_vector(const std::string& key, std::size_t n) {
    std::istringstream ss(expect(key));
    std::vector<double> v(n);
    std::string tok;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(ss >> tok)) {
        throw std::runtime_error("'" + path_ + "': key '" + key + "' holds fewer than " +
                                 std::to_string(n) + " values");
      }
      v[i] = parse_double(tok, 0, key);
    }
    if (ss >> tok) {
      throw std::runtime_error("'" + path_ + "': key '" + key + "' holds extra values");
    }
    return v;
  }

 private:
  std::ifstream in_;
  std::string path_;
};

inline Scaler read_scaler(LineReader& r, const std::string& prefix, std::size_t channels) {
  Scaler s;
  const std::string kind = r.expect(prefix + "_kind");
  s.kind = kind == "minmax" ? ScalingKind::min_max : ScalingKind::standardize;
  {
    std::istringstream ss(r.expect(prefix + "_range"));
    ss >> s.fitted_range.begin >> s.fitted_range.end;
  }
  s.offset = r.expect_vector(prefix + "_offset", channels);
  s.scale = r.expect_vector(prefix + "_scale", channels);
  {
    std::istringstream ss(r.expect(prefix + "_constant"));
    s.constant.resize(channels);
    for (std::size_t i = 0; i < channels; ++i) {
      int f = 0;
      ss >> f;
      s.constant[i] = static_cast<std::uint8_t>(f);
    }
  }
  return s;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const ForecastModel& fm) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << "imfcast-checkpoint " << kCheckpointVersion << '\n';
  out << "config_digest " << (fm.config_digest.empty() ? "-" : fm.config_digest) << '\n';
  out << "kind " << to_string(fm.kind) << '\n';
  out << "window " << fm.window << '\n';
  out << "channels " << fm.channels << '\n';
  out << "split_fraction " << format_double(fm.split_fraction) << '\n';
  out << "channel_names";
  for (const auto& n : fm.channel_names) out << ' ' << n;
  out << '\n';
  detail::write_scaler(out, "input_scaler", fm.input_scaler);
  detail::write_scaler(out, "target_scaler", fm.target_scaler);
  const TrainConfig& tc = fm.train_config;
  out << "train learning_rate " << format_double(tc.learning_rate) << " batch_size "
      << tc.batch_size << " max_epochs " << tc.max_epochs << " patience " << tc.patience
      << " monitor_fraction " << format_double(tc.monitor_fraction) << " seed " << tc.seed
      << " beta1 " << format_double(tc.beta1) << " beta2 " << format_double(tc.beta2)
      << " epsilon " << format_double(tc.epsilon) << '\n';
  std::vector<double> flat;
  if (fm.kind == ModelKind::mlp) {
    out << "mlp input_size " << fm.mlp.input_size << " hidden_size " << fm.mlp.hidden_size
        << " activation "
        << (fm.mlp.hidden_activation == Activation::tanh_fn ? "tanh" : "linear") << '\n';
    fm.mlp.to_flat(flat);
  } else {
    out << "lstm input_size " << fm.lstm.input_size << " units " << fm.lstm.units << '\n';
    fm.lstm.to_flat(flat);
  }
  detail::write_vector(out, "params", flat);
  if (!out) throw std::runtime_error("write failed for checkpoint '" + path + "'");
}

inline ForecastModel load_checkpoint(const std::string& path) {
  detail::LineReader r(path);
  const std::string version = r.expect("imfcast-checkpoint");
  if (version != std::to_string(kCheckpointVersion)) {
    throw std::runtime_error("'" + path + "': unsupported checkpoint version " + version);
  }
  ForecastModel fm;
  fm.config_digest = r.expect("config_digest");
  if (fm.config_digest == "-") fm.config_digest.clear();
  const std::string kind = r.expect("kind");
  if (kind == "mlp") {
    fm.kind = ModelKind::mlp;
  } else if (kind == "lstm") {
    fm.kind = ModelKind::lstm;
  } else {
    throw std::runtime_error("'" + path + "': unknown model kind '" + kind + "'");
  }
  fm.window = std::stoul(r.expect("window"));
  fm.channels = std::stoul(r.expect("channels"));
  fm.split_fraction = parse_double(r.expect("split_fraction"), 0, "split_fraction");
  {
    std::istringstream ss(r.expect("channel_names"));
    std::string name;
    while (ss >> name) fm.channel_names.push_back(name);
  }
  fm.input_scaler = detail::read_scaler(r, "input_scaler", fm.channels);
  fm.target_scaler = detail::read_scaler(r, "target_scaler", 1);
  {
    std::istringstream ss(r.expect("train"));
    std::string key, val;
    TrainConfig& tc = fm.train_config;
    while (ss >> key >> val) {
      if (key == "learning_rate") tc.learning_rate = parse_double(val, 0, key);
      else if (key == "batch_size") tc.batch_size = std::stoul(val);
      else if (key == "max_epochs") tc.max_epochs = std::stoi(val);
      else if (key == "patience") tc.patience = std::stoi(val);
      else if (key == "monitor_fraction") tc.monitor_fraction = parse_double(val, 0, key);
      else if (key == "seed") tc.seed = std::stoull(val);
      else if (key == "beta1") tc.beta1 = parse_double(val, 0, key);
      else if (key == "beta2") tc.beta2 = parse_double(val, 0, key);
      else if (key == "epsilon") tc.epsilon = parse_double(val, 0, key);
      else throw std::runtime_error("'" + path + "': unknown train key '" + key + "'");
    }
  }
  if (fm.kind == ModelKind::mlp) {
    std::istringstream ss(r.expect("mlp"));
    std::string key;
    std::size_t input_size = 0, hidden_size = 0;
    std::string activation = "tanh";
    while (ss >> key) {
      if (key == "input_size") ss >> input_size;
      else if (key == "hidden_size") ss >> hidden_size;
      else if (key == "activation") ss >> activation;
    }
    SeededRng dummy(0);
    fm.mlp = make_mlp(input_size, hidden_size, dummy,
                      activation == "tanh" ? Activation::tanh_fn : Activation::linear);
    fm.mlp.from_flat(r.expect_vector("params", fm.mlp.parameter_count()));
  } else {
    std::istringstream ss(r.expect("lstm"));
    std::string key;
    std::size_t input_size = 0, units = 0;
    while (ss >> key) {
      if (key == "input_size") ss >> input_size;
      else if (key == "units") ss >> units;
    }
    SeededRng dummy(0);
    fm.lstm = make_lstm(input_size, units, dummy);
    fm.lstm.from_flat(r.expect_vector("params", fm.lstm.parameter_count()));
  }
  return fm;
}

}  // namespace imfcast
