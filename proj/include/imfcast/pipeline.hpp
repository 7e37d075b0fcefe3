#pragma once

// Orchestration: decompose -> split -> scale -> window -> train -> predict
// -> metrics -> deepshap -> aggregate (-> ablation rerun), with every
// artifact written under the output directory and listed, content-hashed,
// in a run manifest. All randomness flows from the config seed through
// named sub-seeds, so a (config, input) pair reproduces every file bitwise.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "imfcast/attribution.hpp"
#include "imfcast/checkpoint.hpp"
#include "imfcast/config.hpp"
#include "imfcast/csv.hpp"
#include "imfcast/emd.hpp"
#include "imfcast/metrics.hpp"
#include "imfcast/series.hpp"
#include "imfcast/svg.hpp"
#include "imfcast/training.hpp"

namespace imfcast {

inline constexpr const char* kArtifactVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

using ordered_json = nlohmann::ordered_json;

struct RunArtifacts {
  std::string out_dir;
  std::vector<std::string> files;  // relative paths, emission order
  std::map<std::string, std::string> file_hashes;
  std::map<std::string, MetricsBundle> metrics;        // "mlp", "lstm", "<model>_ablation"
  std::map<std::string, AttributionReport> reports;    // per model
  std::map<std::string, TrainHistory> histories;
  std::size_t channel_count = 0;
};

namespace detail {

inline std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash '" + path + "'");
  char buf[4096];
  std::uint64_t h = 1469598103934665603ull;
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  char hex[24];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("[stage ") + stage + "] " + e.what());
  }
}

inline std::string display_3dec(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline ordered_json metrics_json(const MetricsBundle& m) {
  ordered_json j;
  j["mse"] = m.mse;
  j["rmse"] = m.rmse;
  j["mae"] = m.mae;
  if (m.mape) j["mape"] = *m.mape; else j["mape"] = nullptr;
  if (m.r2) j["r2"] = *m.r2; else j["r2"] = nullptr;
  ordered_json disp;
  disp["mse"] = display_3dec(m.mse);
  disp["rmse"] = display_3dec(m.rmse);
  disp["mae"] = display_3dec(m.mae);
  if (m.mape) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f%%", *m.mape);
    disp["mape"] = buf;
  }
  if (m.r2) disp["r2"] = display_3dec(*m.r2);
  j["display"] = disp;
  ordered_json notes = ordered_json::object();
  if (!m.mape_omitted_reason.empty()) notes["mape_omitted"] = m.mape_omitted_reason;
  if (!m.r2_omitted_reason.empty()) notes["r2_omitted"] = m.r2_omitted_reason;
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stage pieces, shared by run_pipeline and the CLI subcommands.
// ---------------------------------------------------------------------------

// Channel selection: all decomposition channels minus the 1-based exclusion
// list (position K+1 is the residual when included).
inline ChannelMatrix select_channels(const std::vector<std::vector<double>>& imfs,
                                     const std::vector<double>& residual, bool include_residual,
                                     const std::vector<std::size_t>& exclude = {}) {
  std::vector<std::pair<std::string, const std::vector<double>*>> all;
  for (std::size_t k = 0; k < imfs.size(); ++k) {
    all.emplace_back("imf_" + std::to_string(k + 1), &imfs[k]);
  }
  if (include_residual) all.emplace_back("residual", &residual);
  for (const std::size_t e : exclude) {
    if (e < 1 || e > all.size()) {
      throw std::invalid_argument("excluded channel " + std::to_string(e) + " out of range 1.." +
                                  std::to_string(all.size()));
    }
  }
  std::vector<std::pair<std::string, const std::vector<double>*>> kept;
  for (std::size_t i = 0; i < all.size(); ++i) {
    bool drop = false;
    for (const std::size_t e : exclude) drop = drop || (e == i + 1);
    if (!drop) kept.push_back(all[i]);
  }
  if (kept.empty()) throw std::invalid_argument("channel exclusion removed every channel");
  const std::size_t rows = kept.front().second->size();
  ChannelMatrix m(rows, kept.size());
  for (std::size_t c = 0; c < kept.size(); ++c) {
    m.channel_names.push_back(kept[c].first);
    for (std::size_t t = 0; t < rows; ++t) m.at(t, c) = (*kept[c].second)[t];
  }
  return m;
}

struct ModelData {
  SplitSpec split;
  WindowedDataset train;
  WindowedDataset val;
};

// Rebuilds the exact windows a checkpointed model was trained against from
// a decomposition file: same channel selection, same scalers.
inline ModelData rebuild_windows(const ForecastModel& fm, const Series& original,
                                 const std::vector<std::vector<double>>& imfs,
                                 const std::vector<double>& residual) {
  ChannelMatrix raw(original.values.size(), fm.channel_names.size());
  raw.channel_names = fm.channel_names;
  for (std::size_t c = 0; c < fm.channel_names.size(); ++c) {
    const std::string& name = fm.channel_names[c];
    const std::vector<double>* src = nullptr;
    if (name == "residual") {
      src = &residual;
    } else if (name.rfind("imf_", 0) == 0) {
      const std::size_t k = std::stoul(name.substr(4));
      if (k >= 1 && k <= imfs.size()) src = &imfs[k - 1];
    }
    if (!src) {
      throw std::runtime_error("decomposition has no channel '" + name +
                               "' required by the checkpoint");
    }
    for (std::size_t t = 0; t < original.values.size(); ++t) raw.at(t, c) = (*src)[t];
  }
  ModelData d;
  d.split = chronological_split(original.values.size(), fm.split_fraction);
  const ChannelMatrix scaled = fm.input_scaler.apply(raw);
  d.train = make_windows(scaled, original, d.split.train_range, fm.window);
  d.val = make_windows(scaled, original, d.split.val_range, fm.window);
  scale_targets(d.train, fm.target_scaler);
  scale_targets(d.val, fm.target_scaler);
  return d;
}

// Fits scalers on the train block and trains one forecaster. The master
// seed fans out per model and per purpose, so mlp/lstm runs never share a
// random stream.
inline ForecastModel train_forecaster(const Series& original,
                                      const std::vector<std::vector<double>>& imfs,
                                      const std::vector<double>& residual, ModelKind kind,
                                      const PipelineConfig& cfg, TrainHistory* history_out = nullptr,
                                      const std::vector<std::size_t>& exclude = {}) {
  const ChannelMatrix raw = select_channels(imfs, residual, cfg.include_residual, exclude);
  ForecastModel fm;
  fm.kind = kind;
  fm.window = cfg.window;
  fm.channels = raw.cols;
  fm.channel_names = raw.channel_names;
  fm.split_fraction = cfg.split_fraction;
  fm.config_digest = config_digest(cfg);

  const SplitSpec split = chronological_split(original.values.size(), cfg.split_fraction);
  fm.input_scaler = fit_scaler(raw, split.train_range, cfg.scaling);
  for (std::size_t c = 0; c < fm.input_scaler.constant.size(); ++c) {
    if (fm.input_scaler.constant[c]) {
      std::cerr << "warning: channel '" << raw.channel_names[c]
                << "' is constant on the train range; scaling it as identity\n";
    }
  }
  fm.target_scaler = fit_scaler(as_matrix(original), split.train_range, cfg.scaling);

  const ChannelMatrix scaled = fm.input_scaler.apply(raw);
  WindowedDataset train_set = make_windows(scaled, original, split.train_range, cfg.window);
  scale_targets(train_set, fm.target_scaler);

  TrainConfig tc;
  tc.learning_rate = cfg.learning_rate;
  tc.batch_size = cfg.batch_size;
  tc.max_epochs = kind == ModelKind::mlp ? cfg.mlp_epochs : cfg.lstm_epochs;
  tc.patience = cfg.patience;
  tc.monitor_fraction = cfg.monitor_fraction;
  std::string tag = to_string(kind);
  if (!exclude.empty()) tag += "_ablation";
  tc.seed = derive_seed(cfg.seed, tag);
  fm.train_config = tc;

  SeededRng init_rng(derive_seed(tc.seed, "init"));
  TrainHistory hist;
  if (kind == ModelKind::mlp) {
    fm.mlp = make_mlp(cfg.window * raw.cols, 64, init_rng);
    hist = train(fm.mlp, train_set, tc);
  } else {
    fm.lstm = make_lstm(raw.cols, 10, init_rng);
    hist = train(fm.lstm, train_set, tc);
  }
  if (history_out) *history_out = hist;
  return fm;
}

inline AttributionReport explain_forecaster(const ForecastModel& fm, const ModelData& data,
                                            std::size_t background,
                                            bool score_abs_per_lag = false) {
  const BaselineSet baselines =
      draw_baselines(data.train, background, derive_seed(fm.train_config.seed, "baselines"));
  std::vector<AttributionMatrix> mats;
  mats.reserve(data.val.num_samples());
  for (std::size_t s = 0; s < data.val.num_samples(); ++s) {
    if (fm.kind == ModelKind::mlp) {
      mats.push_back(deepshap(fm.mlp, data.val.input(s), fm.window, fm.channels, baselines));
    } else {
      mats.push_back(deepshap(fm.lstm, data.val.input(s), fm.window, fm.channels, baselines));
    }
  }
  return aggregate_importance(mats, fm.channel_names, to_string(fm.kind), score_abs_per_lag);
}

// ---------------------------------------------------------------------------
// Report writers.
// ---------------------------------------------------------------------------

inline void write_metrics_json(const std::string& path, const std::string& model_tag,
                               const std::string& series_name, const MetricsBundle& m,
                               const TrainHistory& hist, const std::string& digest,
                               const MetricsBundle* ablation = nullptr,
                               const std::vector<std::size_t>* excluded = nullptr) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["model"] = model_tag;
  j["series"] = series_name;
  j["config_digest"] = digest;
  j["metrics"] = detail::metrics_json(m);
  ordered_json tr;
  tr["epochs_run"] = hist.stopped_epoch + 1;
  tr["best_epoch"] = hist.best_epoch;
  tr["best_monitor_loss"] =
      hist.best_epoch >= 0 ? ordered_json(hist.monitor_loss[static_cast<std::size_t>(hist.best_epoch)])
                           : ordered_json(nullptr);
  j["training"] = tr;
  if (ablation) {
    ordered_json ab;
    ab["excluded_channels"] = excluded ? *excluded : std::vector<std::size_t>{};
    ab["metrics"] = detail::metrics_json(*ablation);
    j["ablation"] = ab;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

inline void write_attribution_json(const std::string& path, const AttributionReport& rep,
                                   std::size_t background, const std::string& digest) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["model"] = rep.model_tag;
  j["config_digest"] = digest;
  j["sample_count"] = rep.sample_count;
  j["background"] = background;
  j["score_mode"] = rep.abs_per_lag ? "sum_of_abs_per_lag" : "abs_sum_over_lags";
  j["degenerate"] = rep.degenerate;
  ordered_json channels = ordered_json::array();
  for (std::size_t c = 0; c < rep.channel_names.size(); ++c) {
    ordered_json ch;
    ch["name"] = rep.channel_names[c];
    ch["mean_shap"] = rep.mean_shap[c];
    ch["percent"] = rep.percent[c];
    channels.push_back(ch);
  }
  j["channels"] = channels;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

inline AttributionReport read_attribution_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  ordered_json j = ordered_json::parse(in);
  AttributionReport rep;
  rep.model_tag = j.at("model").get<std::string>();
  rep.sample_count = j.at("sample_count").get<std::size_t>();
  rep.degenerate = j.at("degenerate").get<bool>();
  rep.abs_per_lag = j.at("score_mode").get<std::string>() == "sum_of_abs_per_lag";
  for (const auto& ch : j.at("channels")) {
    rep.channel_names.push_back(ch.at("name").get<std::string>());
    rep.mean_shap.push_back(ch.at("mean_shap").get<double>());
    rep.percent.push_back(ch.at("percent").get<double>());
  }
  return rep;
}

// Mirror of the attribution JSON for spreadsheets, one row per channel,
// sorted by share like the paper-style tables.
inline void write_attribution_csv(const std::string& path, const AttributionReport& rep,
                                  const std::string& meta = {}) {
  std::vector<std::size_t> order(rep.percent.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rep.percent[a] != rep.percent[b]) return rep.percent[a] > rep.percent[b];
    return a < b;
  });
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  if (!meta.empty()) out << "# " << meta << "\n";
  out << "channel,mean_shap,percent\n";
  for (const std::size_t c : order) {
    out << rep.channel_names[c] << ',' << format_double(rep.mean_shap[c]) << ','
        << format_double(rep.percent[c]) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Full pipeline.
// ---------------------------------------------------------------------------

inline RunArtifacts run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  const std::string digest = config_digest(cfg);
  RunArtifacts art;
  art.out_dir = cfg.out_dir;
  fs::create_directories(cfg.out_dir);
  const auto emit = [&](const std::string& rel) {
    art.files.push_back(rel);
    art.file_hashes[rel] = detail::hash_file((fs::path(cfg.out_dir) / rel).string());
  };
  const std::string meta = std::string("imfcast ") + kArtifactVersion +
                           " config_digest=" + digest + " seed=" + std::to_string(cfg.seed);

  const Series input = detail::run_stage(
      "load", [&] { return load_csv(cfg.input_path, cfg.value_column); });

  detail::run_stage("decompose", [&] {
    const Decomposition d = decompose(input, cfg.sift);
    write_decomposition_csv((fs::path(cfg.out_dir) / "decomposition.csv").string(), input,
                            d.imfs, d.residual, meta);
    return 0;
  });
  emit("decomposition.csv");

  // Later stages consume the emitted file rather than the in-memory
  // decomposition, so a staged decompose/train/predict chain reproduces the
  // one-shot run exactly.
  DecompositionFile dec = detail::run_stage("decompose", [&] {
    return read_decomposition_csv((fs::path(cfg.out_dir) / "decomposition.csv").string());
  });
  dec.original.name = input.name;
  art.channel_count = dec.imfs.size() + (cfg.include_residual ? 1 : 0);

  std::vector<ModelKind> kinds;
  if (cfg.model == "mlp" || cfg.model == "both") kinds.push_back(ModelKind::mlp);
  if (cfg.model == "lstm" || cfg.model == "both") kinds.push_back(ModelKind::lstm);

  for (const ModelKind kind : kinds) {
    const std::string tag = to_string(kind);

    TrainHistory hist;
    const ForecastModel fm = detail::run_stage("train", [&] {
      return train_forecaster(dec.original, dec.imfs, dec.residual, kind, cfg, &hist);
    });
    const std::string ckpt_rel = "model_" + tag + ".ckpt";
    detail::run_stage("train", [&] {
      save_checkpoint((fs::path(cfg.out_dir) / ckpt_rel).string(), fm);
      return 0;
    });
    emit(ckpt_rel);

    const ModelData data = detail::run_stage(
        "predict", [&] { return rebuild_windows(fm, dec.original, dec.imfs, dec.residual); });
    const std::vector<double> predicted =
        detail::run_stage("predict", [&] { return predict_series(fm, data.val); });
    const std::string pred_rel = "predictions_" + tag + ".csv";
    detail::run_stage("predict", [&] {
      write_predictions_csv((fs::path(cfg.out_dir) / pred_rel).string(),
                            data.val.sample_time_index, data.val.targets, predicted, meta);
      return 0;
    });
    emit(pred_rel);

    const MetricsBundle mb = detail::run_stage(
        "metrics", [&] { return compute_metrics(data.val.targets, predicted); });
    art.metrics[tag] = mb;
    art.histories[tag] = hist;

    // Optional ablation rerun with the excluded channels dropped.
    MetricsBundle ablation_mb;
    bool have_ablation = false;
    if (!cfg.exclude_imfs.empty()) {
      detail::run_stage("ablate", [&] {
        ForecastModel ab = train_forecaster(dec.original, dec.imfs, dec.residual, kind, cfg,
                                            nullptr, cfg.exclude_imfs);
        const ModelData ab_data = rebuild_windows(ab, dec.original, dec.imfs, dec.residual);
        ablation_mb = compute_metrics(ab_data.val.targets, predict_series(ab, ab_data.val));
        return 0;
      });
      have_ablation = true;
      art.metrics[tag + "_ablation"] = ablation_mb;
    }

    const std::string metrics_rel = "metrics_" + tag + ".json";
    detail::run_stage("metrics", [&] {
      write_metrics_json((fs::path(cfg.out_dir) / metrics_rel).string(), tag, dec.original.name,
                         mb, hist, digest, have_ablation ? &ablation_mb : nullptr,
                         have_ablation ? &cfg.exclude_imfs : nullptr);
      return 0;
    });
    emit(metrics_rel);

    const AttributionReport rep = detail::run_stage("explain", [&] {
      return explain_forecaster(fm, data, cfg.background, cfg.score_abs_per_lag);
    });
    art.reports[tag] = rep;
    const std::string attr_json_rel = "attribution_" + tag + ".json";
    const std::string attr_csv_rel = "attribution_" + tag + ".csv";
    detail::run_stage("explain", [&] {
      write_attribution_json((fs::path(cfg.out_dir) / attr_json_rel).string(), rep,
                             cfg.background, digest);
      write_attribution_csv((fs::path(cfg.out_dir) / attr_csv_rel).string(), rep, meta);
      return 0;
    });
    emit(attr_json_rel);
    emit(attr_csv_rel);

    // Plots are best-effort: failures are logged and do not fail the run.
    try {
      const std::string overlay_rel = "prediction_" + tag + ".svg";
      const std::string bars_rel = "importance_" + tag + ".svg";
      write_overlay_svg((fs::path(cfg.out_dir) / overlay_rel).string(),
                        data.val.sample_time_index, data.val.targets, predicted,
                        dec.original.name + " validation, " + tag, meta);
      write_importance_svg((fs::path(cfg.out_dir) / bars_rel).string(), rep,
                           dec.original.name + " per-channel importance, " + tag, meta);
      emit(overlay_rel);
      emit(bars_rel);
    } catch (const std::exception& e) {
      std::cerr << "plot stage failed (non-fatal): " << e.what() << '\n';
    }
  }

  // Manifest goes last and lists every other artifact with its hash.
  detail::run_stage("manifest", [&] {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["artifact"] = "imfcast";
    j["version"] = kArtifactVersion;
    j["config_digest"] = digest;
    j["seed"] = cfg.seed;
    ordered_json cfg_j = ordered_json::object();
    {
      std::istringstream ss(serialize_config(cfg));
      std::string line;
      while (std::getline(ss, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) cfg_j[line.substr(0, eq)] = line.substr(eq + 1);
      }
    }
    j["config"] = cfg_j;
    ordered_json files = ordered_json::array();
    for (const std::string& rel : art.files) {
      ordered_json f;
      f["path"] = rel;
      f["fnv1a64"] = art.file_hashes.at(rel);
      files.push_back(f);
    }
    j["files"] = files;
    std::ofstream out(fs::path(cfg.out_dir) / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest");
    out << j.dump(2) << '\n';
    return 0;
  });
  art.files.push_back("manifest.json");
  art.file_hashes["manifest.json"] =
      detail::hash_file((fs::path(cfg.out_dir) / "manifest.json").string());
  return art;
}

}  // namespace imfcast
