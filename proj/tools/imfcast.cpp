// Command-line front end: decompose, train, predict, explain, run, plot.
// Each subcommand is a thin wrapper over the pipeline stage functions, so a
// staged invocation reproduces the one-shot `run` results.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imfcast/pipeline.hpp"

namespace fs = std::filesystem;
using namespace imfcast;

namespace {

void add_sift_flags(CLI::App* cmd, PipelineConfig& cfg, std::string& boundary) {
  cmd->add_option("--sd-threshold", cfg.sift.sd_threshold, "Sifting SD stop threshold");
  cmd->add_option("--max-sift-iterations", cfg.sift.max_sift_iterations,
                  "Cap on sifting iterations per IMF");
  cmd->add_option("--max-imfs", cfg.sift.max_imfs, "Cap on extracted IMFs");
  cmd->add_option("--boundary", boundary, "Envelope boundary policy: mirror|clamp");
}

void apply_boundary(PipelineConfig& cfg, const std::string& boundary) {
  if (boundary.empty()) return;
  apply_config_key(cfg, "boundary", boundary);
}

std::string meta_line(const PipelineConfig& cfg) {
  return std::string("imfcast ") + kArtifactVersion + " config_digest=" + config_digest(cfg) +
         " seed=" + std::to_string(cfg.seed);
}

int cmd_decompose(const PipelineConfig& cfg) {
  const Series input = load_csv(cfg.input_path, cfg.value_column);
  const Decomposition d = decompose(input, cfg.sift);
  fs::create_directories(cfg.out_dir);
  const std::string path = (fs::path(cfg.out_dir) / "decomposition.csv").string();
  write_decomposition_csv(path, input, d.imfs, d.residual, meta_line(cfg));
  std::cout << path << ": " << d.imfs.size() << " IMFs + residual over "
            << d.source_length << " samples\n";
  return 0;
}

int cmd_train(const PipelineConfig& cfg, const std::string& decomposition_path,
              ModelKind kind) {
  const DecompositionFile dec = read_decomposition_csv(decomposition_path);
  TrainHistory hist;
  const ForecastModel fm =
      train_forecaster(dec.original, dec.imfs, dec.residual, kind, cfg, &hist, cfg.exclude_imfs);
  fs::create_directories(cfg.out_dir);
  const std::string path =
      (fs::path(cfg.out_dir) / ("model_" + std::string(to_string(kind)) + ".ckpt")).string();
  save_checkpoint(path, fm);
  std::cout << path << ": trained " << to_string(kind) << " for " << (hist.stopped_epoch + 1)
            << " epochs (best " << hist.best_epoch << ", monitor loss "
            << (hist.best_epoch >= 0 ? hist.monitor_loss[static_cast<std::size_t>(hist.best_epoch)]
                                     : 0.0)
            << ")\n";
  return 0;
}

int cmd_predict(const PipelineConfig& cfg, const std::string& decomposition_path,
                const std::string& checkpoint_path) {
  const DecompositionFile dec = read_decomposition_csv(decomposition_path);
  const ForecastModel fm = load_checkpoint(checkpoint_path);
  const ModelData data = rebuild_windows(fm, dec.original, dec.imfs, dec.residual);
  const std::vector<double> predicted = predict_series(fm, data.val);
  const MetricsBundle mb = compute_metrics(data.val.targets, predicted);
  fs::create_directories(cfg.out_dir);
  const std::string tag = to_string(fm.kind);
  const std::string pred_path =
      (fs::path(cfg.out_dir) / ("predictions_" + tag + ".csv")).string();
  write_predictions_csv(pred_path, data.val.sample_time_index, data.val.targets, predicted,
                        meta_line(cfg));
  const std::string metrics_path =
      (fs::path(cfg.out_dir) / ("metrics_" + tag + ".json")).string();
  TrainHistory no_hist;
  write_metrics_json(metrics_path, tag, dec.original.name, mb, no_hist, config_digest(cfg));
  std::cout << pred_path << ": " << predicted.size() << " predictions, rmse " << mb.rmse;
  if (mb.r2) std::cout << ", r2 " << *mb.r2;
  std::cout << "\n";
  return 0;
}

int cmd_explain(const PipelineConfig& cfg, const std::string& decomposition_path,
                const std::string& checkpoint_path) {
  const DecompositionFile dec = read_decomposition_csv(decomposition_path);
  const ForecastModel fm = load_checkpoint(checkpoint_path);
  const ModelData data = rebuild_windows(fm, dec.original, dec.imfs, dec.residual);
  const AttributionReport rep = explain_forecaster(fm, data, cfg.background);
  fs::create_directories(cfg.out_dir);
  const std::string tag = to_string(fm.kind);
  write_attribution_json((fs::path(cfg.out_dir) / ("attribution_" + tag + ".json")).string(),
                         rep, cfg.background, config_digest(cfg));
  write_attribution_csv((fs::path(cfg.out_dir) / ("attribution_" + tag + ".csv")).string(), rep,
                        meta_line(cfg));
  std::cout << "attribution_" << tag << ".json: " << rep.sample_count << " samples";
  for (std::size_t c = 0; c < rep.channel_names.size(); ++c) {
    std::cout << (c ? ", " : "; ") << rep.channel_names[c] << " "
              << detail::display_3dec(rep.percent[c]) << "%";
  }
  std::cout << "\n";
  return 0;
}

int cmd_run(const PipelineConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunArtifacts art = run_pipeline(cfg);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  // Timing goes to stderr only; artifacts stay bitwise reproducible.
  std::cerr << "pipeline finished in " << elapsed << " s\n";
  std::cout << "wrote " << art.files.size() << " files to " << art.out_dir << "\n";
  for (const auto& [tag, mb] : art.metrics) {
    std::cout << "  " << tag << ": rmse " << mb.rmse;
    if (mb.r2) std::cout << ", r2 " << *mb.r2;
    if (mb.mape) std::cout << ", mape " << *mb.mape << "%";
    std::cout << "\n";
  }
  for (const auto& [tag, rep] : art.reports) {
    std::size_t top = 0;
    for (std::size_t c = 1; c < rep.percent.size(); ++c) {
      if (rep.percent[c] > rep.percent[top]) top = c;
    }
    if (!rep.percent.empty()) {
      std::cout << "  " << tag << " top channel: " << rep.channel_names[top] << " ("
                << detail::display_3dec(rep.percent[top]) << "%)\n";
    }
  }
  return 0;
}

int cmd_plot(const std::string& artifacts_dir) {
  int rendered = 0;
  for (const std::string tag : {"mlp", "lstm"}) {
    const fs::path pred = fs::path(artifacts_dir) / ("predictions_" + tag + ".csv");
    if (fs::exists(pred)) {
      const PredictionsFile p = read_predictions_csv(pred.string());
      write_overlay_svg((fs::path(artifacts_dir) / ("prediction_" + tag + ".svg")).string(),
                        p.t, p.actual, p.predicted, "validation, " + tag);
      ++rendered;
    }
    const fs::path attr = fs::path(artifacts_dir) / ("attribution_" + tag + ".json");
    if (fs::exists(attr)) {
      const AttributionReport rep = read_attribution_json(attr.string());
      write_importance_svg((fs::path(artifacts_dir) / ("importance_" + tag + ".svg")).string(),
                           rep, "per-channel importance, " + tag);
      ++rendered;
    }
  }
  if (rendered == 0) {
    std::cerr << "no predictions_*.csv or attribution_*.json found in " << artifacts_dir << "\n";
    return 1;
  }
  std::cout << "rendered " << rendered << " SVG file(s) in " << artifacts_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explainable IMF-based time-series forecasting"};
  app.require_subcommand(1);

  PipelineConfig cfg;
  std::string config_path, boundary, decomposition_path, checkpoint_path, artifacts_dir;
  std::string exclude_csv;

  auto* dec_cmd = app.add_subcommand("decompose", "Decompose a series into IMFs + residual");
  dec_cmd->add_option("--input", cfg.input_path, "Input CSV")->required();
  dec_cmd->add_option("--column", cfg.value_column, "Value column name");
  dec_cmd->add_option("--out", cfg.out_dir, "Output directory");
  dec_cmd->add_option("--seed", cfg.seed, "Master seed");
  add_sift_flags(dec_cmd, cfg, boundary);

  auto* train_cmd = app.add_subcommand("train", "Train a forecaster on a decomposition");
  train_cmd->add_option("--decomposition", decomposition_path, "decomposition.csv path")
      ->required();
  train_cmd->add_option("--model", cfg.model, "mlp|lstm");
  train_cmd->add_option("--window", cfg.window, "Window length N");
  train_cmd->add_option("--split", cfg.split_fraction, "Train fraction");
  train_cmd->add_option("--seed", cfg.seed, "Master seed");
  train_cmd->add_option("--batch-size", cfg.batch_size, "Mini-batch size");
  train_cmd->add_option("--learning-rate", cfg.learning_rate, "Adam learning rate");
  train_cmd->add_option("--mlp-epochs", cfg.mlp_epochs, "Max MLP epochs");
  train_cmd->add_option("--lstm-epochs", cfg.lstm_epochs, "Max LSTM epochs");
  train_cmd->add_option("--patience", cfg.patience, "Early-stop patience");
  train_cmd->add_option("--exclude-imfs", exclude_csv, "Channels to drop, e.g. 1,2");
  train_cmd->add_flag("--no-residual", "Do not use the residual as a channel");
  train_cmd->add_option("--out", cfg.out_dir, "Output directory");

  auto* pred_cmd = app.add_subcommand("predict", "Predict the validation block");
  pred_cmd->add_option("--decomposition", decomposition_path, "decomposition.csv path")
      ->required();
  pred_cmd->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
  pred_cmd->add_option("--out", cfg.out_dir, "Output directory");

  auto* expl_cmd = app.add_subcommand("explain", "Attribute predictions to channels");
  expl_cmd->add_option("--decomposition", decomposition_path, "decomposition.csv path")
      ->required();
  expl_cmd->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
  expl_cmd->add_option("--background", cfg.background, "Baseline window count");
  expl_cmd->add_option("--out", cfg.out_dir, "Output directory");

  auto* run_cmd = app.add_subcommand("run", "Full pipeline: decompose..explain + plots");
  run_cmd->add_option("--config", config_path, "key=value config file");
  run_cmd->add_option("--input", cfg.input_path, "Input CSV");
  run_cmd->add_option("--column", cfg.value_column, "Value column name");
  run_cmd->add_option("--model", cfg.model, "mlp|lstm|both");
  run_cmd->add_option("--window", cfg.window, "Window length N");
  run_cmd->add_option("--split", cfg.split_fraction, "Train fraction");
  run_cmd->add_option("--seed", cfg.seed, "Master seed");
  run_cmd->add_option("--background", cfg.background, "Baseline window count");
  run_cmd->add_option("--exclude-imfs", exclude_csv, "Ablation: channels to drop, e.g. 1,2");
  run_cmd->add_option("--mlp-epochs", cfg.mlp_epochs, "Max MLP epochs");
  run_cmd->add_option("--lstm-epochs", cfg.lstm_epochs, "Max LSTM epochs");
  run_cmd->add_option("--out", cfg.out_dir, "Output directory");
  add_sift_flags(run_cmd, cfg, boundary);

  auto* plot_cmd = app.add_subcommand("plot", "Render SVG plots from emitted artifacts");
  plot_cmd->add_option("--artifacts", artifacts_dir, "Directory holding run artifacts")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed() && !config_path.empty()) {
      // Config file first, explicit flags override.
      PipelineConfig file_cfg = parse_config_file(config_path);
      for (const CLI::Option* opt : run_cmd->get_options()) {
        if (opt->count() == 0) continue;
        const std::string name = opt->get_name();
        if (name == "--input") file_cfg.input_path = cfg.input_path;
        else if (name == "--column") file_cfg.value_column = cfg.value_column;
        else if (name == "--model") file_cfg.model = cfg.model;
        else if (name == "--window") file_cfg.window = cfg.window;
        else if (name == "--split") file_cfg.split_fraction = cfg.split_fraction;
        else if (name == "--seed") file_cfg.seed = cfg.seed;
        else if (name == "--background") file_cfg.background = cfg.background;
        else if (name == "--mlp-epochs") file_cfg.mlp_epochs = cfg.mlp_epochs;
        else if (name == "--lstm-epochs") file_cfg.lstm_epochs = cfg.lstm_epochs;
        else if (name == "--out") file_cfg.out_dir = cfg.out_dir;
        else if (name == "--sd-threshold") file_cfg.sift.sd_threshold = cfg.sift.sd_threshold;
        else if (name == "--max-sift-iterations")
          file_cfg.sift.max_sift_iterations = cfg.sift.max_sift_iterations;
        else if (name == "--max-imfs") file_cfg.sift.max_imfs = cfg.sift.max_imfs;
      }
      if (!exclude_csv.empty()) apply_config_key(file_cfg, "exclude_imfs", exclude_csv);
      if (!boundary.empty()) apply_boundary(file_cfg, boundary);
      cfg = file_cfg;
    } else {
      if (!exclude_csv.empty()) apply_config_key(cfg, "exclude_imfs", exclude_csv);
      apply_boundary(cfg, boundary);
    }
    if (train_cmd->parsed() && train_cmd->count("--no-residual") > 0) {
      cfg.include_residual = false;
    }

    if (dec_cmd->parsed()) return cmd_decompose(cfg);
    if (train_cmd->parsed()) {
      if (cfg.model != "mlp" && cfg.model != "lstm") {
        throw std::invalid_argument("train: --model must be mlp or lstm");
      }
      return cmd_train(cfg, decomposition_path,
                       cfg.model == "mlp" ? ModelKind::mlp : ModelKind::lstm);
    }
    if (pred_cmd->parsed()) return cmd_predict(cfg, decomposition_path, checkpoint_path);
    if (expl_cmd->parsed()) return cmd_explain(cfg, decomposition_path, checkpoint_path);
    if (run_cmd->parsed()) {
      if (cfg.input_path.empty()) throw std::invalid_argument("run: --input (or config) required");
      return cmd_run(cfg);
    }
    if (plot_cmd->parsed()) return cmd_plot(artifacts_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
