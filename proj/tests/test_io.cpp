#include <doctest.h>

#include <cstring>
#include <fstream>
#include <vector>

#include "imfcast/checkpoint.hpp"
#include "imfcast/config.hpp"
#include "imfcast/csv.hpp"
#include "imfcast/emd.hpp"
#include "imfcast/synthetic.hpp"
#include "support/helpers.hpp"

using namespace imfcast;
using testsupport::TempDir;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("load_csv reads the chosen column") {
  TempDir dir("csv");
  write_text(dir.str("mini.csv"),
             "Date,Open,High,Low,Close,Adj Close,Volume\n"
             "2024-01-02,9.0,11.0,8.0,10.0,10.0,100\n"
             "2024-01-03,10.0,11.5,9.5,10.5,10.4,110\n"
             "2024-01-04,10.5,12.0,10.0,11.0,10.9,120\n");
  const Series s = load_csv(dir.str("mini.csv"), "Close");
  REQUIRE(s.size() == 3);
  CHECK(s.values == std::vector<double>{10.0, 10.5, 11.0});
  CHECK(s.timestamps[1] - s.timestamps[0] == 1);
  const Series adj = load_csv(dir.str("mini.csv"), "Adj Close");
  CHECK(adj.values[1] == doctest::Approx(10.4));
}

TEST_CASE("load_csv names available headers on a missing column") {
  TempDir dir("csv");
  write_text(dir.str("mini.csv"), "Date,Close\n2024-01-02,1\n2024-01-03,2\n2024-01-04,3\n");
  try {
    load_csv(dir.str("mini.csv"), "Klose");
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("Klose") != std::string::npos);
    CHECK(msg.find("Close") != std::string::npos);
    CHECK(msg.find("Date") != std::string::npos);
  }
}

TEST_CASE("load_csv rejects duplicated dates at the offending row") {
  TempDir dir("csv");
  write_text(dir.str("dup.csv"),
             "Date,Close\n2024-01-02,1\n2024-01-03,2\n2024-01-03,3\n2024-01-04,4\n");
  try {
    load_csv(dir.str("dup.csv"), "Close");
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 4") != std::string::npos);
    CHECK(msg.find("increasing") != std::string::npos);
  }
}

TEST_CASE("load_csv rejects malformed numbers and short files") {
  TempDir dir("csv");
  write_text(dir.str("bad.csv"), "Date,Close\n2024-01-02,1\n2024-01-03,oops\n2024-01-04,3\n");
  CHECK_THROWS_AS(load_csv(dir.str("bad.csv"), "Close"), std::runtime_error);
  write_text(dir.str("short.csv"), "Date,Close\n2024-01-02,1\n2024-01-03,2\n");
  CHECK_THROWS_AS(load_csv(dir.str("short.csv"), "Close"), std::invalid_argument);
}

TEST_CASE("load_csv without a Date column falls back to ticks") {
  TempDir dir("csv");
  write_text(dir.str("ticks.csv"), "Close\n1.5\n2.5\n3.5\n");
  const Series s = load_csv(dir.str("ticks.csv"), "Close");
  CHECK(s.timestamps == std::vector<std::int64_t>{0, 1, 2});
}

TEST_CASE("ISO date round-trip") {
  for (const std::string d : {"1970-01-01", "2004-05-03", "2024-02-29", "1999-12-31"}) {
    CHECK(iso_date_from_days(parse_iso_date(d, 0)) == d);
  }
  CHECK(parse_iso_date("1970-01-01", 0) == 0);
  CHECK(parse_iso_date("1970-01-02", 0) == 1);
}

TEST_CASE("decomposition CSV round-trips doubles exactly") {
  TempDir dir("dec");
  const Series s = make_random_walk_series(200, 5);
  const Decomposition d = decompose(s);
  const std::string path = dir.str("decomposition.csv");
  write_decomposition_csv(path, s, d.imfs, d.residual, "meta line");
  const DecompositionFile f = read_decomposition_csv(path);
  REQUIRE(f.imfs.size() == d.imfs.size());
  CHECK(f.original.values == s.values);  // bitwise through %.17g
  for (std::size_t k = 0; k < d.imfs.size(); ++k) CHECK(f.imfs[k] == d.imfs[k]);
  CHECK(f.residual == d.residual);
}

TEST_CASE("predictions CSV round-trip") {
  TempDir dir("pred");
  const std::vector<std::size_t> t{10, 11, 12};
  const std::vector<double> actual{1.125, 2.25, 3.0625};
  const std::vector<double> pred{1.0, 2.5, 3.0};
  write_predictions_csv(dir.str("p.csv"), t, actual, pred, "meta");
  const PredictionsFile f = read_predictions_csv(dir.str("p.csv"));
  CHECK(f.t == t);
  CHECK(f.actual == actual);
  CHECK(f.predicted == pred);
}

TEST_CASE("checkpoint save/load/save is byte-identical") {
  TempDir dir("ckpt");
  SeededRng rng(77);
  ForecastModel fm;
  fm.kind = ModelKind::mlp;
  fm.window = 3;
  fm.channels = 2;
  fm.channel_names = {"imf_1", "residual"};
  fm.split_fraction = 0.75;
  fm.mlp = make_mlp(6, 4, rng);
  fm.input_scaler.offset = {0.25, -1.0};
  fm.input_scaler.scale = {2.0, 3.5};
  fm.input_scaler.constant = {0, 0};
  fm.input_scaler.fitted_range = {0, 100};
  fm.target_scaler.offset = {10.0};
  fm.target_scaler.scale = {5.0};
  fm.target_scaler.constant = {0};
  fm.train_config.seed = 999;
  fm.train_config.max_epochs = 17;

  const std::string p1 = dir.str("a.ckpt");
  const std::string p2 = dir.str("b.ckpt");
  save_checkpoint(p1, fm);
  const ForecastModel loaded = load_checkpoint(p1);
  save_checkpoint(p2, loaded);
  CHECK(testsupport::files_identical(p1, p2));

  CHECK(loaded.window == fm.window);
  CHECK(loaded.channel_names == fm.channel_names);
  std::vector<double> a, b;
  fm.mlp.to_flat(a);
  loaded.mlp.to_flat(b);
  CHECK(a == b);  // bitwise parameters
  CHECK(loaded.train_config.seed == 999);
  CHECK(loaded.train_config.max_epochs == 17);
}

TEST_CASE("lstm checkpoint round-trip preserves parameters bitwise") {
  TempDir dir("ckpt");
  SeededRng rng(31);
  ForecastModel fm;
  fm.kind = ModelKind::lstm;
  fm.window = 4;
  fm.channels = 3;
  fm.channel_names = {"imf_1", "imf_2", "residual"};
  fm.lstm = make_lstm(3, 5, rng);
  fm.input_scaler.offset = {0, 0, 0};
  fm.input_scaler.scale = {1, 1, 1};
  fm.input_scaler.constant = {0, 0, 0};
  fm.target_scaler.offset = {0};
  fm.target_scaler.scale = {1};
  fm.target_scaler.constant = {0};
  save_checkpoint(dir.str("l.ckpt"), fm);
  const ForecastModel loaded = load_checkpoint(dir.str("l.ckpt"));
  std::vector<double> a, b;
  fm.lstm.to_flat(a);
  loaded.lstm.to_flat(b);
  CHECK(a == b);
  CHECK(loaded.kind == ModelKind::lstm);
}

TEST_CASE("config files parse, serialize and reject unknown keys") {
  TempDir dir("cfg");
  write_text(dir.str("run.cfg"),
             "# comment\n"
             "input=data.csv\n"
             "model=both\n"
             "window=12\n"
             "split=0.8\n"
             "seed=123\n"
             "exclude_imfs=1,3\n");
  const PipelineConfig c = parse_config_file(dir.str("run.cfg"));
  CHECK(c.input_path == "data.csv");
  CHECK(c.model == "both");
  CHECK(c.window == 12);
  CHECK(c.split_fraction == doctest::Approx(0.8));
  CHECK(c.seed == 123);
  CHECK(c.exclude_imfs == std::vector<std::size_t>{1, 3});

  // Round-trip through the canonical serialization.
  write_text(dir.str("echo.cfg"), serialize_config(c));
  const PipelineConfig c2 = parse_config_file(dir.str("echo.cfg"));
  CHECK(serialize_config(c2) == serialize_config(c));
  CHECK(config_digest(c2) == config_digest(c));

  write_text(dir.str("bad.cfg"), "inptu=data.csv\n");
  CHECK_THROWS_AS(parse_config_file(dir.str("bad.cfg")), std::runtime_error);
}

TEST_CASE("config digest reacts to any value change") {
  PipelineConfig a;
  a.input_path = "x.csv";
  PipelineConfig b = a;
  CHECK(config_digest(a) == config_digest(b));
  b.seed += 1;
  CHECK(config_digest(a) != config_digest(b));
}

TEST_CASE("format_double round-trips arbitrary doubles") {
  SeededRng rng(1234);
  for (int i = 0; i < 200; ++i) {
    double v;
    if (i % 3 == 0) {
      v = rng.uniform(-1e9, 1e9);
    } else if (i % 3 == 1) {
      v = rng.uniform(-1e-6, 1e-6);
    } else {
      v = rng.normal();
    }
    const std::string s = format_double(v);
    const double back = parse_double(s, 0, "v");
    CHECK(std::memcmp(&v, &back, sizeof v) == 0);
  }
}
