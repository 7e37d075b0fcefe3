// Writes the synthetic fixture series as OHLCV-style CSVs (Date + Close)
// so the pipeline can be exercised without external market data.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "imfcast/csv.hpp"
#include "imfcast/synthetic.hpp"

namespace fs = std::filesystem;
using namespace imfcast;

namespace {

void write_series_csv(const fs::path& path, const Series& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "Date,Close\n";
  const std::int64_t start = parse_iso_date("2004-05-03", 0);
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    out << iso_date_from_days(start + s.timestamps[i]) << ',' << format_double(s.values[i])
        << '\n';
  }
  std::cout << path.string() << ": " << s.values.size() << " rows\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate synthetic fixture CSVs"};
  std::string out_dir = "fixtures";
  app.add_option("--out", out_dir, "Output directory");
  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(out_dir);
    write_series_csv(fs::path(out_dir) / "constant.csv", make_constant_series());
    write_series_csv(fs::path(out_dir) / "two_tone.csv", make_two_tone_series());
    write_series_csv(fs::path(out_dir) / "trend_tones.csv", make_trend_tones_series());
    write_series_csv(fs::path(out_dir) / "trend_noise.csv", make_trend_noise_series());
    write_series_csv(fs::path(out_dir) / "random_walk.csv", make_random_walk_series());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
