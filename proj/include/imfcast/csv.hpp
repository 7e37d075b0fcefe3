#pragma once

// CSV ingestion and emission. Input follows the standard daily OHLCV layout
// (Date,Open,High,Low,Close,Adj Close,Volume; extra columns ignored, any
// subset accepted as long as the requested column exists). Emitted files use
// %.17g so doubles round-trip exactly; lines starting with '#' are metadata
// and are skipped on read.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "imfcast/series.hpp"

namespace imfcast {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& tok, std::size_t row, const std::string& what) {
  const char* s = tok.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0' || errno == ERANGE) {
    throw std::runtime_error("row " + std::to_string(row) + ": cannot parse " + what + " '" +
                             tok + "'");
  }
  return v;
}

// Days since 1970-01-01 for an ISO-8601 date (proleptic Gregorian).
inline std::int64_t parse_iso_date(const std::string& tok, std::size_t row) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(tok.c_str(), "%d-%d-%d", &y, &m, &d) != 3 || m < 1 || m > 12 || d < 1 ||
      d > 31) {
    throw std::runtime_error("row " + std::to_string(row) + ": cannot parse date '" + tok + "'");
  }
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<std::uint64_t>(y - era * 400);
  const auto doy = static_cast<std::uint64_t>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const std::uint64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline std::string iso_date_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<std::uint64_t>(z - era * 146097);
  const std::uint64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const std::uint64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::uint64_t mp = (5 * doy + 2) / 153;
  const std::uint64_t d = doy - (153 * mp + 2) / 5 + 1;
  const std::uint64_t m = mp < 10 ? mp + 3 : mp - 9;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u",
                static_cast<long long>(y + (m <= 2 ? 1 : 0)), static_cast<unsigned>(m),
                static_cast<unsigned>(d));
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  std::stringstream ss(line);
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

inline std::string file_stem(const std::string& path) {
  const auto slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace detail

// Loads one numeric column as a Series. A "Date" column, when present, must
// hold strictly increasing ISO-8601 dates; without one, rows get integer
// ticks.
inline Series load_csv(const std::string& path, const std::string& column = "Close") {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  do {
    if (!std::getline(in, line)) throw std::runtime_error("'" + path + "': empty file");
    line = detail::strip_cr(line);
  } while (line.empty() || line[0] == '#');

  const auto headers = detail::split_csv_line(line);
  std::ptrdiff_t value_col = -1, date_col = -1;
  for (std::size_t i = 0; i < headers.size(); ++i) {
    if (headers[i] == column) value_col = static_cast<std::ptrdiff_t>(i);
    if (headers[i] == "Date") date_col = static_cast<std::ptrdiff_t>(i);
  }
  if (value_col < 0) {
    std::string avail;
    for (std::size_t i = 0; i < headers.size(); ++i) {
      avail += (i ? ", " : "") + headers[i];
    }
    throw std::runtime_error("'" + path + "': no column '" + column + "' (available: " + avail +
                             ")");
  }

  Series s;
  s.name = detail::file_stem(path);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = detail::strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() <= static_cast<std::size_t>(value_col) ||
        (date_col >= 0 && fields.size() <= static_cast<std::size_t>(date_col))) {
      throw std::runtime_error("row " + std::to_string(row) + ": too few fields");
    }
    const double v = parse_double(fields[static_cast<std::size_t>(value_col)], row, column);
    std::int64_t ts;
    if (date_col >= 0) {
      ts = parse_iso_date(fields[static_cast<std::size_t>(date_col)], row);
      if (!s.timestamps.empty() && ts <= s.timestamps.back()) {
        throw std::runtime_error("row " + std::to_string(row) +
                                 ": timestamps not strictly increasing ('" +
                                 fields[static_cast<std::size_t>(date_col)] + "')");
      }
    } else {
      ts = static_cast<std::int64_t>(s.values.size());
    }
    s.timestamps.push_back(ts);
    s.values.push_back(v);
  }
  validate_series(s);
  return s;
}

// ---------------------------------------------------------------------------
// Decomposition CSV: t,original,imf_1,...,imf_K,residual
// ---------------------------------------------------------------------------

struct DecompositionFile {
  Series original;
  std::vector<std::vector<double>> imfs;
  std::vector<double> residual;
};

inline void write_decomposition_csv(const std::string& path, const Series& original,
                                    const std::vector<std::vector<double>>& imfs,
                                    const std::vector<double>& residual,
                                    const std::string& meta = {}) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  if (!meta.empty()) out << "# " << meta << "\n";
  out << "t,original";
  for (std::size_t k = 0; k < imfs.size(); ++k) out << ",imf_" << (k + 1);
  out << ",residual\n";
  for (std::size_t t = 0; t < original.values.size(); ++t) {
    out << t << ',' << format_double(original.values[t]);
    for (const auto& imf : imfs) out << ',' << format_double(imf[t]);
    out << ',' << format_double(residual[t]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline DecompositionFile read_decomposition_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  do {
    if (!std::getline(in, line)) throw std::runtime_error("'" + path + "': empty file");
    line = detail::strip_cr(line);
  } while (line.empty() || line[0] == '#');
  const auto headers = detail::split_csv_line(line);
  if (headers.size() < 3 || headers[0] != "t" || headers[1] != "original" ||
      headers.back() != "residual") {
    throw std::runtime_error("'" + path + "': not a decomposition CSV (header '" + line + "')");
  }
  const std::size_t n_imfs = headers.size() - 3;
  DecompositionFile d;
  d.original.name = detail::file_stem(path);
  d.imfs.resize(n_imfs);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = detail::strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != headers.size()) {
      throw std::runtime_error("row " + std::to_string(row) + ": expected " +
                               std::to_string(headers.size()) + " fields, got " +
                               std::to_string(fields.size()));
    }
    d.original.timestamps.push_back(
        static_cast<std::int64_t>(parse_double(fields[0], row, "t")));
    d.original.values.push_back(parse_double(fields[1], row, "original"));
    for (std::size_t k = 0; k < n_imfs; ++k) {
      d.imfs[k].push_back(parse_double(fields[2 + k], row, headers[2 + k]));
    }
    d.residual.push_back(parse_double(fields.back(), row, "residual"));
  }
  validate_series(d.original);
  return d;
}

// ---------------------------------------------------------------------------
// Predictions CSV: t,actual,predicted
// ---------------------------------------------------------------------------

struct PredictionsFile {
  std::vector<std::size_t> t;
  std::vector<double> actual;
  std::vector<double> predicted;
};

inline void write_predictions_csv(const std::string& path, const std::vector<std::size_t>& t,
                                  const std::vector<double>& actual,
                                  const std::vector<double>& predicted,
                                  const std::string& meta = {}) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  if (!meta.empty()) out << "# " << meta << "\n";
  out << "t,actual,predicted\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << t[i] << ',' << format_double(actual[i]) << ',' << format_double(predicted[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline PredictionsFile read_predictions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  do {
    if (!std::getline(in, line)) throw std::runtime_error("'" + path + "': empty file");
    line = detail::strip_cr(line);
  } while (line.empty() || line[0] == '#');
  if (detail::strip_cr(line) != "t,actual,predicted") {
    throw std::runtime_error("'" + path + "': not a predictions CSV");
  }
  PredictionsFile p;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = detail::strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 3) {
      throw std::runtime_error("row " + std::to_string(row) + ": expected 3 fields");
    }
    p.t.push_back(static_cast<std::size_t>(parse_double(fields[0], row, "t")));
    p.actual.push_back(parse_double(fields[1], row, "actual"));
    p.predicted.push_back(parse_double(fields[2], row, "predicted"));
  }
  return p;
}

}  // namespace imfcast
