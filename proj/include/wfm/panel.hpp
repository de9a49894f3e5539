#pragma once

// Panel data: N series observed over T periods, CSV ingestion, FRED-style
// transformation codes and per-series standardization.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "wfm/error.hpp"

namespace wfm {

/// N x T observed data. Rows are cross-sectional units, columns are periods.
struct Panel {
  Eigen::MatrixXd values;
  std::vector<std::string> series_ids;
  std::optional<std::vector<int>> group_ids;
  std::vector<std::string> time_ids;
  bool standardized = false;

  Eigen::Index n() const noexcept { return values.rows(); }
  Eigen::Index t() const noexcept { return values.cols(); }

  /// Throws wfm::Error when labels disagree with the matrix or a value is
  /// not finite.
  void validate() const {
    if (static_cast<Eigen::Index>(series_ids.size()) != values.rows())
      throw Error("panel: " + std::to_string(series_ids.size()) + " series labels for " +
                  std::to_string(values.rows()) + " rows");
    if (static_cast<Eigen::Index>(time_ids.size()) != values.cols())
      throw Error("panel: " + std::to_string(time_ids.size()) + " time labels for " +
                  std::to_string(values.cols()) + " columns");
    if (group_ids && static_cast<Eigen::Index>(group_ids->size()) != values.rows())
      throw Error("panel: group labels do not match the number of series");
    if (!values.allFinite()) throw Error("panel: non-finite value");
  }

  /// Builds a panel with generated labels ("s1".."sN", "1".."T").
  static Panel from_matrix(Eigen::MatrixXd x) {
    Panel p;
    p.series_ids.reserve(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) p.series_ids.push_back("s" + std::to_string(i + 1));
    p.time_ids.reserve(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index t = 0; t < x.cols(); ++t) p.time_ids.push_back(std::to_string(t + 1));
    p.values = std::move(x);
    return p;
  }

  /// Columns [first, first + count) with labels carried along; standardized is reset.
  Panel time_slice(Eigen::Index first, Eigen::Index count) const {
    Panel p;
    p.values = values.middleCols(first, count);
    p.series_ids = series_ids;
    p.group_ids = group_ids;
    p.time_ids.assign(time_ids.begin() + first, time_ids.begin() + first + count);
    return p;
  }
};

/// FRED-MD/QD transformation codes.
enum class TransformCode : int {
  level = 1,
  diff = 2,
  diff2 = 3,
  log = 4,
  log_diff = 5,
  log_diff2 = 6,
  growth_diff = 7,
};

inline TransformCode transform_code(int code) {
  if (code < 1 || code > 7)
    throw DomainError("transformation code " + std::to_string(code) + " outside 1..7");
  return static_cast<TransformCode>(code);
}

/// Number of leading observations a code consumes.
constexpr int differencing_order(TransformCode code) noexcept {
  switch (code) {
    case TransformCode::level:
    case TransformCode::log:
      return 0;
    case TransformCode::diff:
    case TransformCode::log_diff:
      return 1;
    case TransformCode::diff2:
    case TransformCode::log_diff2:
    case TransformCode::growth_diff:
      return 2;
  }
  return 0;
}

namespace detail {

inline std::vector<double> diff(std::span<const double> x) {
  std::vector<double> out;
  if (x.size() < 2) return out;
  out.reserve(x.size() - 1);
  for (std::size_t i = 1; i < x.size(); ++i) out.push_back(x[i] - x[i - 1]);
  return out;
}

inline std::vector<double> log_of(std::span<const double> x) {
  std::vector<double> out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0))
      throw DomainError("log transform of nonpositive value at index " + std::to_string(i));
    out.push_back(std::log(x[i]));
  }
  return out;
}

}  // namespace detail

/// Applies a transformation code. The output is shorter than the input by
/// the code's differencing order.
inline std::vector<double> apply_tcode(std::span<const double> series, TransformCode code) {
  if (series.size() < 3)
    throw DomainError("transformation needs at least 3 observations, got " +
                      std::to_string(series.size()));
  switch (code) {
    case TransformCode::level:
      return {series.begin(), series.end()};
    case TransformCode::diff:
      return detail::diff(series);
    case TransformCode::diff2:
      return detail::diff(detail::diff(series));
    case TransformCode::log:
      return detail::log_of(series);
    case TransformCode::log_diff:
      return detail::diff(detail::log_of(series));
    case TransformCode::log_diff2:
      return detail::diff(detail::diff(detail::log_of(series)));
    case TransformCode::growth_diff: {
      for (std::size_t i = 0; i < series.size(); ++i)
        if (!(series[i] > 0.0))
          throw DomainError("growth transform of nonpositive value at index " + std::to_string(i));
      std::vector<double> growth;
      growth.reserve(series.size() - 1);
      for (std::size_t i = 1; i < series.size(); ++i) growth.push_back(series[i] / series[i - 1] - 1.0);
      return detail::diff(growth);
    }
  }
  throw DomainError("unknown transformation code");
}

/// Smallest T an aligned panel may have.
inline constexpr Eigen::Index kMinAlignedLength = 10;

/// Transforms every series and keeps the last T - 2 observations of each,
/// so all series start at the same period.
inline Panel align_and_trim(const Panel& panel, std::span<const TransformCode> codes) {
  if (static_cast<Eigen::Index>(codes.size()) != panel.n())
    throw Error("align_and_trim: " + std::to_string(codes.size()) + " codes for " +
                std::to_string(panel.n()) + " series");
  const Eigen::Index t_out = panel.t() - 2;
  if (t_out < kMinAlignedLength)
    throw DomainError("insufficient sample: " + std::to_string(t_out) +
                      " periods after alignment, need at least " + std::to_string(kMinAlignedLength));

  Panel out;
  out.values.resize(panel.n(), t_out);
  std::vector<double> row(static_cast<std::size_t>(panel.t()));
  for (Eigen::Index i = 0; i < panel.n(); ++i) {
    for (Eigen::Index t = 0; t < panel.t(); ++t) row[static_cast<std::size_t>(t)] = panel.values(i, t);
    std::vector<double> tr;
    try {
      tr = apply_tcode(row, codes[static_cast<std::size_t>(i)]);
    } catch (const DomainError& e) {
      throw DomainError("series '" + panel.series_ids[static_cast<std::size_t>(i)] + "': " + e.what());
    }
    const std::size_t skip = tr.size() - static_cast<std::size_t>(t_out);
    for (Eigen::Index t = 0; t < t_out; ++t) out.values(i, t) = tr[skip + static_cast<std::size_t>(t)];
  }
  out.series_ids = panel.series_ids;
  out.group_ids = panel.group_ids;
  out.time_ids.assign(panel.time_ids.end() - t_out, panel.time_ids.end());
  out.validate();
  return out;
}

/// Per-series sample mean and standard deviation (denominator T - 1).
struct RowMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

inline RowMoments row_moments(const Eigen::MatrixXd& x) {
  RowMoments m;
  m.mean = x.rowwise().mean();
  const double denom = static_cast<double>(x.cols() - 1);
  m.sd = ((x.colwise() - m.mean).array().square().rowwise().sum() / denom).sqrt().matrix();
  return m;
}

/// Demeans each series and divides by its sample standard deviation.
inline Panel standardize(const Panel& panel) {
  if (panel.t() < 2) throw DomainError("standardize: need at least 2 periods");
  const RowMoments m = row_moments(panel.values);
  for (Eigen::Index i = 0; i < panel.n(); ++i) {
    // Constant up to roundoff relative to the level of the series.
    const double level = std::max(1.0, std::abs(m.mean(i)));
    if (!(m.sd(i) > 1e-14 * level))
      throw DomainError("standardize: series '" + panel.series_ids[static_cast<std::size_t>(i)] +
                        "' is constant");
  }
  Panel out = panel;
  out.values = (panel.values.colwise() - m.mean).array().colwise() / m.sd.array();
  out.standardized = true;
  return out;
}

/// True when every row has |mean| < 1e-10 and |var - 1| < 1e-8.
inline bool is_standardized(const Eigen::MatrixXd& x) {
  if (x.cols() < 2) return false;
  const RowMoments m = row_moments(x);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (std::abs(m.mean(i)) >= 1e-10 || std::abs(m.sd(i) * m.sd(i) - 1.0) >= 1e-8) return false;
  return true;
}

// ---------------------------------------------------------------------------
// CSV

enum class Orientation { series_in_rows, series_in_columns };

struct DroppedSeries {
  std::string name;
  std::string reason;
};

struct IngestResult {
  Panel panel;
  std::vector<DroppedSeries> dropped;
  /// Present when the file carries a "tcode" column (row orientation) or row
  /// (column orientation); entries line up with panel.series_ids.
  std::optional<std::vector<TransformCode>> tcodes;
};

namespace csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

/// Splits one CSV record. Double-quoted fields may contain commas; "" is an
/// escaped quote.
inline std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.emplace_back(trim(cur));
  return cells;
}

/// Parses a finite decimal number occupying the whole cell.
inline std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<int> parse_int(std::string_view cell) {
  cell = trim(cell);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

/// Shortest representation that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

struct RawSeries {
  std::string name;
  std::size_t line = 0;
  std::optional<int> group;
  std::optional<int> tcode;
  std::vector<std::string> cells;
};

inline std::vector<std::pair<std::size_t, std::string>> read_records(std::istream& in) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
      line.erase(0, 3);
    if (trim(line).empty()) continue;
    lines.emplace_back(no, line);
  }
  return lines;
}

}  // namespace csv

/// Reads a panel from CSV. Series with any empty or unparseable value are
/// dropped and listed in the result.
inline IngestResult ingest_csv(std::istream& in, Orientation orientation = Orientation::series_in_rows) {
  const auto records = csv::read_records(in);
  if (records.empty()) throw ParseError("empty file");

  std::vector<csv::RawSeries> raw;
  std::vector<std::string> time_ids;
  bool has_group = false;
  bool has_tcode = false;

  auto check_meta_int = [](const std::string& cell, std::size_t line, const char* what) {
    const auto v = csv::parse_int(cell);
    if (!v) throw ParseError(std::string("invalid ") + what + " '" + cell + "'", line);
    if (std::string_view(what) == "tcode" && (*v < 1 || *v > 7))
      throw ParseError("tcode " + cell + " outside 1..7", line);
    return *v;
  };

  if (orientation == Orientation::series_in_rows) {
    const auto header = csv::split_record(records.front().second);
    std::size_t first_value = 1;
    for (; first_value < header.size(); ++first_value) {
      const std::string h = csv::lower(header[first_value]);
      if (h == "group" && !has_group) {
        has_group = true;
      } else if ((h == "tcode" || h == "transform") && !has_tcode) {
        has_tcode = true;
      } else {
        break;
      }
    }
    std::vector<std::string> meta(header.begin() + 1, header.begin() + static_cast<std::ptrdiff_t>(first_value));
    time_ids.assign(header.begin() + static_cast<std::ptrdiff_t>(first_value), header.end());
    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto& [line, text] = records[r];
      auto cells = csv::split_record(text);
      if (cells.size() != header.size())
        throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                         std::to_string(cells.size()),
                         line);
      csv::RawSeries s;
      s.name = cells[0];
      s.line = line;
      for (std::size_t m = 0; m < meta.size(); ++m) {
        const std::string h = csv::lower(meta[m]);
        if (h == "group")
          s.group = check_meta_int(cells[1 + m], line, "group");
        else
          s.tcode = check_meta_int(cells[1 + m], line, "tcode");
      }
      s.cells.assign(cells.begin() + static_cast<std::ptrdiff_t>(first_value), cells.end());
      raw.push_back(std::move(s));
    }
  } else {
    const auto header = csv::split_record(records.front().second);
    for (std::size_t j = 1; j < header.size(); ++j) {
      csv::RawSeries s;
      s.name = header[j];
      s.line = records.front().first;
      raw.push_back(std::move(s));
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto& [line, text] = records[r];
      auto cells = csv::split_record(text);
      if (cells.size() != header.size())
        throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                         std::to_string(cells.size()),
                         line);
      const std::string label = csv::lower(cells[0]);
      if (time_ids.empty() && (label == "group" || label == "tcode" || label == "transform")) {
        const bool is_group = label == "group";
        if ((is_group && has_group) || (!is_group && has_tcode))
          throw ParseError("repeated '" + cells[0] + "' row", line);
        (is_group ? has_group : has_tcode) = true;
        for (std::size_t j = 1; j < cells.size(); ++j) {
          const int v = check_meta_int(cells[j], line, is_group ? "group" : "tcode");
          (is_group ? raw[j - 1].group : raw[j - 1].tcode) = v;
        }
        continue;
      }
      time_ids.push_back(cells[0]);
      for (std::size_t j = 1; j < cells.size(); ++j) raw[j - 1].cells.push_back(cells[j]);
    }
  }

  if (raw.empty()) throw ParseError("no series in file", records.front().first);
  if (time_ids.size() < 2)
    throw ParseError("fewer than 2 time points (" + std::to_string(time_ids.size()) + ")",
                     records.front().first);
  {
    std::unordered_set<std::string> seen;
    for (const auto& s : raw)
      if (!seen.insert(s.name).second) throw ParseError("duplicate series '" + s.name + "'", s.line);
  }

  IngestResult result;
  std::vector<std::vector<double>> kept;
  std::vector<int> groups;
  std::vector<TransformCode> tcodes;
  for (const auto& s : raw) {
    std::vector<double> vals;
    vals.reserve(s.cells.size());
    std::string reason;
    for (std::size_t t = 0; t < s.cells.size(); ++t) {
      const auto v = csv::parse_number(s.cells[t]);
      if (!v) {
        reason = (csv::trim(s.cells[t]).empty() ? "missing value at " : "unparseable value '" + s.cells[t] + "' at ") +
                 time_ids[t];
        break;
      }
      vals.push_back(*v);
    }
    if (!reason.empty()) {
      result.dropped.push_back({s.name, reason});
      continue;
    }
    kept.push_back(std::move(vals));
    result.panel.series_ids.push_back(s.name);
    if (has_group) groups.push_back(s.group.value_or(0));
    if (has_tcode) tcodes.push_back(transform_code(s.tcode.value_or(1)));
  }
  if (kept.empty()) throw ParseError("every series has missing observations");

  const auto n = static_cast<Eigen::Index>(kept.size());
  const auto t = static_cast<Eigen::Index>(time_ids.size());
  result.panel.values.resize(n, t);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < t; ++j)
      result.panel.values(i, j) = kept[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  result.panel.time_ids = std::move(time_ids);
  if (has_group) result.panel.group_ids = std::move(groups);
  if (has_tcode) result.tcodes = std::move(tcodes);
  result.panel.validate();
  return result;
}

/// Writes a panel in series-in-rows layout; ingest_csv reads it back exactly.
inline void write_csv(std::ostream& out, const Panel& panel,
                      std::span<const TransformCode> tcodes = {}) {
  out << "series";
  if (panel.group_ids) out << ",group";
  if (!tcodes.empty()) out << ",tcode";
  for (const auto& t : panel.time_ids) out << ',' << csv::quote_if_needed(t);
  out << '\n';
  for (Eigen::Index i = 0; i < panel.n(); ++i) {
    out << csv::quote_if_needed(panel.series_ids[static_cast<std::size_t>(i)]);
    if (panel.group_ids) out << ',' << (*panel.group_ids)[static_cast<std::size_t>(i)];
    if (!tcodes.empty()) out << ',' << static_cast<int>(tcodes[static_cast<std::size_t>(i)]);
    for (Eigen::Index t = 0; t < panel.t(); ++t) out << ',' << csv::format_number(panel.values(i, t));
    out << '\n';
  }
}

}  // namespace wfm
