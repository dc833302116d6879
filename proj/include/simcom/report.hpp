#pragma once

// Round-log CSV files, trailing-window summaries, and static SVG line charts.

#include "simcom/protocol.hpp"

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace simcom {

inline constexpr const char* kCsvHeader =
    "method,seed,embed_order,snr_db,p_pct,mode,round,loss,acc_received,acc_eval_raw,"
    "acc_eval_clamped,err_eval,lap_err_eval,skipped";

inline constexpr std::size_t kSummaryWindow = 100;
inline constexpr std::size_t kSmoothingWindow = 20;

struct CsvRow {
  std::string method;
  std::uint64_t seed = 0;
  int embed_order = 0;
  double snr_db = 0.0;
  double p_pct = 0.0;
  std::string mode;
  std::size_t round = 0;
  double loss = 0.0;
  double acc_received = 0.0;
  double acc_eval_raw = 0.0;
  double acc_eval_clamped = 0.0;
  double err_eval = 0.0;
  double lap_err_eval = 0.0;
  bool skipped = false;
};

/// Shortest text that parses back to the identical double; "nan", "inf".
std::string format_double(double v);

CsvRow to_csv_row(const GridPoint& point, const RoundLog& log);
void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const CsvRow& row);
/// Header plus one row per round.
void write_series_csv(std::ostream& out, const Series& series);

/// Throws ParseError (with line number) on a bad header or row.
std::vector<CsvRow> read_csv(std::istream& in);
std::vector<CsvRow> read_csv_file(const std::string& path);

/// Rows sharing (method, seed, embed_order, snr_db, p_pct, mode), in file order.
struct SeriesData {
  CsvRow id;  // the first row; only the identifying fields are meaningful
  std::vector<CsvRow> rows;

  std::string key() const;
  std::vector<double> column(double CsvRow::*field) const;
};

std::vector<SeriesData> group_series(const std::vector<CsvRow>& rows);

struct TrailingStats {
  double mean = 0.0;
  /// Sample standard deviation (n - 1); 0 for a single value.
  double stddev = 0.0;
  std::size_t count = 0;
};

/// Over the last `window` entries, ignoring NaN ones. NaN mean when none remain.
TrailingStats trailing_stats(const std::vector<double>& values, std::size_t window = kSummaryWindow);

/// Trailing moving average over up to `window` entries, NaN entries ignored.
std::vector<double> smooth(const std::vector<double>& values, std::size_t window = kSmoothingWindow);

struct SeriesSummary {
  CsvRow id;
  std::size_t rounds = 0;
  std::size_t skipped = 0;
  TrailingStats acc_received;
  TrailingStats acc_eval;
  TrailingStats lap_err;
  TrailingStats loss;
};

SeriesSummary summarize(const SeriesData& series, std::size_t window = kSummaryWindow);
void write_summary_csv(std::ostream& out, const std::vector<SeriesSummary>& summaries);

struct ChartLine {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<ChartLine> lines;
  /// Fixed y range; derived from the data when absent.
  std::optional<std::pair<double, double>> y_range;
};

/// Self-contained SVG document. NaN points break a polyline.
std::string render_svg(const Chart& chart);

/// Same data as CSV: x, then one column per line (NaN for gaps).
void write_chart_csv(std::ostream& out, const Chart& chart);

struct Figure {
  /// File stem.
  std::string name;
  Chart chart;
};

/// One accuracy-vs-round chart per series, plus comparison charts for every
/// group of at least two series that differ only in SNR, embedding order,
/// method (Laplacian error) or degradation percentage.
std::vector<Figure> build_figures(const std::vector<SeriesData>& series);

}  // namespace simcom
