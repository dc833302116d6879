#include "simcom/report.hpp"

#include "simcom/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace simcom {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  if (s == "nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError(line, "bad number '" + s + "'");
  return v;
}

template <typename Int>
Int parse_int(const std::string& s, std::size_t line) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError(line, "bad integer '" + s + "'");
  return v;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << v;
  return s.str();
}

std::string tick(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

using IdTuple = std::tuple<std::string, std::uint64_t, int, double, double, std::string>;

IdTuple id_of(const CsvRow& r) { return {r.method, r.seed, r.embed_order, r.snr_db, r.p_pct, r.mode}; }

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::vector<double> rounds_of(const SeriesData& s) {
  std::vector<double> x;
  for (const auto& r : s.rows) x.push_back(static_cast<double>(r.round));
  return x;
}

/// Groups series by every identifying field except the one `drop` blanks out.
template <typename Blank>
std::map<IdTuple, std::vector<const SeriesData*>> group_without(const std::vector<SeriesData>& series,
                                                              Blank&& blank) {
  std::map<IdTuple, std::vector<const SeriesData*>> groups;
  for (const auto& s : series) {
    CsvRow id = s.id;
    blank(id);
    groups[id_of(id)].push_back(&s);
  }
  return groups;
}

std::string group_name(const CsvRow& id, const std::string& varying) {
  std::ostringstream s;
  if (varying != "method") s << id.method << '_';
  if (varying != "order") s << 'v' << id.embed_order << '_';
  if (varying != "snr" && varying != "p") s << "snr" << format_double(id.snr_db) << '_';
  if (varying != "p") s << 'p' << format_double(id.p_pct) << '_';
  s << id.mode << "_s" << id.seed;
  std::string out = s.str();
  std::replace(out.begin(), out.end(), '.', 'p');
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

CsvRow to_csv_row(const GridPoint& point, const RoundLog& log) {
  CsvRow r;
  r.method = to_string(point.method);
  r.seed = point.seed;
  r.embed_order = point.embed_order;
  r.snr_db = point.snr_db;
  // Rounded so that 0.3 is logged as 30 rather than 30.000000000000004.
  r.p_pct = std::round(point.p * 100.0 * 1e9) / 1e9;
  r.mode = to_string(point.mode);
  r.round = log.round;
  r.loss = log.loss;
  r.acc_received = log.acc_received;
  r.acc_eval_raw = log.acc_eval_raw;
  r.acc_eval_clamped = log.acc_eval;
  r.err_eval = log.err_eval;
  r.lap_err_eval = log.lap_err_eval;
  r.skipped = log.skipped;
  return r;
}

void write_csv_header(std::ostream& out) { out << kCsvHeader << '\n'; }

void write_csv_row(std::ostream& out, const CsvRow& r) {
  out << r.method << ',' << r.seed << ',' << r.embed_order << ',' << format_double(r.snr_db) << ','
      << format_double(r.p_pct) << ',' << r.mode << ',' << r.round << ',' << format_double(r.loss) << ','
      << format_double(r.acc_received) << ',' << format_double(r.acc_eval_raw) << ','
      << format_double(r.acc_eval_clamped) << ',' << format_double(r.err_eval) << ','
      << format_double(r.lap_err_eval) << ',' << (r.skipped ? 1 : 0) << '\n';
}

void write_series_csv(std::ostream& out, const Series& series) {
  write_csv_header(out);
  for (const auto& log : series.rounds) write_csv_row(out, to_csv_row(series.point, log));
}

std::vector<CsvRow> read_csv(std::istream& in) {
  std::string line;
  std::size_t number = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ParseError(1, "unexpected header");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 14) throw ParseError(number, "expected 14 fields, got " + std::to_string(f.size()));
    CsvRow r;
    r.method = f[0];
    r.seed = parse_int<std::uint64_t>(f[1], number);
    r.embed_order = parse_int<int>(f[2], number);
    r.snr_db = parse_double(f[3], number);
    r.p_pct = parse_double(f[4], number);
    r.mode = f[5];
    r.round = parse_int<std::size_t>(f[6], number);
    r.loss = parse_double(f[7], number);
    r.acc_received = parse_double(f[8], number);
    r.acc_eval_raw = parse_double(f[9], number);
    r.acc_eval_clamped = parse_double(f[10], number);
    r.err_eval = parse_double(f[11], number);
    r.lap_err_eval = parse_double(f[12], number);
    if (f[13] != "0" && f[13] != "1") throw ParseError(number, "skipped must be 0 or 1");
    r.skipped = f[13] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<CsvRow> read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NoDataError("cannot open '" + path + "'");
  return read_csv(in);
}

std::string SeriesData::key() const {
  GridPoint p;
  p.method = parse_method(id.method);
  p.embed_order = id.embed_order;
  p.snr_db = id.snr_db;
  p.p = id.p_pct / 100.0;
  p.mode = parse_degradation_mode(id.mode);
  p.seed = id.seed;
  return p.key();
}

std::vector<double> SeriesData::column(double CsvRow::*field) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.*field);
  return out;
}

std::vector<SeriesData> group_series(const std::vector<CsvRow>& rows) {
  std::vector<SeriesData> out;
  std::map<IdTuple, std::size_t> index;
  for (const auto& r : rows) {
    const auto [it, fresh] = index.emplace(id_of(r), out.size());
    if (fresh) out.push_back({r, {}});
    out[it->second].rows.push_back(r);
  }
  return out;
}

TrailingStats trailing_stats(const std::vector<double>& values, std::size_t window) {
  const std::size_t start = values.size() > window ? values.size() - window : 0;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = start; i < values.size(); ++i)
    if (!std::isnan(values[i])) {
      sum += values[i];
      ++n;
    }
  TrailingStats s;
  s.count = n;
  if (n == 0) {
    s.mean = s.stddev = kNaN;
    return s;
  }
  s.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = start; i < values.size(); ++i)
    if (!std::isnan(values[i])) ss += (values[i] - s.mean) * (values[i] - s.mean);
  s.stddev = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  return s;
}

std::vector<double> smooth(const std::vector<double>& values, std::size_t window) {
  std::vector<double> out(values.size(), kNaN);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t lo = i + 1 > window ? i + 1 - window : 0;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t j = lo; j <= i; ++j)
      if (!std::isnan(values[j])) {
        sum += values[j];
        ++n;
      }
    if (n > 0) out[i] = sum / static_cast<double>(n);
  }
  return out;
}

SeriesSummary summarize(const SeriesData& series, std::size_t window) {
  SeriesSummary s;
  s.id = series.id;
  s.rounds = series.rows.size();
  for (const auto& r : series.rows) s.skipped += r.skipped ? 1 : 0;
  s.acc_received = trailing_stats(series.column(&CsvRow::acc_received), window);
  s.acc_eval = trailing_stats(series.column(&CsvRow::acc_eval_clamped), window);
  s.lap_err = trailing_stats(series.column(&CsvRow::lap_err_eval), window);
  s.loss = trailing_stats(series.column(&CsvRow::loss), window);
  return s;
}

void write_summary_csv(std::ostream& out, const std::vector<SeriesSummary>& summaries) {
  out << "method,seed,embed_order,snr_db,p_pct,mode,rounds,skipped,"
         "acc_received_mean,acc_received_std,acc_eval_mean,acc_eval_std,"
         "lap_err_mean,lap_err_std,loss_mean,loss_std\n";
  for (const auto& s : summaries) {
    out << s.id.method << ',' << s.id.seed << ',' << s.id.embed_order << ',' << format_double(s.id.snr_db)
        << ',' << format_double(s.id.p_pct) << ',' << s.id.mode << ',' << s.rounds << ',' << s.skipped;
    for (const TrailingStats* t : {&s.acc_received, &s.acc_eval, &s.lap_err, &s.loss})
      out << ',' << format_double(t->mean) << ',' << format_double(t->stddev);
    out << '\n';
  }
}

std::string render_svg(const Chart& chart) {
  constexpr double W = 720, H = 440, L = 70, R = 180, T = 40, B = 60;
  const double pw = W - L - R, ph = H - T - B;

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& line : chart.lines)
    for (std::size_t i = 0; i < line.x.size() && i < line.y.size(); ++i) {
      if (!std::isfinite(line.x[i]) || !std::isfinite(line.y[i])) continue;
      x0 = std::min(x0, line.x[i]);
      x1 = std::max(x1, line.x[i]);
      y0 = std::min(y0, line.y[i]);
      y1 = std::max(y1, line.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (chart.y_range) std::tie(y0, y1) = *chart.y_range;
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y0 -= 0.5, y1 += 0.5;

  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return T + ph - (std::clamp(y, y0, y1) - y0) / (y1 - y0) * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << escape_xml(chart.title) << "</text>\n";

  for (int i = 0; i <= 5; ++i) {
    const double fx = x0 + (x1 - x0) * i / 5.0, fy = y0 + (y1 - y0) * i / 5.0;
    s << "<line x1=\"" << num(px(fx)) << "\" y1=\"" << T << "\" x2=\"" << num(px(fx)) << "\" y2=\""
      << T + ph << "\" stroke=\"#eee\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << num(py(fy)) << "\" x2=\"" << L + pw << "\" y2=\"" << num(py(fy))
      << "\" stroke=\"#eee\"/>\n"
      << "<text x=\"" << num(px(fx)) << "\" y=\"" << T + ph + 16 << "\" text-anchor=\"middle\">" << tick(fx)
      << "</text>\n"
      << "<text x=\"" << L - 6 << "\" y=\"" << num(py(fy) + 4) << "\" text-anchor=\"end\">" << tick(fy)
      << "</text>\n";
  }
  s << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n"
    << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">"
    << escape_xml(chart.x_label) << "</text>\n"
    << "<text transform=\"translate(18," << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape_xml(chart.y_label) << "</text>\n";

  for (std::size_t k = 0; k < chart.lines.size(); ++k) {
    const auto& line = chart.lines[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string points;
    auto flush = [&] {
      if (!points.empty())
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << points
          << "\"/>\n";
      points.clear();
    };
    for (std::size_t i = 0; i < line.x.size() && i < line.y.size(); ++i) {
      if (!std::isfinite(line.x[i]) || std::isnan(line.y[i])) {
        flush();
        continue;
      }
      points += num(px(line.x[i])) + ',' + num(py(line.y[i])) + ' ';
    }
    flush();
    const double ly = T + 14 + 18.0 * static_cast<double>(k);
    s << "<line x1=\"" << L + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << L + pw + 30 << "\" y2=\"" << ly - 4
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << L + pw + 36 << "\" y=\"" << ly << "\">" << escape_xml(line.label) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_chart_csv(std::ostream& out, const Chart& chart) {
  std::vector<double> xs;
  for (const auto& line : chart.lines) xs.insert(xs.end(), line.x.begin(), line.x.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  out << "x";
  for (const auto& line : chart.lines) out << ',' << line.label;
  out << '\n';
  for (double x : xs) {
    out << format_double(x);
    for (const auto& line : chart.lines) {
      double y = kNaN;
      for (std::size_t i = 0; i < line.x.size() && i < line.y.size(); ++i)
        if (line.x[i] == x) y = line.y[i];
      out << ',' << format_double(y);
    }
    out << '\n';
  }
}

std::vector<Figure> build_figures(const std::vector<SeriesData>& series) {
  std::vector<Figure> figures;
  const std::pair<double, double> unit{0.0, 1.0};

  for (const auto& s : series) {
    Chart c{"accuracy vs round: " + s.key(), "round", "accuracy (smoothed, window 20)", {}, unit};
    c.lines.push_back({"received", rounds_of(s), smooth(s.column(&CsvRow::acc_received))});
    c.lines.push_back({"eval (" + s.id.mode + ")", rounds_of(s), smooth(s.column(&CsvRow::acc_eval_clamped))});
    figures.push_back({"series_" + s.key(), std::move(c)});
  }

  auto comparison = [&](const std::string& varying, auto&& blank, auto&& label, const std::string& what,
                        double CsvRow::*field, std::optional<std::pair<double, double>> range) {
    for (const auto& [id, members] : group_without(series, blank)) {
      if (members.size() < 2) continue;
      CsvRow rep = members.front()->id;
      blank(rep);
      Chart c{what + " by " + varying + ": " + group_name(rep, varying), "round", what + " (smoothed, window 20)",
              {}, range};
      for (const SeriesData* m : members) c.lines.push_back({label(m->id), rounds_of(*m), smooth(m->column(field))});
      const std::string prefix = field == &CsvRow::lap_err_eval ? "laperr_by_" : "acc_by_";
      figures.push_back({prefix + varying + "_" + group_name(rep, varying), std::move(c)});
    }
  };

  comparison("snr", [](CsvRow& r) { r.snr_db = 0; },
             [](const CsvRow& r) { return "SNR " + format_double(r.snr_db) + " dB"; }, "accuracy",
             &CsvRow::acc_received, unit);
  comparison("order", [](CsvRow& r) { r.embed_order = 0; },
             [](const CsvRow& r) { return "|V| = " + std::to_string(r.embed_order); }, "accuracy",
             &CsvRow::acc_received, unit);
  comparison("method", [](CsvRow& r) { r.method.clear(); }, [](const CsvRow& r) { return r.method; },
             "Laplacian error", &CsvRow::lap_err_eval, std::nullopt);

  // Trailing accuracy against degradation percentage, one line per SNR.
  auto by_p = group_without(series, [](CsvRow& r) {
    r.p_pct = 0;
    r.snr_db = 0;
  });
  for (const auto& [id, members] : by_p) {
    std::map<double, std::vector<const SeriesData*>> per_snr;
    for (const SeriesData* m : members) per_snr[m->id.snr_db].push_back(m);
    bool varied = false;
    for (const auto& [snr, ms] : per_snr) varied = varied || ms.size() >= 2;
    if (!varied) continue;
    CsvRow rep = members.front()->id;
    rep.p_pct = 0;
    rep.snr_db = 0;
    const std::string name = group_name(rep, "p");
    Chart c{"trailing accuracy vs degradation: " + name, "degraded simplices (%)", "trailing-100 accuracy", {}, unit};
    for (const auto& [snr, ms] : per_snr) {
      std::vector<const SeriesData*> sorted = ms;
      std::sort(sorted.begin(), sorted.end(),
                [](const SeriesData* a, const SeriesData* b) { return a->id.p_pct < b->id.p_pct; });
      ChartLine line{"SNR " + format_double(snr) + " dB", {}, {}};
      for (const SeriesData* m : sorted) {
        line.x.push_back(m->id.p_pct);
        line.y.push_back(trailing_stats(m->column(&CsvRow::acc_eval_clamped)).mean);
      }
      c.lines.push_back(std::move(line));
    }
    figures.push_back({"acc_vs_p_" + name, std::move(c)});
  }
  return figures;
}

}  // namespace simcom
