#include "simcom/commands.hpp"
#include "simcom/config.hpp"
#include "simcom/errors.hpp"
#include "simcom/protocol.hpp"
#include "simcom/report.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace simcom;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.corpus.generator.n_papers = 300;
  c.corpus.generator.n_authors = 120;
  c.walk.n_papers = 20;
  c.rounds = 5;
  c.hidden = 8;
  return c;
}

const Corpus& small_corpus() {
  static const Corpus corpus = materialize_corpus(small_config().corpus);
  return corpus;
}

std::vector<double> values_of(Codec& codec) {
  std::vector<double> out;
  for (const Parameter* p : codec.parameters())
    out.insert(out.end(), p->value.data(), p->value.data() + p->value.size());
  return out;
}

bool same_double(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool same_log(const RoundLog& a, const RoundLog& b) {
  return a.round == b.round && same_double(a.loss, b.loss) && same_double(a.acc_received, b.acc_received) &&
         same_double(a.acc_eval_raw, b.acc_eval_raw) && same_double(a.acc_eval, b.acc_eval) &&
         same_double(a.err_eval, b.err_eval) && same_double(a.lap_err_eval, b.lap_err_eval) &&
         a.simplex_counts == b.simplex_counts && a.skipped == b.skipped;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("methods and grid keys") {
  CHECK(parse_method("sae") == Method::kSae);
  CHECK(parse_method("lae") == Method::kLae);
  CHECK(parse_method("scn_oracle") == Method::kScnOracle);
  CHECK(to_string(Method::kScnOracle) == "scn_oracle");
  CHECK_THROWS_AS(parse_method("cnn"), ConfigError);

  const GridPoint p{Method::kSae, 10, 20.0, 0.5, DegradationMode::kMissing, 1};
  CHECK(p.key() == "sae_v10_snr20_p50_missing_s1");
  const GridPoint q{Method::kLae, 1, kNoNoise, 0.1, DegradationMode::kDistorted, 7};
  CHECK(q.key() == "lae_v1_snrinf_p10_distorted_s7");
}

TEST_CASE("expand_grid") {
  ExperimentConfig c;
  CHECK(expand_grid(c).size() == 27);

  c.methods = {Method::kSae, Method::kLae};
  c.embed_orders = {10};
  c.snr_dbs = {5, 20};
  c.ps = {0.5};
  c.modes = {DegradationMode::kMissing, DegradationMode::kDistorted};
  c.seeds = {1, 2};
  const auto grid = expand_grid(c);
  REQUIRE(grid.size() == 16);
  CHECK(grid[0].key() == "sae_v10_snr5_p50_missing_s1");
  CHECK(grid[1].key() == "sae_v10_snr5_p50_missing_s2");
  CHECK(grid[2].key() == "sae_v10_snr5_p50_distorted_s1");
  CHECK(grid[4].key() == "sae_v10_snr20_p50_missing_s1");
  CHECK(grid[8].key() == "lae_v10_snr5_p50_missing_s1");

  ExperimentConfig bad;
  bad.ps = {};
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = {};
  bad.rounds = 0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = {};
  bad.ps = {1.2};
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = {};
  bad.embed_orders = {0};
  CHECK_THROWS_AS(validate(bad), ConfigError);
  CHECK_NOTHROW(validate(ExperimentConfig{}));
}

TEST_CASE("grid points sharing a seed see the same walks") {
  const ExperimentConfig c = small_config();
  for (std::size_t t = 0; t < 5; ++t) {
    const auto a = sample_round_complex(small_corpus(), c, 3, t);
    const auto b = sample_round_complex(small_corpus(), c, 3, t);
    CHECK(a.complex == b.complex);
  }
  CHECK_FALSE(sample_round_complex(small_corpus(), c, 3, 0).complex ==
              sample_round_complex(small_corpus(), c, 3, 1).complex);
  CHECK(walk_seed(3, 0) != channel_seed(3, 0));
  CHECK(walk_seed(3, 0) != walk_seed(4, 0));

  ExperimentConfig frozen = c;
  frozen.freeze_complex = true;
  CHECK(sample_round_complex(small_corpus(), frozen, 3, 4).complex ==
        sample_round_complex(small_corpus(), frozen, 3, 0).complex);

  const GridPoint sae{Method::kSae, 5, 10, 0.3, DegradationMode::kMissing, 3};
  GridPoint lae = sae;
  lae.method = Method::kLae;
  lae.snr_db = 20;
  const Series s1 = run_grid_point(small_corpus(), c, sae);
  const Series s2 = run_grid_point(small_corpus(), c, lae);
  REQUIRE(s1.rounds.size() == s2.rounds.size());
  for (std::size_t t = 0; t < s1.rounds.size(); ++t) CHECK(s1.rounds[t].simplex_counts == s2.rounds[t].simplex_counts);
}

TEST_CASE("run_grid_point") {
  ExperimentConfig c = small_config();
  c.rounds = 1;
  const GridPoint p{Method::kSae, 5, 10, 0.3, DegradationMode::kMissing, 2};
  const Series one = run_grid_point(small_corpus(), c, p);
  CHECK(one.failure.empty());
  CHECK(one.rounds.size() == 1);

  c.rounds = 6;
  for (Method m : {Method::kSae, Method::kLae, Method::kScnOracle}) {
    GridPoint q = p;
    q.method = m;
    const Series a = run_grid_point(small_corpus(), c, q);
    const Series b = run_grid_point(small_corpus(), c, q);
    REQUIRE(a.rounds.size() == 6);
    for (std::size_t t = 0; t < 6; ++t) {
      CAPTURE(t);
      CHECK(a.rounds[t].round == t);
      CHECK(same_log(a.rounds[t], b.rounds[t]));
    }
  }
}

TEST_CASE("a perfect link leaves nothing to evaluate") {
  ExperimentConfig c = small_config();
  c.rounds = 3;
  const GridPoint p{Method::kSae, 5, kNoNoise, 0.0, DegradationMode::kMissing, 1};
  for (const RoundLog& r : run_grid_point(small_corpus(), c, p).rounds) {
    CHECK_FALSE(r.skipped);
    CHECK(std::isfinite(r.loss));
    CHECK(std::isfinite(r.acc_received));
    CHECK(std::isnan(r.acc_eval));
    CHECK(std::isnan(r.acc_eval_raw));
  }
}

TEST_CASE("skipped rounds leave parameters untouched") {
  std::istringstream text(R"({"id":"a","authors":["solo"],"citations":4,"references":[]})");
  const Corpus lonely = read_corpus(text);
  const ExperimentConfig c = small_config();
  const GridPoint p{Method::kSae, 5, 10, 0.3, DegradationMode::kMissing, 1};
  auto codec = make_codec(c, p);
  const auto before = values_of(*codec);
  const RoundLog r = run_round(*codec, lonely, c, p, 0);
  CHECK(r.skipped);
  CHECK_FALSE(r.skip_reason.empty());
  CHECK(std::isnan(r.loss));
  CHECK(values_of(*codec) == before);
}

TEST_CASE("distributed and monolithic rounds agree bit for bit") {
  const ExperimentConfig c = small_config();
  for (Method m : {Method::kSae, Method::kLae, Method::kScnOracle}) {
    CAPTURE(to_string(m));
    const GridPoint p{m, 5, 10, 0.3, DegradationMode::kDistorted, 4};
    auto a = make_codec(c, p);
    auto b = make_codec(c, p);
    for (std::size_t t = 0; t < 5; ++t) {
      const RoundLog la = run_round(*a, small_corpus(), c, p, t, FeedbackSplit::kDistributed);
      const RoundLog lb = run_round(*b, small_corpus(), c, p, t, FeedbackSplit::kMonolithic);
      CHECK(same_log(la, lb));
    }
    CHECK(values_of(*a) == values_of(*b));
  }
}

TEST_CASE("baselines learn on a clean link") {
  ExperimentConfig c = small_config();
  c.rounds = 150;
  for (Method m : {Method::kLae, Method::kScnOracle}) {
    CAPTURE(to_string(m));
    const GridPoint p{m, 5, kNoNoise, 0.0, DegradationMode::kMissing, 1};
    const Series s = run_grid_point(small_corpus(), c, p);
    std::vector<double> loss;
    for (const RoundLog& r : s.rounds) loss.push_back(r.loss);
    const std::vector<double> head(loss.begin(), loss.begin() + 30);
    CHECK(trailing_stats(loss, 30).mean < trailing_stats(head, 30).mean);
  }

  // The oracle is handed the true Laplacians.
  const GridPoint p{Method::kScnOracle, 5, 10, 0.3, DegradationMode::kMissing, 1};
  auto codec = make_codec(c, p);
  const auto complex = sample_round_complex(small_corpus(), c, 1, 0);
  const RoundInput in = prepare_round_input(complex, c.k_max, c.feature_scale);
  const Reconstruction r = codec->decode(codec->encode(in), in);
  for (std::size_t k = 0; k < in.degrees(); ++k) CHECK(r.laplacians[k] == in.laplacians[k]);
  CHECK_FALSE(codec->learns_structure());
}

TEST_CASE("run_experiment matches per-point runs in any thread count") {
  ExperimentConfig c = small_config();
  c.rounds = 3;
  c.methods = {Method::kSae, Method::kLae};
  c.embed_orders = {5};
  c.snr_dbs = {10};
  c.ps = {0.3};
  c.seeds = {1, 2};
  std::size_t callbacks = 0;
  const auto serial = run_experiment(c, small_corpus(), 1);
  const auto parallel = run_experiment(c, small_corpus(), 3, [&](const Series&) { ++callbacks; });
  CHECK(callbacks == 4);
  REQUIRE(serial.size() == 4);
  REQUIRE(parallel.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(serial[i].point.key() == expand_grid(c)[i].key());
    CHECK(parallel[i].point.key() == serial[i].point.key());
    for (std::size_t t = 0; t < 3; ++t) CHECK(same_log(serial[i].rounds[t], parallel[i].rounds[t]));
  }
}

TEST_CASE("config text") {
  std::istringstream ok(
      "# comment\n"
      "rounds = 12\n"
      "\n"
      "grid.snr_dbs = 5, inf\n"
      "grid.methods = sae, lae\n"
      "corpus.citation_range = 2, 7\n"
      "train.freeze_complex = true\n");
  const ExperimentConfig c = experiment_from_map(parse_config_text(ok));
  CHECK(c.rounds == 12);
  CHECK(c.snr_dbs == std::vector<double>{5.0, kNoNoise});
  CHECK(c.methods == std::vector<Method>{Method::kSae, Method::kLae});
  CHECK(c.corpus.generator.citation_range.lo == 2);
  CHECK(c.corpus.generator.citation_range.hi == 7);
  CHECK(c.freeze_complex);

  std::istringstream unknown("rounds = 3\ngrid.snrs = 5\nmodel.width = 3\n");
  try {
    experiment_from_map(parse_config_text(unknown));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("grid.snrs") != std::string::npos);
    CHECK(what.find("model.width") != std::string::npos);
  }

  std::istringstream duplicate("rounds = 3\nrounds = 4\n");
  CHECK_THROWS_AS(parse_config_text(duplicate), ConfigError);
  std::istringstream malformed("rounds 3\n");
  CHECK_THROWS_AS(parse_config_text(malformed), ConfigError);
  std::istringstream bad_value("rounds = many\n");
  CHECK_THROWS_AS(experiment_from_map(parse_config_text(bad_value)), ConfigError);
  std::istringstream bad_grid("grid.ps = 0.5, 2\n");
  CHECK_THROWS_AS(experiment_from_map(parse_config_text(bad_grid)), ConfigError);

  ExperimentConfig custom = c;
  custom.learning_rate = 0.0123456789012345;
  custom.modes = {DegradationMode::kDistorted};
  custom.corpus.path = "some/corpus.jsonl";
  const std::string snap = config_snapshot(custom);
  std::istringstream back(snap);
  const ExperimentConfig parsed = experiment_from_map(parse_config_text(back));
  CHECK(config_snapshot(parsed) == snap);
  CHECK(parsed.learning_rate == custom.learning_rate);
  CHECK(parse_config_text(back = std::istringstream(snap)).size() == known_config_keys().size());
}

TEST_CASE("format_double round-trips exactly") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(kNaN) == "nan");
  CHECK(format_double(kNoNoise) == "inf");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) / (1 + i);
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("CSV round trip and trailing statistics") {
  ExperimentConfig c = small_config();
  c.rounds = 120;
  c.hidden = 4;
  const GridPoint p{Method::kLae, 5, 10, 0.3, DegradationMode::kMissing, 1};
  Series s = run_grid_point(small_corpus(), c, p);
  s.rounds[3].skipped = true;
  s.rounds[3].acc_received = kNaN;

  std::stringstream csv;
  write_series_csv(csv, s);
  CHECK(csv.str().substr(0, csv.str().find('\n')) == kCsvHeader);
  const std::vector<CsvRow> rows = read_csv(csv);
  REQUIRE(rows.size() == s.rounds.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    CHECK(rows[t].method == "lae");
    CHECK(rows[t].p_pct == 30.0);
    CHECK(rows[t].round == t);
    CHECK(same_double(rows[t].loss, s.rounds[t].loss));
    CHECK(same_double(rows[t].acc_received, s.rounds[t].acc_received));
    CHECK(same_double(rows[t].acc_eval_clamped, s.rounds[t].acc_eval));
    CHECK(rows[t].skipped == s.rounds[t].skipped);
  }

  // Independent recomputation over the parsed column.
  const auto groups = group_series(rows);
  REQUIRE(groups.size() == 1);
  const SeriesSummary summary = summarize(groups[0]);
  double sum = 0.0, n = 0.0;
  std::vector<double> window;
  for (std::size_t t = rows.size() - 100; t < rows.size(); ++t)
    if (!std::isnan(rows[t].acc_received)) window.push_back(rows[t].acc_received);
  for (double v : window) sum += v, n += 1.0;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : window) ss += (v - mean) * (v - mean);
  CHECK(summary.acc_received.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(summary.acc_received.stddev == doctest::Approx(std::sqrt(ss / (n - 1.0))).epsilon(1e-12));
  CHECK(summary.rounds == 120);
  CHECK(summary.skipped == 1);

  std::istringstream bad_header("method,seed\n");
  CHECK_THROWS_AS(read_csv(bad_header), ParseError);
  std::istringstream bad_row(std::string(kCsvHeader) + "\nsae,1,10,20,50,missing,0,x,1,1,1,1,1,0\n");
  try {
    read_csv(bad_row);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("trailing_stats and smooth") {
  const TrailingStats s = trailing_stats({100.0, kNaN, 1.0, 2.0, 3.0}, 4);
  CHECK(s.count == 3);
  CHECK(s.mean == 2.0);
  CHECK(s.stddev == 1.0);
  CHECK(std::isnan(trailing_stats({kNaN, kNaN}).mean));
  CHECK(trailing_stats({5.0}).stddev == 0.0);

  const auto sm = smooth({1.0, kNaN, 3.0, 5.0}, 2);
  CHECK(sm[0] == 1.0);
  CHECK(sm[1] == 1.0);
  CHECK(sm[2] == 3.0);
  CHECK(sm[3] == 4.0);
}

TEST_CASE("report on a single series") {
  const fs::path dir = fresh_dir("simcom_test_report_single");
  {
    std::ofstream out(dir / "sae_v10_snr20_p50_missing_s1.csv");
    write_csv_header(out);
    for (std::size_t t = 0; t < 30; ++t) {
      CsvRow r;
      r.method = "sae";
      r.seed = 1;
      r.embed_order = 10;
      r.snr_db = 20;
      r.p_pct = 50;
      r.mode = "missing";
      r.round = t;
      r.loss = 0.0;
      r.acc_received = r.acc_eval_raw = r.acc_eval_clamped = 1.0;
      write_csv_row(out, r);
    }
  }
  const std::size_t figures = cmd_report(dir.string());
  CHECK(figures == 1);
  std::size_t svgs = 0;
  for (const auto& e : fs::directory_iterator(dir / "report")) svgs += e.path().extension() == ".svg";
  CHECK(svgs == 1);

  const auto summary_rows = [&] {
    std::ifstream in(dir / "report" / "summary.csv");
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
  }();
  CHECK(summary_rows.size() == 2);

  const auto groups = group_series(read_csv_file((dir / "sae_v10_snr20_p50_missing_s1.csv").string()));
  const SeriesSummary s = summarize(groups.at(0));
  CHECK(s.acc_eval.mean == 1.0);
  CHECK(s.acc_eval.stddev == 0.0);
  const auto figs = build_figures(groups);
  REQUIRE(figs.size() == 1);
  for (const ChartLine& line : figs[0].chart.lines)
    if (line.label.find("acc") != std::string::npos)
      for (double y : line.y) CHECK(y == 1.0);
  const std::string svg = render_svg(figs[0].chart);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("polyline") != std::string::npos);

  const fs::path empty = fresh_dir("simcom_test_report_empty");
  CHECK_THROWS_AS(cmd_report(empty.string()), NoDataError);
  fs::remove_all(dir);
  fs::remove_all(empty);
}

TEST_CASE("comparison figures") {
  std::vector<SeriesData> series;
  for (double snr : {5.0, 20.0})
    for (double p : {10.0, 50.0}) {
      SeriesData s;
      s.id.method = "sae";
      s.id.seed = 1;
      s.id.embed_order = 10;
      s.id.snr_db = snr;
      s.id.p_pct = p;
      s.id.mode = "distorted";
      for (std::size_t t = 0; t < 5; ++t) {
        CsvRow r = s.id;
        r.round = t;
        r.acc_received = r.acc_eval_clamped = r.acc_eval_raw = 0.5;
        s.rows.push_back(r);
      }
      series.push_back(s);
    }
  const auto figs = build_figures(series);
  std::size_t per_series = 0, by_snr = 0, vs_p = 0;
  for (const Figure& f : figs) {
    per_series += f.name.rfind("series_", 0) == 0;
    by_snr += f.name.rfind("acc_by_snr_", 0) == 0;
    vs_p += f.name.rfind("acc_vs_p_", 0) == 0;
  }
  CHECK(per_series == 4);
  CHECK(by_snr == 2);
  CHECK(vs_p == 1);
}
