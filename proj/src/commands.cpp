#include "simcom/commands.hpp"

#include "simcom/config.hpp"
#include "simcom/errors.hpp"
#include "simcom/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace simcom {

namespace {

using nlohmann::json;

bool is_manifest(const std::string& path) { return fs::path(path).extension() == ".json"; }

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

void say(std::ostream* log, const std::string& msg) {
  if (log) *log << msg << '\n' << std::flush;
}

}  // namespace

ExperimentConfig resolve_config(const CommandOptions& options, bool for_sweep) {
  ExperimentConfig config;
  if (!options.config_path.empty()) {
    if (is_manifest(options.config_path)) {
      std::ifstream in(options.config_path);
      if (!in) throw ConfigError("cannot open manifest '" + options.config_path + "'");
      json manifest;
      try {
        manifest = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError("bad manifest: " + std::string(e.what()));
      }
      if (!manifest.contains("config_snapshot") || !manifest["config_snapshot"].is_string())
        throw ConfigError("manifest has no config_snapshot");
      std::istringstream text(manifest["config_snapshot"].get<std::string>());
      config = experiment_from_map(parse_config_text(text));
    } else {
      config = load_experiment_config(options.config_path);
    }
  }
  if (options.seed) {
    if (for_sweep) config.seeds = {*options.seed};
    else config.corpus.seed = *options.seed;
  }
  if (options.methods) config.methods = *options.methods;
  validate(config);
  return config;
}

std::string cmd_generate(const CommandOptions& options) {
  const ExperimentConfig config = resolve_config(options, false);
  const Corpus corpus = generate_corpus(config.corpus.generator, config.corpus.seed);
  fs::create_directories(options.out_dir);
  const fs::path path = fs::path(options.out_dir) / "corpus.jsonl";
  std::ostringstream text;
  write_corpus(corpus, text);
  write_text(path, text.str());
  say(options.log, "wrote " + std::to_string(corpus.size()) + " papers to " + path.string());
  return path.string();
}

int cmd_sweep(const CommandOptions& options) {
  const ExperimentConfig config = resolve_config(options, true);
  const fs::path out(options.out_dir);
  fs::create_directories(out);

  const std::vector<GridPoint> grid = expand_grid(config);
  json manifest;
  manifest["version"] = kVersion;
  manifest["created"] = timestamp();
  manifest["output_dir"] = fs::absolute(out).string();
  manifest["config_snapshot"] = config_snapshot(config);
  manifest["config_file"] = "config.snapshot";
  manifest["seeds"] = config.seeds;
  manifest["threads"] = options.threads;
  manifest["series"] = json::array();
  for (const auto& p : grid)
    manifest["series"].push_back({{"key", p.key()}, {"csv", p.key() + ".csv"}, {"status", "pending"}});
  manifest["failures"] = json::array();
  write_text(out / "config.snapshot", config_snapshot(config));
  write_text(out / "manifest.json", manifest.dump(2) + "\n");

  const Corpus corpus = materialize_corpus(config.corpus);
  say(options.log, "corpus: " + std::to_string(corpus.size()) + " papers; grid: " + std::to_string(grid.size()) +
                       " points x " + std::to_string(config.rounds) + " rounds");

  std::map<std::string, std::string> failures;
  run_experiment(config, corpus, options.threads, [&](const Series& s) {
    const std::string key = s.point.key();
    std::ostringstream text;
    write_series_csv(text, s);
    write_text(out / (key + ".csv"), text.str());
    if (!s.failure.empty()) failures[key] = s.failure;
    std::size_t skipped = 0;
    for (const auto& r : s.rounds) skipped += r.skipped ? 1 : 0;
    say(options.log, key + ": " + (s.failure.empty() ? "ok" : "FAILED: " + s.failure) + " (" +
                         std::to_string(s.rounds.size()) + " rounds, " + std::to_string(skipped) + " skipped)");
  });

  for (auto& entry : manifest["series"]) {
    const auto key = entry["key"].get<std::string>();
    const auto it = failures.find(key);
    entry["status"] = it == failures.end() ? "ok" : "failed";
    if (it != failures.end()) manifest["failures"].push_back({{"key", key}, {"error", it->second}});
  }
  manifest["finished"] = timestamp();
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  return failures.empty() ? kExitOk : kExitPartial;
}

std::size_t cmd_report(const std::string& results_dir, const std::string& report_dir, std::ostream* log) {
  if (!fs::is_directory(results_dir)) throw NoDataError("no results directory '" + results_dir + "'");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(results_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<CsvRow> rows;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string header;
    std::getline(in, header);
    if (header != kCsvHeader) continue;  // not a round log
    in.seekg(0);
    auto part = read_csv(in);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  if (rows.empty()) throw NoDataError("no round-log CSV files with data in '" + results_dir + "'");

  const fs::path dest = report_dir.empty() ? fs::path(results_dir) / "report" : fs::path(report_dir);
  fs::create_directories(dest);

  const std::vector<SeriesData> series = group_series(rows);
  std::vector<SeriesSummary> summaries;
  for (const auto& s : series) summaries.push_back(summarize(s));
  std::ostringstream summary;
  write_summary_csv(summary, summaries);
  write_text(dest / "summary.csv", summary.str());

  const std::vector<Figure> figures = build_figures(series);
  for (const auto& fig : figures) {
    write_text(dest / (fig.name + ".svg"), render_svg(fig.chart));
    std::ostringstream data;
    write_chart_csv(data, fig.chart);
    write_text(dest / (fig.name + ".data.csv"), data.str());
  }
  say(log, std::to_string(series.size()) + " series, " + std::to_string(figures.size()) + " figures in " +
               dest.string());
  return figures.size();
}

}  // namespace simcom
