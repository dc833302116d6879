#include "simcom/config.hpp"

#include "simcom/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace simcom {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& key, const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(key + ": empty list element");
    out.push_back(item);
  }
  if (out.empty()) throw ConfigError(key + ": list must not be empty");
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw ConfigError(key + ": not a number: '" + text + "'");
  return v;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& text) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError(key + ": not an integer in range: '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

Range to_range(const std::string& key, const std::string& text) {
  const auto parts = split_list(key, text);
  if (parts.size() != 2) throw ConfigError(key + ": expected 'lo, hi'");
  Range r{to_int<std::int64_t>(key, parts[0]), to_int<std::int64_t>(key, parts[1])};
  if (r.lo > r.hi) throw ConfigError(key + ": lo > hi");
  return r;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

template <typename T, typename F>
std::string join(const std::vector<T>& values, F&& render) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += render(values[i]);
  }
  return out;
}

std::string range_text(const Range& r) { return std::to_string(r.lo) + ", " + std::to_string(r.hi); }

}  // namespace

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys{
      "rounds",
      "corpus.path",
      "corpus.seed",
      "corpus.n_papers",
      "corpus.n_authors",
      "corpus.authors_per_paper",
      "corpus.citation_range",
      "corpus.references_per_paper",
      "corpus.collaboration_bias",
      "walk.n_papers",
      "walk.citation_range",
      "walk.use_references",
      "grid.methods",
      "grid.embed_orders",
      "grid.snr_dbs",
      "grid.ps",
      "grid.modes",
      "grid.seeds",
      "model.order",
      "model.depth",
      "model.hidden",
      "model.k_max",
      "model.feature_scale",
      "train.learning_rate",
      "train.clip_norm",
      "train.lambda_topology",
      "train.freeze_complex",
  };
  return keys;
}

ConfigMap parse_config_text(std::istream& in) {
  ConfigMap map;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
    if (!map.emplace(key, value).second)
      throw ConfigError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
  }
  return map;
}

ConfigMap load_config_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config_text(in);
}

ExperimentConfig experiment_from_map(const ConfigMap& map, ExperimentConfig c) {
  const auto& known = known_config_keys();
  std::vector<std::string> unknown;
  for (const auto& [key, value] : map)
    if (std::find(known.begin(), known.end(), key) == known.end()) unknown.push_back(key);
  if (!unknown.empty()) {
    std::string names;
    for (const auto& k : unknown) names += (names.empty() ? "" : ", ") + k;
    throw ConfigError("unknown config keys: " + names);
  }

  for (const auto& [key, v] : map) {
    if (key == "rounds") c.rounds = to_int<std::size_t>(key, v);
    else if (key == "corpus.path") c.corpus.path = v;
    else if (key == "corpus.seed") c.corpus.seed = to_int<std::uint64_t>(key, v);
    else if (key == "corpus.n_papers") c.corpus.generator.n_papers = to_int<std::size_t>(key, v);
    else if (key == "corpus.n_authors") c.corpus.generator.n_authors = to_int<std::size_t>(key, v);
    else if (key == "corpus.authors_per_paper") c.corpus.generator.authors_per_paper = to_range(key, v);
    else if (key == "corpus.citation_range") c.corpus.generator.citation_range = to_range(key, v);
    else if (key == "corpus.references_per_paper") c.corpus.generator.references_per_paper = to_range(key, v);
    else if (key == "corpus.collaboration_bias") c.corpus.generator.collaboration_bias = to_double(key, v);
    else if (key == "walk.n_papers") c.walk.n_papers = to_int<std::size_t>(key, v);
    else if (key == "walk.citation_range") c.walk.citation_range = to_range(key, v);
    else if (key == "walk.use_references") c.walk.use_references = to_bool(key, v);
    else if (key == "grid.methods") {
      c.methods.clear();
      for (const auto& s : split_list(key, v)) c.methods.push_back(parse_method(s));
    } else if (key == "grid.embed_orders") {
      c.embed_orders.clear();
      for (const auto& s : split_list(key, v)) c.embed_orders.push_back(to_int<int>(key, s));
    } else if (key == "grid.snr_dbs") {
      c.snr_dbs.clear();
      for (const auto& s : split_list(key, v)) c.snr_dbs.push_back(to_double(key, s));
    } else if (key == "grid.ps") {
      c.ps.clear();
      for (const auto& s : split_list(key, v)) c.ps.push_back(to_double(key, s));
    } else if (key == "grid.modes") {
      c.modes.clear();
      for (const auto& s : split_list(key, v)) c.modes.push_back(parse_degradation_mode(s));
    } else if (key == "grid.seeds") {
      c.seeds.clear();
      for (const auto& s : split_list(key, v)) c.seeds.push_back(to_int<std::uint64_t>(key, s));
    }
    else if (key == "model.order") c.order = to_int<int>(key, v);
    else if (key == "model.depth") c.depth = to_int<int>(key, v);
    else if (key == "model.hidden") c.hidden = to_int<int>(key, v);
    else if (key == "model.k_max") c.k_max = to_int<int>(key, v);
    else if (key == "model.feature_scale") c.feature_scale = to_double(key, v);
    else if (key == "train.learning_rate") c.learning_rate = to_double(key, v);
    else if (key == "train.clip_norm") c.clip_norm = to_double(key, v);
    else if (key == "train.lambda_topology") c.lambda_topology = to_double(key, v);
    else if (key == "train.freeze_complex") c.freeze_complex = to_bool(key, v);
  }
  validate(c);
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_from_map(load_config_map(path));
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
  const auto& g = c.corpus.generator;
  out << "rounds = " << c.rounds << '\n'
      << "\n# corpus\n"
      << "corpus.path = " << c.corpus.path << '\n'
      << "corpus.seed = " << c.corpus.seed << '\n'
      << "corpus.n_papers = " << g.n_papers << '\n'
      << "corpus.n_authors = " << g.n_authors << '\n'
      << "corpus.authors_per_paper = " << range_text(g.authors_per_paper) << '\n'
      << "corpus.citation_range = " << range_text(g.citation_range) << '\n'
      << "corpus.references_per_paper = " << range_text(g.references_per_paper) << '\n'
      << "corpus.collaboration_bias = " << fmt(g.collaboration_bias) << '\n'
      << "\n# walk\n"
      << "walk.n_papers = " << c.walk.n_papers << '\n'
      << "walk.citation_range = " << range_text(c.walk.citation_range) << '\n'
      << "walk.use_references = " << (c.walk.use_references ? "true" : "false") << '\n'
      << "\n# grid\n"
      << "grid.methods = " << join(c.methods, [](Method m) { return to_string(m); }) << '\n'
      << "grid.embed_orders = " << join(c.embed_orders, [](int v) { return std::to_string(v); }) << '\n'
      << "grid.snr_dbs = " << join(c.snr_dbs, fmt) << '\n'
      << "grid.ps = " << join(c.ps, fmt) << '\n'
      << "grid.modes = " << join(c.modes, [](DegradationMode m) { return to_string(m); }) << '\n'
      << "grid.seeds = " << join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }) << '\n'
      << "\n# model\n"
      << "model.order = " << c.order << '\n'
      << "model.depth = " << c.depth << '\n'
      << "model.hidden = " << c.hidden << '\n'
      << "model.k_max = " << c.k_max << '\n'
      << "model.feature_scale = " << fmt(c.feature_scale) << '\n'
      << "\n# train\n"
      << "train.learning_rate = " << fmt(c.learning_rate) << '\n'
      << "train.clip_norm = " << fmt(c.clip_norm) << '\n'
      << "train.lambda_topology = " << fmt(c.lambda_topology) << '\n'
      << "train.freeze_complex = " << (c.freeze_complex ? "true" : "false") << '\n';
}

std::string config_snapshot(const ExperimentConfig& config) {
  std::ostringstream s;
  write_config(s, config);
  return s.str();
}

}  // namespace simcom
