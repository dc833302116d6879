#include "simcom/corpus.hpp"

#include "simcom/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <unordered_set>

namespace simcom {

using nlohmann::json;

namespace {

std::int64_t draw(std::mt19937_64& gen, const Range& r) {
  return std::uniform_int_distribution<std::int64_t>(r.lo, r.hi)(gen);
}

std::size_t draw_index(std::mt19937_64& gen, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen);
}

std::string numbered(char prefix, std::size_t i, int width) {
  std::string digits = std::to_string(i);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return std::string(1, prefix) + digits;
}

}  // namespace

Corpus::Corpus(std::vector<Paper> papers) : papers_(std::move(papers)) {
  std::unordered_map<std::string, std::size_t> by_id;
  by_id.reserve(papers_.size());
  for (std::size_t i = 0; i < papers_.size(); ++i) {
    const Paper& p = papers_[i];
    if (p.authors.empty()) throw SchemaError(i + 1, "paper " + p.id + " has no authors");
    if (p.citations < 0) throw SchemaError(i + 1, "paper " + p.id + " has negative citations");
    if (!by_id.emplace(p.id, i).second) throw SchemaError(i + 1, "duplicate paper id " + p.id);
    std::set<std::string> seen;
    for (const auto& a : p.authors) {
      if (seen.insert(a).second) by_author_[a].push_back(i);
    }
  }

  links_.resize(papers_.size());
  for (std::size_t i = 0; i < papers_.size(); ++i) {
    auto& refs = papers_[i].references;
    std::vector<std::string> kept;
    kept.reserve(refs.size());
    for (auto& r : refs) {
      auto it = by_id.find(r);
      if (it == by_id.end()) {
        ++dropped_references_;
        continue;
      }
      kept.push_back(std::move(r));
      if (it->second != i) {
        links_[i].push_back(it->second);
        links_[it->second].push_back(i);
      }
    }
    refs = std::move(kept);
  }
}

std::vector<std::size_t> Corpus::neighbors(std::size_t index, bool include_references) const {
  const Paper& p = papers_.at(index);
  std::vector<std::size_t> out;
  for (const auto& a : p.authors) {
    const auto& list = by_author_.at(a);
    out.insert(out.end(), list.begin(), list.end());
  }
  if (include_references) out.insert(out.end(), links_[index].begin(), links_[index].end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  out.erase(std::remove(out.begin(), out.end(), index), out.end());
  return out;
}

std::span<const std::size_t> Corpus::papers_by_author(const std::string& author) const {
  auto it = by_author_.find(author);
  if (it == by_author_.end()) return {};
  return it->second;
}

// ---------------------------------------------------------------------------

Corpus generate_corpus(const GeneratorConfig& config, std::uint64_t seed) {
  if (config.n_papers == 0 || config.n_authors == 0) throw ConfigError("corpus counts must be > 0");
  for (const Range* r : {&config.authors_per_paper, &config.citation_range, &config.references_per_paper})
    if (r->lo > r->hi) throw ConfigError("empty range");
  if (config.authors_per_paper.lo < 1) throw ConfigError("papers need at least one author");
  if (config.citation_range.lo < 0 || config.references_per_paper.lo < 0)
    throw ConfigError("negative range bound");
  if (config.authors_per_paper.hi > static_cast<std::int64_t>(config.n_authors))
    throw ConfigError("authors_per_paper max " + std::to_string(config.authors_per_paper.hi) +
                      " exceeds n_authors " + std::to_string(config.n_authors));

  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const int pw = static_cast<int>(std::to_string(config.n_papers).size());
  const int aw = static_cast<int>(std::to_string(config.n_authors).size());

  // One ticket per author plus one per authored paper: uniform ticket draws
  // are preferential attachment on (1 + papers written).
  std::vector<std::size_t> tickets(config.n_authors);
  for (std::size_t a = 0; a < config.n_authors; ++a) tickets[a] = a;
  // Co-author multiset per author; repeated collaborators appear repeatedly.
  std::vector<std::vector<std::size_t>> collaborators(config.n_authors);
  std::vector<std::vector<std::size_t>> written(config.n_authors);

  std::vector<Paper> papers;
  papers.reserve(config.n_papers);
  for (std::size_t i = 0; i < config.n_papers; ++i) {
    const auto want = static_cast<std::size_t>(draw(gen, config.authors_per_paper));
    std::vector<std::size_t> team{tickets[draw_index(gen, tickets.size())]};
    std::size_t guard = 0;
    while (team.size() < want && guard++ < 64 * want + 64) {
      std::size_t candidate;
      const auto& pool = collaborators[team[draw_index(gen, team.size())]];
      if (!pool.empty() && coin(gen) < config.collaboration_bias)
        candidate = pool[draw_index(gen, pool.size())];
      else
        candidate = tickets[draw_index(gen, tickets.size())];
      if (std::find(team.begin(), team.end(), candidate) == team.end()) team.push_back(candidate);
    }
    // Degenerate preferential draws: fill with the lowest unused ids.
    for (std::size_t a = 0; team.size() < want; ++a)
      if (std::find(team.begin(), team.end(), a) == team.end()) team.push_back(a);

    Paper p;
    p.id = numbered('P', i, pw);
    p.citations = draw(gen, config.citation_range);
    std::vector<std::size_t> sorted_team = team;
    std::sort(sorted_team.begin(), sorted_team.end());
    for (std::size_t a : sorted_team) p.authors.push_back(numbered('A', a, aw));

    const auto n_refs = static_cast<std::size_t>(draw(gen, config.references_per_paper));
    if (n_refs > 0 && i > 0) {
      std::vector<std::size_t> pool;
      for (std::size_t a : sorted_team) pool.insert(pool.end(), written[a].begin(), written[a].end());
      std::sort(pool.begin(), pool.end());
      pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
      std::shuffle(pool.begin(), pool.end(), gen);
      std::vector<std::size_t> refs(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(n_refs, pool.size())));
      for (std::size_t tries = 0; refs.size() < std::min(n_refs, i) && tries < 8 * n_refs; ++tries) {
        const std::size_t r = draw_index(gen, i);
        if (std::find(refs.begin(), refs.end(), r) == refs.end()) refs.push_back(r);
      }
      std::sort(refs.begin(), refs.end());
      for (std::size_t r : refs) p.references.push_back(papers[r].id);
    }

    for (std::size_t a : team) {
      tickets.push_back(a);
      written[a].push_back(i);
      for (std::size_t b : team)
        if (b != a) collaborators[a].push_back(b);
    }
    papers.push_back(std::move(p));
  }
  return Corpus(std::move(papers));
}

// ---------------------------------------------------------------------------

Corpus read_corpus(std::istream& in) {
  std::vector<Paper> papers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed record: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(line_no, "record is not an object");

    auto require = [&](const char* key) -> const json& {
      auto it = record.find(key);
      if (it == record.end()) throw SchemaError(line_no, std::string("missing field '") + key + "'");
      return *it;
    };
    Paper p;
    const json& id = require("id");
    const json& authors = require("authors");
    const json& citations = require("citations");
    const json& references = require("references");
    if (!id.is_string()) throw SchemaError(line_no, "'id' must be a string");
    if (!authors.is_array() || authors.empty())
      throw SchemaError(line_no, "'authors' must be a non-empty array");
    if (!citations.is_number_integer() || citations.get<std::int64_t>() < 0)
      throw SchemaError(line_no, "'citations' must be a non-negative integer");
    if (!references.is_array()) throw SchemaError(line_no, "'references' must be an array");
    p.id = id.get<std::string>();
    for (const auto& a : authors) {
      if (!a.is_string()) throw SchemaError(line_no, "author ids must be strings");
      p.authors.push_back(a.get<std::string>());
    }
    p.citations = citations.get<std::int64_t>();
    for (const auto& r : references) {
      if (!r.is_string()) throw SchemaError(line_no, "reference ids must be strings");
      p.references.push_back(r.get<std::string>());
    }
    papers.push_back(std::move(p));
  }
  return Corpus(std::move(papers));
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path);
  return read_corpus(in);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const Paper& p : corpus.papers()) {
    json record = {{"id", p.id}, {"authors", p.authors}, {"citations", p.citations},
                   {"references", p.references}};
    out << record.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

WalkSample sample_walk(const Corpus& corpus, const WalkConfig& config, std::uint64_t seed) {
  auto eligible = [&](std::size_t i) { return config.citation_range.contains(corpus.paper(i).citations); };
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (eligible(i)) starts.push_back(i);
  if (starts.empty()) throw EmptySampleError("no paper with citations in range");

  std::mt19937_64 gen(seed);
  const std::size_t start = starts[draw_index(gen, starts.size())];

  auto eligible_neighbors = [&](std::size_t i) {
    std::vector<std::size_t> out = corpus.neighbors(i, config.use_references);
    out.erase(std::remove_if(out.begin(), out.end(), [&](std::size_t j) { return !eligible(j); }), out.end());
    return out;
  };

  // How many distinct papers the walk can possibly reach, capped at n_papers.
  std::size_t reachable = 1;
  {
    std::unordered_set<std::size_t> seen{start};
    std::queue<std::size_t> frontier;
    frontier.push(start);
    while (!frontier.empty() && reachable < config.n_papers) {
      const std::size_t cur = frontier.front();
      frontier.pop();
      for (std::size_t j : eligible_neighbors(cur)) {
        if (seen.insert(j).second) {
          frontier.push(j);
          if (++reachable >= config.n_papers) break;
        }
      }
    }
  }
  const std::size_t target = std::min(config.n_papers, reachable);

  std::vector<std::size_t> order{start};
  std::unordered_set<std::size_t> visited{start};
  const std::size_t step_budget = 200 * config.n_papers + 1000;
  std::size_t current = start;
  for (std::size_t step = 0; order.size() < target && step < step_budget; ++step) {
    const auto next = eligible_neighbors(current);
    if (next.empty()) break;
    current = next[draw_index(gen, next.size())];
    if (visited.insert(current).second) order.push_back(current);
  }

  WalkSample sample;
  sample.start_id = corpus.paper(start).id;
  sample.seed = seed;
  sample.short_sample = order.size() < config.n_papers;
  sample.papers.reserve(order.size());
  for (std::size_t i : order) sample.papers.push_back(corpus.paper(i));
  return sample;
}

CoauthorshipComplex build_coauthorship_complex(const WalkSample& sample, int k_max) {
  if (sample.papers.empty()) throw EmptySampleError("cannot build a complex from an empty sample");
  if (k_max < 0) throw ConfigError("k_max must be >= 0");

  CoauthorshipComplex out;
  std::set<std::string> author_set;
  for (const Paper& p : sample.papers) author_set.insert(p.authors.begin(), p.authors.end());
  out.authors.assign(author_set.begin(), author_set.end());
  std::map<std::string, VertexId> dense;
  for (std::size_t i = 0; i < out.authors.size(); ++i) dense.emplace(out.authors[i], static_cast<VertexId>(i));

  std::vector<std::vector<VertexId>> tops;
  std::map<std::vector<VertexId>, double> totals;
  for (const Paper& p : sample.papers) {
    std::vector<VertexId> team;
    for (const auto& a : p.authors) team.push_back(dense.at(a));
    std::sort(team.begin(), team.end());
    team.erase(std::unique(team.begin(), team.end()), team.end());
    tops.push_back(team);

    // Every face of size <= k_max + 1 accumulates this paper's citations.
    const std::size_t cap = std::min(team.size(), static_cast<std::size_t>(k_max) + 1);
    for (std::size_t size = 1; size <= cap; ++size) {
      std::vector<bool> mask(team.size(), false);
      std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(size), true);
      do {
        std::vector<VertexId> face;
        for (std::size_t i = 0; i < team.size(); ++i)
          if (mask[i]) face.push_back(team[i]);
        totals[face] += static_cast<double>(p.citations);
      } while (std::prev_permutation(mask.begin(), mask.end()));
    }
  }

  out.complex = build_complex(tops, k_max);
  for (int k = 0; k <= out.complex.top_degree(); ++k) {
    Cochain c{k, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.complex.count(k)), 1)};
    const auto& simplices = out.complex.simplices(k);
    for (std::size_t i = 0; i < simplices.size(); ++i)
      c.values(static_cast<Eigen::Index>(i), 0) = totals.at(simplices[i].vertices());
    out.cochains.push_back(std::move(c));
  }
  return out;
}

}  // namespace simcom
