#pragma once

// Citation corpora and their conversion into featured co-authorship complexes.

#include "simcom/complex.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace simcom {

struct Paper {
  std::string id;
  std::vector<std::string> authors;
  std::int64_t citations = 0;
  std::vector<std::string> references;

  friend bool operator==(const Paper&, const Paper&) = default;
};

/// Inclusive integer range.
struct Range {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  bool contains(std::int64_t v) const noexcept { return v >= lo && v <= hi; }
  friend bool operator==(const Range&, const Range&) = default;
};

class Corpus {
 public:
  Corpus() = default;

  /// References to ids outside `papers` are dropped and counted. Throws
  /// SchemaError on duplicate ids, empty author lists or negative citations.
  explicit Corpus(std::vector<Paper> papers);

  std::size_t size() const noexcept { return papers_.size(); }
  bool empty() const noexcept { return papers_.empty(); }
  const std::vector<Paper>& papers() const noexcept { return papers_; }
  const Paper& paper(std::size_t index) const { return papers_.at(index); }

  /// Reference ids that did not resolve at construction.
  std::size_t dropped_references() const noexcept { return dropped_references_; }

  /// Papers sharing at least one author with `index`, optionally also papers
  /// linked to it by a reference in either direction. Sorted, without `index`.
  std::vector<std::size_t> neighbors(std::size_t index, bool include_references) const;

  std::span<const std::size_t> papers_by_author(const std::string& author) const;

 private:
  std::vector<Paper> papers_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_author_;
  std::vector<std::vector<std::size_t>> links_;  // resolved references, both directions
  std::size_t dropped_references_ = 0;
};

struct GeneratorConfig {
  std::size_t n_papers = 2000;
  std::size_t n_authors = 800;
  Range authors_per_paper{1, 4};
  Range citation_range{1, 10};
  Range references_per_paper{0, 3};
  /// Probability that an extra co-author is drawn from existing collaborators.
  double collaboration_bias = 0.7;
};

/// Synthetic corpus: authors by preferential attachment, uniform citations,
/// references drawn among earlier papers that share an author when possible.
/// Throws ConfigError for empty ranges or more authors per paper than exist.
Corpus generate_corpus(const GeneratorConfig& config, std::uint64_t seed);

/// Line-delimited JSON records: {"id", "authors", "citations", "references"}.
/// Blank lines are skipped. Malformed JSON throws ParseError, missing or
/// mistyped fields SchemaError; both carry the 1-based line number.
Corpus read_corpus(std::istream& in);
Corpus load_corpus(const std::string& path);
void write_corpus(const Corpus& corpus, std::ostream& out);

struct WalkConfig {
  std::size_t n_papers = 80;
  Range citation_range{1, 10};
  /// Walk across reference links as well as shared authors.
  bool use_references = true;
};

struct WalkSample {
  std::vector<Paper> papers;
  std::string start_id;
  std::uint64_t seed = 0;
  /// Fewer than n_papers could be reached from the start.
  bool short_sample = false;
};

/// Uniform random walk over eligible papers (citations in range). Throws
/// EmptySampleError when no paper is eligible.
WalkSample sample_walk(const Corpus& corpus, const WalkConfig& config, std::uint64_t seed);

struct CoauthorshipComplex {
  SimplicialComplex complex;
  /// One single-column cochain per degree 0..top_degree.
  std::vector<Cochain> cochains;
  /// Dense vertex id -> author id (sorted).
  std::vector<std::string> authors;
};

/// Every paper contributes its author set as a simplex (its k_max-faces when
/// larger). A simplex's cochain sums the citations of all sampled papers whose
/// author set contains it.
CoauthorshipComplex build_coauthorship_complex(const WalkSample& sample, int k_max);

}  // namespace simcom
