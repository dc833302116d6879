#include "simcom/complex.hpp"

#include "simcom/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

namespace simcom {

namespace {

std::string describe(const std::vector<VertexId>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out + "]";
}

// All (size)-element subsets of an ascending vertex list, in lexicographic order.
void for_each_subset(const std::vector<VertexId>& vertices, std::size_t size,
                     const auto& visit) {
  const std::size_t n = vertices.size();
  if (size == 0 || size > n) return;
  std::vector<std::size_t> pick(size);
  for (std::size_t i = 0; i < size; ++i) pick[i] = i;
  std::vector<VertexId> subset(size);
  while (true) {
    for (std::size_t i = 0; i < size; ++i) subset[i] = vertices[pick[i]];
    visit(subset);
    std::size_t i = size;
    while (i > 0 && pick[i - 1] == n - size + i - 1) --i;
    if (i == 0) return;
    ++pick[i - 1];
    for (std::size_t j = i; j < size; ++j) pick[j] = pick[j - 1] + 1;
  }
}

}  // namespace

Simplex::Simplex(std::vector<VertexId> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.empty()) throw MalformedSimplexError("simplex has no vertices");
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (vertices_[i] < 0) throw MalformedSimplexError("negative vertex id in " + describe(vertices_));
    if (i > 0 && vertices_[i] <= vertices_[i - 1])
      throw MalformedSimplexError("vertices not strictly ascending in " + describe(vertices_));
  }
}

Simplex Simplex::from_unordered(std::vector<VertexId> vertices) {
  std::sort(vertices.begin(), vertices.end());
  if (std::adjacent_find(vertices.begin(), vertices.end()) != vertices.end())
    throw MalformedSimplexError("duplicate vertex in " + describe(vertices));
  return Simplex(std::move(vertices));
}

Simplex Simplex::face(int m) const {
  if (dimension() < 1) throw DomainError("a vertex has no faces");
  if (m < 0 || m > dimension()) throw DomainError("face index out of range");
  std::vector<VertexId> out;
  out.reserve(vertices_.size() - 1);
  for (int i = 0; i <= dimension(); ++i)
    if (i != m) out.push_back(vertices_[static_cast<std::size_t>(i)]);
  return Simplex(Unchecked{}, std::move(out));
}

std::size_t SimplicialComplex::count(int k) const noexcept {
  if (k < 0 || k > top_degree()) return 0;
  return levels_[static_cast<std::size_t>(k)].size();
}

std::size_t SimplicialComplex::total_count() const noexcept {
  std::size_t total = 0;
  for (const auto& level : levels_) total += level.size();
  return total;
}

const std::vector<Simplex>& SimplicialComplex::simplices(int k) const {
  if (k < 0 || k > top_degree())
    throw DomainError("degree " + std::to_string(k) + " absent from complex");
  return levels_[static_cast<std::size_t>(k)];
}

std::optional<std::size_t> SimplicialComplex::index_of(const Simplex& s) const {
  const int k = s.dimension();
  if (k > top_degree()) return std::nullopt;
  const auto& map = index_[static_cast<std::size_t>(k)];
  auto it = map.find(s.vertices());
  if (it == map.end()) return std::nullopt;
  return it->second;
}

std::vector<std::vector<VertexId>> SimplicialComplex::maximal_simplices() const {
  std::vector<std::vector<VertexId>> out;
  for (int k = 0; k <= top_degree(); ++k) {
    std::set<std::vector<VertexId>> covered;
    if (k < top_degree()) {
      for (const auto& coface : levels_[static_cast<std::size_t>(k + 1)])
        for (int m = 0; m <= k + 1; ++m) covered.insert(coface.face(m).vertices());
    }
    for (const auto& s : levels_[static_cast<std::size_t>(k)])
      if (!covered.contains(s.vertices())) out.push_back(s.vertices());
  }
  return out;
}

SimplicialComplex build_complex(const std::vector<std::vector<VertexId>>& top_simplices,
                                int max_degree) {
  std::vector<std::set<std::vector<VertexId>>> levels;
  for (const auto& raw : top_simplices) {
    const Simplex top = Simplex::from_unordered(raw);
    const std::size_t size_cap =
        max_degree < 0 ? top.vertices().size()
                       : std::min(top.vertices().size(), static_cast<std::size_t>(max_degree) + 1);
    if (levels.size() < size_cap) levels.resize(size_cap);
    for (std::size_t size = 1; size <= size_cap; ++size)
      for_each_subset(top.vertices(), size,
                      [&](const std::vector<VertexId>& f) { levels[size - 1].insert(f); });
  }

  SimplicialComplex complex;
  complex.levels_.resize(levels.size());
  complex.index_.resize(levels.size());
  for (std::size_t k = 0; k < levels.size(); ++k) {
    auto& level = complex.levels_[k];
    level.reserve(levels[k].size());
    for (const auto& v : levels[k]) {
      complex.index_[k].emplace(v, level.size());
      level.emplace_back(v);
    }
  }
  return complex;
}

BoundaryMatrix boundary_matrix(const SimplicialComplex& complex, int k) {
  if (k < 1) throw DomainError("B_" + std::to_string(k) + " does not exist");
  if (k > complex.top_degree())
    throw DomainError("degree " + std::to_string(k) + " absent from complex");

  const auto& cols = complex.simplices(k);
  std::vector<Eigen::Triplet<int>> entries;
  entries.reserve(cols.size() * static_cast<std::size_t>(k + 1));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (int m = 0; m <= k; ++m) {
      const auto row = complex.index_of(cols[j].face(m));
      entries.emplace_back(static_cast<int>(*row), static_cast<int>(j), (m % 2 == 0) ? 1 : -1);
    }
  }
  BoundaryMatrix b;
  b.degree = k;
  b.matrix.resize(static_cast<Eigen::Index>(complex.count(k - 1)),
                  static_cast<Eigen::Index>(cols.size()));
  b.matrix.setFromTriplets(entries.begin(), entries.end());
  return b;
}

HodgeLaplacian hodge_laplacian(const SimplicialComplex& complex, int k) {
  if (k < 0 || k > complex.top_degree())
    throw DomainError("degree " + std::to_string(k) + " absent from complex");
  const auto n = static_cast<Eigen::Index>(complex.count(k));
  HodgeLaplacian l;
  l.degree = k;
  l.matrix = Eigen::MatrixXd::Zero(n, n);
  if (k >= 1) {
    const Eigen::SparseMatrix<double> down = boundary_matrix(complex, k).matrix.cast<double>();
    l.matrix += Eigen::MatrixXd(down.transpose() * down);
  }
  if (k + 1 <= complex.top_degree()) {
    const Eigen::SparseMatrix<double> up = boundary_matrix(complex, k + 1).matrix.cast<double>();
    l.matrix += Eigen::MatrixXd(up * up.transpose());
  }
  return l;
}

std::size_t betti(const SimplicialComplex& complex, int k) {
  const HodgeLaplacian l = hodge_laplacian(complex, k);
  if (l.size() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(l.matrix, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const double sigma = ev.cwiseAbs().maxCoeff();
  const double tol = 1e-8 * std::max(sigma, 1.0);
  return static_cast<std::size_t>((ev.array().abs() < tol).count());
}

SpectralNormEstimate estimate_spectral_norm(const Eigen::MatrixXd& a, int iterations,
                                            PowerIterationTrace* trace) {
  SpectralNormEstimate out;
  if (trace) *trace = {};
  const Eigen::Index n = a.rows();
  if (n == 0 || a.isZero(0.0)) return out;

  // Fixed start vector so the estimate is a pure function of the matrix.
  std::mt19937_64 gen(0x5eedULL);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = (i % 2 == 0 ? 1.0 : -1.0) * unif(gen);
  v.normalize();

  Eigen::VectorXd av = a * v;
  if (av.norm() == 0.0) {
    // Start vector fell into the kernel; restart on the heaviest column.
    Eigen::Index col = 0;
    a.colwise().norm().maxCoeff(&col);
    v = Eigen::VectorXd::Unit(n, col);
    av = a * v;
  }
  if (trace) trace->iterates.push_back(v);
  for (int it = 0; it < iterations; ++it) {
    const double norm = av.norm();
    if (norm == 0.0) break;
    v = av / norm;
    av = a * v;
    if (trace) {
      trace->norms.push_back(norm);
      trace->iterates.push_back(v);
    }
  }
  out.sigma = av.norm();
  out.direction = std::move(v);
  return out;
}

HodgeLaplacian normalize_laplacian(const HodgeLaplacian& laplacian) {
  const SpectralNormEstimate est = estimate_spectral_norm(laplacian.matrix);
  if (est.sigma == 0.0) return laplacian;
  return HodgeLaplacian{laplacian.degree, laplacian.matrix / (est.sigma + kNormalizeEpsilon)};
}

}  // namespace simcom
