#pragma once

// Simplicial complexes, oriented boundary matrices and Hodge Laplacians.
//
// Orientation: every simplex stores its vertices in ascending order and the
// face obtained by deleting the m-th vertex enters the boundary with sign
// (-1)^m. Laplacian indexing follows the Hodge convention
//
//     L_k = B_k^T B_k + B_{k+1} B_{k+1}^T,   B_k : C_k -> C_{k-1},
//
// so L_0 = B_1 B_1^T is the graph Laplacian of the 1-skeleton.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace simcom {

using VertexId = std::int64_t;

class Simplex {
 public:
  /// Throws MalformedSimplexError unless `vertices` is non-empty, strictly
  /// ascending and non-negative.
  explicit Simplex(std::vector<VertexId> vertices);

  /// Sorts first; throws on duplicates.
  static Simplex from_unordered(std::vector<VertexId> vertices);

  int dimension() const noexcept { return static_cast<int>(vertices_.size()) - 1; }
  const std::vector<VertexId>& vertices() const noexcept { return vertices_; }

  /// Face with the m-th vertex removed. Requires dimension() >= 1.
  Simplex face(int m) const;

  friend bool operator==(const Simplex&, const Simplex&) = default;
  friend auto operator<=>(const Simplex& a, const Simplex& b) { return a.vertices_ <=> b.vertices_; }

 private:
  struct Unchecked {};
  Simplex(Unchecked, std::vector<VertexId> vertices) : vertices_(std::move(vertices)) {}

  std::vector<VertexId> vertices_;
};

class SimplicialComplex {
 public:
  SimplicialComplex() = default;

  /// Highest populated degree, or -1 for the empty complex.
  int top_degree() const noexcept { return static_cast<int>(levels_.size()) - 1; }

  /// Number of k-simplices; 0 for absent degrees.
  std::size_t count(int k) const noexcept;
  std::size_t total_count() const noexcept;

  /// Lexicographically ordered k-simplices. Throws DomainError if absent.
  const std::vector<Simplex>& simplices(int k) const;
  const Simplex& simplex(int k, std::size_t index) const { return simplices(k).at(index); }

  std::optional<std::size_t> index_of(const Simplex& s) const;

  /// Maximal simplices (those that are not a face of another), grouped by
  /// ascending degree.
  std::vector<std::vector<VertexId>> maximal_simplices() const;

  friend bool operator==(const SimplicialComplex& a, const SimplicialComplex& b) {
    return a.levels_ == b.levels_;
  }

 private:
  friend SimplicialComplex build_complex(const std::vector<std::vector<VertexId>>&, int);

  std::vector<std::vector<Simplex>> levels_;
  std::vector<std::map<std::vector<VertexId>, std::size_t>> index_;
};

/// Closure of `top_simplices` under faces. Simplices of dimension greater than
/// `max_degree` contribute their max_degree-faces instead (max_degree < 0
/// means unbounded). Empty or repeated-vertex inputs throw
/// MalformedSimplexError.
SimplicialComplex build_complex(const std::vector<std::vector<VertexId>>& top_simplices,
                                int max_degree = -1);

struct BoundaryMatrix {
  int degree = 0;
  /// |S_{k-1}| x |S_k|, entries in {-1, +1}.
  Eigen::SparseMatrix<int> matrix;

  Eigen::MatrixXi dense() const { return Eigen::MatrixXi(matrix); }
};

struct HodgeLaplacian {
  int degree = 0;
  Eigen::MatrixXd matrix;

  Eigen::Index size() const noexcept { return matrix.rows(); }
};

/// Real features on the k-simplices: row i belongs to simplex i of S_k.
struct Cochain {
  int degree = 0;
  Eigen::MatrixXd values;
};

/// B_k for k >= 1. Throws DomainError for k = 0 or a degree the complex lacks.
BoundaryMatrix boundary_matrix(const SimplicialComplex& complex, int k);

/// Throws DomainError when degree k is absent.
HodgeLaplacian hodge_laplacian(const SimplicialComplex& complex, int k);

/// dim ker L_k, counting eigenvalues below 1e-8 relative to the spectral norm.
std::size_t betti(const SimplicialComplex& complex, int k);

struct SpectralNormEstimate {
  double sigma = 0.0;
  /// Unit-norm final power iterate; empty for the zero matrix.
  Eigen::VectorXd direction;
};

inline constexpr int kPowerIterations = 100;
inline constexpr double kNormalizeEpsilon = 1e-9;

/// Unit iterates v_0..v_T and the norms ||A v_t|| that produced v_{t+1}.
struct PowerIterationTrace {
  std::vector<Eigen::VectorXd> iterates;
  std::vector<double> norms;
};

/// Power iteration on a symmetric matrix from a fixed start vector.
/// sigma = ||A v|| for the final unit iterate v. `trace`, when non-null,
/// receives every iterate (empty for the zero matrix).
SpectralNormEstimate estimate_spectral_norm(const Eigen::MatrixXd& a,
                                            int iterations = kPowerIterations,
                                            PowerIterationTrace* trace = nullptr);

/// L / (sigma_max + eps); the zero matrix is returned unchanged.
HodgeLaplacian normalize_laplacian(const HodgeLaplacian& laplacian);

}  // namespace simcom
