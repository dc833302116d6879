#pragma once

// Minimal differentiable layers with hand-written backward passes.
//
// Every layer caches what its backward pass needs on forward(); backward()
// accumulates into the parameter gradient slots and returns the gradient with
// respect to the layer input. Callers zero the gradients (sgd_step does).

#include "simcom/complex.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace simcom {

/// Rows are simplices, columns are feature channels.
using Tensor = Eigen::MatrixXd;

struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value)
      : name(std::move(name)), value(std::move(value)), grad(Tensor::Zero(this->value.rows(), this->value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }

  std::string name;
  Tensor value;
  Tensor grad;
};

inline constexpr double kLeakySlope = 0.01;

enum class Activation { kNone, kLeakyRelu };

/// x for x > 0, 0.01 x otherwise.
double leaky_relu(double x) noexcept;
/// 1 for x > 0, 0.01 otherwise (including x == 0).
double leaky_relu_derivative(double x) noexcept;
Tensor leaky_relu(const Tensor& x);
Tensor leaky_relu_derivative(const Tensor& x);

/// Independent child seed for a named stream (layer, round, purpose).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

/// Uniform in [-r, r], r = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

/// Y = act( sum_{i=0..N} L^i X W_i + 1 b^T ).
class SimplicialConvLayer {
 public:
  SimplicialConvLayer(std::string name, int order, int in_channels, int out_channels,
                      std::uint64_t seed);

  Tensor forward(const Tensor& laplacian, const Tensor& x, Activation activation);

  /// Returns dJ/dX. When `grad_laplacian` is non-null, dJ/dL is added to it.
  Tensor backward(const Tensor& upstream, Tensor* grad_laplacian = nullptr);

  std::vector<Parameter*> parameters();
  std::size_t parameter_count() const;

  int order() const noexcept { return static_cast<int>(weights_.size()) - 1; }
  int in_channels() const noexcept { return static_cast<int>(weights_.front().value.rows()); }
  int out_channels() const noexcept { return static_cast<int>(weights_.front().value.cols()); }

  std::vector<Parameter>& weights() noexcept { return weights_; }
  Parameter& bias() noexcept { return bias_; }

 private:
  std::vector<Parameter> weights_;
  Parameter bias_;

  bool cached_ = false;
  Activation activation_ = Activation::kNone;
  Tensor laplacian_;
  std::vector<Tensor> powers_;  // L^i X, i = 0..N
  Tensor pre_activation_;
};

/// out(i, j) = act(v_i^T W v_j + b) over all pairs of rows of V.
class BilinearLayer {
 public:
  BilinearLayer(std::string name, int width, std::uint64_t seed);

  Tensor forward(const Tensor& v, Activation activation = Activation::kLeakyRelu);
  Tensor backward(const Tensor& upstream);

  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
  Parameter& weight() noexcept { return weight_; }
  Parameter& bias() noexcept { return bias_; }

 private:
  Parameter weight_;
  Parameter bias_;  // 1 x 1

  bool cached_ = false;
  Activation activation_ = Activation::kLeakyRelu;
  Tensor input_;
  Tensor pre_activation_;
};

/// Y = act(X W + 1 b^T).
class DenseLayer {
 public:
  DenseLayer(std::string name, int in_channels, int out_channels, std::uint64_t seed);

  Tensor forward(const Tensor& x, Activation activation);
  Tensor backward(const Tensor& upstream);

  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
  Parameter& weight() noexcept { return weight_; }
  Parameter& bias() noexcept { return bias_; }

 private:
  Parameter weight_;
  Parameter bias_;

  bool cached_ = false;
  Activation activation_ = Activation::kNone;
  Tensor input_;
  Tensor pre_activation_;
};

/// (A + A^T) / 2 and its adjoint.
Tensor symmetrize(const Tensor& a);
Tensor symmetrize_backward(const Tensor& upstream);

/// Differentiable A / (sigma + eps) with sigma the power-iteration spectral
/// norm of A. The backward pass differentiates the fixed-length iteration
/// exactly, so it holds whether or not the iterate has converged.
class SpectralNormalize {
 public:
  Tensor forward(const Tensor& a);
  Tensor backward(const Tensor& upstream) const;

  double sigma() const noexcept { return sigma_; }

 private:
  bool cached_ = false;
  double sigma_ = 0.0;
  Tensor input_;
  PowerIterationTrace trace_;
};

/// value <- value - lr * grad for every parameter, then zero the gradients.
/// A non-finite gradient throws DivergenceError before anything is updated.
void sgd_step(std::span<Parameter* const> params, double learning_rate);
void zero_grads(std::span<Parameter* const> params);

/// Rescales the gradients so their joint L2 norm is at most `max_norm`
/// (no-op for max_norm <= 0). Returns the norm before rescaling.
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns
};

SpectralDecomposition spectral_decompose(const Tensor& laplacian);

/// U diag(sum_i w_i lambda^i) U^T c for a single-channel cochain c.
Tensor spectral_filter_apply(const SpectralDecomposition& decomposition,
                             std::span<const double> weights, const Tensor& c);

/// One tensor probed by grad_check together with its analytic gradient.
struct GradCheckTarget {
  std::string name;
  Tensor* value;
  Tensor analytic;
};

inline constexpr double kGradCheckStep = 1e-5;

/// Max over all entries of |analytic - numeric| / max(|analytic|, |numeric|, 1e-4),
/// with the numeric gradient from central differences of `loss`.
double grad_check(const std::function<double()>& loss, std::span<GradCheckTarget> targets,
                  double step = kGradCheckStep);

/// Layer-level checks on the scalarized loss sum(R .* layer(X)) with a fixed
/// random R drawn from `seed`. Probe every parameter and the input.
double grad_check(SimplicialConvLayer& layer, const Tensor& laplacian, const Tensor& x,
                  Activation activation, std::uint64_t seed, double step = kGradCheckStep);
double grad_check(DenseLayer& layer, const Tensor& x, Activation activation, std::uint64_t seed,
                  double step = kGradCheckStep);
double grad_check(BilinearLayer& layer, const Tensor& v, std::uint64_t seed,
                  double step = kGradCheckStep);

/// Plain-text dump of named tensors (17 significant digits).
void save_checkpoint(const std::string& path, std::span<const Parameter* const> params);
/// Loads by name; every parameter must be present with a matching shape.
void load_checkpoint(const std::string& path, std::span<Parameter* const> params);

}  // namespace simcom
