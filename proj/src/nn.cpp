#include "simcom/nn.hpp"

#include "simcom/complex.hpp"
#include "simcom/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace simcom {

namespace {

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

std::string shape(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

Tensor activate(const Tensor& z, Activation activation) {
  return activation == Activation::kLeakyRelu ? leaky_relu(z) : z;
}

Tensor activation_backward(const Tensor& upstream, const Tensor& z, Activation activation) {
  if (activation == Activation::kNone) return upstream;
  return upstream.cwiseProduct(leaky_relu_derivative(z));
}

Tensor random_tensor(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Tensor t(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) t(i, j) = unif(gen);
  return t;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

double leaky_relu(double x) noexcept { return x > 0.0 ? x : kLeakySlope * x; }

double leaky_relu_derivative(double x) noexcept { return x > 0.0 ? 1.0 : kLeakySlope; }

Tensor leaky_relu(const Tensor& x) {
  return x.unaryExpr([](double v) { return leaky_relu(v); });
}

Tensor leaky_relu_derivative(const Tensor& x) {
  return x.unaryExpr([](double v) { return leaky_relu_derivative(v); });
}

Tensor glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
  return random_tensor(rows, cols, seed) * r;
}

// ---------------------------------------------------------------------------

SimplicialConvLayer::SimplicialConvLayer(std::string name, int order, int in_channels,
                                         int out_channels, std::uint64_t seed) {
  if (order < 0) throw ConfigError("polynomial order must be >= 0");
  if (in_channels < 1 || out_channels < 1) throw ConfigError("channel counts must be >= 1");
  weights_.reserve(static_cast<std::size_t>(order) + 1);
  for (int i = 0; i <= order; ++i)
    weights_.emplace_back(name + ".W" + std::to_string(i),
                          glorot_uniform(in_channels, out_channels,
                                         derive_seed(seed, static_cast<std::uint64_t>(i))));
  bias_ = Parameter(name + ".b", Tensor::Zero(1, out_channels));
}

Tensor SimplicialConvLayer::forward(const Tensor& laplacian, const Tensor& x,
                                    Activation activation) {
  require_shape(laplacian.rows() == laplacian.cols() && laplacian.rows() == x.rows(),
                "scn: laplacian " + shape(laplacian) + " vs input " + shape(x));
  require_shape(x.cols() == in_channels(),
                "scn: input has " + std::to_string(x.cols()) + " channels, layer expects " +
                    std::to_string(in_channels()));
  laplacian_ = laplacian;
  activation_ = activation;
  powers_.resize(weights_.size());
  powers_[0] = x;
  for (std::size_t i = 1; i < weights_.size(); ++i) powers_[i] = laplacian * powers_[i - 1];

  pre_activation_ = powers_[0] * weights_[0].value;
  for (std::size_t i = 1; i < weights_.size(); ++i) pre_activation_.noalias() += powers_[i] * weights_[i].value;
  pre_activation_.rowwise() += bias_.value.row(0);
  cached_ = true;
  return activate(pre_activation_, activation_);
}

Tensor SimplicialConvLayer::backward(const Tensor& upstream, Tensor* grad_laplacian) {
  if (!cached_) throw StateError("scn backward called before forward");
  require_shape(upstream.rows() == pre_activation_.rows() && upstream.cols() == pre_activation_.cols(),
                "scn backward: upstream " + shape(upstream) + " vs output " + shape(pre_activation_));
  const Tensor g = activation_backward(upstream, pre_activation_, activation_);
  bias_.grad.row(0) += g.colwise().sum();
  for (std::size_t i = 0; i < weights_.size(); ++i) weights_[i].grad.noalias() += powers_[i].transpose() * g;

  // Horner sweep: A_N = G W_N^T, A_i = G W_i^T + L^T A_{i+1}; dJ/dX = A_0 and
  // dJ/dL = sum_{i>=1} A_i P_{i-1}^T.
  const std::size_t n = weights_.size() - 1;
  Tensor acc = g * weights_[n].value.transpose();
  for (std::size_t i = n; i >= 1; --i) {
    if (grad_laplacian) {
      if (grad_laplacian->size() == 0) grad_laplacian->setZero(laplacian_.rows(), laplacian_.cols());
      grad_laplacian->noalias() += acc * powers_[i - 1].transpose();
    }
    Tensor next = laplacian_.transpose() * acc;
    next.noalias() += g * weights_[i - 1].value.transpose();
    acc = std::move(next);
  }
  return acc;
}

std::vector<Parameter*> SimplicialConvLayer::parameters() {
  std::vector<Parameter*> out;
  for (auto& w : weights_) out.push_back(&w);
  out.push_back(&bias_);
  return out;
}

std::size_t SimplicialConvLayer::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(bias_.value.size());
  for (const auto& w : weights_) n += static_cast<std::size_t>(w.value.size());
  return n;
}

// ---------------------------------------------------------------------------

BilinearLayer::BilinearLayer(std::string name, int width, std::uint64_t seed)
    : weight_(name + ".W", glorot_uniform(width, width, seed)),
      bias_(name + ".b", Tensor::Zero(1, 1)) {
  if (width < 1) throw ConfigError("bilinear width must be >= 1");
}

Tensor BilinearLayer::forward(const Tensor& v, Activation activation) {
  require_shape(v.cols() == weight_.value.rows(),
                "bilinear: input " + shape(v) + " vs weight " + shape(weight_.value));
  input_ = v;
  activation_ = activation;
  pre_activation_ = v * weight_.value * v.transpose();
  pre_activation_.array() += bias_.value(0, 0);
  cached_ = true;
  return activate(pre_activation_, activation_);
}

Tensor BilinearLayer::backward(const Tensor& upstream) {
  if (!cached_) throw StateError("bilinear backward called before forward");
  require_shape(upstream.rows() == pre_activation_.rows() && upstream.cols() == pre_activation_.cols(),
                "bilinear backward: upstream " + shape(upstream));
  const Tensor g = activation_backward(upstream, pre_activation_, activation_);
  bias_.grad(0, 0) += g.sum();
  weight_.grad.noalias() += input_.transpose() * g * input_;
  Tensor grad_v = g * input_ * weight_.value.transpose();
  grad_v.noalias() += g.transpose() * input_ * weight_.value;
  return grad_v;
}

// ---------------------------------------------------------------------------

DenseLayer::DenseLayer(std::string name, int in_channels, int out_channels, std::uint64_t seed)
    : weight_(name + ".W", glorot_uniform(in_channels, out_channels, seed)),
      bias_(name + ".b", Tensor::Zero(1, out_channels)) {}

Tensor DenseLayer::forward(const Tensor& x, Activation activation) {
  require_shape(x.cols() == weight_.value.rows(),
                "dense: input " + shape(x) + " vs weight " + shape(weight_.value));
  input_ = x;
  activation_ = activation;
  pre_activation_ = x * weight_.value;
  pre_activation_.rowwise() += bias_.value.row(0);
  cached_ = true;
  return activate(pre_activation_, activation_);
}

Tensor DenseLayer::backward(const Tensor& upstream) {
  if (!cached_) throw StateError("dense backward called before forward");
  require_shape(upstream.rows() == pre_activation_.rows() && upstream.cols() == pre_activation_.cols(),
                "dense backward: upstream " + shape(upstream));
  const Tensor g = activation_backward(upstream, pre_activation_, activation_);
  bias_.grad.row(0) += g.colwise().sum();
  weight_.grad.noalias() += input_.transpose() * g;
  return g * weight_.value.transpose();
}

// ---------------------------------------------------------------------------

Tensor symmetrize(const Tensor& a) {
  require_shape(a.rows() == a.cols(), "symmetrize: non-square " + shape(a));
  return (a + a.transpose()) * 0.5;
}

Tensor symmetrize_backward(const Tensor& upstream) { return (upstream + upstream.transpose()) * 0.5; }

Tensor SpectralNormalize::forward(const Tensor& a) {
  sigma_ = estimate_spectral_norm(a, kPowerIterations, &trace_).sigma;
  input_ = a;
  cached_ = true;
  if (sigma_ == 0.0) return a;
  return a / (sigma_ + kNormalizeEpsilon);
}

Tensor SpectralNormalize::backward(const Tensor& upstream) const {
  if (!cached_) throw StateError("normalize backward called before forward");
  if (sigma_ == 0.0) return upstream;
  const double scale = sigma_ + kNormalizeEpsilon;
  Tensor grad = upstream / scale;

  // Reverse sweep through the unrolled iteration: w_t = A v_t,
  // v_{t+1} = w_t / ||w_t||, sigma = ||w_T||.
  const std::size_t last = trace_.iterates.size() - 1;
  Eigen::VectorXd w_bar = input_ * trace_.iterates[last];
  w_bar *= -(upstream.cwiseProduct(input_).sum() / (scale * scale)) / sigma_;
  for (std::size_t t = last;; --t) {
    const Eigen::VectorXd& v = trace_.iterates[t];
    grad.noalias() += w_bar * v.transpose();
    if (t == 0) break;
    const Eigen::VectorXd v_bar = input_.transpose() * w_bar;
    w_bar = (v_bar - v * v.dot(v_bar)) / trace_.norms[t - 1];
  }
  return grad;
}

// ---------------------------------------------------------------------------

void zero_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

void sgd_step(std::span<Parameter* const> params, double learning_rate) {
  for (const Parameter* p : params)
    if (!p->grad.allFinite()) throw DivergenceError("non-finite gradient in " + p->name);
  for (Parameter* p : params) {
    p->value.noalias() -= learning_rate * p->grad;
    p->zero_grad();
  }
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Parameter* p : params) p->grad *= scale;
  }
  return norm;
}

// ---------------------------------------------------------------------------

SpectralDecomposition spectral_decompose(const Tensor& laplacian) {
  require_shape(laplacian.rows() == laplacian.cols(), "spectral_decompose: non-square " + shape(laplacian));
  const Eigen::Index n = laplacian.rows();
  const double scale = std::max(1.0, laplacian.cwiseAbs().maxCoeff());
  if ((laplacian - laplacian.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("spectral_decompose: matrix is not symmetric");
  if (laplacian.isZero(0.0))
    return {Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n)};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Tensor spectral_filter_apply(const SpectralDecomposition& decomposition,
                             std::span<const double> weights, const Tensor& c) {
  const Eigen::Index n = decomposition.eigenvalues.size();
  require_shape(c.rows() == n && c.cols() == 1,
                "spectral filter: cochain " + shape(c) + " vs " + std::to_string(n) + " eigenvalues");
  Eigen::VectorXd response = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double power = 1.0;
    for (double w : weights) {
      response(j) += w * power;
      power *= decomposition.eigenvalues(j);
    }
  }
  const Eigen::MatrixXd& u = decomposition.eigenvectors;
  const Eigen::VectorXd coefficients = u.transpose() * c;
  return u * response.cwiseProduct(coefficients);
}

// ---------------------------------------------------------------------------

double grad_check(const std::function<double()>& loss, std::span<GradCheckTarget> targets,
                  double step) {
  double worst = 0.0;
  for (auto& target : targets) {
    Tensor& value = *target.value;
    require_shape(value.rows() == target.analytic.rows() && value.cols() == target.analytic.cols(),
                  "grad_check: analytic gradient shape mismatch for " + target.name);
    for (Eigen::Index j = 0; j < value.cols(); ++j) {
      for (Eigen::Index i = 0; i < value.rows(); ++i) {
        const double saved = value(i, j);
        value(i, j) = saved + step;
        const double plus = loss();
        value(i, j) = saved - step;
        const double minus = loss();
        value(i, j) = saved;
        const double numeric = (plus - minus) / (2.0 * step);
        const double analytic = target.analytic(i, j);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
        const double rel = std::abs(analytic - numeric) / denom;
        if (!std::isfinite(rel)) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, rel);
      }
    }
  }
  return worst;
}

namespace {

template <class Forward, class Layer>
double check_layer(Layer& layer, Tensor input, const Forward& forward, std::uint64_t seed,
                   double step) {
  const Tensor probe_out = forward(input);
  const Tensor r = random_tensor(probe_out.rows(), probe_out.cols(), seed ^ 0x9e3779b97f4a7c15ULL);
  auto params = layer.parameters();
  zero_grads(params);
  forward(input);
  Tensor grad_input = layer.backward(r);

  std::vector<GradCheckTarget> targets;
  for (Parameter* p : params) targets.push_back({p->name, &p->value, p->grad});
  targets.push_back({"input", &input, grad_input});
  zero_grads(params);
  return grad_check([&] { return forward(input).cwiseProduct(r).sum(); }, targets, step);
}

}  // namespace

double grad_check(SimplicialConvLayer& layer, const Tensor& laplacian, const Tensor& x,
                  Activation activation, std::uint64_t seed, double step) {
  return check_layer(
      layer, x, [&](const Tensor& in) { return layer.forward(laplacian, in, activation); }, seed, step);
}

double grad_check(DenseLayer& layer, const Tensor& x, Activation activation, std::uint64_t seed,
                  double step) {
  return check_layer(layer, x, [&](const Tensor& in) { return layer.forward(in, activation); }, seed,
                     step);
}

double grad_check(BilinearLayer& layer, const Tensor& v, std::uint64_t seed, double step) {
  return check_layer(layer, v, [&](const Tensor& in) { return layer.forward(in); }, seed, step);
}

}  // namespace simcom
