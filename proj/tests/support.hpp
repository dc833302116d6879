#pragma once

// Shared fixtures: toy complexes, a frozen channel, and an end-to-end
// finite-difference check of a codec.

#include "simcom/complex.hpp"
#include "simcom/nn.hpp"
#include "simcom/protocol.hpp"
#include "simcom/sae.hpp"

#include <numeric>
#include <random>

namespace simcom::testing {

/// Random complex on up to `n_vertices` vertices with random positive cochains,
/// already in model units. Degrees above the complex's top carry 0-row tensors.
inline RoundInput toy_input(std::uint64_t seed, int n_vertices = 5, int k_max = 2) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(2, 3), tops(2, 4);
  std::vector<std::vector<VertexId>> simplices;
  for (int t = tops(rng); t > 0; --t) {
    std::vector<VertexId> all(static_cast<std::size_t>(n_vertices));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<std::size_t>(size(rng)));
    simplices.push_back(all);
  }
  const SimplicialComplex c = build_complex(simplices, k_max);
  std::uniform_real_distribution<double> value(0.1, 1.0);
  RoundInput in;
  for (int k = 0; k <= k_max; ++k) {
    if (k <= c.top_degree()) {
      in.laplacians.push_back(normalize_laplacian(hodge_laplacian(c, k)).matrix);
      Tensor x(static_cast<Eigen::Index>(c.count(k)), 1);
      for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) = value(rng);
      in.features.push_back(x);
    } else {
      in.laplacians.emplace_back(0, 0);
      in.features.emplace_back(0, 1);
    }
  }
  return in;
}

/// A channel whose noise, mask and distortion values are drawn once and then
/// held fixed, so the end-to-end map is a deterministic function of V.
class FrozenChannel {
 public:
  FrozenChannel(const Embedding& shape, double noise_std, double p, DegradationMode mode, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (const Tensor& v : shape) {
      Tensor noise(v.rows(), v.cols()), replacement(v.rows(), v.cols());
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        noise(i) = noise_std * gauss(rng);
        replacement(i) = gauss(rng);
      }
      noise_.push_back(noise);
      replacement_.push_back(replacement);
      Tensor dummy = Tensor::Ones(v.rows(), v.cols());
      status_.push_back(degrade({dummy}, p, mode, rng).status.front());
    }
  }

  ReceivedEmbedding operator()(const Embedding& v) const {
    ReceivedEmbedding out;
    out.status = status_;
    for (std::size_t k = 0; k < v.size(); ++k) {
      Tensor r = v[k] + noise_[k];
      for (Eigen::Index i = 0; i < r.rows(); ++i) {
        if (status_[k][static_cast<std::size_t>(i)] == RowStatus::kMissing) r.row(i).setZero();
        if (status_[k][static_cast<std::size_t>(i)] == RowStatus::kDistorted) r.row(i) = replacement_[k].row(i);
      }
      out.rows.push_back(r);
    }
    return out;
  }

 private:
  Embedding noise_;
  Embedding replacement_;
  std::vector<std::vector<RowStatus>> status_;
};

/// Adds U(-scale, scale) to every parameter. Freshly initialized biases are
/// zero, and zero-filled rows then sit exactly on the LeakyReLU kink, where
/// central differences are meaningless.
inline void jitter(Codec& codec, std::uint64_t seed, double scale = 0.1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (Parameter* p : codec.parameters())
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value(i) += u(rng);
}

/// Max relative error between compute_gradients and central differences of
/// the end-to-end loss, over every parameter of `codec`.
inline double pipeline_grad_check(Codec& codec, const RoundInput& input, const ChannelFn& channel,
                                  double lambda_topology) {
  compute_gradients(codec, input, channel, lambda_topology);
  std::vector<GradCheckTarget> targets;
  for (Parameter* p : codec.parameters()) targets.push_back({p->name, &p->value, p->grad});
  const auto loss = [&] {
    const Embedding v = codec.encode(input);
    const ReceivedEmbedding r = channel(v);
    const Reconstruction pred = codec.decode(r.rows, input);
    return reconstruction_loss(pred, input, r.mask(RowStatus::kReceived),
                               codec.learns_structure() ? lambda_topology : 0.0)
        .value;
  };
  return grad_check(loss, targets);
}

inline SaeConfig toy_sae_config(std::uint64_t seed) {
  SaeConfig c;
  c.degrees = 3;
  c.feature_width = 1;
  c.embed_order = 2;
  c.hidden = 3;
  c.order = 2;
  c.depth = 2;
  c.seed = seed;
  return c;
}

}  // namespace simcom::testing
