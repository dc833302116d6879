#include "simcom/channel.hpp"

#include "simcom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace simcom {

std::string to_string(DegradationMode mode) {
  switch (mode) {
    case DegradationMode::kNone: return "none";
    case DegradationMode::kMissing: return "missing";
    case DegradationMode::kDistorted: return "distorted";
  }
  return "none";
}

DegradationMode parse_degradation_mode(const std::string& text) {
  if (text == "none") return DegradationMode::kNone;
  if (text == "missing") return DegradationMode::kMissing;
  if (text == "distorted") return DegradationMode::kDistorted;
  throw ConfigError("unknown degradation mode '" + text + "'");
}

RowMask ReceivedEmbedding::mask(RowStatus wanted) const {
  RowMask out(status.size());
  for (std::size_t k = 0; k < status.size(); ++k) {
    out[k].resize(status[k].size());
    for (std::size_t i = 0; i < status[k].size(); ++i) out[k][i] = status[k][i] == wanted;
  }
  return out;
}

std::size_t ReceivedEmbedding::count(RowStatus wanted) const {
  std::size_t n = 0;
  for (const auto& level : status) n += static_cast<std::size_t>(std::count(level.begin(), level.end(), wanted));
  return n;
}

double signal_power(const Embedding& v) {
  double sum = 0.0;
  Eigen::Index n = 0;
  for (const Tensor& t : v) {
    sum += t.squaredNorm();
    n += t.size();
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double noise_variance(const Embedding& v, double snr_db) {
  const double power = signal_power(v);
  if (!(power > 0.0)) throw ZeroPowerError("embedding has zero power; noise variance undefined");
  return power / std::pow(10.0, snr_db / 10.0);
}

Embedding awgn(const Embedding& v, double snr_db, std::mt19937_64& rng) {
  if (std::isinf(snr_db) && snr_db > 0) return v;
  const double sigma = std::sqrt(noise_variance(v, snr_db));
  std::normal_distribution<double> noise(0.0, sigma);
  Embedding out = v;
  for (Tensor& t : out)
    for (Eigen::Index j = 0; j < t.cols(); ++j)
      for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) += noise(rng);
  return out;
}

ReceivedEmbedding degrade(const Embedding& v, double p, DegradationMode mode, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("degradation fraction must lie in [0, 1]");
  ReceivedEmbedding out;
  out.rows = v;
  out.status.resize(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    Tensor& t = out.rows[k];
    const auto n = static_cast<std::size_t>(t.rows());
    out.status[k].assign(n, RowStatus::kReceived);
    if (mode == DegradationMode::kNone || n == 0) continue;

    const auto hit = static_cast<std::size_t>(std::lround(p * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(hit);
    std::sort(order.begin(), order.end());

    if (mode == DegradationMode::kMissing) {
      for (std::size_t i : order) {
        t.row(static_cast<Eigen::Index>(i)).setZero();
        out.status[k][i] = RowStatus::kMissing;
      }
    } else {
      const double mean = t.mean();
      const double var = t.size() > 0 ? (t.array() - mean).square().mean() : 0.0;
      std::normal_distribution<double> replacement(0.0, std::sqrt(var));
      for (std::size_t i : order) {
        for (Eigen::Index j = 0; j < t.cols(); ++j)
          t(static_cast<Eigen::Index>(i), j) = var > 0.0 ? replacement(rng) : 0.0;
        out.status[k][i] = RowStatus::kDistorted;
      }
    }
  }
  return out;
}

ReceivedEmbedding transmit(const Embedding& v, const ChannelConfig& config, std::mt19937_64& rng) {
  return degrade(awgn(v, config.snr_db, rng), config.p, config.mode, rng);
}

}  // namespace simcom
