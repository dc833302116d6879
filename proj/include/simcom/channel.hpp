#pragma once

// Wireless link model: AWGN at a target SNR followed by row-level
// degradation (missing or distorted simplices).

#include "simcom/nn.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace simcom {

/// Per-simplex latent rows, one tensor per degree (|S_k| x |V|).
using Embedding = std::vector<Tensor>;

/// Per-degree row flags.
using RowMask = std::vector<std::vector<bool>>;

enum class DegradationMode { kNone, kMissing, kDistorted };

std::string to_string(DegradationMode mode);
/// "none", "missing" or "distorted"; anything else throws ConfigError.
DegradationMode parse_degradation_mode(const std::string& text);

enum class RowStatus : std::uint8_t { kReceived, kMissing, kDistorted };

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

struct ChannelConfig {
  double snr_db = kNoNoise;
  double p = 0.0;
  DegradationMode mode = DegradationMode::kNone;
};

struct ReceivedEmbedding {
  Embedding rows;
  std::vector<std::vector<RowStatus>> status;

  RowMask mask(RowStatus wanted) const;
  std::size_t count(RowStatus wanted) const;
};

/// Mean square over every entry of every degree.
double signal_power(const Embedding& v);

/// P_sig / 10^(snr_db / 10). Throws ZeroPowerError for an all-zero embedding.
double noise_variance(const Embedding& v, double snr_db);

/// Adds i.i.d. N(0, noise_variance) to every entry; snr_db = +inf is identity.
Embedding awgn(const Embedding& v, double snr_db, std::mt19937_64& rng);

/// Marks round(p * |S_k|) distinct rows per degree. Missing rows become zero;
/// distorted rows are redrawn from N(0, s^2) with s the degree's empirical
/// standard deviation. Other rows are left bit-identical.
ReceivedEmbedding degrade(const Embedding& v, double p, DegradationMode mode, std::mt19937_64& rng);

/// awgn, then degrade.
ReceivedEmbedding transmit(const Embedding& v, const ChannelConfig& config, std::mt19937_64& rng);

}  // namespace simcom
