#pragma once

// Communication rounds between a transmitter and a receiver that co-train a
// codec, plus the experiment grid driver.
//
// Per round: random walk -> co-authorship complex -> normalized Laplacians ->
// encode -> AWGN -> degrade -> decode -> loss on received simplices ->
// receiver update and dJ/dV feedback -> transmitter update.

#include "simcom/channel.hpp"
#include "simcom/corpus.hpp"
#include "simcom/sae.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace simcom {

enum class Method { kSae, kLae, kScnOracle };

std::string to_string(Method method);
/// "sae", "lae" or "scn_oracle".
Method parse_method(const std::string& text);

struct CorpusSource {
  /// Corpus file; empty means generate synthetically.
  std::string path;
  GeneratorConfig generator;
  std::uint64_t seed = 1;
};

struct ExperimentConfig {
  CorpusSource corpus;
  WalkConfig walk;
  std::size_t rounds = 500;
  std::vector<int> embed_orders{1, 5, 10};
  std::vector<double> snr_dbs{5.0, 10.0, 20.0};
  std::vector<double> ps{0.1, 0.3, 0.5};
  std::vector<DegradationMode> modes{DegradationMode::kMissing};
  std::vector<Method> methods{Method::kSae};
  std::vector<std::uint64_t> seeds{1};
  double learning_rate = 0.1;
  /// Per-side gradient L2 norm cap; 0 disables clipping.
  double clip_norm = 1.0;
  int order = 3;
  int depth = 3;
  int hidden = 32;
  int k_max = 2;
  double lambda_topology = 1.0;
  /// Features enter the model as raw / feature_scale.
  double feature_scale = 10.0;
  /// Reuse the round-0 complex every round.
  bool freeze_complex = false;
};

/// Throws ConfigError for empty grids or out-of-range values.
void validate(const ExperimentConfig& config);

struct GridPoint {
  Method method = Method::kSae;
  int embed_order = 10;
  double snr_db = kNoNoise;
  double p = 0.0;
  DegradationMode mode = DegradationMode::kNone;
  std::uint64_t seed = 1;

  /// File-name-safe identifier, e.g. "sae_v10_snr20_p50_missing_s1".
  std::string key() const;
};

/// methods x embed_orders x snr_dbs x ps x modes x seeds, in that nesting order.
std::vector<GridPoint> expand_grid(const ExperimentConfig& config);

struct RoundLog {
  std::size_t round = 0;
  double loss = 0.0;
  double acc_received = 0.0;
  /// Over every transmitted simplex, whatever its row status. Not in the CSV.
  double acc_all = 0.0;
  double acc_eval_raw = 0.0;
  double acc_eval = 0.0;
  double err_eval = 0.0;
  double lap_err_eval = 0.0;
  std::vector<std::size_t> simplex_counts;
  double wall_ms = 0.0;
  bool skipped = false;
  std::string skip_reason;
};

/// Feature-only linear autoencoder: dense F -> |V| and |V| -> F per degree.
class LaeCodec final : public Codec {
 public:
  LaeCodec(int degrees, int feature_width, int latent_width, std::uint64_t seed);

  Embedding encode(const RoundInput& input) override;
  void encode_backward(const Embedding& feedback) override;
  std::vector<Parameter*> transmitter_parameters() override;
  Reconstruction decode(const Embedding& received, const RoundInput& side) override;
  Embedding decode_backward(const LossTerms& loss) override;
  std::vector<Parameter*> receiver_parameters() override;
  bool learns_structure() const override { return false; }

 private:
  int latent_width_;
  std::vector<DenseLayer> encoders_;
  std::vector<DenseLayer> decoders_;
  std::vector<bool> active_;
};

/// SAE encoder and feature decoder, but the receiver is handed the true
/// normalized Laplacians instead of decoding them.
class ScnOracleCodec final : public Codec {
 public:
  explicit ScnOracleCodec(const SaeConfig& config);

  Embedding encode(const RoundInput& input) override;
  void encode_backward(const Embedding& feedback) override;
  std::vector<Parameter*> transmitter_parameters() override;
  Reconstruction decode(const Embedding& received, const RoundInput& side) override;
  Embedding decode_backward(const LossTerms& loss) override;
  std::vector<Parameter*> receiver_parameters() override;
  bool learns_structure() const override { return false; }

 private:
  SimplicialEncoder encoder_;
  FeatureDecoder features_;
};

/// Fresh codec for a grid point; all methods sharing a seed share their
/// initialization stream.
std::unique_ptr<Codec> make_codec(const ExperimentConfig& config, const GridPoint& point);

/// Normalized Laplacians and scaled cochains for degrees 0..k_max.
RoundInput prepare_round_input(const CoauthorshipComplex& complex, int k_max, double feature_scale);

/// Per-round seeds depend only on (grid seed, round), never on the channel
/// configuration, so grid points sharing a seed see the same walks.
std::uint64_t walk_seed(std::uint64_t seed, std::size_t round);
std::uint64_t channel_seed(std::uint64_t seed, std::size_t round);

/// The complex the transmitter samples in round t.
CoauthorshipComplex sample_round_complex(const Corpus& corpus, const ExperimentConfig& config,
                                         std::uint64_t seed, std::size_t round);

/// One communication round. Library errors (degenerate walk, zero power,
/// nothing received, divergence) produce a skipped record and leave the
/// parameters untouched.
RoundLog run_round(Codec& codec, const Corpus& corpus, const ExperimentConfig& config,
                   const GridPoint& point, std::size_t round,
                   FeedbackSplit split = FeedbackSplit::kDistributed);
RoundLog lae_round(LaeCodec& codec, const Corpus& corpus, const ExperimentConfig& config,
                   const GridPoint& point, std::size_t round);
RoundLog scn_oracle_round(ScnOracleCodec& codec, const Corpus& corpus, const ExperimentConfig& config,
                          const GridPoint& point, std::size_t round);

struct Series {
  GridPoint point;
  std::vector<RoundLog> rounds;
  /// Non-empty when the grid point aborted.
  std::string failure;
};

/// Fresh codec and all rounds for one grid point.
Series run_grid_point(const Corpus& corpus, const ExperimentConfig& config, const GridPoint& point);

/// Corpus from file or generator.
Corpus materialize_corpus(const CorpusSource& source);

/// Runs every grid point on up to `threads` workers. `on_done` (optional) is
/// called once per finished series, serialized.
std::vector<Series> run_experiment(const ExperimentConfig& config, const Corpus& corpus,
                                   unsigned threads = 1,
                                   const std::function<void(const Series&)>& on_done = {});

}  // namespace simcom
