#include "simcom/protocol.hpp"

#include "simcom/errors.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace simcom {

namespace {

constexpr std::uint64_t kWalkSalt = 0x57a1c;
constexpr std::uint64_t kChannelSalt = 0xc4a77e1;
constexpr std::uint64_t kInitSalt = 0x1417;
constexpr std::uint64_t kLaeSalt = 4000;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string compact(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream s;
  s << v;
  std::string out = s.str();
  for (char& c : out)
    if (c == '.') c = 'p';
  return out;
}

SaeConfig model_config(const ExperimentConfig& config, const GridPoint& point) {
  SaeConfig m;
  m.degrees = config.k_max + 1;
  m.feature_width = 1;
  m.embed_order = point.embed_order;
  m.hidden = config.hidden;
  m.order = config.order;
  m.depth = config.depth;
  m.lambda_topology = config.lambda_topology;
  m.seed = derive_seed(point.seed, kInitSalt);
  return m;
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::kSae: return "sae";
    case Method::kLae: return "lae";
    case Method::kScnOracle: return "scn_oracle";
  }
  return "sae";
}

Method parse_method(const std::string& text) {
  if (text == "sae") return Method::kSae;
  if (text == "lae") return Method::kLae;
  if (text == "scn_oracle") return Method::kScnOracle;
  throw ConfigError("unknown method '" + text + "'");
}

void validate(const ExperimentConfig& config) {
  if (config.rounds < 1) throw ConfigError("rounds must be >= 1");
  if (config.embed_orders.empty() || config.snr_dbs.empty() || config.ps.empty() ||
      config.modes.empty() || config.methods.empty() || config.seeds.empty())
    throw ConfigError("every grid axis needs at least one value");
  for (int v : config.embed_orders)
    if (v < 1) throw ConfigError("embedding order must be >= 1");
  for (double p : config.ps)
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("degradation fraction must lie in [0, 1]");
  for (double s : config.snr_dbs)
    if (std::isnan(s)) throw ConfigError("snr_db must be a number or inf");
  if (config.k_max < 0) throw ConfigError("k_max must be >= 0");
  if (config.order < 0 || config.depth < 1 || config.hidden < 1)
    throw ConfigError("order >= 0, depth >= 1 and hidden >= 1 required");
  if (!(config.learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (!(config.clip_norm >= 0.0)) throw ConfigError("clip_norm must be >= 0");
  if (!(config.feature_scale > 0.0)) throw ConfigError("feature_scale must be > 0");
  if (config.walk.n_papers < 1) throw ConfigError("walk needs at least one paper");
}

std::string GridPoint::key() const {
  std::ostringstream s;
  s << to_string(method) << "_v" << embed_order << "_snr" << compact(snr_db) << "_p"
    << std::lround(p * 100.0) << '_' << to_string(mode) << "_s" << seed;
  return s.str();
}

std::vector<GridPoint> expand_grid(const ExperimentConfig& config) {
  std::vector<GridPoint> out;
  for (Method m : config.methods)
    for (int v : config.embed_orders)
      for (double snr : config.snr_dbs)
        for (double p : config.ps)
          for (DegradationMode mode : config.modes)
            for (std::uint64_t seed : config.seeds) out.push_back({m, v, snr, p, mode, seed});
  return out;
}

// ---------------------------------------------------------------------------

LaeCodec::LaeCodec(int degrees, int feature_width, int latent_width, std::uint64_t seed)
    : latent_width_(latent_width) {
  for (int k = 0; k < degrees; ++k) {
    const auto salt = kLaeSalt + 2 * static_cast<std::uint64_t>(k);
    encoders_.emplace_back("lae.encoder.k" + std::to_string(k), feature_width, latent_width,
                           derive_seed(seed, salt));
    decoders_.emplace_back("lae.decoder.k" + std::to_string(k), latent_width, feature_width,
                           derive_seed(seed, salt + 1));
  }
  active_.assign(encoders_.size(), false);
}

Embedding LaeCodec::encode(const RoundInput& input) {
  if (input.degrees() > encoders_.size()) throw ShapeError("lae: too many degrees");
  Embedding out(encoders_.size());
  for (std::size_t k = 0; k < encoders_.size(); ++k) {
    active_[k] = k < input.degrees() && input.features[k].rows() > 0;
    out[k] = active_[k] ? encoders_[k].forward(input.features[k], Activation::kNone)
                        : Tensor(0, latent_width_);
  }
  return out;
}

void LaeCodec::encode_backward(const Embedding& feedback) {
  for (std::size_t k = 0; k < encoders_.size(); ++k)
    if (active_[k]) encoders_[k].backward(feedback.at(k));
}

std::vector<Parameter*> LaeCodec::transmitter_parameters() {
  std::vector<Parameter*> out;
  for (auto& e : encoders_)
    for (Parameter* p : e.parameters()) out.push_back(p);
  return out;
}

Reconstruction LaeCodec::decode(const Embedding& received, const RoundInput& side) {
  Reconstruction r;
  r.features.resize(decoders_.size());
  r.laplacians.resize(decoders_.size());
  for (std::size_t k = 0; k < decoders_.size(); ++k) {
    if (!active_[k]) continue;
    r.features[k] = decoders_[k].forward(received.at(k), Activation::kNone);
    const Eigen::Index n = side.features[k].rows();
    r.laplacians[k] = Tensor::Zero(n, n);
  }
  return r;
}

Embedding LaeCodec::decode_backward(const LossTerms& loss) {
  Embedding out(decoders_.size());
  for (std::size_t k = 0; k < decoders_.size(); ++k)
    if (active_[k]) out[k] = decoders_[k].backward(loss.grad_features.at(k));
  return out;
}

std::vector<Parameter*> LaeCodec::receiver_parameters() {
  std::vector<Parameter*> out;
  for (auto& d : decoders_)
    for (Parameter* p : d.parameters()) out.push_back(p);
  return out;
}

// ---------------------------------------------------------------------------

ScnOracleCodec::ScnOracleCodec(const SaeConfig& config) : encoder_(config), features_(config) {}

Embedding ScnOracleCodec::encode(const RoundInput& input) { return encoder_.forward(input); }

void ScnOracleCodec::encode_backward(const Embedding& feedback) { encoder_.backward(feedback); }

std::vector<Parameter*> ScnOracleCodec::transmitter_parameters() { return encoder_.parameters(); }

Reconstruction ScnOracleCodec::decode(const Embedding& received, const RoundInput& side) {
  Reconstruction r;
  r.laplacians = side.laplacians;
  r.features = features_.forward(side.laplacians, received);
  return r;
}

Embedding ScnOracleCodec::decode_backward(const LossTerms& loss) {
  return features_.backward(loss.grad_features, nullptr);
}

std::vector<Parameter*> ScnOracleCodec::receiver_parameters() { return features_.parameters(); }

std::unique_ptr<Codec> make_codec(const ExperimentConfig& config, const GridPoint& point) {
  const SaeConfig m = model_config(config, point);
  switch (point.method) {
    case Method::kSae: return std::make_unique<SaeCodec>(m);
    case Method::kLae:
      // Latent width |V| per simplex matches the SAE's |V| * |S| scalars.
      return std::make_unique<LaeCodec>(m.degrees, m.feature_width, m.embed_order, m.seed);
    case Method::kScnOracle: return std::make_unique<ScnOracleCodec>(m);
  }
  throw ConfigError("unknown method");
}

// ---------------------------------------------------------------------------

RoundInput prepare_round_input(const CoauthorshipComplex& complex, int k_max, double feature_scale) {
  RoundInput in;
  const int top = complex.complex.top_degree();
  for (int k = 0; k <= k_max; ++k) {
    if (k <= top) {
      in.laplacians.push_back(normalize_laplacian(hodge_laplacian(complex.complex, k)).matrix);
      in.features.push_back(complex.cochains[static_cast<std::size_t>(k)].values / feature_scale);
    } else {
      in.laplacians.emplace_back(0, 0);
      in.features.emplace_back(0, 1);
    }
  }
  return in;
}

std::uint64_t walk_seed(std::uint64_t seed, std::size_t round) {
  return derive_seed(derive_seed(seed, kWalkSalt), round);
}

std::uint64_t channel_seed(std::uint64_t seed, std::size_t round) {
  return derive_seed(derive_seed(seed, kChannelSalt), round);
}

CoauthorshipComplex sample_round_complex(const Corpus& corpus, const ExperimentConfig& config,
                                         std::uint64_t seed, std::size_t round) {
  const std::size_t walk_round = config.freeze_complex ? 0 : round;
  const WalkSample sample = sample_walk(corpus, config.walk, walk_seed(seed, walk_round));
  return build_coauthorship_complex(sample, config.k_max);
}

RoundLog run_round(Codec& codec, const Corpus& corpus, const ExperimentConfig& config,
                   const GridPoint& point, std::size_t round, FeedbackSplit split) {
  const auto start = std::chrono::steady_clock::now();
  RoundLog log;
  log.round = round;
  try {
    const CoauthorshipComplex complex = sample_round_complex(corpus, config, point.seed, round);
    bool usable = false;
    for (int k = 0; k <= config.k_max; ++k) {
      log.simplex_counts.push_back(complex.complex.count(k));
      usable = usable || complex.complex.count(k) >= 2;
    }
    if (!usable) throw DegenerateRoundError("walk produced fewer than 2 simplices at every degree");

    const RoundInput input = prepare_round_input(complex, config.k_max, config.feature_scale);
    std::mt19937_64 rng(channel_seed(point.seed, round));
    const ChannelConfig link{point.snr_db, point.p, point.mode};
    const ChannelFn channel = [&](const Embedding& v) { return transmit(v, link, rng); };

    const StepResult step =
        train_step(codec, input, channel, config.learning_rate, config.lambda_topology, split,
                   config.clip_norm);
    log.loss = step.loss;

    const Metrics received =
        evaluate(step.prediction, input, step.received.mask(RowStatus::kReceived), config.feature_scale);
    log.acc_received = received.accuracy;
    RowMask all;
    for (const auto& status : step.received.status) all.emplace_back(status.size(), true);
    log.acc_all = evaluate(step.prediction, input, all, config.feature_scale).accuracy;

    const RowStatus eval_status =
        point.mode == DegradationMode::kDistorted ? RowStatus::kDistorted : RowStatus::kMissing;
    if (step.received.count(eval_status) > 0) {
      const Metrics eval = evaluate(step.prediction, input, step.received.mask(eval_status), config.feature_scale);
      log.acc_eval_raw = eval.accuracy_raw;
      log.acc_eval = eval.accuracy;
      log.err_eval = eval.error;
      log.lap_err_eval = eval.laplacian_error;
    } else {
      log.acc_eval_raw = log.acc_eval = log.err_eval = log.lap_err_eval = kNaN;
    }
  } catch (const Error& e) {
    log.skipped = true;
    log.skip_reason = e.what();
    log.loss = log.acc_received = log.acc_all = kNaN;
    log.acc_eval_raw = log.acc_eval = log.err_eval = log.lap_err_eval = kNaN;
  }
  log.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return log;
}

RoundLog lae_round(LaeCodec& codec, const Corpus& corpus, const ExperimentConfig& config,
                   const GridPoint& point, std::size_t round) {
  return run_round(codec, corpus, config, point, round);
}

RoundLog scn_oracle_round(ScnOracleCodec& codec, const Corpus& corpus, const ExperimentConfig& config,
                          const GridPoint& point, std::size_t round) {
  return run_round(codec, corpus, config, point, round);
}

// ---------------------------------------------------------------------------

Series run_grid_point(const Corpus& corpus, const ExperimentConfig& config, const GridPoint& point) {
  Series series;
  series.point = point;
  try {
    auto codec = make_codec(config, point);
    series.rounds.reserve(config.rounds);
    for (std::size_t t = 0; t < config.rounds; ++t)
      series.rounds.push_back(run_round(*codec, corpus, config, point, t));
  } catch (const std::exception& e) {
    series.failure = e.what();
  }
  return series;
}

Corpus materialize_corpus(const CorpusSource& source) {
  if (!source.path.empty()) return load_corpus(source.path);
  return generate_corpus(source.generator, source.seed);
}

std::vector<Series> run_experiment(const ExperimentConfig& config, const Corpus& corpus,
                                   unsigned threads, const std::function<void(const Series&)>& on_done) {
  validate(config);
  const std::vector<GridPoint> grid = expand_grid(config);
  std::vector<Series> results(grid.size());
  std::atomic<std::size_t> next{0};
  std::mutex done_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      results[i] = run_grid_point(corpus, config, grid[i]);
      if (on_done) {
        std::lock_guard lock(done_mutex);
        on_done(results[i]);
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(grid.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

}  // namespace simcom
