#include "simcom/sae.hpp"

#include "simcom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace simcom {

namespace {

constexpr std::uint64_t kEncoderSalt = 1000;
constexpr std::uint64_t kStructureSalt = 2000;
constexpr std::uint64_t kFeatureSalt = 3000;

bool present(const std::vector<Tensor>& v, std::size_t k) { return k < v.size() && v[k].size() > 0; }

void check_degrees(std::size_t got, int configured, const char* what) {
  if (got > static_cast<std::size_t>(configured))
    throw ShapeError(std::string(what) + ": " + std::to_string(got) + " degrees, model has " +
                     std::to_string(configured));
}

void append(std::vector<Parameter*>& out, const std::vector<Parameter*>& more) {
  out.insert(out.end(), more.begin(), more.end());
}

}  // namespace

// ---------------------------------------------------------------------------

ConvStack::ConvStack(const std::string& name, int in, int hidden, int out, int depth, int order,
                     std::uint64_t seed) {
  if (depth < 1) throw ConfigError("stack depth must be >= 1");
  layers_.reserve(static_cast<std::size_t>(depth));
  for (int l = 0; l < depth; ++l) {
    const int lin = l == 0 ? in : hidden;
    const int lout = l == depth - 1 ? out : hidden;
    layers_.emplace_back(name + "." + std::to_string(l), order, lin, lout,
                         derive_seed(seed, static_cast<std::uint64_t>(l)));
  }
}

Tensor ConvStack::forward(const Tensor& laplacian, const Tensor& x) {
  Tensor h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Activation act = l + 1 < layers_.size() ? Activation::kLeakyRelu : Activation::kNone;
    h = layers_[l].forward(laplacian, h, act);
  }
  return h;
}

Tensor ConvStack::backward(const Tensor& upstream, Tensor* grad_laplacian) {
  Tensor g = upstream;
  for (std::size_t l = layers_.size(); l-- > 0;) g = layers_[l].backward(g, grad_laplacian);
  return g;
}

std::vector<Parameter*> ConvStack::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) append(out, layer.parameters());
  return out;
}

// ---------------------------------------------------------------------------

SimplicialEncoder::SimplicialEncoder(const SaeConfig& config) : embed_order_(config.embed_order) {
  for (int k = 0; k < config.degrees; ++k)
    stacks_.emplace_back("encoder.k" + std::to_string(k), config.feature_width, config.hidden,
                         config.embed_order, config.depth, config.order,
                         derive_seed(config.seed, kEncoderSalt + static_cast<std::uint64_t>(k)));
  active_.assign(stacks_.size(), false);
}

Embedding SimplicialEncoder::forward(const RoundInput& input) {
  check_degrees(input.degrees(), static_cast<int>(stacks_.size()), "encoder");
  Embedding out(stacks_.size());
  for (std::size_t k = 0; k < stacks_.size(); ++k) {
    active_[k] = present(input.features, k);
    out[k] = active_[k] ? stacks_[k].forward(input.laplacians[k], input.features[k])
                        : Tensor(0, embed_order_);
  }
  return out;
}

void SimplicialEncoder::backward(const Embedding& grad) {
  for (std::size_t k = 0; k < stacks_.size(); ++k)
    if (active_[k]) stacks_[k].backward(grad.at(k));
}

std::vector<Parameter*> SimplicialEncoder::parameters() {
  std::vector<Parameter*> out;
  for (auto& s : stacks_) append(out, s.parameters());
  return out;
}

// ---------------------------------------------------------------------------

StructureDecoder::StructureDecoder(const SaeConfig& config) : embed_order_(config.embed_order) {
  for (int k = 0; k < config.degrees; ++k)
    layers_.emplace_back("structure.k" + std::to_string(k), config.embed_order,
                         derive_seed(config.seed, kStructureSalt + static_cast<std::uint64_t>(k)));
  normalizers_.resize(layers_.size());
  normalized_.resize(layers_.size());
  active_.assign(layers_.size(), false);
}

std::vector<Tensor> StructureDecoder::forward(const Embedding& v) {
  check_degrees(v.size(), static_cast<int>(layers_.size()), "structure decoder");
  std::vector<Tensor> out(layers_.size());
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    active_[k] = present(v, k);
    if (!active_[k]) {
      normalized_[k] = Tensor();
      continue;
    }
    out[k] = symmetrize(layers_[k].forward(v[k]));
    normalized_[k] = normalizers_[k].forward(out[k]);
  }
  return out;
}

Embedding StructureDecoder::backward(const std::vector<Tensor>& grad_laplacians,
                                     const std::vector<Tensor>& grad_normalized) {
  Embedding out(layers_.size());
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (!active_[k]) {
      out[k] = Tensor(0, embed_order_);
      continue;
    }
    const Eigen::Index n = normalized_[k].rows();
    Tensor g = Tensor::Zero(n, n);
    if (present(grad_laplacians, k)) g += grad_laplacians[k];
    if (present(grad_normalized, k)) g += normalizers_[k].backward(grad_normalized[k]);
    out[k] = layers_[k].backward(symmetrize_backward(g));
  }
  return out;
}

std::vector<Parameter*> StructureDecoder::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) append(out, l.parameters());
  return out;
}

// ---------------------------------------------------------------------------

FeatureDecoder::FeatureDecoder(const SaeConfig& config) : feature_width_(config.feature_width) {
  for (int k = 0; k < config.degrees; ++k)
    stacks_.emplace_back("features.k" + std::to_string(k), config.embed_order, config.hidden,
                         config.feature_width, config.depth, config.order,
                         derive_seed(config.seed, kFeatureSalt + static_cast<std::uint64_t>(k)));
  active_.assign(stacks_.size(), false);
}

std::vector<Tensor> FeatureDecoder::forward(const std::vector<Tensor>& laplacians, const Embedding& v) {
  check_degrees(v.size(), static_cast<int>(stacks_.size()), "feature decoder");
  std::vector<Tensor> out(stacks_.size());
  for (std::size_t k = 0; k < stacks_.size(); ++k) {
    active_[k] = present(v, k);
    out[k] = active_[k] ? stacks_[k].forward(laplacians.at(k), v[k]) : Tensor(0, feature_width_);
  }
  return out;
}

Embedding FeatureDecoder::backward(const std::vector<Tensor>& grad_features,
                                   std::vector<Tensor>* grad_laplacians) {
  Embedding out(stacks_.size());
  if (grad_laplacians) grad_laplacians->assign(stacks_.size(), Tensor());
  for (std::size_t k = 0; k < stacks_.size(); ++k) {
    if (!active_[k]) continue;
    out[k] = stacks_[k].backward(grad_features.at(k), grad_laplacians ? &(*grad_laplacians)[k] : nullptr);
  }
  return out;
}

std::vector<Parameter*> FeatureDecoder::parameters() {
  std::vector<Parameter*> out;
  for (auto& s : stacks_) append(out, s.parameters());
  return out;
}

// ---------------------------------------------------------------------------

SaeModel::SaeModel(const SaeConfig& cfg)
    : config(cfg), encoder(cfg), structure(cfg), features(cfg) {
  if (cfg.degrees < 1 || cfg.feature_width < 1 || cfg.embed_order < 1 || cfg.hidden < 1)
    throw ConfigError("model dimensions must be >= 1");
}

Embedding encode(SaeModel& model, const RoundInput& input) { return model.encoder.forward(input); }

std::vector<Tensor> decode_structure(SaeModel& model, const Embedding& received) {
  return model.structure.forward(received);
}

std::vector<Tensor> decode_features(SaeModel& model, const std::vector<Tensor>& normalized_laplacians,
                                    const Embedding& received) {
  return model.features.forward(normalized_laplacians, received);
}

// ---------------------------------------------------------------------------

LossTerms reconstruction_loss(const Reconstruction& prediction, const RoundInput& truth,
                              const RowMask& received, double lambda_topology) {
  const std::size_t degrees = truth.degrees();
  std::size_t count = 0;
  for (std::size_t k = 0; k < degrees && k < received.size(); ++k)
    for (bool r : received[k]) count += r ? 1 : 0;
  if (count == 0) throw NoSignalError("no simplex was received");
  const double inv = 1.0 / static_cast<double>(count);
  const bool topology = lambda_topology != 0.0;

  LossTerms out;
  out.grad_features.resize(degrees);
  out.grad_laplacians.resize(degrees);
  double total = 0.0;
  for (std::size_t k = 0; k < degrees; ++k) {
    const Tensor& x = truth.features[k];
    const Eigen::Index n = x.rows();
    out.grad_features[k] = Tensor::Zero(n, x.cols());
    if (n == 0) continue;
    const auto& mask = received.at(k);
    if (static_cast<Eigen::Index>(mask.size()) != n) throw ShapeError("loss: mask length mismatch");
    const Tensor& xp = prediction.features.at(k);
    if (xp.rows() != n || xp.cols() != x.cols()) throw ShapeError("loss: feature shape mismatch");

    for (Eigen::Index i = 0; i < n; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) continue;
      const Eigen::RowVectorXd d = xp.row(i) - x.row(i);
      total += d.squaredNorm();
      out.grad_features[k].row(i) = 2.0 * inv * d;
    }

    if (!topology) continue;
    const Tensor& l = truth.laplacians.at(k);
    const Tensor& lp = prediction.laplacians.at(k);
    if (lp.rows() != n || lp.cols() != n) throw ShapeError("loss: laplacian shape mismatch");
    out.grad_laplacians[k] = Tensor::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!mask[static_cast<std::size_t>(j)]) continue;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!mask[static_cast<std::size_t>(i)]) continue;
        const double d = lp(i, j) - l(i, j);
        total += lambda_topology * d * d;
        out.grad_laplacians[k](i, j) = 2.0 * inv * lambda_topology * d;
      }
    }
  }
  if (!topology) out.grad_laplacians.assign(degrees, Tensor());
  out.value = total * inv;
  return out;
}

Metrics evaluate(const Reconstruction& prediction, const RoundInput& truth, const RowMask& mask,
                 double feature_scale) {
  std::size_t rows = 0;
  double sq = 0.0;
  double abs_err = 0.0;
  double truth_sum = 0.0;
  double lap_abs = 0.0;
  double lap_entries = 0.0;
  for (std::size_t k = 0; k < truth.degrees(); ++k) {
    const Tensor& x = truth.features[k];
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (k >= mask.size() || !mask[k].at(static_cast<std::size_t>(i))) continue;
      ++rows;
      const Eigen::RowVectorXd d = (prediction.features.at(k).row(i) - x.row(i)) * feature_scale;
      sq += d.squaredNorm();
      abs_err += d.cwiseAbs().sum();
      truth_sum += x.row(i).sum() * feature_scale;
      const Tensor& l = truth.laplacians.at(k);
      lap_abs += (prediction.laplacians.at(k).row(i) - l.row(i)).cwiseAbs().sum();
      lap_entries += static_cast<double>(l.cols());
    }
  }
  if (rows == 0) throw NoSignalError("evaluation mask is empty");

  Metrics m;
  m.error = sq / static_cast<double>(rows);
  if (truth_sum == 0.0) {
    m.accuracy_raw = std::numeric_limits<double>::quiet_NaN();
    m.accuracy = m.accuracy_raw;
  } else {
    m.accuracy_raw = 1.0 - abs_err / truth_sum;
    m.accuracy = std::clamp(m.accuracy_raw, 0.0, 1.0);
  }
  m.laplacian_error = lap_entries > 0.0 ? lap_abs / lap_entries : 0.0;
  return m;
}

// ---------------------------------------------------------------------------

std::vector<Parameter*> Codec::parameters() {
  std::vector<Parameter*> out = transmitter_parameters();
  append(out, receiver_parameters());
  return out;
}

Embedding SaeCodec::encode(const RoundInput& input) { return model_.encoder.forward(input); }

void SaeCodec::encode_backward(const Embedding& feedback) { model_.encoder.backward(feedback); }

std::vector<Parameter*> SaeCodec::transmitter_parameters() { return model_.encoder.parameters(); }

Reconstruction SaeCodec::decode(const Embedding& received, const RoundInput&) {
  Reconstruction r;
  r.laplacians = model_.structure.forward(received);
  r.features = model_.features.forward(model_.structure.normalized(), received);
  return r;
}

Embedding SaeCodec::decode_backward(const LossTerms& loss) {
  std::vector<Tensor> grad_normalized;
  Embedding grad = model_.features.backward(loss.grad_features, &grad_normalized);
  const Embedding from_structure = model_.structure.backward(loss.grad_laplacians, grad_normalized);
  for (std::size_t k = 0; k < grad.size(); ++k) {
    if (grad[k].size() == 0)
      grad[k] = from_structure[k];
    else if (from_structure[k].size() > 0)
      grad[k] += from_structure[k];
  }
  return grad;
}

std::vector<Parameter*> SaeCodec::receiver_parameters() {
  std::vector<Parameter*> out = model_.structure.parameters();
  append(out, model_.features.parameters());
  return out;
}

// ---------------------------------------------------------------------------

Embedding mask_feedback(const Embedding& grad, const ReceivedEmbedding& received) {
  Embedding out = grad;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k].size() == 0) continue;
    for (Eigen::Index i = 0; i < out[k].rows(); ++i)
      if (received.status.at(k).at(static_cast<std::size_t>(i)) != RowStatus::kReceived) out[k].row(i).setZero();
  }
  return out;
}

StepResult compute_gradients(Codec& codec, const RoundInput& input, const ChannelFn& channel,
                             double lambda_topology) {
  auto params = codec.parameters();
  zero_grads(params);
  StepResult result;
  const Embedding v = codec.encode(input);
  result.received = channel(v);
  result.prediction = codec.decode(result.received.rows, input);
  const LossTerms loss = reconstruction_loss(result.prediction, input,
                                             result.received.mask(RowStatus::kReceived),
                                             codec.learns_structure() ? lambda_topology : 0.0);
  result.loss = loss.value;
  if (!std::isfinite(loss.value)) throw DivergenceError("non-finite loss");
  codec.encode_backward(mask_feedback(codec.decode_backward(loss), result.received));
  return result;
}

StepResult train_step(Codec& codec, const RoundInput& input, const ChannelFn& channel,
                      double learning_rate, double lambda_topology, FeedbackSplit split,
                      double clip_norm) {
  auto params = codec.parameters();
  std::vector<Tensor> snapshot;
  snapshot.reserve(params.size());
  for (const Parameter* p : params) snapshot.push_back(p->value);

  try {
    zero_grads(params);
    StepResult result;
    const Embedding v = codec.encode(input);
    result.received = channel(v);
    result.prediction = codec.decode(result.received.rows, input);
    const LossTerms loss = reconstruction_loss(result.prediction, input,
                                               result.received.mask(RowStatus::kReceived),
                                               codec.learns_structure() ? lambda_topology : 0.0);
    result.loss = loss.value;
    if (!std::isfinite(loss.value)) throw DivergenceError("non-finite loss");

    if (split == FeedbackSplit::kDistributed) {
      // Receiver: decoder gradients, local update, then dJ/dV over the
      // feedback link.
      const Embedding feedback = mask_feedback(codec.decode_backward(loss), result.received);
      const auto rx = codec.receiver_parameters();
      clip_grad_norm(rx, clip_norm);
      sgd_step(rx, learning_rate);
      // Transmitter: backpropagate the fed-back gradient through the encoder.
      codec.encode_backward(feedback);
      const auto tx = codec.transmitter_parameters();
      clip_grad_norm(tx, clip_norm);
      sgd_step(tx, learning_rate);
    } else {
      codec.encode_backward(mask_feedback(codec.decode_backward(loss), result.received));
      clip_grad_norm(codec.receiver_parameters(), clip_norm);
      clip_grad_norm(codec.transmitter_parameters(), clip_norm);
      sgd_step(params, learning_rate);
    }
    return result;
  } catch (...) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i]->value = snapshot[i];
      params[i]->zero_grad();
    }
    throw;
  }
}

}  // namespace simcom
