#pragma once

// Simplicial autoencoder: a stacked simplicial-convolution encoder at the
// transmitter, and at the receiver a bilinear structure decoder followed by
// a stacked simplicial-convolution feature decoder running on the decoded
// (normalized) Laplacian.

#include "simcom/channel.hpp"
#include "simcom/nn.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace simcom {

struct SaeConfig {
  /// Degrees 0..degrees-1 each get their own encoder and decoders.
  int degrees = 3;
  int feature_width = 1;
  int embed_order = 10;
  int hidden = 32;
  /// Polynomial order N of every convolution.
  int order = 3;
  /// Convolutions per stack.
  int depth = 3;
  double lambda_topology = 1.0;
  std::uint64_t seed = 0;
};

/// One sampled complex as the model sees it. Degrees without simplices carry
/// 0-row tensors.
struct RoundInput {
  /// Normalized true Hodge Laplacians.
  std::vector<Tensor> laplacians;
  /// Features in model units (raw / feature_scale).
  std::vector<Tensor> features;

  std::size_t degrees() const noexcept { return features.size(); }
};

struct Reconstruction {
  /// Decoded Laplacian L' per degree (symmetrized, before normalization).
  std::vector<Tensor> laplacians;
  std::vector<Tensor> features;
};

/// Stack of `depth` convolutions in -> hidden -> ... -> out. Hidden layers use
/// LeakyReLU, the last layer is linear.
class ConvStack {
 public:
  ConvStack(const std::string& name, int in, int hidden, int out, int depth, int order,
            std::uint64_t seed);

  Tensor forward(const Tensor& laplacian, const Tensor& x);
  /// dJ/dX; adds dJ/dL into `grad_laplacian` when non-null.
  Tensor backward(const Tensor& upstream, Tensor* grad_laplacian = nullptr);

  std::vector<Parameter*> parameters();
  std::vector<SimplicialConvLayer>& layers() noexcept { return layers_; }

 private:
  std::vector<SimplicialConvLayer> layers_;
};

class SimplicialEncoder {
 public:
  explicit SimplicialEncoder(const SaeConfig& config);

  Embedding forward(const RoundInput& input);
  void backward(const Embedding& grad);
  std::vector<Parameter*> parameters();
  ConvStack& stack(int k) { return stacks_.at(static_cast<std::size_t>(k)); }

 private:
  int embed_order_;
  std::vector<ConvStack> stacks_;
  std::vector<bool> active_;
};

/// Per degree: L' = sym(LeakyReLU(V W V^T + b)), and its normalized copy used
/// by the feature decoder.
class StructureDecoder {
 public:
  explicit StructureDecoder(const SaeConfig& config);

  std::vector<Tensor> forward(const Embedding& v);
  const std::vector<Tensor>& normalized() const noexcept { return normalized_; }

  /// grad_laplacians: dJ/dL' (loss side); grad_normalized: dJ/d(normalized L')
  /// (feature decoder side). Either may hold empty tensors. Returns dJ/dV.
  Embedding backward(const std::vector<Tensor>& grad_laplacians,
                     const std::vector<Tensor>& grad_normalized);

  std::vector<Parameter*> parameters();
  BilinearLayer& layer(int k) { return layers_.at(static_cast<std::size_t>(k)); }

 private:
  int embed_order_;
  std::vector<BilinearLayer> layers_;
  std::vector<SpectralNormalize> normalizers_;
  std::vector<Tensor> normalized_;
  std::vector<bool> active_;
};

class FeatureDecoder {
 public:
  explicit FeatureDecoder(const SaeConfig& config);

  std::vector<Tensor> forward(const std::vector<Tensor>& laplacians, const Embedding& v);
  /// Returns dJ/dV. When `grad_laplacians` is non-null it receives dJ/dL per degree.
  Embedding backward(const std::vector<Tensor>& grad_features, std::vector<Tensor>* grad_laplacians);

  std::vector<Parameter*> parameters();
  ConvStack& stack(int k) { return stacks_.at(static_cast<std::size_t>(k)); }

 private:
  int feature_width_;
  std::vector<ConvStack> stacks_;
  std::vector<bool> active_;
};

struct SaeModel {
  explicit SaeModel(const SaeConfig& config);

  SaeConfig config;
  SimplicialEncoder encoder;
  StructureDecoder structure;
  FeatureDecoder features;
};

/// Normalized Laplacians per degree.
Embedding encode(SaeModel& model, const RoundInput& input);
/// Decoded L' per degree (symmetrized); normalized copies stay in the model.
std::vector<Tensor> decode_structure(SaeModel& model, const Embedding& received);
std::vector<Tensor> decode_features(SaeModel& model, const std::vector<Tensor>& normalized_laplacians,
                                    const Embedding& received);

struct LossTerms {
  double value = 0.0;
  std::vector<Tensor> grad_features;
  /// Empty tensors when the topology term is off.
  std::vector<Tensor> grad_laplacians;
};

/// Mean over received simplices of the feature-row squared error plus
/// lambda times the squared Laplacian error on received x received entries.
/// Throws NoSignalError when nothing was received.
LossTerms reconstruction_loss(const Reconstruction& prediction, const RoundInput& truth,
                              const RowMask& received, double lambda_topology);

struct Metrics {
  /// Mean squared feature error per evaluated simplex (raw units).
  double error = 0.0;
  /// 1 - sum|pred - truth| / sum truth; NaN when sum truth == 0.
  double accuracy_raw = 0.0;
  /// accuracy_raw clamped to [0, 1]; NaN when undefined.
  double accuracy = 0.0;
  /// Mean |L' - L| over the full rows of the evaluated simplices.
  double laplacian_error = 0.0;
};

/// Throws NoSignalError for an empty mask.
Metrics evaluate(const Reconstruction& prediction, const RoundInput& truth, const RowMask& mask,
                 double feature_scale);

/// Transmitter/receiver pair trained jointly over the link.
class Codec {
 public:
  virtual ~Codec() = default;

  virtual Embedding encode(const RoundInput& input) = 0;
  virtual void encode_backward(const Embedding& feedback) = 0;
  virtual std::vector<Parameter*> transmitter_parameters() = 0;

  /// `side` carries slot counts and training targets; the oracle baseline also
  /// reads its true Laplacians.
  virtual Reconstruction decode(const Embedding& received, const RoundInput& side) = 0;
  virtual Embedding decode_backward(const LossTerms& loss) = 0;
  virtual std::vector<Parameter*> receiver_parameters() = 0;

  /// Whether the loss includes the topology term.
  virtual bool learns_structure() const = 0;

  std::vector<Parameter*> parameters();
};

class SaeCodec final : public Codec {
 public:
  explicit SaeCodec(const SaeConfig& config) : model_(config) {}

  Embedding encode(const RoundInput& input) override;
  void encode_backward(const Embedding& feedback) override;
  std::vector<Parameter*> transmitter_parameters() override;
  Reconstruction decode(const Embedding& received, const RoundInput& side) override;
  Embedding decode_backward(const LossTerms& loss) override;
  std::vector<Parameter*> receiver_parameters() override;
  bool learns_structure() const override { return true; }

  SaeModel& model() noexcept { return model_; }

 private:
  SaeModel model_;
};

using ChannelFn = std::function<ReceivedEmbedding(const Embedding&)>;

enum class FeedbackSplit {
  /// Receiver updates its decoders and feeds dJ/dV back to the transmitter.
  kDistributed,
  /// One end-to-end backward pass and a single joint update.
  kMonolithic,
};

struct StepResult {
  double loss = 0.0;
  Reconstruction prediction;
  ReceivedEmbedding received;
};

/// Forward through encoder, channel and decoders, and backward into every
/// parameter's grad slot, without updating. Missing and distorted rows feed
/// back zero gradient; channel noise is treated as a constant offset.
StepResult compute_gradients(Codec& codec, const RoundInput& input, const ChannelFn& channel,
                             double lambda_topology);

/// One training step. On any error every parameter is restored to its
/// pre-step value and the error is rethrown; a non-finite loss throws
/// DivergenceError. With clip_norm > 0 the receiver and transmitter gradients
/// are each rescaled to at most that L2 norm (each side only sees its own).
StepResult train_step(Codec& codec, const RoundInput& input, const ChannelFn& channel,
                      double learning_rate, double lambda_topology,
                      FeedbackSplit split = FeedbackSplit::kDistributed, double clip_norm = 0.0);

/// Zero the rows of `grad` that were not received intact.
Embedding mask_feedback(const Embedding& grad, const ReceivedEmbedding& received);

}  // namespace simcom
