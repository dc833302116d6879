#include "simcom/errors.hpp"
#include "simcom/sae.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace simcom;

namespace {

ReceivedEmbedding all_received(const Embedding& v) {
  ReceivedEmbedding r;
  r.rows = v;
  for (const Tensor& t : v) r.status.emplace_back(static_cast<std::size_t>(t.rows()), RowStatus::kReceived);
  return r;
}

RowMask full_mask(const RoundInput& in) {
  RowMask m;
  for (const Tensor& x : in.features) m.emplace_back(static_cast<std::size_t>(x.rows()), true);
  return m;
}

Reconstruction exact(const RoundInput& in) { return {in.laplacians, in.features}; }

// Single-layer, order-0, width-F model whose layers can be set to identity.
SaeConfig identity_config(int width) {
  SaeConfig c;
  c.degrees = 1;
  c.feature_width = width;
  c.embed_order = width;
  c.hidden = width;
  c.order = 0;
  c.depth = 1;
  return c;
}

std::vector<double> values_of(Codec& codec) {
  std::vector<double> out;
  for (const Parameter* p : codec.parameters())
    out.insert(out.end(), p->value.data(), p->value.data() + p->value.size());
  return out;
}

}  // namespace

TEST_CASE("encode examples") {
  const RoundInput in = testing::toy_input(3);
  SaeConfig cfg = testing::toy_sae_config(3);
  SaeModel zero(cfg);
  for (Parameter* p : zero.encoder.parameters()) p->value.setZero();
  for (int k = 0; k < cfg.degrees; ++k) zero.encoder.stack(k).layers().back().bias().value.setConstant(0.25);
  const Embedding v = encode(zero, in);
  REQUIRE(v.size() == 3);
  for (std::size_t k = 0; k < v.size(); ++k) {
    CHECK(v[k].rows() == in.features[k].rows());
    CHECK(v[k].cols() == cfg.embed_order);
    CHECK((v[k].array() == 0.25).all());
  }

  SaeModel id(identity_config(2));
  id.encoder.stack(0).layers()[0].weights()[0].value = Tensor::Identity(2, 2);
  RoundInput two;
  two.laplacians.push_back(Tensor::Identity(3, 3));
  two.features.push_back((Tensor(3, 2) << 1, 2, 3, 4, 5, 6).finished());
  CHECK(encode(id, two)[0] == two.features[0]);

  SaeModel model(cfg);
  CHECK(encode(model, in) == encode(model, in));
  SaeModel twin(cfg);
  CHECK(encode(twin, in) == encode(model, in));
}

TEST_CASE("decode_structure examples") {
  SaeConfig cfg = identity_config(2);
  SaeModel m(cfg);
  m.structure.layer(0).bias().value(0, 0) = -0.5;
  const auto zero = decode_structure(m, {Tensor::Zero(4, 2)});
  CHECK((zero[0].array() == leaky_relu(-0.5)).all());

  m.structure.layer(0).weight().value = Tensor::Identity(2, 2);
  m.structure.layer(0).bias().value.setZero();
  const double s = std::sqrt(0.5);
  const Tensor v = (Tensor(2, 2) << s, s, s, -s).finished();
  const auto l = decode_structure(m, {v});
  CHECK(l[0](0, 0) == doctest::Approx(1.0));
  CHECK(l[0](0, 1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(l[0](1, 1) == doctest::Approx(1.0));

  const Tensor w = (Tensor(2, 2) << 1, 0, -1, 0).finished();
  const auto lw = decode_structure(m, {w});
  CHECK(lw[0](0, 1) == leaky_relu(-1.0));
  CHECK(lw[0](1, 0) == leaky_relu(-1.0));
  CHECK_THROWS_AS(decode_structure(m, {Tensor::Zero(2, 3)}), ShapeError);
}

TEST_CASE("decode_features examples") {
  SaeModel m(identity_config(1));
  m.features.stack(0).layers()[0].weights()[0].value.setOnes();
  const Tensor v = (Tensor(3, 1) << 0.5, -1, 2).finished();
  CHECK(decode_features(m, {Tensor::Identity(3, 3)}, {v})[0] == v);

  for (Parameter* p : m.features.parameters()) p->value.setZero();
  m.features.stack(0).layers()[0].bias().value.setConstant(3.0);
  CHECK((decode_features(m, {Tensor::Identity(3, 3)}, {v})[0].array() == 3.0).all());
}

TEST_CASE("reconstruction_loss examples") {
  const RoundInput in = testing::toy_input(5);
  const RowMask all = full_mask(in);
  CHECK(reconstruction_loss(exact(in), in, all, 1.0).value == 0.0);

  Reconstruction shifted = exact(in);
  for (Tensor& x : shifted.features) x.array() += 0.3;
  CHECK(reconstruction_loss(shifted, in, all, 1.0).value == doctest::Approx(0.09));

  RowMask none;
  for (const Tensor& x : in.features) none.emplace_back(static_cast<std::size_t>(x.rows()), false);
  CHECK_THROWS_AS(reconstruction_loss(exact(in), in, none, 1.0), NoSignalError);
}

TEST_CASE("property: loss equals a brute-force re-summation and ignores unreceived rows (100 seeds)") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CAPTURE(seed);
    const RoundInput in = testing::toy_input(seed);
    std::mt19937_64 rng(seed + 77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution keep(0.6);
    Reconstruction pred = exact(in);
    RowMask mask;
    for (std::size_t k = 0; k < in.degrees(); ++k) {
      for (Eigen::Index i = 0; i < pred.features[k].size(); ++i) pred.features[k](i) += u(rng);
      for (Eigen::Index i = 0; i < pred.laplacians[k].size(); ++i) pred.laplacians[k](i) += u(rng);
      std::vector<bool> m;
      for (Eigen::Index i = 0; i < in.features[k].rows(); ++i) m.push_back(keep(rng));
      mask.push_back(m);
    }
    mask[0][0] = true;
    const double lambda = 0.5 + static_cast<double>(seed % 3);

    double sum = 0.0, received = 0.0;
    for (std::size_t k = 0; k < in.degrees(); ++k)
      for (std::size_t i = 0; i < mask[k].size(); ++i) {
        if (!mask[k][i]) continue;
        received += 1.0;
        const auto r = static_cast<Eigen::Index>(i);
        sum += (pred.features[k].row(r) - in.features[k].row(r)).squaredNorm();
        for (std::size_t j = 0; j < mask[k].size(); ++j)
          if (mask[k][j]) {
            const double d = pred.laplacians[k](r, static_cast<Eigen::Index>(j)) -
                             in.laplacians[k](r, static_cast<Eigen::Index>(j));
            sum += lambda * d * d;
          }
      }
    const double loss = reconstruction_loss(pred, in, mask, lambda).value;
    CHECK(loss == doctest::Approx(sum / received).epsilon(1e-12));
    CHECK(loss >= 0.0);

    RoundInput altered = in;
    for (std::size_t k = 0; k < in.degrees(); ++k)
      for (std::size_t i = 0; i < mask[k].size(); ++i)
        if (!mask[k][i]) altered.features[k](static_cast<Eigen::Index>(i), 0) += 100.0;
    CHECK(reconstruction_loss(pred, altered, mask, lambda).value == loss);
  }
}

TEST_CASE("evaluate examples") {
  RoundInput in;
  in.laplacians.push_back(Tensor::Zero(1, 1));
  in.features.push_back(Tensor::Constant(1, 1, 10.0));
  const RowMask one{{true}};

  Reconstruction pred = exact(in);
  const Metrics same = evaluate(pred, in, one, 1.0);
  CHECK(same.error == 0.0);
  CHECK(same.accuracy == 1.0);
  CHECK(same.laplacian_error == 0.0);

  pred.features[0](0, 0) = 9.0;
  CHECK(evaluate(pred, in, one, 1.0).accuracy == doctest::Approx(0.9));
  CHECK(evaluate(pred, in, one, 1.0).error == doctest::Approx(1.0));

  pred.features[0](0, 0) = 0.0;
  CHECK(evaluate(pred, in, one, 1.0).accuracy == 0.0);

  pred.features[0](0, 0) = 25.0;
  const Metrics over = evaluate(pred, in, one, 1.0);
  CHECK(over.accuracy_raw == doctest::Approx(-0.5));
  CHECK(over.accuracy == 0.0);

  // Model units scale back to raw units.
  pred.features[0](0, 0) = 9.0;
  CHECK(evaluate(pred, in, one, 10.0).error == doctest::Approx(100.0));
  CHECK(evaluate(pred, in, one, 10.0).accuracy == doctest::Approx(0.9));

  in.features[0](0, 0) = 0.0;
  const Metrics undefined = evaluate(pred, in, one, 1.0);
  CHECK(std::isnan(undefined.accuracy));
  CHECK(undefined.error == doctest::Approx(81.0));

  CHECK_THROWS_AS(evaluate(pred, in, RowMask{{false}}, 1.0), NoSignalError);
}

TEST_CASE("property: full pipeline gradient matches finite differences (100 seeds)") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CAPTURE(seed);
    const RoundInput in = testing::toy_input(seed);
    SaeCodec codec(testing::toy_sae_config(seed));
    testing::jitter(codec, seed);
    const DegradationMode mode = seed % 2 ? DegradationMode::kMissing : DegradationMode::kDistorted;
    const testing::FrozenChannel frozen(codec.encode(in), 0.05, 0.3, mode, seed);
    const ChannelFn channel = [&](const Embedding& v) { return frozen(v); };
    CHECK(testing::pipeline_grad_check(codec, in, channel, 1.0) < 1e-4);
  }
}

TEST_CASE("mask_feedback") {
  ReceivedEmbedding r;
  r.rows = {Tensor::Ones(3, 2)};
  r.status = {{RowStatus::kReceived, RowStatus::kMissing, RowStatus::kDistorted}};
  const Embedding g = mask_feedback({Tensor::Constant(3, 2, 4.0)}, r);
  CHECK(g[0].row(0) == Eigen::RowVector2d(4, 4));
  CHECK(g[0].row(1).isZero(0.0));
  CHECK(g[0].row(2).isZero(0.0));
}

TEST_CASE("train_step") {
  const RoundInput in = testing::toy_input(11);

  SUBCASE("zero learning rate leaves parameters unchanged") {
    SaeCodec codec(testing::toy_sae_config(11));
    const auto before = values_of(codec);
    const StepResult r = train_step(codec, in, all_received, 0.0, 1.0);
    CHECK(values_of(codec) == before);
    CHECK(r.loss > 0.0);
    CHECK(std::isfinite(r.loss));
  }
  SUBCASE("errors roll parameters back") {
    SaeCodec codec(testing::toy_sae_config(11));
    const auto before = values_of(codec);
    const ChannelFn lost = [](const Embedding& v) {
      ReceivedEmbedding r = all_received(v);
      for (auto& s : r.status) std::fill(s.begin(), s.end(), RowStatus::kMissing);
      return r;
    };
    CHECK_THROWS_AS(train_step(codec, in, lost, 0.1, 1.0), NoSignalError);
    CHECK(values_of(codec) == before);

    RoundInput poisoned = in;
    poisoned.features[0](0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(train_step(codec, poisoned, all_received, 0.1, 1.0), DivergenceError);
    CHECK(values_of(codec) == before);
  }
  SUBCASE("distributed and monolithic updates are bit-identical") {
    SaeCodec a(testing::toy_sae_config(4)), b(testing::toy_sae_config(4));
    for (int step = 0; step < 20; ++step) {
      const RoundInput x = testing::toy_input(static_cast<std::uint64_t>(100 + step));
      const testing::FrozenChannel frozen(a.encode(x), 0.1, 0.3, DegradationMode::kMissing,
                                          static_cast<std::uint64_t>(step));
      const ChannelFn channel = [&](const Embedding& v) { return frozen(v); };
      const double la = train_step(a, x, channel, 0.1, 1.0, FeedbackSplit::kDistributed, 1.0).loss;
      const double lb = train_step(b, x, channel, 0.1, 1.0, FeedbackSplit::kMonolithic, 1.0).loss;
      CHECK(la == lb);
    }
    CHECK(values_of(a) == values_of(b));
  }
}

TEST_CASE("training on one fixed complex over a perfect link") {
  const RoundInput in = testing::toy_input(21, 5, 2);
  SaeConfig cfg;
  cfg.degrees = 3;
  cfg.embed_order = 10;
  cfg.hidden = 16;
  cfg.seed = 21;
  SaeCodec codec(cfg);
  double at10 = 0.0, at500 = 0.0, last = 0.0;
  int reached = -1;
  for (int step = 1; step <= 2000; ++step) {
    last = train_step(codec, in, all_received, 0.1, 1.0, FeedbackSplit::kDistributed, 1.0).loss;
    if (step == 10) at10 = last;
    if (step == 500) at500 = last;
    if (reached < 0 && last < 1e-2) reached = step;
  }
  CAPTURE(at10);
  CAPTURE(at500);
  CAPTURE(last);
  CHECK(at500 < at10);
  CHECK(reached > 0);
}
