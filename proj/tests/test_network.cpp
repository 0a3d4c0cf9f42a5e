#include <gtest/gtest.h>

#include <cmath>

#include "fpp/fpp.hpp"
#include "oracles.hpp"

using namespace fpp;

namespace {

NetworkConfig mini_config() {
  NetworkConfig c;
  c.channels = {Channel::R, Channel::U};
  c.levels = 10;
  c.nlat = 12;
  c.nlon = 16;
  c.conv_filters = {2, 2, 2, 2};
  c.fc_width = 8;
  c.output_dim = 6;
  c.seed = 5;
  c.precision = 64;
  return c;
}

template <class T>
std::vector<Sample<T>> random_samples(const NetworkConfig& c, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample<T>> out;
  for (std::size_t k = 0; k < n; ++k) {
    Tensor<T> x(Shape{c.channels.size(), c.levels, c.nlat, c.nlon});
    for (auto& v : x.data()) v = static_cast<T>(rng.normal());
    Tensor<T> y(Shape{c.output_dim});
    for (std::size_t i = 0; i < c.output_dim; ++i) y[i] = static_cast<T>(1.0 + std::max(0.0, static_cast<double>(x[i * 7])));
    out.push_back({std::move(x), std::move(y), Date(2000, 1, 1) + static_cast<long>(k)});
  }
  return out;
}

}  // namespace

TEST(NetworkGeometry, MiniatureStagesAndParameterCount) {
  const auto c = mini_config();
  const auto st = stage_geometry(c);
  // levels 10 -> 5 -> 2 -> 1 -> 1, lat 12 -> 6 -> 3 -> 1 -> 1, lon 16 -> 8 -> 4 -> 2 -> 1
  EXPECT_EQ(st[0].out, (std::array<std::size_t, 3>{5, 6, 8}));
  EXPECT_EQ(st[1].out, (std::array<std::size_t, 3>{2, 3, 4}));
  EXPECT_EQ(st[2].out, (std::array<std::size_t, 3>{1, 1, 2}));
  EXPECT_EQ(st[3].out, (std::array<std::size_t, 3>{1, 1, 1}));
  EXPECT_EQ(st[3].window, (Window3{1, 1, 2}));
  const std::size_t conv = (2 * 2 * 81 + 2) * 4;
  const std::size_t expect = conv + (8 * 2 + 8) + (6 * 8 + 6);
  EXPECT_EQ(count_parameters(c), expect);
  EXPECT_EQ(Network<double>(c).parameter_count(), expect);
}

TEST(NetworkGeometry, FullScaleParameterCount) {
  NetworkConfig c;  // 5 channels, 37 levels, 80 x 128, filters 32..256, fc 1024
  c.output_dim = 3000;
  // levels 37 -> 18 -> 9 -> 4 -> 2, lat 80 -> 5, lon 128 -> 8
  const std::size_t feat = 256 * 2 * 5 * 8;
  const std::size_t conv = (32 * 5 * 81 + 32) + (64 * 32 * 81 + 64) + (128 * 64 * 81 + 128) + (256 * 128 * 81 + 256);
  EXPECT_EQ(flattened_features(c), feat);
  EXPECT_EQ(count_parameters(c), conv + 1024 * feat + 1024 + 3000 * 1024 + 3000);
}

TEST(NetworkGeometry, TooSmallInputNamesStage) {
  auto c = mini_config();
  c.vertical_same_padding = false;
  c.levels = 8;
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find("stage 1"), std::string::npos);
  }
}

TEST(NetworkGeometry, AblateAndRestore) {
  NetworkConfig c;
  const auto a = ablate(c, Channel::Z);
  EXPECT_EQ(channels_string(a.channels), "TRUV");
  EXPECT_LT(count_parameters(a), count_parameters(c));
  EXPECT_EQ(restore_channel(a, Channel::Z), c);
  EXPECT_THROW(ablate(a, Channel::Z), Error);
  EXPECT_THROW(restore_channel(c, Channel::T), Error);
}

TEST(NetworkGeometry, ConfigJsonRoundTrip) {
  const auto c = mini_config();
  EXPECT_EQ(nlohmann::json(c).get<NetworkConfig>(), c);
}

TEST(Network, ForwardShapeNonnegativeAndDeterministic) {
  const auto c = mini_config();
  Network<double> a(c), b(c);
  for (std::size_t k = 0; k < a.parameters().size(); ++k) EXPECT_EQ(a.parameters()[k].value, b.parameters()[k].value);
  const auto s = random_samples<double>(c, 1, 3);
  const auto y = a.predict(s[0].input);
  ASSERT_EQ(y.size(), c.output_dim);
  for (const double v : y) EXPECT_GE(v, 0.0);
  EXPECT_EQ(y, b.predict(s[0].input));
  Rng rng(0);
  Tape<double> tape;
  const auto e = a.forward(tape, s[0].input, Mode::Eval, rng);
  EXPECT_EQ(e.value().storage(), y);
  EXPECT_THROW(a.predict(Tensor<double>(Shape{2, 10, 12, 15})), ShapeError);
}

TEST(Network, GradientsMatchFiniteDifferences) {
  auto c = mini_config();
  Network<double> net(c);
  // Bias shift keeps ReLUs away from their kink for the central difference.
  for (auto& p : net.parameters()) {
    if (p.name.ends_with(".bias")) p.value.fill(0.05);
  }
  const auto s = random_samples<double>(c, 1, 4);
  auto loss = [&](Tape<double>& t) {
    Rng rng(99);
    return mse_loss(net.forward(t, s[0].input, Mode::Train, rng), t.constant(s[0].target));
  };
  const auto r = grad_check(net.parameters(), loss, 1e-5);
  EXPECT_EQ(r.checked, net.parameter_count());
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_parameter << "[" << r.worst_index << "]";
}

TEST(Training, ReducesLossAndIsThreadCountInvariant) {
  auto c = mini_config();
  c.precision = 32;
  const auto tr = random_samples<float>(c, 24, 7);
  const auto va = random_samples<float>(c, 6, 8);
  TrainConfig tc;
  tc.epochs = 6;
  tc.batch_size = 4;
  tc.optimizer.lr = 3e-3;
  tc.seed = 42;
  Network<float> a(c), b(c);
  tc.threads = 1;
  const auto ra = train(a, tr, va, tc);
  tc.threads = 3;
  const auto rb = train(b, tr, va, tc);
  EXPECT_FALSE(ra.aborted);
  EXPECT_LT(ra.final_train_mse, ra.initial_train_mse);
  ASSERT_EQ(ra.history.size(), rb.history.size());
  for (std::size_t e = 0; e < ra.history.size(); ++e) {
    EXPECT_EQ(ra.history[e].train_mse, rb.history[e].train_mse);
    EXPECT_EQ(ra.history[e].val_mse, rb.history[e].val_mse);
  }
  for (std::size_t k = 0; k < a.parameters().size(); ++k) EXPECT_EQ(a.parameters()[k].value, b.parameters()[k].value);
  // The restored parameters are those of the best validation epoch.
  EXPECT_FLOAT_EQ(static_cast<float>(evaluate_mse(a, va)), static_cast<float>(ra.best_val_mse));
}

TEST(Training, NonFiniteLossAborts) {
  const auto c = mini_config();
  auto tr = random_samples<double>(c, 4, 9);
  const auto va = random_samples<double>(c, 2, 10);
  tr[2].target[0] = std::nan("");
  Network<double> net(c);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 2;
  const auto r = train(net, tr, va, tc);
  EXPECT_TRUE(r.aborted);
  EXPECT_NE(r.abort_reason.find("non-finite"), std::string::npos);
}

TEST(Checkpoint, RoundTripIsBitwise) {
  auto c = mini_config();
  NormalizationStats norm{{Channel::R, Channel::U}, 10, std::vector<double>(20, 1.5), std::vector<double>(20, 0.25)};
  for (const int precision : {32, 64}) {
    c.precision = precision;
    std::string bytes;
    const auto s = random_samples<double>(c, 1, 11);
    if (precision == 32) {
      Network<float> net(c);
      bytes = encode_checkpoint(net, norm, {{"epoch", 3}});
      const auto ck = decode_checkpoint<float>(bytes);
      for (std::size_t k = 0; k < net.parameters().size(); ++k) {
        EXPECT_EQ(ck.network.parameters()[k].value, net.parameters()[k].value);
      }
      EXPECT_EQ(encode_checkpoint(ck.network, ck.normalization, ck.metadata), bytes);
      EXPECT_THROW(decode_checkpoint<double>(bytes), Error);
    } else {
      Network<double> net(c);
      bytes = encode_checkpoint(net, norm, {{"epoch", 3}});
      const auto ck = decode_checkpoint<double>(bytes);
      EXPECT_EQ(ck.normalization, norm);
      EXPECT_EQ(ck.metadata.at("epoch"), 3);
      EXPECT_EQ(ck.network.config(), c);
      EXPECT_EQ(ck.network.predict(s[0].input), net.predict(s[0].input));
    }
  }
}

TEST(Checkpoint, CorruptionIsFormatError) {
  const auto c = mini_config();
  NormalizationStats norm{{Channel::R, Channel::U}, 10, std::vector<double>(20, 0.0), std::vector<double>(20, 1.0)};
  const auto good = encode_checkpoint(Network<double>(c), norm, {});
  auto kind = [](const std::string& b) {
    try {
      decode_checkpoint<double>(b);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::State;
  };
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_EQ(kind(bad), ErrorKind::Format);
  bad = good;
  bad[4] = 9;
  EXPECT_EQ(kind(bad), ErrorKind::Format);
  EXPECT_EQ(kind(good.substr(0, good.size() - 3)), ErrorKind::Format);
  EXPECT_EQ(kind(good + "x"), ErrorKind::Format);
  EXPECT_EQ(kind(good.substr(0, 40)), ErrorKind::Format);
}
