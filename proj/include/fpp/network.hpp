#pragma once

// The precipitation network: 4 x [conv3d -> ReLU -> dropout -> maxpool3d]
// -> flatten -> linear(fc_width) -> dropout -> linear(output_dim) -> ReLU.
// Input is one normalized cube [channels, levels, lat, lon]; output is the
// masked precipitation vector (mm/day).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpp/autodiff.hpp"
#include "fpp/error.hpp"
#include "fpp/grid.hpp"
#include "fpp/rng.hpp"
#include "fpp/tensor.hpp"

namespace fpp {

inline constexpr std::size_t kStages = 4;

struct NetworkConfig {
  std::vector<Channel> channels{kAllChannels.begin(), kAllChannels.end()};
  std::size_t levels = 37;
  std::size_t nlat = 80;
  std::size_t nlon = 128;
  std::array<std::size_t, kStages> conv_filters{32, 64, 128, 256};
  std::array<std::size_t, 3> conv_kernel{9, 3, 3};  // (levels, lat, lon)
  std::array<std::size_t, 3> pool{2, 2, 2};
  bool vertical_same_padding = true;
  double dropout_p = 0.1;
  std::size_t fc_width = 1024;
  std::size_t output_dim = 1;
  std::uint64_t seed = 0;
  int precision = 32;

  void validate() const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

inline void to_json(nlohmann::json& j, const NetworkConfig& c) {
  j = nlohmann::json{{"channels", channels_string(c.channels)},
                     {"levels", c.levels},
                     {"nlat", c.nlat},
                     {"nlon", c.nlon},
                     {"conv_filters", c.conv_filters},
                     {"conv_kernel", c.conv_kernel},
                     {"pool", c.pool},
                     {"vertical_same_padding", c.vertical_same_padding},
                     {"dropout_p", c.dropout_p},
                     {"fc_width", c.fc_width},
                     {"output_dim", c.output_dim},
                     {"seed", c.seed},
                     {"precision", c.precision}};
}

inline void from_json(const nlohmann::json& j, NetworkConfig& c) {
  c = NetworkConfig{};
  if (j.contains("channels")) {
    c.channels.clear();
    for (const char ch : j.at("channels").get<std::string>()) c.channels.push_back(parse_channel(std::string(1, ch)));
  }
  auto opt = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  opt("levels", c.levels);
  opt("nlat", c.nlat);
  opt("nlon", c.nlon);
  opt("conv_filters", c.conv_filters);
  opt("conv_kernel", c.conv_kernel);
  opt("pool", c.pool);
  opt("vertical_same_padding", c.vertical_same_padding);
  opt("dropout_p", c.dropout_p);
  opt("fc_width", c.fc_width);
  opt("output_dim", c.output_dim);
  opt("seed", c.seed);
  opt("precision", c.precision);
}

/// Resolved shapes of one conv+pool stage.
struct StageGeometry {
  std::array<std::size_t, 3> in;      // (levels, lat, lon) entering the conv
  Padding3 padding;
  std::array<std::size_t, 3> conv_out;
  Window3 window;                     // pool window; 1 on axes already of length 1
  std::array<std::size_t, 3> out;
  std::size_t cin, cout;
};

/// Per-stage geometry; throws a Config error naming the 1-based stage whose
/// spatial dims cannot accommodate the kernel.
inline std::vector<StageGeometry> stage_geometry(const NetworkConfig& c) {
  std::vector<StageGeometry> st;
  std::array<std::size_t, 3> dims{c.levels, c.nlat, c.nlon};
  std::size_t cin = c.channels.size();
  for (std::size_t s = 0; s < kStages; ++s) {
    StageGeometry g{};
    g.in = dims;
    g.cin = cin;
    g.cout = c.conv_filters[s];
    g.padding = {c.vertical_same_padding ? c.conv_kernel[0] / 2 : 0, c.conv_kernel[1] / 2, c.conv_kernel[2] / 2};
    static constexpr const char* axis_names[3] = {"levels", "lat", "lon"};
    for (int a = 0; a < 3; ++a) {
      if (c.conv_kernel[a] > dims[a] + 2 * g.padding[a]) {
        throw Error(ErrorKind::Config, "network stage " + std::to_string(s + 1) + ": " + axis_names[a] + " length " +
                                           std::to_string(dims[a]) + " (padding " + std::to_string(g.padding[a]) +
                                           ") is below kernel size " + std::to_string(c.conv_kernel[a]));
      }
      g.conv_out[a] = dims[a] + 2 * g.padding[a] - c.conv_kernel[a] + 1;
      g.window[a] = g.conv_out[a] >= c.pool[a] ? c.pool[a] : 1;
      g.out[a] = g.conv_out[a] / g.window[a];
    }
    dims = g.out;
    cin = g.cout;
    st.push_back(g);
  }
  return st;
}

inline std::size_t flattened_features(const NetworkConfig& c) {
  const auto st = stage_geometry(c);
  const auto& last = st.back();
  return last.cout * last.out[0] * last.out[1] * last.out[2];
}

inline void NetworkConfig::validate() const {
  if (channels.empty()) throw Error(ErrorKind::Config, "network needs at least one input channel");
  for (std::size_t a = 0; a < channels.size(); ++a) {
    for (std::size_t b = a + 1; b < channels.size(); ++b) {
      if (channels[a] == channels[b]) throw Error(ErrorKind::Config, "duplicate input channel");
    }
  }
  if (levels == 0 || nlat == 0 || nlon == 0) throw Error(ErrorKind::Config, "network input dims must be positive");
  for (const auto f : conv_filters) {
    if (f == 0) throw Error(ErrorKind::Config, "conv filter counts must be positive");
  }
  for (const auto k : conv_kernel) {
    if (k == 0) throw Error(ErrorKind::Config, "conv kernel sizes must be positive");
  }
  for (const auto p : pool) {
    if (p == 0) throw Error(ErrorKind::Config, "pool sizes must be positive");
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw Error(ErrorKind::Config, "dropout_p must lie in [0, 1)");
  if (fc_width == 0 || output_dim == 0) throw Error(ErrorKind::Config, "fc_width and output_dim must be positive");
  if (precision != 32 && precision != 64) throw Error(ErrorKind::Config, "precision must be 32 or 64");
  (void)stage_geometry(*this);
}

/// Closed-form trainable parameter count.
inline std::size_t count_parameters(const NetworkConfig& c) {
  std::size_t n = 0;
  const std::size_t ktaps = c.conv_kernel[0] * c.conv_kernel[1] * c.conv_kernel[2];
  for (const auto& g : stage_geometry(c)) n += g.cout * g.cin * ktaps + g.cout;
  const std::size_t feat = flattened_features(c);
  n += c.fc_width * feat + c.fc_width;
  n += c.output_dim * c.fc_width + c.output_dim;
  return n;
}

inline std::vector<Channel> canonical_channel_order(std::vector<Channel> cs) {
  std::sort(cs.begin(), cs.end());
  return cs;
}

/// Same architecture with one input variable removed.
inline NetworkConfig ablate(const NetworkConfig& c, Channel drop) {
  auto it = std::find(c.channels.begin(), c.channels.end(), drop);
  if (it == c.channels.end()) {
    throw Error(ErrorKind::Config, std::string("cannot ablate channel ") + channel_name(drop) + ": not in config");
  }
  NetworkConfig out = c;
  out.channels.erase(out.channels.begin() + (it - c.channels.begin()));
  if (out.channels.empty()) throw Error(ErrorKind::Config, "ablation would leave no input channels");
  return out;
}

/// Inverse of ablate(); the channel list comes back in canonical T,Z,R,U,V order.
inline NetworkConfig restore_channel(const NetworkConfig& c, Channel add) {
  if (std::find(c.channels.begin(), c.channels.end(), add) != c.channels.end()) {
    throw Error(ErrorKind::Config, std::string("channel ") + channel_name(add) + " already present");
  }
  NetworkConfig out = c;
  out.channels.push_back(add);
  out.channels = canonical_channel_order(out.channels);
  return out;
}

template <class T>
class Network {
 public:
  Network() = default;

  /// Builds the layer stack with He-style initialization from config.seed.
  explicit Network(NetworkConfig config) : config_(std::move(config)) {
    config_.validate();
    stages_ = stage_geometry(config_);
    Rng rng(derive_seed(config_.seed, 0x1417));
    const auto& k = config_.conv_kernel;
    for (std::size_t s = 0; s < kStages; ++s) {
      const auto& g = stages_[s];
      const std::size_t fan_in = g.cin * k[0] * k[1] * k[2];
      add_param("conv" + std::to_string(s + 1) + ".weight", Shape{g.cout, g.cin, k[0], k[1], k[2]},
                std::sqrt(2.0 / static_cast<double>(fan_in)), rng);
      add_param("conv" + std::to_string(s + 1) + ".bias", Shape{g.cout}, 0.0, rng);
    }
    const std::size_t feat = flattened_features(config_);
    add_param("fc.weight", Shape{config_.fc_width, feat}, std::sqrt(1.0 / static_cast<double>(feat)), rng);
    add_param("fc.bias", Shape{config_.fc_width}, 0.0, rng);
    add_param("out.weight", Shape{config_.output_dim, config_.fc_width},
              std::sqrt(1.0 / static_cast<double>(config_.fc_width)), rng);
    add_param("out.bias", Shape{config_.output_dim}, 0.0, rng);
  }

  const NetworkConfig& config() const noexcept { return config_; }
  const std::vector<StageGeometry>& stages() const noexcept { return stages_; }
  std::vector<Parameter<T>>& parameters() noexcept { return params_; }
  const std::vector<Parameter<T>>& parameters() const noexcept { return params_; }

  Parameter<T>& parameter(const std::string& name) {
    for (auto& p : params_) {
      if (p.name == name) return p;
    }
    throw Error(ErrorKind::State, "no parameter named '" + name + "'");
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  /// Input tensor shape expected by forward().
  Shape input_shape() const { return Shape{config_.channels.size(), config_.levels, config_.nlat, config_.nlon}; }

  /// Records the forward pass on `tape`. Gradients of parameters flow into
  /// `sinks[k]` when given (one per parameter), else into each parameter's grad.
  Var<T> forward(Tape<T>& tape, const Tensor<T>& input, Mode mode, Rng& rng,
                 std::vector<Tensor<T>>* sinks = nullptr) {
    if (input.shape() != input_shape()) {
      throw ShapeError("Network::forward", 0,
                       "input " + shape_string(input.shape()) + " != expected " + shape_string(input_shape()));
    }
    std::vector<Var<T>> p;
    p.reserve(params_.size());
    for (std::size_t k = 0; k < params_.size(); ++k) {
      p.push_back(tape.leaf(params_[k].value, sinks ? &(*sinks)[k] : &params_[k].grad));
    }
    Var<T> x = tape.leaf(input, nullptr);
    for (std::size_t s = 0; s < kStages; ++s) {
      x = conv3d(x, p[2 * s], p[2 * s + 1], stages_[s].padding);
      x = relu(x);
      x = dropout(x, config_.dropout_p, mode, rng);
      x = maxpool3d(x, stages_[s].window);
    }
    x = flatten(x);
    x = linear(x, p[2 * kStages], p[2 * kStages + 1]);
    x = dropout(x, config_.dropout_p, mode, rng);
    x = linear(x, p[2 * kStages + 2], p[2 * kStages + 3]);
    return relu(x);
  }

  /// Eval-mode inference; deterministic.
  std::vector<T> predict(const Tensor<T>& input) const {
    Tape<T> tape;
    const Var<T> y = forward_eval(tape, input);
    const auto d = y.value().data();
    return std::vector<T>(d.begin(), d.end());
  }

 private:
  Var<T> forward_eval(Tape<T>& tape, const Tensor<T>& input) const {
    if (input.shape() != input_shape()) {
      throw ShapeError("Network::predict", 0,
                       "input " + shape_string(input.shape()) + " != expected " + shape_string(input_shape()));
    }
    std::vector<Var<T>> p;
    for (const auto& prm : params_) p.push_back(tape.leaf(prm.value, nullptr));
    Var<T> x = tape.leaf(input, nullptr);
    for (std::size_t s = 0; s < kStages; ++s) {
      x = maxpool3d(relu(conv3d(x, p[2 * s], p[2 * s + 1], stages_[s].padding)), stages_[s].window);
    }
    x = linear(flatten(x), p[2 * kStages], p[2 * kStages + 1]);
    x = linear(x, p[2 * kStages + 2], p[2 * kStages + 3]);
    return relu(x);
  }

  void add_param(std::string name, Shape shape, double stddev, Rng& rng) {
    Tensor<T> v(std::move(shape));
    if (stddev > 0.0) {
      for (auto& x : v.data()) x = static_cast<T>(stddev * rng.normal());
    }
    params_.emplace_back(std::move(name), std::move(v));
  }

  NetworkConfig config_;
  std::vector<StageGeometry> stages_;
  std::vector<Parameter<T>> params_;
};

/// Cube -> network input tensor, restricted to the config's channels.
template <class T>
Tensor<T> to_input(const MeteoCube& normalized, const NetworkConfig& config) {
  if (normalized.channels.size() != config.channels.size() ||
      !std::is_permutation(normalized.channels.begin(), normalized.channels.end(), config.channels.begin())) {
    throw Error(ErrorKind::Shape, "cube channels " + channels_string(normalized.channels) + " do not match network channels " +
                                      channels_string(config.channels));
  }
  const MeteoCube c = normalized.channels == config.channels ? normalized : normalized.select(config.channels);
  if (c.levels() != config.levels || c.nlat() != config.nlat || c.nlon() != config.nlon) {
    throw ShapeError("to_input", -1, "cube " + shape_string(c.data.shape()) + " does not match network input dims");
  }
  return c.data.template cast<T>();
}

}  // namespace fpp
