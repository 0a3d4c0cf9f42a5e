#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpp/error.hpp"
#include "fpp/tensor.hpp"

namespace fpp {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline void to_json(nlohmann::json& j, const OptimizerConfig& c) {
  j = nlohmann::json{{"kind", c.kind == OptimizerKind::Sgd ? "sgd" : "adam"},
                     {"lr", c.lr},
                     {"beta1", c.beta1},
                     {"beta2", c.beta2},
                     {"eps", c.eps}};
}

inline void from_json(const nlohmann::json& j, OptimizerConfig& c) {
  c = OptimizerConfig{};
  if (j.contains("kind")) {
    const auto k = j.at("kind").get<std::string>();
    if (k == "sgd") {
      c.kind = OptimizerKind::Sgd;
    } else if (k == "adam") {
      c.kind = OptimizerKind::Adam;
    } else {
      throw Error(ErrorKind::Config, "unknown optimizer kind '" + k + "'");
    }
  }
  if (j.contains("lr")) c.lr = j.at("lr").get<double>();
  if (j.contains("beta1")) c.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) c.beta2 = j.at("beta2").get<double>();
  if (j.contains("eps")) c.eps = j.at("eps").get<double>();
}

/// Plain SGD or Adam. Moment buffers are created on the first step and keyed
/// by parameter position, so the parameter list must keep a stable order.
template <class T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  const OptimizerConfig& config() const noexcept { return config_; }
  long steps() const noexcept { return t_; }

  void step(std::span<Parameter<T>> params) {
    for (const auto& p : params) {
      for (const T g : p.grad.data()) {
        if (!std::isfinite(static_cast<double>(g))) {
          throw Error(ErrorKind::Numerical, "non-finite gradient in parameter '" + p.name + "'");
        }
      }
    }
    ++t_;
    if (config_.kind == OptimizerKind::Sgd) {
      const T lr = static_cast<T>(config_.lr);
      for (auto& p : params) {
        auto v = p.value.data();
        const auto g = p.grad.data();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
      }
      return;
    }
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.value.size(), T{0});
        v_.emplace_back(p.value.size(), T{0});
      }
    }
    if (m_.size() != params.size()) throw Error(ErrorKind::State, "optimizer: parameter list changed between steps");
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const T b1 = static_cast<T>(config_.beta1), b2 = static_cast<T>(config_.beta2);
    const T step = static_cast<T>(config_.lr / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / bc2);
    const T eps = static_cast<T>(config_.eps);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto v = params[k].value.data();
      const auto g = params[k].grad.data();
      auto& m1 = m_[k];
      auto& m2 = v_[k];
      for (std::size_t i = 0; i < v.size(); ++i) {
        m1[i] = b1 * m1[i] + (T{1} - b1) * g[i];
        m2[i] = b2 * m2[i] + (T{1} - b2) * g[i] * g[i];
        v[i] -= step * m1[i] / (std::sqrt(m2[i] * inv_bc2) + eps);
      }
    }
  }

 private:
  OptimizerConfig config_;
  long t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

}  // namespace fpp
