#pragma once

// Minibatch training with per-sample tapes. Each sample of a batch gets its
// own dropout stream and gradient buffers; buffers are summed in sample order
// so the result does not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpp/autodiff.hpp"
#include "fpp/error.hpp"
#include "fpp/grid.hpp"
#include "fpp/network.hpp"
#include "fpp/normalize.hpp"
#include "fpp/optim.hpp"
#include "fpp/rng.hpp"
#include "fpp/split.hpp"

namespace fpp {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 8;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"epochs", c.epochs}, {"batch_size", c.batch_size}, {"optimizer", c.optimizer}, {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::size_t>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
  if (j.contains("optimizer")) c.optimizer = j.at("optimizer").get<OptimizerConfig>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (c.batch_size == 0) throw Error(ErrorKind::Config, "batch_size must be positive");
}

/// One prepared (input, masked target) pair.
template <class T>
struct Sample {
  Tensor<T> input;
  Tensor<T> target;
  Date target_date;
};

/// Normalizes each paired cube and extracts the masked target vector.
template <class T>
std::vector<Sample<T>> make_samples(const MeteoSeries& meteo, const PrecipSeries& precip,
                                    const std::vector<SamplePair>& pairs, const NormalizationStats& stats,
                                    const NetworkConfig& config) {
  std::vector<Sample<T>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto& pg = precip.at(p.precip_index);
    const auto masked = pg.masked_values();
    if (masked.size() != config.output_dim) {
      throw Error(ErrorKind::Config, "target has " + std::to_string(masked.size()) + " masked cells but output_dim is " +
                                         std::to_string(config.output_dim));
    }
    Tensor<T> target(Shape{masked.size()});
    for (std::size_t k = 0; k < masked.size(); ++k) target[k] = static_cast<T>(masked[k]);
    out.push_back({to_input<T>(normalize(meteo.at(p.meteo_index), stats), config), std::move(target), p.target_date});
  }
  return out;
}

struct EpochRecord {
  std::size_t epoch = 0;
  double train_mse = 0.0;  // running mean of train-mode batch losses
  double val_mse = 0.0;    // eval mode
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 = initial parameters
  double best_val_mse = std::numeric_limits<double>::infinity();
  double initial_train_mse = 0.0;  // eval mode, before the first update
  double final_train_mse = 0.0;    // eval mode, after restoring the best parameters
  bool aborted = false;
  std::string abort_reason;
};

inline void to_json(nlohmann::json& j, const TrainResult& r) {
  auto hist = nlohmann::json::array();
  for (const auto& e : r.history) hist.push_back({{"epoch", e.epoch}, {"train_mse", e.train_mse}, {"val_mse", e.val_mse}});
  j = nlohmann::json{{"history", hist},
                     {"best_epoch", r.best_epoch},
                     {"best_val_mse", r.best_val_mse},
                     {"initial_train_mse", r.initial_train_mse},
                     {"final_train_mse", r.final_train_mse},
                     {"aborted", r.aborted}};
  if (r.aborted) j["abort_reason"] = r.abort_reason;
}

namespace detail {

/// Runs f(i) for i in [0, n) on up to `threads` workers (static interleaved split).
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& f) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) f(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <class T>
double sample_mse(const std::vector<T>& pred, const Tensor<T>& target) {
  double s = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = static_cast<double>(pred[k]) - static_cast<double>(target[k]);
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

}  // namespace detail

/// Eval-mode MSE averaged over samples.
template <class T>
double evaluate_mse(const Network<T>& net, const std::vector<Sample<T>>& samples, std::size_t threads = 1) {
  if (samples.empty()) throw Error(ErrorKind::Domain, "evaluate_mse: no samples");
  std::vector<double> per(samples.size());
  detail::parallel_for(samples.size(), threads,
                       [&](std::size_t i) { per[i] = detail::sample_mse(net.predict(samples[i].input), samples[i].target); });
  double s = 0.0;
  for (const double v : per) s += v;
  return s / static_cast<double>(samples.size());
}

/// Trains in place. The parameters left in `net` are those of the epoch with
/// the lowest validation MSE (or the initial ones if no epoch improved).
template <class T>
TrainResult train(Network<T>& net, const std::vector<Sample<T>>& train_set, const std::vector<Sample<T>>& val_set,
                  const TrainConfig& config) {
  if (train_set.empty() || val_set.empty()) throw Error(ErrorKind::Domain, "train: training and validation sets must be nonempty");
  if (config.batch_size == 0) throw Error(ErrorKind::Config, "batch_size must be positive");
  auto& params = net.parameters();
  Optimizer<T> opt(config.optimizer);
  TrainResult result;

  auto snapshot = [&] {
    std::vector<Tensor<T>> s;
    for (const auto& p : params) s.push_back(p.value);
    return s;
  };
  auto restore = [&](const std::vector<Tensor<T>>& s) {
    for (std::size_t k = 0; k < params.size(); ++k) params[k].value = s[k];
  };

  result.initial_train_mse = evaluate_mse(net, train_set, config.threads);
  result.best_val_mse = evaluate_mse(net, val_set, config.threads);
  auto best = snapshot();

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  std::vector<std::vector<Tensor<T>>> sinks;
  std::vector<double> losses;

  for (std::size_t epoch = 1; epoch <= config.epochs && !result.aborted; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed(config.seed, 0x5EED, epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t bs = std::min(config.batch_size, n - start);
      sinks.resize(bs);
      losses.assign(bs, 0.0);
      detail::parallel_for(bs, config.threads, [&](std::size_t b) {
        auto& sk = sinks[b];
        sk.clear();
        for (const auto& p : params) sk.emplace_back(p.value.shape());
        const auto& s = train_set[order[start + b]];
        Rng rng(derive_seed(config.seed, epoch, start + b));
        Tape<T> tape;
        const Var<T> y = net.forward(tape, s.input, Mode::Train, rng, &sk);
        const Var<T> loss = mse_loss(y, tape.constant(s.target));
        losses[b] = static_cast<double>(loss.value()[0]);
        tape.backward(loss);
      });
      double batch_loss = 0.0;
      for (const double l : losses) batch_loss += l;
      if (!std::isfinite(batch_loss)) {
        result.aborted = true;
        result.abort_reason = "non-finite training loss in epoch " + std::to_string(epoch);
        break;
      }
      loss_sum += batch_loss;
      const T scale = static_cast<T>(1.0 / static_cast<double>(bs));
      for (std::size_t k = 0; k < params.size(); ++k) {
        auto g = params[k].grad.data();
        std::fill(g.begin(), g.end(), T{0});
        for (std::size_t b = 0; b < bs; ++b) {
          const auto src = sinks[b][k].data();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += src[i];
        }
        for (auto& v : g) v *= scale;
      }
      try {
        opt.step(params);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Numerical) throw;
        result.aborted = true;
        result.abort_reason = e.what();
        break;
      }
    }
    if (result.aborted) break;

    EpochRecord rec{epoch, loss_sum / static_cast<double>(n), evaluate_mse(net, val_set, config.threads)};
    if (!std::isfinite(rec.val_mse)) {
      result.aborted = true;
      result.abort_reason = "non-finite validation loss in epoch " + std::to_string(epoch);
      break;
    }
    result.history.push_back(rec);
    if (rec.val_mse < result.best_val_mse) {
      result.best_val_mse = rec.val_mse;
      result.best_epoch = epoch;
      best = snapshot();
    }
  }
  restore(best);
  net.zero_grad();
  result.final_train_mse = evaluate_mse(net, train_set, config.threads);
  return result;
}

}  // namespace fpp
