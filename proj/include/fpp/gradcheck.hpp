#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>

#include "fpp/autodiff.hpp"

namespace fpp {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
  return std::abs(analytic - numeric) / scale;
}

/// Compares backward() gradients against central differences for every
/// element of every parameter. `loss_fn` must build the loss on the given tape
/// from the current parameter values and be deterministic across calls.
inline GradCheckResult grad_check(std::span<Parameter<double>> params,
                                  const std::function<Var<double>(Tape<double>&)>& loss_fn, double eps = 1e-5) {
  for (auto& p : params) p.zero_grad();
  {
    Tape<double> tape;
    tape.backward(loss_fn(tape));
  }
  auto eval = [&] {
    Tape<double> tape;
    return loss_fn(tape).value()[0];
  };
  GradCheckResult r;
  for (auto& p : params) {
    auto v = p.value.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double saved = v[i];
      v[i] = saved + eps;
      const double up = eval();
      v[i] = saved - eps;
      const double down = eval();
      v[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = relative_error(p.grad[i], numeric);
      ++r.checked;
      if (err > r.max_rel_error || r.worst_parameter.empty()) {
        r.max_rel_error = err;
        r.worst_parameter = p.name;
        r.worst_index = i;
        r.analytic = p.grad[i];
        r.numeric = numeric;
      }
    }
  }
  return r;
}

}  // namespace fpp
