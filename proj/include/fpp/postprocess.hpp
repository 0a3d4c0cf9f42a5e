#pragma once

// Postprocessing of raw network predictions:
//   TP_j[i] = [1 + (A - 1) RP_j[i]^3 / max(RP_j)^3] RP_j[i]
//   A = 0.5 (<max OB_j> / <max RP_j> + <mean OB_j> / <mean RP_j>)
//   WP_j = w TP_j + (1 - w) REF_j
// max and mean run over the masked cells of one day; <.> averages over days.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpp/error.hpp"
#include "fpp/evaluation.hpp"
#include "fpp/grid.hpp"

namespace fpp {

/// Tunes one day. Role and product tags are kept. A day whose masked maximum
/// is 0 passes through unchanged.
inline PrecipGrid tune_day(const PrecipGrid& rp, double A) {
  if (!std::isfinite(A) || A <= 0.0) throw Error(ErrorKind::Domain, "augmentation factor must be finite and positive");
  double m = 0.0;
  for (std::size_t k = 0; k < rp.values.size(); ++k) {
    if (!rp.mask->at(k)) continue;
    const double v = rp.values[k];
    if (!(v >= 0.0)) {
      throw Error(ErrorKind::Domain, "tune_day: negative or non-finite prediction on " + rp.date.iso());
    }
    m = std::max(m, v);
  }
  PrecipGrid tp = rp;
  if (m == 0.0) return tp;
  const double m3 = m * m * m;
  for (std::size_t k = 0; k < tp.values.size(); ++k) {
    if (!tp.mask->at(k)) continue;
    const double x = rp.values[k];
    tp.values[k] = (1.0 + (A - 1.0) * (x * x * x) / m3) * x;
  }
  return tp;
}

inline PrecipSeries tune(const PrecipSeries& rp, double A) {
  PrecipSeries out;
  out.reserve(rp.size());
  for (const auto& g : rp) out.push_back(tune_day(g, A));
  return out;
}

struct AugmentationFit {
  double A = 1.0;
  double mean_max_ob = 0.0, mean_max_rp = 0.0;
  double mean_mean_ob = 0.0, mean_mean_rp = 0.0;
  std::size_t days = 0;
  bool below_one = false;  // A < 1: predictions were not too weak on average
};

inline AugmentationFit fit_A(const PrecipSeries& rp, const PrecipSeries& ob) {
  const auto a = align(rp, ob, "fit_A");
  AugmentationFit f;
  f.days = a.size();
  for (std::size_t m = 0; m < a.size(); ++m) {
    f.mean_max_rp += a.pred[m]->masked_max();
    f.mean_mean_rp += a.pred[m]->masked_mean();
    f.mean_max_ob += a.ob[m]->masked_max();
    f.mean_mean_ob += a.ob[m]->masked_mean();
  }
  const double n = static_cast<double>(f.days);
  f.mean_max_rp /= n;
  f.mean_mean_rp /= n;
  f.mean_max_ob /= n;
  f.mean_mean_ob /= n;
  if (!(f.mean_max_rp > 0.0) || !(f.mean_mean_rp > 0.0)) {
    throw Error(ErrorKind::Numerical, "fit_A: predictions are zero on average, the factor is undefined");
  }
  f.A = 0.5 * (f.mean_max_ob / f.mean_max_rp + f.mean_mean_ob / f.mean_mean_rp);
  f.below_one = f.A < 1.0;
  return f;
}

/// w * tp + (1 - w) * ref over masked cells; the result carries tp's role and `product`.
inline PrecipGrid blend_day(const PrecipGrid& tp, const PrecipGrid& ref, double w, const std::string& product = "WP") {
  if (!(w >= 0.0 && w <= 1.0)) throw Error(ErrorKind::Domain, "blend weight must lie in [0, 1]");
  if (tp.date != ref.date) throw Error(ErrorKind::Domain, "blend_day: dates differ (" + tp.date.iso() + " vs " + ref.date.iso() + ")");
  require_same_mask(tp, ref, "blend_day");
  PrecipGrid wp = tp;
  wp.product = product;
  for (std::size_t k = 0; k < wp.values.size(); ++k) {
    if (wp.mask->at(k)) wp.values[k] = w * tp.values[k] + (1.0 - w) * ref.values[k];
  }
  return wp;
}

/// Blends over the dates shared by both series, in tp order.
inline PrecipSeries blend(const PrecipSeries& tp, const PrecipSeries& ref, double w, const std::string& product = "WP") {
  const auto a = align(tp, ref, "blend");
  PrecipSeries out;
  for (std::size_t m = 0; m < a.size(); ++m) out.push_back(blend_day(*a.pred[m], *a.ob[m], w, product));
  return out;
}

struct WeightScan {
  double w = 0.5;
  double rmse = 0.0;
  std::vector<double> weights;
  std::vector<double> curve;  // overall RMSE at each weight
};

/// Overall RMSE of the blend at w = k * step, k = 0..round(1/step). The
/// smallest weight wins ties.
inline WeightScan scan_weight(const PrecipSeries& tp, const PrecipSeries& ref, const PrecipSeries& ob, double step = 0.01) {
  if (!(step > 0.0 && step <= 1.0)) throw Error(ErrorKind::Config, "scan step must lie in (0, 1]");
  const auto tr = align(tp, ref, "scan_weight");
  PrecipSeries tp_shared, ref_shared;
  for (std::size_t m = 0; m < tr.size(); ++m) {
    tp_shared.push_back(*tr.pred[m]);
    ref_shared.push_back(*tr.ob[m]);
  }
  const auto a = align(tp_shared, ob, "scan_weight");
  std::map<Date, const PrecipGrid*> ref_by_date;
  for (const auto& g : ref_shared) ref_by_date.emplace(g.date, &g);
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / step));
  WeightScan s;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double w = std::min(1.0, static_cast<double>(k) * step);
    double sse = 0.0;
    std::size_t count = 0;
    for (std::size_t m = 0; m < a.size(); ++m) {
      const auto& t = a.pred[m]->values;
      const auto& r = ref_by_date.at(a.pred[m]->date)->values;
      const auto& o = a.ob[m]->values;
      const auto& mask = *a.ob[m]->mask;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (!mask.at(i)) continue;
        const double d = (w * t[i] + (1.0 - w) * r[i]) - o[i];
        sse += d * d;
        ++count;
      }
    }
    s.weights.push_back(w);
    s.curve.push_back(std::sqrt(sse / static_cast<double>(count)));
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < s.curve.size(); ++k) {
    if (s.curve[k] < s.curve[best]) best = k;
  }
  s.w = s.weights[best];
  s.rmse = s.curve[best];
  return s;
}

/// Elementwise mean of K aligned members (same dates in the same order, same masks).
inline PrecipSeries ensemble_mean(const std::vector<PrecipSeries>& members, const std::string& product = "ENS") {
  if (members.empty()) throw Error(ErrorKind::Domain, "ensemble_mean: no members");
  const auto& first = members.front();
  for (const auto& s : members) {
    if (s.size() != first.size()) throw Error(ErrorKind::Domain, "ensemble_mean: members have different day counts");
    for (std::size_t m = 0; m < s.size(); ++m) {
      if (s[m].date != first[m].date) throw Error(ErrorKind::Domain, "ensemble_mean: member dates are misaligned");
      require_same_mask(s[m], first[m], "ensemble_mean");
    }
  }
  PrecipSeries out = first;
  const double k = static_cast<double>(members.size());
  for (std::size_t m = 0; m < out.size(); ++m) {
    out[m].product = product;
    auto& v = out[m].values;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!out[m].mask->at(i)) continue;
      double sum = 0.0;
      for (const auto& s : members) sum += s[m].values[i];
      v[i] = sum / k;
    }
  }
  return out;
}

/// Fitted postprocessing parameters, written as a JSON sidecar.
struct PostprocessParams {
  std::optional<AugmentationFit> augmentation;
  std::optional<WeightScan> weight;
  nlohmann::json provenance = nlohmann::json::object();
};

inline nlohmann::json to_json(const PostprocessParams& p) {
  nlohmann::json j{{"provenance", p.provenance}};
  if (p.augmentation) {
    const auto& f = *p.augmentation;
    j["A"] = f.A;
    j["A_fit"] = {{"days", f.days},
                  {"mean_max_ob", f.mean_max_ob},
                  {"mean_max_rp", f.mean_max_rp},
                  {"mean_mean_ob", f.mean_mean_ob},
                  {"mean_mean_rp", f.mean_mean_rp},
                  {"below_one", f.below_one}};
  }
  if (p.weight) {
    j["w"] = p.weight->w;
    j["w_scan"] = {{"weights", p.weight->weights}, {"rmse", p.weight->curve}, {"best_rmse", p.weight->rmse}};
  }
  return j;
}

}  // namespace fpp
