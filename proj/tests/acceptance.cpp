// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance [--skip-pipeline]
//
// Criteria 1, 10, 12 and 14 drive the fpp executable; the rest call the
// library directly against the oracles in oracles.hpp.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cli_harness.hpp"
#include "fpp/fpp.hpp"
#include "oracles.hpp"

using namespace fpp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

int failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void criterion(int id, const char* title, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "[exception: " << e.what() << "] ";
  }
  if (!o.pass) ++failures;
  std::printf("criterion %2d %s  %s: %s(%.1f s)\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.str().c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

fs::path work_dir(const std::string& name) {
  const auto p = fs::path(FPP_BINARY_DIR) / "acceptance_work" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nlohmann::json without_timestamp(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  j.erase("timestamp");
  return j;
}

// ---- library criteria ----------------------------------------------------------

void conv_oracle(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Shape s{1 + rng.below(3), 1 + rng.below(8), 1 + rng.below(8), 1 + rng.below(8)};
    std::array<std::size_t, 3> k{}, pad{};
    for (int a = 0; a < 3; ++a) {
      k[a] = 1 + rng.below(std::min<std::size_t>(s[a + 1], 5));
      pad[a] = rng.below(k[a] / 2 + 1);
    }
    const auto in = oracle::random_tensor(rng, s);
    const auto ker = oracle::random_tensor(rng, Shape{1 + rng.below(3), s[0], k[0], k[1], k[2]});
    const auto bias = oracle::random_tensor(rng, Shape{ker.dim(0)});
    Tape<double> tape;
    const auto y = conv3d(tape.constant(in), tape.constant(ker), tape.constant(bias), pad);
    const auto ref = oracle::conv3d_direct(in, ker, bias, pad);
    o.check(y.shape() == ref.shape(), "shape");
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(y.value()[i] - ref[i]));
  }
  const double t = seconds_since(t0);
  o.check(worst <= 1e-12, "max abs error > 1e-12");
  o.check(t < 30.0, "runtime >= 30 s");
  o.detail << "100 instances, max abs error " << worst << " (<= 1e-12), " << t << " s (< 30 s) ";
}

void pool_oracle(Outcome& o) {
  Rng rng(2025);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Shape s{1 + rng.below(3), 1 + rng.below(8), 1 + rng.below(8), 1 + rng.below(8)};
    Window3 win{};
    for (int a = 0; a < 3; ++a) win[a] = 1 + rng.below(std::min<std::size_t>(s[a + 1], 3));
    auto in = oracle::random_tensor(rng, s);
    if (trial % 2) {
      for (auto& v : in.data()) v = std::round(2.0 * v);  // ties
    }
    const auto ref = oracle::maxpool_scan(in, win);
    Parameter<double> x("x", in);
    Tape<double> tape;
    const auto y = maxpool3d(tape.parameter(x), win);
    if (!(y.value() == ref.out)) ++mismatches;
    const auto g = oracle::random_tensor(rng, ref.out.shape());
    tape.backward(linear(flatten(y), tape.constant(g.reshaped(Shape{1, g.size()})), tape.constant(Tensor<double>(Shape{1}))));
    Tensor<double> expect(s);
    for (std::size_t i = 0; i < ref.argmax.size(); ++i) expect[ref.argmax[i]] += g[i];
    if (!(x.grad == expect)) ++mismatches;
  }
  o.check(mismatches == 0, "value or gradient mismatch");
  o.detail << "100 instances, " << mismatches << " exact mismatches in values or routed gradients ";
}

void metric_oracles(Outcome& o) {
  Rng rng(2026);
  const IntensityBins bins;
  double worst = 0.0, worst_add = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    auto mask = oracle::random_mask(rng, 10, 14);
    const auto ob = oracle::random_series(rng, mask, Date(2003, 1, 1), 120);
    const auto pred = oracle::random_series(rng, mask, Date(2003, 1, 1), 120, "RP");
    auto err = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
    err(rmse_overall(pred, ob), oracle::rmse(pred, ob));
    const auto map = rmse_map(pred, ob);
    const auto ref_map = oracle::rmse_map(pred, ob);
    for (std::size_t k = 0; k < ref_map.size(); ++k) err(map.values[k], ref_map[k]);
    for (std::size_t d = 0; d < 5; ++d) {
      const auto a = pcc_day(pred[d], ob[d]), b = oracle::pcc(pred[d], ob[d]);
      o.check(a.has_value() == b.has_value(), "pcc presence");
      if (a && b) err(*a, *b);
    }
    const auto diffs = oracle::diffs_by_bin(pred, ob, bins.edges);
    const auto rb = rmse_by_intensity(pred, ob, bins);
    const auto bs = bias_stats_by_intensity(pred, ob, bins);
    for (std::size_t b = 0; b < bins.size(); ++b) {
      o.check(rb[b].count == diffs[b].size() && bs[b].count == diffs[b].size(), "bin counts");
      if (diffs[b].empty()) continue;
      double ss = 0.0, s = 0.0;
      for (const double x : diffs[b]) {
        ss += x * x;
        s += x;
      }
      err(*rb[b].rmse, std::sqrt(ss / static_cast<double>(diffs[b].size())));
      err(*bs[b].mean, s / static_cast<double>(diffs[b].size()));
      err(*bs[b].median, oracle::quantile7(diffs[b], 0.5));
      err(*bs[b].q25, oracle::quantile7(diffs[b], 0.25));
      err(*bs[b].q75, oracle::quantile7(diffs[b], 0.75));
      err(*bs[b].p10, oracle::quantile7(diffs[b], 0.1));
      err(*bs[b].p90, oracle::quantile7(diffs[b], 0.9));
    }
    // Random partition of the mask into regions.
    const std::size_t nreg = 2 + rng.below(4);
    std::vector<std::vector<std::uint8_t>> cells(nreg, std::vector<std::uint8_t>(mask->cells().size(), 0));
    for (std::size_t k = 0; k < cells[0].size(); ++k) {
      if (mask->at(k)) cells[rng.below(nreg)][k] = 1;
    }
    std::vector<RegionMask> regions;
    for (std::size_t r = 0; r < nreg; ++r) regions.push_back({"r" + std::to_string(r), ConusMask(10, 14, cells[r])});
    double sse = 0.0;
    for (const auto& sl : slice_region_season(pred, ob, regions)) {
      if (sl.season == "all") sse += sl.error.sse;
    }
    const double total = squared_error(align(pred, ob)).sse;
    worst_add = std::max(worst_add, std::abs(sse - total) / total);
  }
  o.check(worst <= 1e-12, "metric error > 1e-12");
  o.check(worst_add <= 1e-10, "additivity error > 1e-10");
  o.detail << "50 instances, max abs error " << worst << " (<= 1e-12), region additivity rel error " << worst_add
           << " (<= 1e-10) ";
}

void tuning_identities(Outcome& o) {
  Rng rng(2027);
  bool identity = true, monotone = true;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto rp = oracle::random_series(rng, oracle::random_mask(rng, 12, 16), Date(2000, 1, 1), 10, "RP");
    const auto same = tune(rp, 1.0);
    for (std::size_t d = 0; d < rp.size(); ++d) identity = identity && same[d].values == rp[d].values;
    const double A = 1.0 + 2.0 * rng.uniform();
    const auto tp = tune(rp, A);
    for (std::size_t d = 0; d < rp.size(); ++d) {
      const auto x = rp[d].masked_values(), y = tp[d].masked_values();
      const auto arg = static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
      worst = std::max(worst, std::abs(y[arg] - A * x[arg]));
      std::vector<std::size_t> order(x.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
      for (std::size_t k = 0; k < x.size(); ++k) {
        monotone = monotone && y[k] >= x[k];
        if (k + 1 < x.size()) monotone = monotone && y[order[k]] <= y[order[k + 1]];
      }
    }
  }
  o.check(identity, "A = 1 not bitwise identity");
  o.check(worst <= 1e-12, "TP at argmax differs from A max(RP)");
  o.check(monotone, "monotonicity or order");
  o.detail << "A = 1 bitwise identity " << (identity ? "yes" : "no") << ", max |TP(argmax) - A max| " << worst
           << " (<= 1e-12), monotone and order-preserving " << (monotone ? "yes" : "no") << " ";
}

void a_fitting(Outcome& o) {
  auto mask = std::make_shared<const ConusMask>(ConusMask::full(1, 4));
  const LatLonGrid g{0, 0, 1, 1, 1, 4};
  const PrecipSeries ob{{Date(2000, 1, 1), g, mask, {8, 0, 0, 0}}, {Date(2000, 1, 2), g, mask, {4, 4, 0, 0}}};
  const PrecipSeries rp{{Date(2000, 1, 1), g, mask, {4, 4, 0, 0}}, {Date(2000, 1, 2), g, mask, {2, 2, 2, 2}}};
  const double exact = fit_A(rp, ob).A;
  o.check(exact == 1.5, "ratio pair (2, 1) did not give exactly 1.5");
  Rng rng(2028);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    auto m = oracle::random_mask(rng, 8, 10);
    const auto o_s = oracle::random_series(rng, m, Date(2000, 1, 1), 20);
    const auto r_s = oracle::random_series(rng, m, Date(2000, 1, 1), 20, "RP");
    double mo = 0, mr = 0, ao = 0, ar = 0;
    for (std::size_t d = 0; d < 20; ++d) {
      const auto x = r_s[d].masked_values(), y = o_s[d].masked_values();
      mr += *std::max_element(x.begin(), x.end()) / 20.0;
      mo += *std::max_element(y.begin(), y.end()) / 20.0;
      ar += std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()) / 20.0;
      ao += std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size()) / 20.0;
    }
    worst = std::max(worst, std::abs(fit_A(r_s, o_s).A - 0.5 * (mo / mr + ao / ar)));
  }
  o.check(worst <= 1e-12, "randomized recomputation differs");
  o.detail << "ratio pair (2, 1) -> A = " << exact << ", 50 randomized fits max abs error " << worst << " (<= 1e-12) ";
}

void blend_scan(Outcome& o) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    Rng rng(derive_seed(2029, seed));
    auto mask = oracle::random_mask(rng, 20, 30, 0.9);
    const auto ob = oracle::random_series(rng, mask, Date(2002, 1, 1), 40);
    auto tp = ob, ref = ob;
    for (std::size_t d = 0; d < ob.size(); ++d) {
      for (std::size_t k = 0; k < ob[d].values.size(); ++k) {
        if (!mask->at(k)) continue;
        tp[d].values[k] += 2.0 * rng.normal();  // variance 4
        ref[d].values[k] += rng.normal();       // variance 1
      }
    }
    worst = std::max(worst, std::abs(scan_weight(tp, ref, ob, 0.01).w - 0.2));
  }
  o.check(worst <= 0.01 + 1e-12, "scanned weight more than one step from 0.2");
  o.detail << "12 seeds, max |w - 0.2| = " << worst << " (<= 0.01) ";
}

void ensemble_convexity(Outcome& o) {
  Rng rng(2030);
  std::size_t violations = 0;
  for (int draw = 0; draw < 200; ++draw) {
    auto mask = oracle::random_mask(rng, 6, 7);
    const auto ob = oracle::random_series(rng, mask, Date(2000, 1, 1), 5);
    const std::size_t k = 2 + rng.below(6);
    std::vector<PrecipSeries> members;
    double mean_mse = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
      members.push_back(oracle::random_series(rng, mask, Date(2000, 1, 1), 5, "RP"));
      mean_mse += std::pow(oracle::rmse(members.back(), ob), 2) / static_cast<double>(k);
    }
    if (std::pow(oracle::rmse(ensemble_mean(members), ob), 2) > mean_mse) ++violations;
  }
  o.check(violations == 0, "ensemble MSE above member mean");
  o.detail << "200 draws, " << violations << " violations ";
}

void regrid_conservation(Outcome& o) {
  Rng rng(2031);
  auto area = [](const LatLonGrid& g, std::size_t i) {
    const double r = std::numbers::pi / 180.0;
    return (std::sin(g.lat_edge(i + 1) * r) - std::sin(g.lat_edge(i) * r)) * g.dlon;
  };
  double worst = 0.0, worst_const = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const LatLonGrid fine{24.0, -126.0, 0.25, 0.25, 96, 240};
    const LatLonGrid coarse{24.0, -126.0, 0.6, 0.75, 40, 80};
    auto full = std::make_shared<const ConusMask>(ConusMask::full(96, 240));
    PrecipGrid src{Date(2000, 1, 1), fine, full, std::vector<double>(fine.cells())};
    for (auto& v : src.values) v = oracle::random_precip(rng);
    const auto dst = regrid(src, coarse);
    double in = 0.0, out = 0.0;
    for (std::size_t k = 0; k < src.values.size(); ++k) in += src.values[k] * area(fine, k / fine.nlon);
    for (std::size_t k = 0; k < dst.values.size(); ++k) out += dst.values[k] * area(coarse, k / coarse.nlon);
    worst = std::max(worst, std::abs(out - in) / in);
    const double c = 0.1 + 20.0 * rng.uniform();
    std::fill(src.values.begin(), src.values.end(), c);
    for (const double v : regrid(src, LatLonGrid::era_domain()).values) {
      if (v != kMissing) worst_const = std::max(worst_const, std::abs(v - c) / c);
    }
  }
  o.check(worst <= 1e-10, "integral not preserved");
  o.check(worst_const <= 1e-15, "constant field changed");
  o.detail << "integral rel error " << worst << " (<= 1e-10), constant field rel error " << worst_const << " (<= 1e-15) ";
}

void event_boundary(Outcome& o) {
  auto make = [](std::size_t heavy) {
    auto mask = std::make_shared<const ConusMask>(ConusMask::full(20, 20));
    std::vector<double> v(400, 3.0);
    for (std::size_t k = 0; k < heavy; ++k) v[k] = 25.0 + 1e-9;
    for (std::size_t k = heavy; k < heavy + 20; ++k) v[k] = 25.0;  // at threshold: not exceeding
    return PrecipSeries{{Date(2000, 6, 1), LatLonGrid{25, -120, 1, 1, 20, 20}, mask, v}};
  };
  const auto at150 = detect_events(make(150), 25.0, 150);
  const auto at151 = detect_events(make(151), 25.0, 150);
  o.check(at150.empty(), "150 cells produced an event");
  o.check(at151.size() == 1 && at151[0].exceed_count == 151, "151 cells did not produce an event");
  o.detail << "150 cells -> " << at150.size() << " events, 151 cells -> " << at151.size() << " events ";
}

void split_exactness(Outcome& o) {
  const auto s = split_years(year_range(1980, 2018));
  const bool ok = s.validation_years == std::vector<int>{1997, 2002, 2007, 2012, 2017} &&
                  s.test_years == std::vector<int>{1998, 2003, 2008, 2013, 2018} && s.training_years.size() == 29;
  o.check(ok, "split years");
  o.detail << "validation {";
  for (const int y : s.validation_years) o.detail << " " << y;
  o.detail << " } test {";
  for (const int y : s.test_years) o.detail << " " << y;
  o.detail << " } training " << s.training_years.size() << " years ";
}

bool pairing_at_all_leads() {
  const Date start(2000, 1, 1);
  const std::size_t n = 30;
  MeteoSeries met;
  for (std::size_t k = 0; k < n; ++k) met.push_back({start + static_cast<long>(k), {Channel::R}, Tensor<double>(Shape{1, 1, 1, 1})});
  auto mask = std::make_shared<const ConusMask>(ConusMask::full(1, 1));
  PrecipSeries pr;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k != 12) pr.push_back({start + static_cast<long>(k), LatLonGrid{}, mask, {0.0}});
  }
  for (int lead = 1; lead <= 5; ++lead) {
    const auto r = pair_samples(met, pr, lead);
    if (r.pairs.size() + r.skipped.size() != n) return false;
    // Targets exist for days 1..n except 12; inputs run 0..n-1.
    std::size_t expect = 0;
    for (std::size_t k = 0; k < n; ++k) expect += k + static_cast<std::size_t>(lead) <= n && k + static_cast<std::size_t>(lead) != 12;
    if (r.pairs.size() != expect) return false;
    for (const auto& p : r.pairs) {
      if (p.target_date - p.input_date != lead || met[p.meteo_index].date != p.input_date ||
          pr[p.precip_index].date != p.target_date) {
        return false;
      }
    }
  }
  return true;
}

// ---- pipeline criteria ------------------------------------------------------------

struct PipelineRun {
  int rc = -1;
  double seconds = 0.0;
  fs::path dir;
};

PipelineRun run_pipeline(const fs::path& dir, const std::string& extra = "") {
  harness::write_json(dir / "run.json", harness::pipeline_config(dir));
  const auto t0 = std::chrono::steady_clock::now();
  PipelineRun r;
  r.rc = harness::run_pipeline(dir / "run.json", extra);
  r.seconds = seconds_since(t0);
  r.dir = dir;
  return r;
}

double product_rmse(const nlohmann::json& report, const std::string& p) {
  return report.at("products").at(p).at("rmse").get<double>();
}

}  // namespace

int main(int argc, char** argv) {
  const bool skip_pipeline = argc > 1 && std::string(argv[1]) == "--skip-pipeline";

  criterion(1, "gradient correctness (miniature network, 64-bit)", [](Outcome& o) {
    const auto dir = work_dir("gradcheck");
    auto j = nlohmann::json::parse(harness::slurp(fs::path(FPP_SOURCE_DIR) / "configs/gradcheck_mini.json"));
    j["paths"]["out"] = (dir / "out").string();
    harness::write_json(dir / "gc.json", j);
    const auto t0 = std::chrono::steady_clock::now();
    const int rc = harness::run("gradcheck --config '" + (dir / "gc.json").string() + "'");
    const double t = seconds_since(t0);
    o.check(rc == 0, "exit code " + std::to_string(rc));
    const auto r = nlohmann::json::parse(harness::slurp(dir / "out/gradcheck.json"));
    const double err = r.at("max_rel_error").get<double>();
    o.check(err < 1e-4, "max relative error >= 1e-4");
    o.check(t < 60.0, "runtime >= 60 s");
    o.detail << r.at("checked").get<std::size_t>() << " gradients, max relative error " << err << " (< 1e-4), " << t
             << " s (< 60 s) ";
  });
  criterion(2, "convolution oracle", conv_oracle);
  criterion(3, "pooling oracle", pool_oracle);
  criterion(4, "metric oracles and additivity", metric_oracles);
  criterion(5, "tuning identities", tuning_identities);
  criterion(6, "augmentation-factor fitting", a_fitting);
  criterion(7, "blend-weight scan", blend_scan);
  criterion(8, "ensemble convexity", ensemble_convexity);
  criterion(9, "regrid conservation", regrid_conservation);

  PipelineRun first;
  if (!skip_pipeline) first = run_pipeline(work_dir("pipeline"));
  criterion(10, "synthetic end-to-end skill", [&](Outcome& o) {
    o.check(!skip_pipeline, "skipped");
    if (skip_pipeline) return;
    o.check(first.rc == 0, "pipeline exit code " + std::to_string(first.rc));
    const auto report = nlohmann::json::parse(harness::slurp(first.dir / "out/report_test.json"));
    const double rp = product_rmse(report, "RP"), clim = product_rmse(report, "CLIM"), wp = product_rmse(report, "WP");
    const auto days = [&](const char* f) { return read_precip_series(first.dir / "out" / f).size(); };
    const auto stats_notes = nlohmann::json::parse(harness::slurp(first.dir / "out/stats.manifest.json"))["notes"];
    o.check(days("rp_val.fppg") == 50 && days("rp_test.fppg") == 50, "partition sizes");
    o.check(stats_notes.value("training_samples", 0) == 400, "training sample count");
    o.check(rp <= 0.5 * clim, "RP RMSE above half of climatology");
    o.check(wp <= rp, "WP RMSE above RP RMSE");
    o.check(first.seconds < 600.0, "runtime >= 10 min");
    o.detail << "test RMSE RP " << rp << ", CLIM " << clim << ", ratio " << rp / clim << " (<= 0.5); WP " << wp
             << " <= RP; E24 " << product_rmse(report, "E24") << "; " << stats_notes.value("training_samples", 0)
             << "/50/50 days; pipeline " << first.seconds << " s on "
             << (std::getenv("FPP_THREADS") ? std::getenv("FPP_THREADS") : "1") << " thread(s) (< 600 s) ";
  });

  criterion(11, "event detection boundary", event_boundary);

  criterion(12, "determinism of the full pipeline", [&](Outcome& o) {
    o.check(!skip_pipeline && first.rc == 0, "first run unavailable");
    if (skip_pipeline || first.rc != 0) return;
    const auto before = harness::snapshot(first.dir);
    const auto again = run_pipeline(work_dir("pipeline"));
    o.check(again.rc == 0, "second run exit code " + std::to_string(again.rc));
    const auto after = harness::snapshot(first.dir);
    o.check(before.size() == after.size(), "different file sets");
    std::size_t identical = 0, manifests = 0;
    for (const auto& [name, bytes] : before) {
      const auto it = after.find(name);
      if (it == after.end()) {
        o.check(false, name + " missing");
        continue;
      }
      if (name.ends_with(".manifest.json")) {
        ++manifests;
        o.check(without_timestamp(bytes) == without_timestamp(it->second), name + " differs");
      } else {
        ++identical;
        o.check(bytes == it->second, name + " differs");
      }
    }
    o.detail << identical << " checkpoint/prediction/report files bitwise identical, " << manifests
             << " manifests identical apart from timestamps ";
  });

  criterion(13, "split exactness", split_exactness);

  criterion(14, "lead generality", [&](Outcome& o) {
    const bool pairing = pairing_at_all_leads();
    o.check(pairing, "pair_samples index arithmetic");
    o.detail << "pair_samples leads 1-5 " << (pairing ? "ok" : "wrong") << "; ";
    o.check(!skip_pipeline && first.rc == 0, "lead-1 run unavailable");
    if (skip_pipeline || first.rc != 0) return;
    const auto dir = work_dir("lead3");
    const auto r = run_pipeline(dir, "--lead 3");
    o.check(r.rc == 0, "lead-3 pipeline exit code " + std::to_string(r.rc));
    const auto h1 = read_checkpoint_header(first.dir / "out/model.fppc");
    const auto h3 = read_checkpoint_header(dir / "out/model.fppc");
    o.check(h1.config == h3.config, "architecture changed");
    o.check(h3.metadata.value("lead", 0) == 3, "checkpoint lead");
    const auto report = nlohmann::json::parse(harness::slurp(dir / "out/report_test.json"));
    o.detail << "lead-3 pipeline rc " << r.rc << ", same architecture, test RMSE RP " << product_rmse(report, "RP")
             << " vs CLIM " << product_rmse(report, "CLIM") << " ";
  });

  std::printf("%s: %d of 14 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
