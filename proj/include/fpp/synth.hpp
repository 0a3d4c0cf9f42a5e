#pragma once

// Desk-scale stand-in for reanalysis + gauge data. Meteorology is a sum of a
// few fixed smooth spatial modes with AR(1) daily amplitudes; precipitation is
// a known rectified functional of humidity and low-level convergence:
//
//   f     = a * (column_mean(R) - r0) + b * (-div(U, V) at the mid level)
//   clean = smooth3x3(max(f, 0))
//   OB    = max(clean + uniform(-noise, noise), 0)    on masked cells
//   REF   = max(clean + ref_noise * normal, 0)        (noisy reference forecast)
//
// The accumulation ending 12Z of day d is driven by the 12Z frame of day d-1,
// so meteorology covers [start, start+ndays) and precipitation [start+1, start+ndays].

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpp/date.hpp"
#include "fpp/error.hpp"
#include "fpp/grid.hpp"
#include "fpp/rng.hpp"

namespace fpp {

struct SynthConfig {
  LatLonGrid grid{24.0, -126.0, 1.5, 2.5, 16, 24};
  std::size_t levels = 10;
  std::size_t ndays = 500;
  Date start{2000, 1, 1};
  std::uint64_t seed = 1;
  std::size_t modes = 6;
  double persistence = 0.6;
  double a = 0.8;    // mm/day per percent of column-mean humidity
  double r0 = 52.0;  // humidity threshold, percent
  double b = 2.0;    // mm/day per unit convergence (per-cell index units)
  double noise = 0.5;
  double ref_noise = 2.0;
};

inline void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = nlohmann::json{{"grid", c.grid}, {"levels", c.levels}, {"ndays", c.ndays}, {"start", c.start.iso()},
                     {"seed", c.seed}, {"modes", c.modes}, {"persistence", c.persistence}, {"a", c.a},
                     {"r0", c.r0}, {"b", c.b}, {"noise", c.noise}, {"ref_noise", c.ref_noise}};
}

inline void from_json(const nlohmann::json& j, SynthConfig& c) {
  c = SynthConfig{};
  if (j.contains("grid")) c.grid = j.at("grid").get<LatLonGrid>();
  if (j.contains("levels")) c.levels = j.at("levels").get<std::size_t>();
  if (j.contains("ndays")) c.ndays = j.at("ndays").get<std::size_t>();
  if (j.contains("start")) c.start = Date::parse(j.at("start").get<std::string>());
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("modes")) c.modes = j.at("modes").get<std::size_t>();
  if (j.contains("persistence")) c.persistence = j.at("persistence").get<double>();
  if (j.contains("a")) c.a = j.at("a").get<double>();
  if (j.contains("r0")) c.r0 = j.at("r0").get<double>();
  if (j.contains("b")) c.b = j.at("b").get<double>();
  if (j.contains("noise")) c.noise = j.at("noise").get<double>();
  if (j.contains("ref_noise")) c.ref_noise = j.at("ref_noise").get<double>();
}

/// Ground-truth functional parameters, emitted so tests can recompute it.
struct SynthParams {
  double a = 0.0, r0 = 0.0, b = 0.0;
  std::size_t mid_level = 0;
  double noise = 0.0;
  double ref_noise = 0.0;
};

inline void to_json(nlohmann::json& j, const SynthParams& p) {
  j = nlohmann::json{{"a", p.a},
                     {"r0", p.r0},
                     {"b", p.b},
                     {"mid_level", p.mid_level},
                     {"noise", p.noise},
                     {"ref_noise", p.ref_noise},
                     {"smoothing", "3x3 binomial [1,2,1]x[1,2,1]/16, renormalized at edges"},
                     {"divergence", "centered differences in per-cell index units, one-sided at edges"}};
}

struct SynthData {
  LatLonGrid grid;
  std::shared_ptr<const ConusMask> mask;
  MeteoSeries meteo;
  PrecipSeries observed;
  PrecipSeries reference;
  PrecipSeries clean;
  SynthParams params;
};

namespace detail {

// 2D derivative along one axis with centered differences (one-sided at edges).
inline double diff_axis(const double* f, std::size_t i, std::size_t j, std::size_t nlat, std::size_t nlon, bool along_lon) {
  const std::size_t n = along_lon ? nlon : nlat;
  const std::size_t k = along_lon ? j : i;
  auto at = [&](std::size_t kk) { return along_lon ? f[i * nlon + kk] : f[kk * nlon + j]; };
  if (n == 1) return 0.0;
  if (k == 0) return at(1) - at(0);
  if (k == n - 1) return at(n - 1) - at(n - 2);
  return 0.5 * (at(k + 1) - at(k - 1));
}

inline std::vector<double> smooth_binomial(const std::vector<double>& f, std::size_t nlat, std::size_t nlon) {
  static constexpr std::array<double, 3> w{1.0, 2.0, 1.0};
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < nlat; ++i) {
    for (std::size_t j = 0; j < nlon; ++j) {
      double s = 0.0, ws = 0.0;
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(i) + di, jj = static_cast<std::ptrdiff_t>(j) + dj;
          if (ii < 0 || jj < 0 || ii >= static_cast<std::ptrdiff_t>(nlat) || jj >= static_cast<std::ptrdiff_t>(nlon)) continue;
          const double ww = w[di + 1] * w[dj + 1];
          s += ww * f[static_cast<std::size_t>(ii) * nlon + static_cast<std::size_t>(jj)];
          ws += ww;
        }
      }
      out[i * nlon + j] = s / ws;
    }
  }
  return out;
}

}  // namespace detail

/// Noise-free precipitation (full grid, mm/day) implied by a cube holding at
/// least the R, U and V channels.
inline std::vector<double> synth_clean_precip(const MeteoCube& cube, const SynthParams& p) {
  const auto ri = cube.channel_index(Channel::R), ui = cube.channel_index(Channel::U), vi = cube.channel_index(Channel::V);
  if (!ri || !ui || !vi) throw Error(ErrorKind::Shape, "synthetic functional needs R, U and V channels");
  const std::size_t L = cube.levels(), H = cube.nlat(), W = cube.nlon(), plane = H * W;
  if (p.mid_level >= L) throw Error(ErrorKind::Domain, "mid level outside the cube");
  const double* base = cube.data.data().data();
  const double* u = base + (*ui * L + p.mid_level) * plane;
  const double* v = base + (*vi * L + p.mid_level) * plane;
  std::vector<double> f(plane);
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      double col = 0.0;
      for (std::size_t l = 0; l < L; ++l) col += base[(*ri * L + l) * plane + i * W + j];
      col /= static_cast<double>(L);
      const double div = detail::diff_axis(u, i, j, H, W, true) + detail::diff_axis(v, i, j, H, W, false);
      f[i * W + j] = std::max(p.a * (col - p.r0) - p.b * div, 0.0);
    }
  }
  return detail::smooth_binomial(f, H, W);
}

/// Elliptical stand-in for the CONUS footprint.
inline ConusMask synth_mask(const LatLonGrid& g) {
  std::vector<std::uint8_t> cells(g.cells());
  const double ci = 0.5 * static_cast<double>(g.nlat) - 0.5, cj = 0.5 * static_cast<double>(g.nlon) - 0.5;
  const double ri = 0.5 * static_cast<double>(g.nlat), rj = 0.52 * static_cast<double>(g.nlon);
  for (std::size_t i = 0; i < g.nlat; ++i) {
    for (std::size_t j = 0; j < g.nlon; ++j) {
      const double y = (static_cast<double>(i) - ci) / ri, x = (static_cast<double>(j) - cj) / rj;
      cells[i * g.nlon + j] = x * x + y * y <= 1.0;
    }
  }
  return ConusMask(g.nlat, g.nlon, std::move(cells));
}

inline SynthData synth_generate(const SynthConfig& cfg) {
  cfg.grid.validate();
  if (cfg.levels < 1 || cfg.ndays < 1 || cfg.modes < 1) throw Error(ErrorKind::Config, "synth: levels, ndays, modes must be positive");
  const std::size_t H = cfg.grid.nlat, W = cfg.grid.nlon, L = cfg.levels, plane = H * W, K = cfg.modes;
  Rng rng(derive_seed(cfg.seed, 0x5e7));

  // Fixed spatial modes per channel, unit amplitude.
  std::array<std::vector<std::vector<double>>, 5> modes;
  for (auto& family : modes) {
    for (std::size_t k = 0; k < K; ++k) {
      int kx = 0, ky = 0;
      while (kx == 0 && ky == 0) {
        kx = static_cast<int>(rng.below(3));
        ky = static_cast<int>(rng.below(3));
      }
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      std::vector<double> m(plane);
      for (std::size_t i = 0; i < H; ++i) {
        for (std::size_t j = 0; j < W; ++j) {
          m[i * W + j] = std::cos(2.0 * std::numbers::pi * (kx * static_cast<double>(j) / static_cast<double>(W) +
                                                            ky * static_cast<double>(i) / static_cast<double>(H)) +
                                  phase);
        }
      }
      family.push_back(std::move(m));
    }
  }

  struct Family {
    double base, lapse, amp, profile_slope;
  };
  // T [K], Z [gpm], R [%], U, V [m/s]; level 0 is the lowest level.
  const std::array<Family, 5> fam{{{290.0, -6.0, 4.0, -0.05},
                                   {100.0, 1500.0, 40.0, 0.1},
                                   {50.0, -1.0, 15.0, -0.03},
                                   {5.0, 1.0, 8.0, 0.05},
                                   {0.0, 0.0, 8.0, 0.05}}};

  const auto mask = std::make_shared<const ConusMask>(synth_mask(cfg.grid));
  SynthData out;
  out.grid = cfg.grid;
  out.mask = mask;
  out.params = SynthParams{cfg.a, cfg.r0, cfg.b, L / 2, cfg.noise, cfg.ref_noise};

  std::vector<double> coef(5 * K, 0.0);
  for (auto& c : coef) c = rng.normal();
  const double rho = cfg.persistence, innov = std::sqrt(1.0 - rho * rho);
  const double norm = std::sqrt(static_cast<double>(K) / 2.0);
  const auto idx = mask->indices();

  for (std::size_t day = 0; day < cfg.ndays; ++day) {
    if (day > 0) {
      for (auto& c : coef) c = rho * c + innov * rng.normal();
    }
    Tensor<double> data(Shape{5, L, H, W});
    for (std::size_t ch = 0; ch < 5; ++ch) {
      std::vector<double> s(plane, 0.0);
      for (std::size_t k = 0; k < K; ++k) {
        const double c = std::clamp(coef[ch * K + k], -3.0, 3.0);
        for (std::size_t q = 0; q < plane; ++q) s[q] += c * modes[ch][k][q];
      }
      for (std::size_t l = 0; l < L; ++l) {
        const double lev = static_cast<double>(l);
        const double profile = 1.0 + fam[ch].profile_slope * lev;
        double* p = data.data().data() + (ch * L + l) * plane;
        for (std::size_t q = 0; q < plane; ++q) {
          double v = fam[ch].base + fam[ch].lapse * lev + fam[ch].amp * profile * s[q] / norm;
          if (ch == static_cast<std::size_t>(Channel::R)) v = std::clamp(v, 0.0, 100.0);
          p[q] = v;
        }
      }
    }
    const Date date = cfg.start + static_cast<long>(day);
    MeteoCube cube{date, {kAllChannels.begin(), kAllChannels.end()}, std::move(data)};
    const auto clean_full = synth_clean_precip(cube, out.params);
    const Date target = date + 1;

    std::vector<double> clean(plane, kMissing), ob(plane, kMissing), ref(plane, kMissing);
    for (const auto q : idx) {
      clean[q] = clean_full[q];
      ob[q] = std::max(clean_full[q] + rng.uniform(-cfg.noise, cfg.noise), 0.0);
    }
    for (const auto q : idx) ref[q] = std::max(clean_full[q] + cfg.ref_noise * rng.normal(), 0.0);

    out.meteo.push_back(std::move(cube));
    out.clean.push_back(PrecipGrid{target, cfg.grid, mask, std::move(clean), "reference", "CLEAN"});
    out.observed.push_back(PrecipGrid{target, cfg.grid, mask, std::move(ob), "observation", "OB"});
    out.reference.push_back(PrecipGrid{target, cfg.grid, mask, std::move(ref), "reference", "E24"});
  }
  return out;
}

}  // namespace fpp
