#pragma once

// Verification metrics over masked daily precipitation grids. Series are
// matched by date; every pairing requires identical validity masks.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpp/date.hpp"
#include "fpp/error.hpp"
#include "fpp/fppg.hpp"
#include "fpp/grid.hpp"

namespace fpp {

/// (pred, ob) day pairs sharing a date, in pred order.
struct AlignedDays {
  std::vector<const PrecipGrid*> pred;
  std::vector<const PrecipGrid*> ob;
  std::size_t size() const { return pred.size(); }
};

inline void require_same_mask(const PrecipGrid& a, const PrecipGrid& b, const char* op) {
  if (a.values.size() != b.values.size() || !a.mask || !b.mask || !(*a.mask == *b.mask)) {
    throw ShapeError(op, -1, "grids for " + a.date.iso() + " have different validity masks");
  }
}

inline AlignedDays align(const PrecipSeries& pred, const PrecipSeries& ob, const char* op = "align") {
  std::map<Date, const PrecipGrid*> by_date;
  for (const auto& g : ob) by_date.emplace(g.date, &g);
  AlignedDays a;
  for (const auto& p : pred) {
    const auto it = by_date.find(p.date);
    if (it == by_date.end()) continue;
    require_same_mask(p, *it->second, op);
    a.pred.push_back(&p);
    a.ob.push_back(it->second);
  }
  if (a.size() == 0) throw Error(ErrorKind::Domain, std::string(op) + ": prediction and observation share no dates");
  return a;
}

/// Sum of squared errors and the number of (day, cell) pairs behind it.
struct SquaredError {
  double sse = 0.0;
  std::size_t count = 0;

  std::optional<double> rmse() const {
    if (count == 0) return std::nullopt;
    return std::sqrt(sse / static_cast<double>(count));
  }
};

/// Pooled squared error restricted to cells where `cells` is set (all masked
/// cells when null) and days accepted by `keep_day`.
template <class DayFilter>
SquaredError squared_error(const AlignedDays& a, const ConusMask* cells, DayFilter keep_day) {
  SquaredError s;
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (!keep_day(a.pred[m]->date)) continue;
    const auto& p = a.pred[m]->values;
    const auto& o = a.ob[m]->values;
    const auto& mask = *a.ob[m]->mask;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!mask.at(k) || (cells && !cells->at(k))) continue;
      const double d = p[k] - o[k];
      s.sse += d * d;
      ++s.count;
    }
  }
  return s;
}

inline SquaredError squared_error(const AlignedDays& a, const ConusMask* cells = nullptr) {
  return squared_error(a, cells, [](Date) { return true; });
}

/// sqrt(sum_j sum_i (P_j[i] - OB_j[i])^2 / (M N)) over the shared dates.
inline double rmse_overall(const PrecipSeries& pred, const PrecipSeries& ob) {
  return *squared_error(align(pred, ob, "rmse_overall")).rmse();
}

struct RmseMap {
  LatLonGrid grid;
  std::shared_ptr<const ConusMask> mask;
  std::vector<double> values;  // kMissing outside the mask
  double domain_mean = 0.0;    // mean of the map over masked cells
  std::size_t days = 0;
};

inline RmseMap rmse_map(const PrecipSeries& pred, const PrecipSeries& ob) {
  const auto a = align(pred, ob, "rmse_map");
  const auto& ref = *a.ob.front();
  RmseMap r{ref.grid, ref.mask, std::vector<double>(ref.values.size(), kMissing), 0.0, a.size()};
  std::vector<double> sse(ref.values.size(), 0.0);
  for (std::size_t m = 0; m < a.size(); ++m) {
    for (std::size_t k = 0; k < sse.size(); ++k) {
      if (!ref.mask->at(k)) continue;
      const double d = a.pred[m]->values[k] - a.ob[m]->values[k];
      sse[k] += d * d;
    }
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < sse.size(); ++k) {
    if (!ref.mask->at(k)) continue;
    r.values[k] = std::sqrt(sse[k] / static_cast<double>(a.size()));
    sum += r.values[k];
  }
  r.domain_mean = sum / static_cast<double>(ref.mask->count());
  return r;
}

/// Pearson correlation over masked cells. Missing (nullopt) when either field
/// is constant or fewer than two cells are masked.
inline std::optional<double> pcc_day(const PrecipGrid& pred, const PrecipGrid& ob) {
  require_same_mask(pred, ob, "pcc_day");
  const auto p = pred.masked_values();
  const auto o = ob.masked_values();
  const std::size_t n = p.size();
  if (n < 2) return std::nullopt;
  double mp = 0.0, mo = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mp += p[k];
    mo += o[k];
  }
  mp /= static_cast<double>(n);
  mo /= static_cast<double>(n);
  double spo = 0.0, spp = 0.0, soo = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    spo += (p[k] - mp) * (o[k] - mo);
    spp += (p[k] - mp) * (p[k] - mp);
    soo += (o[k] - mo) * (o[k] - mo);
  }
  if (spp == 0.0 || soo == 0.0) return std::nullopt;
  return std::clamp(spo / std::sqrt(spp * soo), -1.0, 1.0);
}

/// Bin edges in mm/day; bin k is [edges[k], edges[k+1]) and the last bin is open.
struct IntensityBins {
  std::vector<double> edges{0.0, 1.0, 10.0, 25.0, 50.0};

  void validate() const {
    if (edges.empty() || edges.front() != 0.0) throw Error(ErrorKind::Config, "intensity bins must start at 0");
    for (std::size_t k = 1; k < edges.size(); ++k) {
      if (!(edges[k] > edges[k - 1])) throw Error(ErrorKind::Config, "intensity bin edges must increase strictly");
    }
  }
  std::size_t size() const { return edges.size(); }
  double lower(std::size_t k) const { return edges[k]; }
  double upper(std::size_t k) const {
    return k + 1 < edges.size() ? edges[k + 1] : std::numeric_limits<double>::infinity();
  }
  std::string label(std::size_t k) const {
    std::ostringstream s;
    s << edges[k] << "-";
    if (k + 1 < edges.size()) {
      s << edges[k + 1];
    } else {
      s << "inf";
    }
    return s.str();
  }
  std::size_t bin_of(double v) const {
    if (v < 0.0) throw Error(ErrorKind::Domain, "negative precipitation cannot be binned");
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    return static_cast<std::size_t>(it - edges.begin()) - 1;
  }
};

enum class BinOn { Observed, Predicted };

struct BinRmse {
  double lower = 0.0, upper = 0.0;
  std::size_t count = 0;
  double frequency = 0.0;
  std::optional<double> rmse;  // missing for empty bins
};

template <class F>
void for_each_binned(const AlignedDays& a, const IntensityBins& bins, BinOn on, F f) {
  for (std::size_t m = 0; m < a.size(); ++m) {
    const auto& p = a.pred[m]->values;
    const auto& o = a.ob[m]->values;
    const auto& mask = *a.ob[m]->mask;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!mask.at(k)) continue;
      f(bins.bin_of(on == BinOn::Observed ? o[k] : p[k]), p[k], o[k]);
    }
  }
}

inline std::vector<BinRmse> rmse_by_intensity(const PrecipSeries& pred, const PrecipSeries& ob,
                                              const IntensityBins& bins = {}, BinOn on = BinOn::Observed) {
  bins.validate();
  const auto a = align(pred, ob, "rmse_by_intensity");
  std::vector<double> sse(bins.size(), 0.0);
  std::vector<std::size_t> count(bins.size(), 0);
  std::size_t total = 0;
  for_each_binned(a, bins, on, [&](std::size_t b, double p, double o) {
    sse[b] += (p - o) * (p - o);
    ++count[b];
    ++total;
  });
  std::vector<BinRmse> out;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    BinRmse r{bins.lower(b), bins.upper(b), count[b], static_cast<double>(count[b]) / static_cast<double>(total), {}};
    if (count[b]) r.rmse = std::sqrt(sse[b] / static_cast<double>(count[b]));
    out.push_back(r);
  }
  return out;
}

/// Linear interpolation between order statistics (R type 7) of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::Domain, "quantile of empty data");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

struct BiasStats {
  double lower = 0.0, upper = 0.0;
  std::size_t count = 0;
  // All missing when count == 0.
  std::optional<double> mean, median, q25, q75, p10, p90;
};

/// Distribution of (pred - ob) per intensity bin.
inline std::vector<BiasStats> bias_stats_by_intensity(const PrecipSeries& pred, const PrecipSeries& ob,
                                                      const IntensityBins& bins = {}, BinOn on = BinOn::Observed) {
  bins.validate();
  const auto a = align(pred, ob, "bias_stats_by_intensity");
  std::vector<std::vector<double>> diffs(bins.size());
  for_each_binned(a, bins, on, [&](std::size_t b, double p, double o) { diffs[b].push_back(p - o); });
  std::vector<BiasStats> out;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    auto& d = diffs[b];
    BiasStats s{bins.lower(b), bins.upper(b), d.size(), {}, {}, {}, {}, {}, {}};
    if (!d.empty()) {
      double sum = 0.0;
      for (const double v : d) sum += v;
      s.mean = sum / static_cast<double>(d.size());
      std::sort(d.begin(), d.end());
      s.median = quantile_sorted(d, 0.5);
      s.q25 = quantile_sorted(d, 0.25);
      s.q75 = quantile_sorted(d, 0.75);
      s.p10 = quantile_sorted(d, 0.10);
      s.p90 = quantile_sorted(d, 0.90);
    }
    out.push_back(s);
  }
  return out;
}

// ---- regions and seasons ---------------------------------------------------

enum class Season { MAM, JJA, SON, DJF };

inline constexpr std::array<Season, 4> kSeasons{Season::MAM, Season::JJA, Season::SON, Season::DJF};

inline const char* season_name(Season s) {
  switch (s) {
    case Season::MAM: return "MAM";
    case Season::JJA: return "JJA";
    case Season::SON: return "SON";
    case Season::DJF: return "DJF";
  }
  return "?";
}

inline Season season_of(Date d) {
  switch (d.month()) {
    case 3: case 4: case 5: return Season::MAM;
    case 6: case 7: case 8: return Season::JJA;
    case 9: case 10: case 11: return Season::SON;
    default: return Season::DJF;
  }
}

struct RegionMask {
  std::string name;
  ConusMask cells;
};

/// Regions from a JSON document {"regions": [{"name", "boxes": [[lat_s, lat_n, lon_w, lon_e], ...]}]}.
/// A cell belongs to a region when its center lies in one of the region's
/// boxes (south/west edges inclusive) and it is inside `conus`.
inline std::vector<RegionMask> regions_from_json(const nlohmann::json& j, const LatLonGrid& grid, const ConusMask& conus) {
  std::vector<RegionMask> out;
  for (const auto& r : j.at("regions")) {
    std::vector<std::uint8_t> cells(grid.cells(), 0);
    for (const auto& b : r.at("boxes")) {
      const auto box = b.get<std::array<double, 4>>();
      for (std::size_t i = 0; i < grid.nlat; ++i) {
        const double lat = grid.lat_center(i);
        if (lat < box[0] || lat >= box[1]) continue;
        for (std::size_t jj = 0; jj < grid.nlon; ++jj) {
          const double lon = grid.lon_center(jj);
          if (lon >= box[2] && lon < box[3] && conus.at(i, jj)) cells[i * grid.nlon + jj] = 1;
        }
      }
    }
    out.push_back({r.at("name").get<std::string>(), ConusMask(grid.nlat, grid.nlon, std::move(cells))});
  }
  for (std::size_t a = 0; a < out.size(); ++a) {
    for (std::size_t b = a + 1; b < out.size(); ++b) {
      for (std::size_t k = 0; k < grid.cells(); ++k) {
        if (out[a].cells.at(k) && out[b].cells.at(k)) {
          throw Error(ErrorKind::Config, "regions '" + out[a].name + "' and '" + out[b].name + "' overlap");
        }
      }
    }
  }
  return out;
}

inline std::vector<RegionMask> load_regions(const std::filesystem::path& path, const LatLonGrid& grid,
                                            const ConusMask& conus) {
  try {
    return regions_from_json(nlohmann::json::parse(io::read_file(path)), grid, conus);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, path.string() + ": malformed region file (" + e.what() + ")");
  }
}

struct SliceRmse {
  std::string region;
  std::string season;  // "all" for the whole period
  SquaredError error;
};

/// RMSE per (region, season) plus per region over all days.
inline std::vector<SliceRmse> slice_region_season(const PrecipSeries& pred, const PrecipSeries& ob,
                                                  const std::vector<RegionMask>& regions) {
  const auto a = align(pred, ob, "slice_region_season");
  std::vector<SliceRmse> out;
  for (const auto& r : regions) {
    if (!r.cells.is_subset_of(*a.ob.front()->mask)) {
      throw ShapeError("slice_region_season", -1, "region '" + r.name + "' is not inside the validity mask");
    }
    for (const auto s : kSeasons) {
      out.push_back({r.name, season_name(s), squared_error(a, &r.cells, [s](Date d) { return season_of(d) == s; })});
    }
    out.push_back({r.name, "all", squared_error(a, &r.cells)});
  }
  return out;
}

// ---- events ------------------------------------------------------------------

struct EventDay {
  Date date;
  std::size_t exceed_count = 0;
};

/// Days on which strictly more than `min_cells` masked cells observe strictly
/// more than `threshold_mm`.
inline std::vector<EventDay> detect_events(const PrecipSeries& ob, double threshold_mm = 25.0,
                                           std::size_t min_cells = 150) {
  std::vector<EventDay> out;
  for (const auto& g : ob) {
    std::size_t n = 0;
    for (std::size_t k = 0; k < g.values.size(); ++k) {
      if (g.mask->at(k) && g.values[k] > threshold_mm) ++n;
    }
    if (n > min_cells) out.push_back({g.date, n});
  }
  return out;
}

struct ProductScore {
  std::string product;
  double rmse = 0.0;
  std::optional<double> pcc;
};

struct EventRow {
  Date date;
  std::size_t exceed_count = 0;
  std::vector<ProductScore> scores;
  std::string best;  // product name, or "split"
};

namespace detail {

inline const PrecipGrid& day_of(const PrecipSeries& s, Date d, const std::string& what) {
  for (const auto& g : s) {
    if (g.date == d) return g;
  }
  throw Error(ErrorKind::Domain, what + " has no grid for " + d.iso());
}

}  // namespace detail

/// A product is "best" only if it alone has the smallest RMSE and it alone
/// has the largest PCC; otherwise the row is labeled "split".
inline std::vector<EventRow> event_table(const std::vector<EventDay>& events,
                                         const std::map<std::string, PrecipSeries>& products, const PrecipSeries& ob) {
  if (products.empty()) throw Error(ErrorKind::Domain, "event_table: no products");
  std::vector<EventRow> rows;
  for (const auto& e : events) {
    EventRow row{e.date, e.exceed_count, {}, "split"};
    const auto& o = detail::day_of(ob, e.date, "observation");
    for (const auto& [name, series] : products) {
      const auto& p = detail::day_of(series, e.date, name);
      require_same_mask(p, o, "event_table");
      const auto err = squared_error(AlignedDays{{&p}, {&o}});
      row.scores.push_back({name, *err.rmse(), pcc_day(p, o)});
    }
    std::size_t rmse_best = 0, rmse_ties = 0;
    for (std::size_t k = 0; k < row.scores.size(); ++k) {
      if (row.scores[k].rmse < row.scores[rmse_best].rmse) rmse_best = k;
    }
    for (const auto& s : row.scores) rmse_ties += s.rmse == row.scores[rmse_best].rmse;
    std::optional<std::size_t> pcc_best;
    std::size_t pcc_ties = 0;
    for (std::size_t k = 0; k < row.scores.size(); ++k) {
      if (!row.scores[k].pcc) continue;
      if (!pcc_best || *row.scores[k].pcc > *row.scores[*pcc_best].pcc) pcc_best = k;
    }
    if (pcc_best) {
      for (const auto& s : row.scores) pcc_ties += s.pcc && *s.pcc == *row.scores[*pcc_best].pcc;
    }
    if (rmse_ties == 1 && pcc_best && pcc_ties == 1 && *pcc_best == rmse_best) row.best = row.scores[rmse_best].product;
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- reports -------------------------------------------------------------------

/// Per-cell mean of `train_obs`, emitted for each requested date.
inline PrecipSeries climatology(const PrecipSeries& train_obs, const std::vector<Date>& dates) {
  if (train_obs.empty()) throw Error(ErrorKind::Domain, "climatology: no training observations");
  const auto& g0 = train_obs.front();
  std::vector<double> mean(g0.values.size(), 0.0);
  for (const auto& g : train_obs) {
    require_same_mask(g, g0, "climatology");
    for (std::size_t k = 0; k < mean.size(); ++k) {
      if (g0.mask->at(k)) mean[k] += g.values[k];
    }
  }
  for (std::size_t k = 0; k < mean.size(); ++k) {
    mean[k] = g0.mask->at(k) ? mean[k] / static_cast<double>(train_obs.size()) : kMissing;
  }
  PrecipSeries out;
  for (const Date d : dates) out.push_back(PrecipGrid{d, g0.grid, g0.mask, mean, "reference", "CLIM"});
  return out;
}

struct EvalReport {
  std::string product;
  std::string role;
  std::size_t days = 0;   // M
  std::size_t cells = 0;  // N
  double rmse = 0.0;
  RmseMap map;
  std::vector<std::pair<Date, std::optional<double>>> pcc;
  std::optional<double> mean_pcc;
  std::vector<BinRmse> bins;
  std::vector<BiasStats> bias;
  std::vector<SliceRmse> slices;
  nlohmann::json metadata = nlohmann::json::object();
};

inline EvalReport evaluate(const PrecipSeries& pred, const PrecipSeries& ob, const IntensityBins& bins = {},
                           const std::vector<RegionMask>& regions = {}, BinOn on = BinOn::Observed) {
  const auto a = align(pred, ob, "evaluate");
  EvalReport r;
  r.product = a.pred.front()->product;
  r.role = a.pred.front()->role;
  r.days = a.size();
  r.cells = a.ob.front()->mask->count();
  r.rmse = *squared_error(a).rmse();
  r.map = rmse_map(pred, ob);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t m = 0; m < a.size(); ++m) {
    const auto c = pcc_day(*a.pred[m], *a.ob[m]);
    r.pcc.emplace_back(a.pred[m]->date, c);
    if (c) {
      sum += *c;
      ++n;
    }
  }
  if (n) r.mean_pcc = sum / static_cast<double>(n);
  r.bins = rmse_by_intensity(pred, ob, bins, on);
  r.bias = bias_stats_by_intensity(pred, ob, bins, on);
  if (!regions.empty()) r.slices = slice_region_season(pred, ob, regions);
  return r;
}

/// Ratios of matching RMSE entries; missing where either side is missing or
/// the reference value is 0.
struct RatioReport {
  std::string product, reference;
  std::optional<double> overall;
  std::optional<double> map_domain_mean;
  std::vector<std::optional<double>> bins;
  std::vector<std::optional<double>> slices;
};

inline std::optional<double> safe_ratio(std::optional<double> a, std::optional<double> b) {
  if (!a || !b || *b == 0.0) return std::nullopt;
  return *a / *b;
}

inline RatioReport normalize_by_reference(const EvalReport& r, const EvalReport& ref) {
  if (r.bins.size() != ref.bins.size() || r.slices.size() != ref.slices.size()) {
    throw Error(ErrorKind::Domain, "normalize_by_reference: reports have different layouts");
  }
  RatioReport out{r.product, ref.product, safe_ratio(r.rmse, ref.rmse),
                  safe_ratio(r.map.domain_mean, ref.map.domain_mean), {}, {}};
  for (std::size_t b = 0; b < r.bins.size(); ++b) out.bins.push_back(safe_ratio(r.bins[b].rmse, ref.bins[b].rmse));
  for (std::size_t s = 0; s < r.slices.size(); ++s) {
    out.slices.push_back(safe_ratio(r.slices[s].error.rmse(), ref.slices[s].error.rmse()));
  }
  return out;
}

namespace detail {

inline nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

inline std::string opt_csv(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s.precision(17);
  s << *v;
  return s.str();
}

}  // namespace detail

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j{{"product", r.product}, {"role", r.role},           {"days", r.days},
                   {"cells", r.cells},     {"rmse", r.rmse},           {"rmse_map_domain_mean", r.map.domain_mean},
                   {"mean_pcc", detail::opt_json(r.mean_pcc)},         {"metadata", r.metadata}};
  auto pcc = nlohmann::json::array();
  for (const auto& [d, v] : r.pcc) pcc.push_back({{"date", d.iso()}, {"pcc", detail::opt_json(v)}});
  j["pcc"] = pcc;
  auto bins = nlohmann::json::array();
  for (std::size_t b = 0; b < r.bins.size(); ++b) {
    const auto& x = r.bins[b];
    const auto& s = r.bias[b];
    bins.push_back({{"lower", x.lower},
                    {"upper", std::isinf(x.upper) ? nlohmann::json(nullptr) : nlohmann::json(x.upper)},
                    {"count", x.count},
                    {"frequency", x.frequency},
                    {"rmse", detail::opt_json(x.rmse)},
                    {"bias", {{"mean", detail::opt_json(s.mean)},
                              {"median", detail::opt_json(s.median)},
                              {"q25", detail::opt_json(s.q25)},
                              {"q75", detail::opt_json(s.q75)},
                              {"p10", detail::opt_json(s.p10)},
                              {"p90", detail::opt_json(s.p90)}}}});
  }
  j["bins"] = bins;
  auto slices = nlohmann::json::array();
  for (const auto& s : r.slices) {
    slices.push_back({{"region", s.region}, {"season", s.season}, {"count", s.error.count}, {"rmse", detail::opt_json(s.error.rmse())}});
  }
  j["slices"] = slices;
  return j;
}

inline nlohmann::json to_json(const RatioReport& r) {
  nlohmann::json j{{"product", r.product},
                   {"reference", r.reference},
                   {"overall", detail::opt_json(r.overall)},
                   {"map_domain_mean", detail::opt_json(r.map_domain_mean)}};
  auto b = nlohmann::json::array();
  for (const auto& v : r.bins) b.push_back(detail::opt_json(v));
  j["bins"] = b;
  auto s = nlohmann::json::array();
  for (const auto& v : r.slices) s.push_back(detail::opt_json(v));
  j["slices"] = s;
  return j;
}

/// Flat table: one row per slice (overall, each bin, each region/season).
inline std::string report_csv(const std::vector<EvalReport>& reports, const IntensityBins& bins = {}) {
  std::ostringstream out;
  out << "product,slice,key,count,rmse,frequency\n";
  for (const auto& r : reports) {
    out << r.product << ",overall,all," << r.days * r.cells << "," << detail::opt_csv(r.rmse) << ",1\n";
    for (std::size_t b = 0; b < r.bins.size(); ++b) {
      out << r.product << ",intensity," << bins.label(b) << "," << r.bins[b].count << ","
          << detail::opt_csv(r.bins[b].rmse) << "," << detail::opt_csv(r.bins[b].frequency) << "\n";
    }
    for (const auto& s : r.slices) {
      out << r.product << ",region_season," << s.region << ":" << s.season << "," << s.error.count << ","
          << detail::opt_csv(s.error.rmse()) << ",\n";
    }
  }
  return out.str();
}

inline nlohmann::json to_json(const std::vector<EventRow>& rows) {
  auto a = nlohmann::json::array();
  for (const auto& r : rows) {
    auto scores = nlohmann::json::array();
    for (const auto& s : r.scores) scores.push_back({{"product", s.product}, {"rmse", s.rmse}, {"pcc", detail::opt_json(s.pcc)}});
    a.push_back({{"date", r.date.iso()}, {"exceed_count", r.exceed_count}, {"scores", scores}, {"best", r.best}});
  }
  return a;
}

inline std::string event_csv(const std::vector<EventRow>& rows) {
  std::ostringstream out;
  out << "date,exceed_count,product,rmse,pcc,best\n";
  for (const auto& r : rows) {
    for (const auto& s : r.scores) {
      out << r.date.iso() << "," << r.exceed_count << "," << s.product << "," << detail::opt_csv(s.rmse) << ","
          << detail::opt_csv(s.pcc) << "," << r.best << "\n";
    }
  }
  return out.str();
}

}  // namespace fpp
