#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

#include "fpp/error.hpp"
#include "fpp/grid.hpp"

namespace fpp {

namespace detail {

struct AxisOverlap {
  std::size_t src;
  double weight;
};

inline double sin_deg(double d) { return std::sin(d * std::numbers::pi / 180.0); }

// For each destination interval, the source intervals it overlaps and the
// overlap measure. Latitude measure is sin(lat) difference (spherical area).
inline std::vector<std::vector<AxisOverlap>> axis_overlaps(double src0, double dsrc, std::size_t nsrc, double dst0,
                                                           double ddst, std::size_t ndst, bool latitude) {
  std::vector<std::vector<AxisOverlap>> out(ndst);
  for (std::size_t d = 0; d < ndst; ++d) {
    const double a = dst0 + ddst * static_cast<double>(d);
    const double b = dst0 + ddst * static_cast<double>(d + 1);
    const double first = std::floor((a - src0) / dsrc);
    const std::size_t s0 = first < 0 ? 0 : static_cast<std::size_t>(first);
    for (std::size_t s = s0; s < nsrc; ++s) {
      const double sa = src0 + dsrc * static_cast<double>(s);
      const double sb = src0 + dsrc * static_cast<double>(s + 1);
      if (sa >= b) break;
      const double lo = std::max(a, sa), hi = std::min(b, sb);
      if (hi <= lo) continue;
      const double w = latitude ? sin_deg(hi) - sin_deg(lo) : hi - lo;
      out[d].push_back({s, w});
    }
  }
  return out;
}

}  // namespace detail

/// Spherical area measure of a cell (sin-lat difference times lon extent in degrees).
inline double cell_area(const LatLonGrid& g, std::size_t i, std::size_t j) {
  (void)j;
  return (detail::sin_deg(g.lat_edge(i + 1)) - detail::sin_deg(g.lat_edge(i))) * g.dlon;
}

struct RegridResult {
  PrecipGrid grid;
  /// Area measure of each destination cell covered by valid source cells.
  std::vector<double> covered_area;
};

/// Conservative area-weighted regridding. Each destination value is the
/// area-weighted mean of the valid source cells overlapping it. Destination
/// cells with no valid source coverage (or outside `dst_mask`) are unmasked.
inline RegridResult regrid_detailed(const PrecipGrid& src, const LatLonGrid& dst_grid,
                                    const ConusMask* dst_mask = nullptr) {
  src.grid.validate();
  dst_grid.validate();
  const auto& sg = src.grid;
  if (sg.lat_end() <= dst_grid.lat0 || dst_grid.lat_end() <= sg.lat0 || sg.lon_end() <= dst_grid.lon0 ||
      dst_grid.lon_end() <= sg.lon0) {
    throw Error(ErrorKind::Domain, "regrid: source and destination domains are disjoint");
  }
  if (dst_mask && (dst_mask->nlat() != dst_grid.nlat || dst_mask->nlon() != dst_grid.nlon)) {
    throw ShapeError("regrid", -1, "destination mask does not match destination grid");
  }
  const auto lat_ov = detail::axis_overlaps(sg.lat0, sg.dlat, sg.nlat, dst_grid.lat0, dst_grid.dlat, dst_grid.nlat, true);
  const auto lon_ov = detail::axis_overlaps(sg.lon0, sg.dlon, sg.nlon, dst_grid.lon0, dst_grid.dlon, dst_grid.nlon, false);

  std::vector<double> values(dst_grid.cells(), kMissing);
  std::vector<double> covered(dst_grid.cells(), 0.0);
  std::vector<std::uint8_t> valid(dst_grid.cells(), 0);
  for (std::size_t i = 0; i < dst_grid.nlat; ++i) {
    for (std::size_t j = 0; j < dst_grid.nlon; ++j) {
      const std::size_t k = i * dst_grid.nlon + j;
      if (dst_mask && !dst_mask->at(k)) continue;
      double wsum = 0.0, vsum = 0.0;
      for (const auto& la : lat_ov[i]) {
        for (const auto& lo : lon_ov[j]) {
          const std::size_t s = la.src * sg.nlon + lo.src;
          if (!src.mask->at(s)) continue;
          const double w = la.weight * lo.weight;
          wsum += w;
          vsum += w * src.values[s];
        }
      }
      if (wsum > 0.0) {
        values[k] = vsum / wsum;
        covered[k] = wsum;
        valid[k] = 1;
      }
    }
  }
  auto mask = std::make_shared<const ConusMask>(dst_grid.nlat, dst_grid.nlon, std::move(valid));
  return {PrecipGrid{src.date, dst_grid, std::move(mask), std::move(values), src.role, src.product},
          std::move(covered)};
}

inline PrecipGrid regrid(const PrecipGrid& src, const LatLonGrid& dst_grid, const ConusMask* dst_mask = nullptr) {
  return regrid_detailed(src, dst_grid, dst_mask).grid;
}

/// Destination cell is in the mask iff the covered fraction of its area is at
/// least `threshold` (a 1e-12 slack absorbs rounding at exact boundaries).
inline ConusMask build_mask(const ConusMask& footprint, const LatLonGrid& fine_grid, const LatLonGrid& dst_grid,
                            double threshold = 0.5) {
  fine_grid.validate();
  dst_grid.validate();
  if (footprint.nlat() != fine_grid.nlat || footprint.nlon() != fine_grid.nlon) {
    throw ShapeError("build_mask", -1, "footprint does not match its grid");
  }
  const auto lat_ov =
      detail::axis_overlaps(fine_grid.lat0, fine_grid.dlat, fine_grid.nlat, dst_grid.lat0, dst_grid.dlat, dst_grid.nlat, true);
  const auto lon_ov =
      detail::axis_overlaps(fine_grid.lon0, fine_grid.dlon, fine_grid.nlon, dst_grid.lon0, dst_grid.dlon, dst_grid.nlon, false);
  std::vector<std::uint8_t> cells(dst_grid.cells(), 0);
  for (std::size_t i = 0; i < dst_grid.nlat; ++i) {
    for (std::size_t j = 0; j < dst_grid.nlon; ++j) {
      double w = 0.0;
      for (const auto& la : lat_ov[i]) {
        for (const auto& lo : lon_ov[j]) {
          if (footprint.at(la.src, lo.src)) w += la.weight * lo.weight;
        }
      }
      const double frac = w / cell_area(dst_grid, i, j);
      cells[i * dst_grid.nlon + j] = frac >= threshold - 1e-12;
    }
  }
  ConusMask mask(dst_grid.nlat, dst_grid.nlon, std::move(cells));
  if (mask.count() == 0) throw Error(ErrorKind::Domain, "build_mask: no destination cell reaches the coverage threshold");
  return mask;
}

}  // namespace fpp
