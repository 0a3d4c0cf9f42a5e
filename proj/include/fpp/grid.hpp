#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpp/date.hpp"
#include "fpp/error.hpp"
#include "fpp/tensor.hpp"

namespace fpp {

/// Value stored in grid cells outside the validity mask.
inline constexpr double kMissing = -9999.0;

/// Regular lat/lon grid. lat0/lon0 are the south/west edges of cell (0, 0);
/// row index increases northward, column index eastward.
struct LatLonGrid {
  double lat0 = 0.0;
  double lon0 = 0.0;
  double dlat = 1.0;
  double dlon = 1.0;
  std::size_t nlat = 1;
  std::size_t nlon = 1;

  void validate() const {
    if (!(dlat > 0.0) || !(dlon > 0.0)) throw Error(ErrorKind::Domain, "grid spacings must be positive");
    if (nlat == 0 || nlon == 0) throw Error(ErrorKind::Domain, "grid counts must be positive");
  }

  std::size_t cells() const { return nlat * nlon; }
  double lat_edge(std::size_t i) const { return lat0 + dlat * static_cast<double>(i); }
  double lon_edge(std::size_t j) const { return lon0 + dlon * static_cast<double>(j); }
  double lat_center(std::size_t i) const { return lat0 + dlat * (static_cast<double>(i) + 0.5); }
  double lon_center(std::size_t j) const { return lon0 + dlon * (static_cast<double>(j) + 0.5); }
  double lat_end() const { return lat_edge(nlat); }
  double lon_end() const { return lon_edge(nlon); }

  /// ERA-Interim input domain: 7-63N, 140-50W on 80 x 128 cells.
  static LatLonGrid era_domain() { return LatLonGrid{7.0, -140.0, 0.7, 90.0 / 128.0, 80, 128}; }

  friend bool operator==(const LatLonGrid&, const LatLonGrid&) = default;
};

inline void to_json(nlohmann::json& j, const LatLonGrid& g) {
  j = nlohmann::json{{"lat0", g.lat0}, {"lon0", g.lon0}, {"dlat", g.dlat},
                     {"dlon", g.dlon}, {"nlat", g.nlat}, {"nlon", g.nlon}};
}

inline void from_json(const nlohmann::json& j, LatLonGrid& g) {
  g.lat0 = j.at("lat0").get<double>();
  g.lon0 = j.at("lon0").get<double>();
  g.dlat = j.at("dlat").get<double>();
  g.dlon = j.at("dlon").get<double>();
  g.nlat = j.at("nlat").get<std::size_t>();
  g.nlon = j.at("nlon").get<std::size_t>();
  g.validate();
}

/// Boolean validity mask over a grid (CONUS cells).
class ConusMask {
 public:
  ConusMask() = default;
  ConusMask(std::size_t nlat, std::size_t nlon, std::vector<std::uint8_t> cells)
      : nlat_(nlat), nlon_(nlon), cells_(std::move(cells)) {
    if (cells_.size() != nlat_ * nlon_) throw ShapeError("ConusMask", -1, "cell vector does not match grid");
    for (auto& c : cells_) c = c ? 1 : 0;
    count_ = static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
  }

  static ConusMask full(std::size_t nlat, std::size_t nlon) {
    return ConusMask(nlat, nlon, std::vector<std::uint8_t>(nlat * nlon, 1));
  }

  std::size_t nlat() const noexcept { return nlat_; }
  std::size_t nlon() const noexcept { return nlon_; }
  std::size_t count() const noexcept { return count_; }
  bool at(std::size_t flat) const { return cells_.at(flat) != 0; }
  bool at(std::size_t i, std::size_t j) const { return at(i * nlon_ + j); }
  const std::vector<std::uint8_t>& cells() const noexcept { return cells_; }

  /// Flat indices of masked cells in row-major order; this order defines the
  /// layout of every masked precipitation vector.
  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    out.reserve(count_);
    for (std::size_t k = 0; k < cells_.size(); ++k) {
      if (cells_[k]) out.push_back(k);
    }
    return out;
  }

  bool is_subset_of(const ConusMask& other) const {
    if (nlat_ != other.nlat_ || nlon_ != other.nlon_) return false;
    for (std::size_t k = 0; k < cells_.size(); ++k) {
      if (cells_[k] && !other.cells_[k]) return false;
    }
    return true;
  }

  friend bool operator==(const ConusMask& a, const ConusMask& b) {
    return a.nlat_ == b.nlat_ && a.nlon_ == b.nlon_ && a.cells_ == b.cells_;
  }

 private:
  std::size_t nlat_ = 0, nlon_ = 0, count_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// One day of 24-h accumulated precipitation (mm/day), window ending 12Z of `date`.
/// Cells outside the mask hold kMissing.
struct PrecipGrid {
  Date date;
  LatLonGrid grid;
  std::shared_ptr<const ConusMask> mask;
  std::vector<double> values;
  std::string role = "observation";
  std::string product = "OB";

  static PrecipGrid from_masked(Date date, const LatLonGrid& grid, std::shared_ptr<const ConusMask> mask,
                                std::span<const double> masked, std::string role = "prediction",
                                std::string product = "RP") {
    if (masked.size() != mask->count()) {
      throw ShapeError("PrecipGrid", -1, "masked vector length " + std::to_string(masked.size()) +
                                             " != mask cell count " + std::to_string(mask->count()));
    }
    PrecipGrid g{date, grid, mask, std::vector<double>(grid.cells(), kMissing), std::move(role), std::move(product)};
    std::size_t k = 0;
    for (const auto idx : mask->indices()) g.values[idx] = masked[k++];
    return g;
  }

  std::vector<double> masked_values() const {
    std::vector<double> out;
    out.reserve(mask->count());
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (mask->at(k)) out.push_back(values[k]);
    }
    return out;
  }

  double masked_max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (mask->at(k)) m = std::max(m, values[k]);
    }
    return m;
  }

  double masked_mean() const {
    double s = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (mask->at(k)) s += values[k];
    }
    return s / static_cast<double>(mask->count());
  }
};

using PrecipSeries = std::vector<PrecipGrid>;

enum class Channel : std::uint8_t { T = 0, Z = 1, R = 2, U = 3, V = 4 };

inline constexpr std::array<Channel, 5> kAllChannels{Channel::T, Channel::Z, Channel::R, Channel::U, Channel::V};

inline char channel_name(Channel c) { return "TZRUV"[static_cast<int>(c)]; }

inline Channel parse_channel(const std::string& s) {
  if (s.size() == 1) {
    for (const auto c : kAllChannels) {
      if (channel_name(c) == s[0]) return c;
    }
  }
  throw Error(ErrorKind::Config, "unknown channel '" + s + "' (expected one of T, Z, R, U, V)");
}

inline std::string channels_string(const std::vector<Channel>& cs) {
  std::string s;
  for (const auto c : cs) s.push_back(channel_name(c));
  return s;
}

/// One 12Z frame of 3D meteorology: data shape [channels, levels, nlat, nlon].
/// Units: T kelvin, Z geopotential meters, R percent, U/V m/s.
struct MeteoCube {
  Date date;
  std::vector<Channel> channels;
  Tensor<double> data;

  std::size_t levels() const { return data.dim(1); }
  std::size_t nlat() const { return data.dim(2); }
  std::size_t nlon() const { return data.dim(3); }

  std::optional<std::size_t> channel_index(Channel c) const {
    for (std::size_t k = 0; k < channels.size(); ++k) {
      if (channels[k] == c) return k;
    }
    return std::nullopt;
  }

  /// Cube restricted (and reordered) to `wanted` channels.
  MeteoCube select(const std::vector<Channel>& wanted) const {
    const std::size_t vol = levels() * nlat() * nlon();
    Tensor<double> out(Shape{wanted.size(), levels(), nlat(), nlon()});
    for (std::size_t k = 0; k < wanted.size(); ++k) {
      const auto src = channel_index(wanted[k]);
      if (!src) throw Error(ErrorKind::Shape, std::string("cube lacks channel ") + channel_name(wanted[k]));
      std::copy_n(data.data().begin() + static_cast<std::ptrdiff_t>(*src * vol), vol,
                  out.data().begin() + static_cast<std::ptrdiff_t>(k * vol));
    }
    return MeteoCube{date, wanted, std::move(out)};
  }
};

using MeteoSeries = std::vector<MeteoCube>;

}  // namespace fpp
