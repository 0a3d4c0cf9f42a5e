#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fpp/error.hpp"
#include "fpp/fppg.hpp"
#include "fpp/grid.hpp"

namespace fpp {

/// Per-channel, per-level standardization statistics.
struct NormalizationStats {
  static constexpr double kStdFloor = 1e-6;

  std::vector<Channel> channels;
  std::size_t levels = 0;
  std::vector<double> mean;  // [channel][level]
  std::vector<double> stddev;

  double mean_at(std::size_t c, std::size_t l) const { return mean.at(c * levels + l); }
  double std_at(std::size_t c, std::size_t l) const { return stddev.at(c * levels + l); }

  friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

/// Two-pass moments over every cell of every sample, per (channel, level).
inline NormalizationStats compute_norm_stats(std::span<const MeteoCube* const> samples) {
  if (samples.empty()) throw Error(ErrorKind::Domain, "compute_norm_stats: no samples");
  const auto& first = *samples.front();
  NormalizationStats s;
  s.channels = first.channels;
  s.levels = first.levels();
  const std::size_t C = s.channels.size(), L = s.levels, plane = first.nlat() * first.nlon();
  s.mean.assign(C * L, 0.0);
  s.stddev.assign(C * L, 0.0);
  for (const auto* cube : samples) {
    if (cube->data.shape() != first.data.shape() || cube->channels != first.channels) {
      throw ShapeError("compute_norm_stats", -1, "samples differ in layout");
    }
  }
  const double n = static_cast<double>(plane * samples.size());
  for (std::size_t cl = 0; cl < C * L; ++cl) {
    double sum = 0.0;
    for (const auto* cube : samples) {
      const double* p = cube->data.data().data() + cl * plane;
      for (std::size_t k = 0; k < plane; ++k) sum += p[k];
    }
    const double mu = sum / n;
    double ss = 0.0;
    for (const auto* cube : samples) {
      const double* p = cube->data.data().data() + cl * plane;
      for (std::size_t k = 0; k < plane; ++k) ss += (p[k] - mu) * (p[k] - mu);
    }
    s.mean[cl] = mu;
    s.stddev[cl] = std::max(std::sqrt(ss / n), NormalizationStats::kStdFloor);
  }
  return s;
}

inline NormalizationStats compute_norm_stats(const std::vector<MeteoCube>& samples) {
  std::vector<const MeteoCube*> ptrs;
  for (const auto& c : samples) ptrs.push_back(&c);
  return compute_norm_stats(ptrs);
}

/// (x - mean) / std per (channel, level); the cube's channels must appear in the stats.
inline MeteoCube normalize(const MeteoCube& cube, const NormalizationStats& stats) {
  if (cube.levels() != stats.levels) throw ShapeError("normalize", 1, "level count differs from statistics");
  MeteoCube out = cube;
  const std::size_t plane = cube.nlat() * cube.nlon();
  for (std::size_t c = 0; c < cube.channels.size(); ++c) {
    const auto it = std::find(stats.channels.begin(), stats.channels.end(), cube.channels[c]);
    if (it == stats.channels.end()) {
      throw Error(ErrorKind::Shape, std::string("normalize: no statistics for channel ") + channel_name(cube.channels[c]));
    }
    const std::size_t sc = static_cast<std::size_t>(it - stats.channels.begin());
    for (std::size_t l = 0; l < cube.levels(); ++l) {
      const double mu = stats.mean_at(sc, l), sd = stats.std_at(sc, l);
      double* p = out.data.data().data() + (c * cube.levels() + l) * plane;
      for (std::size_t k = 0; k < plane; ++k) p[k] = (p[k] - mu) / sd;
    }
  }
  return out;
}

inline void write_norm_stats(const std::filesystem::path& path, const NormalizationStats& s) {
  FppgArray a{DType::F64, Shape{2, s.channels.size(), s.levels}, s.mean,
              nlohmann::json{{"kind", "norm_stats"}, {"channels", channels_string(s.channels)}, {"levels", s.levels}}};
  a.values.insert(a.values.end(), s.stddev.begin(), s.stddev.end());
  write_fppg(path, a);
}

inline NormalizationStats read_norm_stats(const std::filesystem::path& path) {
  const auto a = read_fppg(path);
  if (a.footer.value("kind", "") != "norm_stats" || a.dims.size() != 3 || a.dims[0] != 2) {
    throw Error(ErrorKind::Format, path.string() + ": not a normalization statistics file");
  }
  NormalizationStats s;
  for (const char c : a.footer.at("channels").get<std::string>()) s.channels.push_back(parse_channel(std::string(1, c)));
  s.levels = a.dims[2];
  if (s.channels.size() != a.dims[1]) throw Error(ErrorKind::Format, path.string() + ": channel list disagrees with dims");
  const std::size_t n = a.dims[1] * a.dims[2];
  s.mean.assign(a.values.begin(), a.values.begin() + static_cast<std::ptrdiff_t>(n));
  s.stddev.assign(a.values.begin() + static_cast<std::ptrdiff_t>(n), a.values.end());
  return s;
}

}  // namespace fpp
