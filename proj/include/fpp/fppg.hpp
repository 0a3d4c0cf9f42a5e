#pragma once

// FPPG grid files:
//   "FPPG" | u32 version | u8 dtype (0 = f32, 1 = f64) | u8 ndims | u64 dims[ndims]
//   | little-endian row-major payload | canonical JSON footer (rest of file)

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpp/error.hpp"
#include "fpp/grid.hpp"

namespace fpp {

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

inline constexpr std::uint32_t kFppgVersion = 1;

namespace io {

inline void put_bytes(std::string& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_bytes(const std::string& in, std::size_t& pos, int n, const std::string& what) {
  if (pos + static_cast<std::size_t>(n) > in.size()) throw Error(ErrorKind::Format, what + ": truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += static_cast<std::size_t>(n);
  return v;
}

inline void put_f32(std::string& out, float f) { put_bytes(out, std::bit_cast<std::uint32_t>(f), 4); }
inline void put_f64(std::string& out, double d) { put_bytes(out, std::bit_cast<std::uint64_t>(d), 8); }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  return std::string(std::istreambuf_iterator<char>(f), {});
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace io

/// Raw FPPG content. Values are held in double; f32 files round-trip exactly.
struct FppgArray {
  DType dtype = DType::F64;
  Shape dims;
  std::vector<double> values;
  nlohmann::json footer = nlohmann::json::object();
};

inline std::string encode_fppg(const FppgArray& a) {
  if (element_count(a.dims) != a.values.size() || a.dims.empty()) {
    throw ShapeError("write_grid", -1, "dims " + shape_string(a.dims) + " do not match " +
                                           std::to_string(a.values.size()) + " values");
  }
  if (a.dims.size() > 255) throw ShapeError("write_grid", -1, "too many dimensions");
  std::string out = "FPPG";
  io::put_bytes(out, kFppgVersion, 4);
  io::put_bytes(out, static_cast<std::uint8_t>(a.dtype), 1);
  io::put_bytes(out, a.dims.size(), 1);
  for (const auto d : a.dims) io::put_bytes(out, d, 8);
  out.reserve(out.size() + a.values.size() * (a.dtype == DType::F32 ? 4 : 8) + 256);
  for (const double v : a.values) {
    if (a.dtype == DType::F32) {
      io::put_f32(out, static_cast<float>(v));
    } else {
      io::put_f64(out, v);
    }
  }
  out += a.footer.dump();
  return out;
}

inline FppgArray decode_fppg(const std::string& bytes, const std::string& name = "FPPG") {
  if (bytes.size() < 4 || bytes.compare(0, 4, "FPPG") != 0) throw Error(ErrorKind::Format, name + ": bad magic");
  std::size_t pos = 4;
  const auto version = io::get_bytes(bytes, pos, 4, name);
  if (version != kFppgVersion) {
    throw Error(ErrorKind::Format, name + ": unsupported version " + std::to_string(version));
  }
  FppgArray a;
  const auto code = io::get_bytes(bytes, pos, 1, name);
  if (code > 1) throw Error(ErrorKind::Format, name + ": unknown dtype code " + std::to_string(code));
  a.dtype = static_cast<DType>(code);
  const auto ndims = io::get_bytes(bytes, pos, 1, name);
  if (ndims == 0) throw Error(ErrorKind::Format, name + ": zero dimensions");
  for (std::uint64_t k = 0; k < ndims; ++k) {
    const auto d = io::get_bytes(bytes, pos, 8, name);
    if (d == 0) throw Error(ErrorKind::Format, name + ": zero-length dimension");
    a.dims.push_back(static_cast<std::size_t>(d));
  }
  const std::size_t n = element_count(a.dims);
  const std::size_t width = a.dtype == DType::F32 ? 4 : 8;
  if (n > (bytes.size() - pos) / width) {
    throw Error(ErrorKind::Format, name + ": header dims " + shape_string(a.dims) + " exceed payload length");
  }
  a.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (a.dtype == DType::F32) {
      a.values[i] = std::bit_cast<float>(static_cast<std::uint32_t>(io::get_bytes(bytes, pos, 4, name)));
    } else {
      a.values[i] = std::bit_cast<double>(io::get_bytes(bytes, pos, 8, name));
    }
  }
  try {
    a.footer = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, name + ": payload length disagrees with header or footer is corrupt (" +
                                       std::string(e.what()) + ")");
  }
  return a;
}

inline void write_fppg(const std::filesystem::path& path, const FppgArray& a) {
  io::write_file(path, encode_fppg(a));
}

inline FppgArray read_fppg(const std::filesystem::path& path) {
  return decode_fppg(io::read_file(path), path.string());
}

// ---- typed wrappers -------------------------------------------------------

namespace detail {

inline nlohmann::json precip_footer_common(const LatLonGrid& grid, const std::string& role,
                                           const std::string& product) {
  return nlohmann::json{{"grid", grid},
                        {"role", role},
                        {"product", product},
                        {"units", "mm/day"},
                        {"missing_value", kMissing},
                        {"accumulation_window", "12Z previous day to 12Z date"}};
}

inline std::shared_ptr<const ConusMask> mask_from_sentinel(std::span<const double> v, std::size_t nlat,
                                                           std::size_t nlon) {
  std::vector<std::uint8_t> cells(nlat * nlon);
  for (std::size_t k = 0; k < cells.size(); ++k) cells[k] = v[k] != kMissing;
  return std::make_shared<const ConusMask>(nlat, nlon, std::move(cells));
}

}  // namespace detail

inline void write_grid(const std::filesystem::path& path, const PrecipGrid& g, DType dtype = DType::F64) {
  FppgArray a{dtype, Shape{g.grid.nlat, g.grid.nlon}, g.values,
              detail::precip_footer_common(g.grid, g.role, g.product)};
  a.footer["kind"] = "precip_grid";
  a.footer["date"] = g.date.iso();
  a.footer["accumulation_start"] = (g.date - 1).iso() + "T12:00Z";
  a.footer["accumulation_end"] = g.date.iso() + "T12:00Z";
  write_fppg(path, a);
}

inline PrecipGrid read_grid(const std::filesystem::path& path) {
  const auto a = read_fppg(path);
  if (a.footer.value("kind", "") != "precip_grid" || a.dims.size() != 2) {
    throw Error(ErrorKind::Format, path.string() + ": not a precipitation grid");
  }
  PrecipGrid g;
  g.grid = a.footer.at("grid").get<LatLonGrid>();
  if (g.grid.nlat != a.dims[0] || g.grid.nlon != a.dims[1]) {
    throw Error(ErrorKind::Format, path.string() + ": grid spec disagrees with dims");
  }
  g.date = Date::parse(a.footer.at("date").get<std::string>());
  g.role = a.footer.value("role", "observation");
  g.product = a.footer.value("product", "");
  g.values = a.values;
  g.mask = detail::mask_from_sentinel(g.values, g.grid.nlat, g.grid.nlon);
  return g;
}

inline void write_precip_series(const std::filesystem::path& path, const PrecipSeries& s, DType dtype = DType::F64) {
  if (s.empty()) throw Error(ErrorKind::Domain, "cannot write an empty precipitation series");
  const auto& g0 = s.front();
  FppgArray a{dtype, Shape{s.size(), g0.grid.nlat, g0.grid.nlon}, {},
              detail::precip_footer_common(g0.grid, g0.role, g0.product)};
  a.footer["kind"] = "precip_series";
  auto dates = nlohmann::json::array();
  a.values.reserve(element_count(a.dims));
  for (const auto& g : s) {
    if (!(g.grid == g0.grid)) throw Error(ErrorKind::Domain, "series members on different grids");
    dates.push_back(g.date.iso());
    a.values.insert(a.values.end(), g.values.begin(), g.values.end());
  }
  a.footer["dates"] = std::move(dates);
  write_fppg(path, a);
}

inline PrecipSeries read_precip_series(const std::filesystem::path& path) {
  const auto a = read_fppg(path);
  if (a.footer.value("kind", "") != "precip_series" || a.dims.size() != 3) {
    throw Error(ErrorKind::Format, path.string() + ": not a precipitation series");
  }
  const auto grid = a.footer.at("grid").get<LatLonGrid>();
  const auto& dates = a.footer.at("dates");
  if (grid.nlat != a.dims[1] || grid.nlon != a.dims[2] || dates.size() != a.dims[0]) {
    throw Error(ErrorKind::Format, path.string() + ": footer disagrees with dims");
  }
  const std::size_t cells = grid.cells();
  const std::span<const double> all(a.values);
  auto mask = detail::mask_from_sentinel(all.subspan(0, cells), grid.nlat, grid.nlon);
  PrecipSeries s;
  s.reserve(a.dims[0]);
  for (std::size_t m = 0; m < a.dims[0]; ++m) {
    PrecipGrid g;
    g.date = Date::parse(dates[m].get<std::string>());
    g.grid = grid;
    g.mask = mask;
    g.role = a.footer.value("role", "observation");
    g.product = a.footer.value("product", "");
    g.values.assign(all.begin() + static_cast<std::ptrdiff_t>(m * cells),
                    all.begin() + static_cast<std::ptrdiff_t>((m + 1) * cells));
    for (std::size_t k = 0; k < cells; ++k) {
      if ((g.values[k] != kMissing) != mask->at(k)) {
        throw Error(ErrorKind::Format, path.string() + ": validity mask changes within the series");
      }
    }
    s.push_back(std::move(g));
  }
  return s;
}

inline nlohmann::json meteo_units() {
  return nlohmann::json{{"T", "K"}, {"Z", "gpm"}, {"R", "%"}, {"U", "m/s"}, {"V", "m/s"}};
}

inline void write_meteo_series(const std::filesystem::path& path, const MeteoSeries& s, const LatLonGrid& grid,
                               DType dtype = DType::F64) {
  if (s.empty()) throw Error(ErrorKind::Domain, "cannot write an empty meteorology series");
  const auto& c0 = s.front();
  FppgArray a;
  a.dtype = dtype;
  a.dims = Shape{s.size(), c0.channels.size(), c0.levels(), c0.nlat(), c0.nlon()};
  if (grid.nlat != c0.nlat() || grid.nlon != c0.nlon()) throw Error(ErrorKind::Domain, "grid does not match cubes");
  auto dates = nlohmann::json::array();
  a.values.reserve(element_count(a.dims));
  for (const auto& c : s) {
    if (c.data.shape() != c0.data.shape() || c.channels != c0.channels) {
      throw Error(ErrorKind::Domain, "meteorology series members differ in layout");
    }
    dates.push_back(c.date.iso());
    a.values.insert(a.values.end(), c.data.data().begin(), c.data.data().end());
  }
  a.footer = nlohmann::json{{"kind", "meteo_series"}, {"grid", grid},
                            {"channels", channels_string(c0.channels)},
                            {"levels", c0.levels()},
                            {"units", meteo_units()},
                            {"sample_time", "12Z"},
                            {"dates", std::move(dates)},
                            {"role", "input"}};
  write_fppg(path, a);
}

inline MeteoSeries read_meteo_series(const std::filesystem::path& path, LatLonGrid* grid_out = nullptr) {
  const auto a = read_fppg(path);
  if (a.footer.value("kind", "") != "meteo_series" || a.dims.size() != 5) {
    throw Error(ErrorKind::Format, path.string() + ": not a meteorology series");
  }
  const auto names = a.footer.at("channels").get<std::string>();
  std::vector<Channel> channels;
  for (const char c : names) channels.push_back(parse_channel(std::string(1, c)));
  const auto& dates = a.footer.at("dates");
  if (channels.size() != a.dims[1] || dates.size() != a.dims[0]) {
    throw Error(ErrorKind::Format, path.string() + ": footer disagrees with dims");
  }
  if (grid_out) *grid_out = a.footer.at("grid").get<LatLonGrid>();
  const Shape cube{a.dims[1], a.dims[2], a.dims[3], a.dims[4]};
  const std::size_t vol = element_count(cube);
  MeteoSeries s;
  s.reserve(a.dims[0]);
  for (std::size_t m = 0; m < a.dims[0]; ++m) {
    std::vector<double> d(a.values.begin() + static_cast<std::ptrdiff_t>(m * vol),
                          a.values.begin() + static_cast<std::ptrdiff_t>((m + 1) * vol));
    s.push_back(MeteoCube{Date::parse(dates[m].get<std::string>()), channels, Tensor<double>(cube, std::move(d))});
  }
  return s;
}

inline void write_mask(const std::filesystem::path& path, const ConusMask& mask, const LatLonGrid& grid) {
  FppgArray a{DType::F32, Shape{mask.nlat(), mask.nlon()}, {}, nlohmann::json{{"kind", "mask"}, {"grid", grid}}};
  a.values.assign(mask.cells().begin(), mask.cells().end());
  a.footer["cell_count"] = mask.count();
  write_fppg(path, a);
}

inline ConusMask read_mask(const std::filesystem::path& path, LatLonGrid* grid_out = nullptr) {
  const auto a = read_fppg(path);
  if (a.footer.value("kind", "") != "mask" || a.dims.size() != 2) {
    throw Error(ErrorKind::Format, path.string() + ": not a mask file");
  }
  if (grid_out) *grid_out = a.footer.at("grid").get<LatLonGrid>();
  std::vector<std::uint8_t> cells(a.values.size());
  for (std::size_t k = 0; k < cells.size(); ++k) cells[k] = a.values[k] != 0.0;
  return ConusMask(a.dims[0], a.dims[1], std::move(cells));
}

}  // namespace fpp
