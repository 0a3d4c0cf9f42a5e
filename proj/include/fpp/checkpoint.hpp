#pragma once

// FPPC checkpoint files:
//   "FPPC" | u32 version | u64 json_len | JSON {config, metadata, normalization}
//   | u32 nblocks | blocks of: u16 name_len | name | u8 dtype | u8 ndims | u64 dims[] | payload
// All integers and payloads little-endian. 32-bit networks store f32 blocks,
// 64-bit networks f64.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "fpp/error.hpp"
#include "fpp/fppg.hpp"
#include "fpp/network.hpp"
#include "fpp/normalize.hpp"

namespace fpp {

inline constexpr std::uint32_t kFppcVersion = 1;

template <class T>
struct Checkpoint {
  Network<T> network;
  NormalizationStats normalization;
  nlohmann::json metadata = nlohmann::json::object();
};

inline nlohmann::json norm_stats_json(const NormalizationStats& s) {
  return {{"channels", channels_string(s.channels)}, {"levels", s.levels}, {"mean", s.mean}, {"std", s.stddev}};
}

inline NormalizationStats norm_stats_from_json(const nlohmann::json& j) {
  NormalizationStats s;
  for (const char c : j.at("channels").get<std::string>()) s.channels.push_back(parse_channel(std::string(1, c)));
  s.levels = j.at("levels").get<std::size_t>();
  s.mean = j.at("mean").get<std::vector<double>>();
  s.stddev = j.at("std").get<std::vector<double>>();
  if (s.mean.size() != s.channels.size() * s.levels || s.stddev.size() != s.mean.size()) {
    throw Error(ErrorKind::Format, "normalization statistics have the wrong length");
  }
  return s;
}

template <class T>
std::string encode_checkpoint(const Network<T>& net, const NormalizationStats& norm, const nlohmann::json& metadata) {
  constexpr bool f32 = sizeof(T) == 4;
  const nlohmann::json head{{"config", net.config()}, {"metadata", metadata}, {"normalization", norm_stats_json(norm)}};
  const std::string text = head.dump();
  std::string out = "FPPC";
  io::put_bytes(out, kFppcVersion, 4);
  io::put_bytes(out, text.size(), 8);
  out += text;
  const auto& params = net.parameters();
  io::put_bytes(out, params.size(), 4);
  for (const auto& p : params) {
    io::put_bytes(out, p.name.size(), 2);
    out += p.name;
    io::put_bytes(out, static_cast<std::uint8_t>(f32 ? DType::F32 : DType::F64), 1);
    io::put_bytes(out, p.value.rank(), 1);
    for (const auto d : p.value.shape()) io::put_bytes(out, d, 8);
    for (const T v : p.value.data()) {
      if constexpr (f32) {
        io::put_f32(out, v);
      } else {
        io::put_f64(out, v);
      }
    }
  }
  return out;
}

template <class T>
void save_checkpoint(const std::filesystem::path& path, const Network<T>& net, const NormalizationStats& norm,
                     const nlohmann::json& metadata = nlohmann::json::object()) {
  io::write_file(path, encode_checkpoint(net, norm, metadata));
}

/// Header of a checkpoint without its parameter blocks.
struct CheckpointHeader {
  NetworkConfig config;
  NormalizationStats normalization;
  nlohmann::json metadata;
  std::size_t blocks_offset = 0;
};

inline CheckpointHeader decode_checkpoint_header(const std::string& bytes, const std::string& name) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "FPPC") != 0) throw Error(ErrorKind::Format, name + ": bad magic");
  std::size_t pos = 4;
  const auto version = io::get_bytes(bytes, pos, 4, name);
  if (version != kFppcVersion) {
    throw Error(ErrorKind::Format, name + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto len = io::get_bytes(bytes, pos, 8, name);
  if (len > bytes.size() - pos) throw Error(ErrorKind::Format, name + ": truncated file");
  CheckpointHeader h;
  try {
    const auto head = nlohmann::json::parse(bytes.substr(pos, static_cast<std::size_t>(len)));
    h.config = head.at("config").get<NetworkConfig>();
    h.metadata = head.at("metadata");
    h.normalization = norm_stats_from_json(head.at("normalization"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, name + ": corrupt checkpoint header (" + std::string(e.what()) + ")");
  }
  h.blocks_offset = pos + static_cast<std::size_t>(len);
  return h;
}

inline CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  return decode_checkpoint_header(io::read_file(path), path.string());
}

template <class T>
Checkpoint<T> decode_checkpoint(const std::string& bytes, const std::string& name = "FPPC") {
  const auto h = decode_checkpoint_header(bytes, name);
  if (h.config.precision != static_cast<int>(8 * sizeof(T))) {
    throw Error(ErrorKind::Config, name + ": checkpoint holds a " + std::to_string(h.config.precision) +
                                       "-bit network, requested " + std::to_string(8 * sizeof(T)) + "-bit");
  }
  Checkpoint<T> ck{Network<T>(h.config), h.normalization, h.metadata};
  std::size_t pos = h.blocks_offset;
  auto& params = ck.network.parameters();
  const auto nblocks = io::get_bytes(bytes, pos, 4, name);
  if (nblocks != params.size()) {
    throw Error(ErrorKind::Format, name + ": " + std::to_string(nblocks) + " parameter blocks, network has " +
                                       std::to_string(params.size()));
  }
  for (auto& p : params) {
    const auto nlen = io::get_bytes(bytes, pos, 2, name);
    if (nlen > bytes.size() - pos) throw Error(ErrorKind::Format, name + ": truncated file");
    const std::string pname = bytes.substr(pos, static_cast<std::size_t>(nlen));
    pos += static_cast<std::size_t>(nlen);
    if (pname != p.name) throw Error(ErrorKind::Format, name + ": expected block '" + p.name + "', found '" + pname + "'");
    const auto code = io::get_bytes(bytes, pos, 1, name);
    if (code > 1) throw Error(ErrorKind::Format, name + ": unknown dtype code in block '" + pname + "'");
    const auto ndims = io::get_bytes(bytes, pos, 1, name);
    Shape dims;
    for (std::uint64_t k = 0; k < ndims; ++k) dims.push_back(static_cast<std::size_t>(io::get_bytes(bytes, pos, 8, name)));
    if (dims != p.value.shape()) {
      throw Error(ErrorKind::Format, name + ": block '" + pname + "' has shape " + shape_string(dims) + ", expected " +
                                         shape_string(p.value.shape()));
    }
    auto v = p.value.data();
    for (auto& x : v) {
      if (code == 0) {
        x = static_cast<T>(std::bit_cast<float>(static_cast<std::uint32_t>(io::get_bytes(bytes, pos, 4, name))));
      } else {
        x = static_cast<T>(std::bit_cast<double>(io::get_bytes(bytes, pos, 8, name)));
      }
    }
  }
  if (pos != bytes.size()) throw Error(ErrorKind::Format, name + ": trailing bytes after parameter blocks");
  return ck;
}

template <class T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint<T>(io::read_file(path), path.string());
}

}  // namespace fpp
