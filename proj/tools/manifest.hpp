#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpp/fppg.hpp"
#include "fpp/version.hpp"

namespace fpp::cli {

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Record of one command invocation, written next to its outputs as
/// <out>/<command>.manifest.json.
class Manifest {
 public:
  Manifest(std::string command, const nlohmann::json& config) : command_(std::move(command)) {
    config_hash_ = hex64(fnv1a(config.dump()));
  }

  void input(const std::filesystem::path& p) { inputs_.push_back(entry(p)); }
  void output(const std::filesystem::path& p) { outputs_.push_back(entry(p)); }
  void note(const std::string& key, nlohmann::json value) { notes_[key] = std::move(value); }

  void write(const std::filesystem::path& dir) const {
    nlohmann::json j{{"command", command_},
                     {"version", kVersion},
                     {"config_hash", config_hash_},
                     {"inputs", inputs_},
                     {"outputs", outputs_},
                     {"notes", notes_},
                     {"timestamp", utc_timestamp()}};
    io::write_file(dir / (command_ + ".manifest.json"), j.dump(2) + "\n");
  }

 private:
  static nlohmann::json entry(const std::filesystem::path& p) {
    return {{"path", p.string()}, {"fnv1a64", hex64(fnv1a(io::read_file(p)))}};
  }

  std::string command_;
  std::string config_hash_;
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
  nlohmann::json notes_ = nlohmann::json::object();
};

}  // namespace fpp::cli
