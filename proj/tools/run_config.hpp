#pragma once

// Run configuration for the fpp command-line tool. A run config is one JSON
// document; command-line flags override its fields.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fpp/fpp.hpp"

namespace fpp::cli {

namespace fs = std::filesystem;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> lead;
  std::optional<fs::path> out;
  std::optional<int> precision;
  std::optional<std::size_t> threads;
};

struct PostprocessSettings {
  double scan_step = 0.01;
  std::optional<double> weight;  // fixed blend weight; scanned on validation when absent
};

struct EvaluationSettings {
  IntensityBins bins;
  std::optional<fs::path> regions;
  std::string reference = "E24";
  double event_threshold = 25.0;
  std::size_t event_min_cells = 150;
};

struct RunConfig {
  nlohmann::json effective;  // config after overrides; hashed into manifests
  std::uint64_t seed = 0;
  int lead = 1;
  std::size_t threads = 1;
  fs::path data_dir;
  fs::path out_dir;
  SynthConfig synth;
  SplitSpec split;
  nlohmann::json network;  // partial NetworkConfig; data-derived fields are filled in later
  TrainConfig training;
  PostprocessSettings post;
  EvaluationSettings eval;

  fs::path meteo_path() const { return data_dir / "meteo.fppg"; }
  fs::path obs_path() const { return data_dir / "obs.fppg"; }
  fs::path reference_path() const { return data_dir / "reference.fppg"; }
  fs::path out(const std::string& name) const { return out_dir / name; }
};

inline std::size_t threads_from_env() {
  if (const char* env = std::getenv("FPP_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::Config, std::string("FPP_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

inline RunConfig load_run_config(const std::optional<fs::path>& path, const Overrides& ov) {
  nlohmann::json j = nlohmann::json::object();
  if (path) {
    if (!fs::exists(*path)) throw Error(ErrorKind::Io, "config file '" + path->string() + "' not found");
    try {
      j = nlohmann::json::parse(io::read_file(*path));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, path->string() + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw Error(ErrorKind::Config, path->string() + ": top level must be an object");
  }
  if (ov.seed) j["seed"] = *ov.seed;
  if (ov.lead) j["lead"] = *ov.lead;
  if (ov.out) j["paths"]["out"] = ov.out->string();
  if (ov.precision) j["network"]["precision"] = *ov.precision;

  RunConfig c;
  try {
    if (!j.contains("seed")) throw Error(ErrorKind::Config, "a seed is required (config field 'seed' or --seed)");
    c.seed = j.at("seed").get<std::uint64_t>();
    c.lead = j.value("lead", 1);
    if (c.lead < 1) throw Error(ErrorKind::Config, "lead must be >= 1 day");
    const auto paths = j.value("paths", nlohmann::json::object());
    c.data_dir = paths.value("data", "data");
    c.out_dir = paths.value("out", "out");
    c.synth = j.value("synth", nlohmann::json::object()).get<SynthConfig>();
    c.synth.seed = c.seed;
    if (j.contains("split")) c.split = j.at("split").get<SplitSpec>();
    c.network = j.value("network", nlohmann::json::object());
    if (!c.network.is_object()) throw Error(ErrorKind::Config, "'network' must be an object");
    c.network["seed"] = c.seed;
    c.training = j.value("training", nlohmann::json::object()).get<TrainConfig>();
    c.training.seed = c.seed;
    const auto pp = j.value("postprocess", nlohmann::json::object());
    c.post.scan_step = pp.value("scan_step", 0.01);
    if (pp.contains("weight") && !pp.at("weight").is_null()) c.post.weight = pp.at("weight").get<double>();
    if (c.post.weight && !(*c.post.weight >= 0.0 && *c.post.weight <= 1.0)) {
      throw Error(ErrorKind::Config, "postprocess.weight must lie in [0, 1]");
    }
    const auto ev = j.value("evaluation", nlohmann::json::object());
    if (ev.contains("bins")) c.eval.bins.edges = ev.at("bins").get<std::vector<double>>();
    c.eval.bins.validate();
    if (ev.contains("regions")) c.eval.regions = fs::path(ev.at("regions").get<std::string>());
    c.eval.reference = ev.value("reference", "E24");
    c.eval.event_threshold = ev.value("event_threshold", 25.0);
    c.eval.event_min_cells = ev.value("event_min_cells", std::size_t{150});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("bad config value: ") + e.what());
  }
  c.threads = ov.threads ? *ov.threads : threads_from_env();
  if (c.threads == 0) throw Error(ErrorKind::Config, "--threads must be positive");
  c.training.threads = c.threads;
  c.effective = j;
  return c;
}

}  // namespace fpp::cli
