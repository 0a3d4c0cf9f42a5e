#pragma once

// Implementations of the fpp subcommands. Each returns normally on success
// and reports failures by throwing fpp::Error.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpp/fpp.hpp"
#include "manifest.hpp"
#include "run_config.hpp"

namespace fpp::cli {

// ---- shared helpers -----------------------------------------------------------

inline void require_file(const fs::path& p, const std::string& hint = "") {
  if (!fs::exists(p)) {
    throw Error(ErrorKind::Io, "input '" + p.string() + "' not found" + (hint.empty() ? "" : " (" + hint + ")"));
  }
}

inline void write_json(const fs::path& p, const nlohmann::json& j) { io::write_file(p, j.dump(2) + "\n"); }

inline nlohmann::json read_json(const fs::path& p) {
  require_file(p);
  try {
    return nlohmann::json::parse(io::read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, p.string() + ": malformed JSON (" + e.what() + ")");
  }
}

struct Dataset {
  LatLonGrid grid;
  MeteoSeries meteo;
  PrecipSeries obs;
  std::vector<SamplePair> pairs;
};

inline NetworkConfig resolve_network(const RunConfig& cfg, const LatLonGrid& grid, std::size_t levels,
                                     std::size_t cells) {
  NetworkConfig n = cfg.network.get<NetworkConfig>();
  auto fill = [&](const char* key, std::size_t& field, std::size_t value) {
    if (cfg.network.contains(key) && field != value) {
      throw Error(ErrorKind::Config, std::string("network.") + key + " = " + std::to_string(field) +
                                         " but the data has " + std::to_string(value));
    }
    field = value;
  };
  fill("levels", n.levels, levels);
  fill("nlat", n.nlat, grid.nlat);
  fill("nlon", n.nlon, grid.nlon);
  fill("output_dim", n.output_dim, cells);
  n.validate();
  return n;
}

inline Dataset load_dataset(const RunConfig& cfg, Manifest& m, const std::vector<Channel>& channels) {
  require_file(cfg.meteo_path(), "run `fpp synth` or export data first");
  require_file(cfg.obs_path());
  Dataset d;
  auto all = read_meteo_series(cfg.meteo_path(), &d.grid);
  for (auto& c : all) d.meteo.push_back(c.channels == channels ? std::move(c) : c.select(channels));
  d.obs = read_precip_series(cfg.obs_path());
  if (d.obs.empty() || !(d.obs.front().grid == d.grid)) {
    throw Error(ErrorKind::Config, "observation grid differs from the meteorology grid");
  }
  d.pairs = pair_samples(d.meteo, d.obs, cfg.lead).pairs;
  m.input(cfg.meteo_path());
  m.input(cfg.obs_path());
  return d;
}

inline std::vector<SamplePair> partition_pairs(const Dataset& d, const RunConfig& cfg, Partition p) {
  auto out = select_partition(d.pairs, cfg.split, p);
  if (out.empty()) {
    throw Error(ErrorKind::Config, std::string("no samples fall in the ") + to_string(p) + " partition at lead " +
                                       std::to_string(cfg.lead));
  }
  return out;
}

/// Days of `s` whose date falls in partition `p`.
inline PrecipSeries partition_days(const PrecipSeries& s, const SplitSpec& split, Partition p) {
  PrecipSeries out;
  for (const auto& g : s) {
    if (split.partition_of(g.date) == p) out.push_back(g);
  }
  return out;
}

inline std::vector<Channel> network_channels(const RunConfig& cfg) { return cfg.network.get<NetworkConfig>().channels; }

// ---- synth --------------------------------------------------------------------

inline void cmd_synth(const RunConfig& cfg) {
  Manifest m("synth", cfg.effective);
  const auto d = synth_generate(cfg.synth);
  fs::create_directories(cfg.data_dir);
  write_meteo_series(cfg.meteo_path(), d.meteo, d.grid);
  write_precip_series(cfg.obs_path(), d.observed);
  write_precip_series(cfg.reference_path(), d.reference);
  write_precip_series(cfg.data_dir / "clean.fppg", d.clean);
  write_mask(cfg.data_dir / "mask.fppg", *d.mask, d.grid);
  write_json(cfg.data_dir / "synth_params.json", {{"config", cfg.synth}, {"functional", d.params}});
  for (const auto* name : {"meteo.fppg", "obs.fppg", "reference.fppg", "clean.fppg", "mask.fppg", "synth_params.json"}) {
    m.output(cfg.data_dir / name);
  }
  m.note("days", cfg.synth.ndays);
  m.note("mask_cells", d.mask->count());
  m.write(cfg.data_dir);
  std::cout << "synth: " << cfg.synth.ndays << " days, " << d.mask->count() << " masked cells -> " << cfg.data_dir.string()
            << "\n";
}

// ---- regrid -------------------------------------------------------------------

struct RegridArgs {
  fs::path src;
  fs::path output;
  std::optional<fs::path> dst_grid;
  double threshold = 0.5;
};

inline void cmd_regrid(const RunConfig& cfg, const RegridArgs& a) {
  Manifest m("regrid", cfg.effective);
  require_file(a.src);
  m.input(a.src);
  LatLonGrid dst = LatLonGrid::era_domain();
  if (a.dst_grid) {
    dst = read_json(*a.dst_grid).get<LatLonGrid>();
    m.input(*a.dst_grid);
  }
  const auto fine = read_precip_series(a.src);
  if (fine.empty()) throw Error(ErrorKind::Domain, "regrid: empty source series");
  const auto mask = build_mask(*fine.front().mask, fine.front().grid, dst, a.threshold);
  PrecipSeries out;
  for (const auto& g : fine) out.push_back(regrid(g, dst, &mask));
  fs::create_directories(cfg.out_dir);
  write_precip_series(a.output, out);
  m.output(a.output);
  m.note("mask_cells", mask.count());
  m.note("threshold", a.threshold);
  m.write(cfg.out_dir);
  std::cout << "regrid: " << out.size() << " days onto " << dst.nlat << "x" << dst.nlon << " (" << mask.count()
            << " masked cells) -> " << a.output.string() << "\n";
}

// ---- stats --------------------------------------------------------------------

inline void cmd_stats(const RunConfig& cfg) {
  Manifest m("stats", cfg.effective);
  const auto d = load_dataset(cfg, m, network_channels(cfg));
  const auto train = partition_pairs(d, cfg, Partition::Train);
  std::vector<const MeteoCube*> cubes;
  for (const auto& p : train) cubes.push_back(&d.meteo[p.meteo_index]);
  const auto stats = compute_norm_stats(cubes);
  fs::create_directories(cfg.out_dir);
  write_norm_stats(cfg.out("norm_stats.fppg"), stats);
  m.output(cfg.out("norm_stats.fppg"));
  m.note("training_samples", train.size());
  m.write(cfg.out_dir);
  std::cout << "stats: " << train.size() << " training samples -> " << cfg.out("norm_stats.fppg").string() << "\n";
}

// ---- train --------------------------------------------------------------------

/// Returns true when training aborted on a non-finite loss.
template <class T>
bool train_impl(const RunConfig& cfg, Manifest& m) {
  const auto stats_path = cfg.out("norm_stats.fppg");
  require_file(stats_path, "run `fpp stats` first");
  const auto stats = read_norm_stats(stats_path);
  m.input(stats_path);
  const auto d = load_dataset(cfg, m, network_channels(cfg));
  const auto net_cfg = resolve_network(cfg, d.grid, d.meteo.front().levels(), d.obs.front().mask->count());
  const auto tr = partition_pairs(d, cfg, Partition::Train);
  const auto va = partition_pairs(d, cfg, Partition::Validation);
  const auto train_set = make_samples<T>(d.meteo, d.obs, tr, stats, net_cfg);
  const auto val_set = make_samples<T>(d.meteo, d.obs, va, stats, net_cfg);

  Network<T> net(net_cfg);
  std::cout << "train: " << net.parameter_count() << " parameters, " << train_set.size() << " train / "
            << val_set.size() << " val samples, " << cfg.training.epochs << " epochs, " << cfg.threads << " thread(s)\n";
  const auto result = train(net, train_set, val_set, cfg.training);
  for (const auto& e : result.history) {
    std::printf("  epoch %3zu  train_mse %.6g  val_mse %.6g\n", e.epoch, e.train_mse, e.val_mse);
  }
  const nlohmann::json meta{{"training", result},
                            {"train_config", cfg.training},
                            {"split", cfg.split.id()},
                            {"lead", cfg.lead},
                            {"version", kVersion}};
  save_checkpoint(cfg.out("model.fppc"), net, stats, meta);
  write_json(cfg.out("train_history.json"), result);
  m.output(cfg.out("model.fppc"));
  m.output(cfg.out("train_history.json"));
  m.note("best_epoch", result.best_epoch);
  m.note("best_val_mse", result.best_val_mse);
  std::printf("train: best epoch %zu, val_mse %.6g, train_mse %.6g -> %.6g\n", result.best_epoch, result.best_val_mse,
              result.initial_train_mse, result.final_train_mse);
  if (result.aborted) std::cerr << "train: aborted: " << result.abort_reason << "\n";
  return result.aborted;
}

inline void cmd_train(const RunConfig& cfg) {
  Manifest m("train", cfg.effective);
  const int precision = cfg.network.value("precision", 32);
  const bool aborted = precision == 64 ? train_impl<double>(cfg, m) : train_impl<float>(cfg, m);
  m.note("aborted", aborted);
  m.write(cfg.out_dir);
  if (aborted) throw Error(ErrorKind::Numerical, "training stopped on a non-finite loss; last good parameters were saved");
}

// ---- predict ------------------------------------------------------------------

template <class T>
PrecipSeries predict_impl(const Checkpoint<T>& ck, const Dataset& d, const std::vector<SamplePair>& pairs,
                          std::size_t threads) {
  const auto& nc = ck.network.config();
  const auto mask = d.obs.front().mask;
  if (mask->count() != nc.output_dim) {
    throw Error(ErrorKind::Config, "checkpoint output_dim " + std::to_string(nc.output_dim) + " does not match the " +
                                       std::to_string(mask->count()) + "-cell mask");
  }
  PrecipSeries out(pairs.size());
  detail::parallel_for(pairs.size(), threads, [&](std::size_t k) {
    const auto& p = pairs[k];
    const auto input = to_input<T>(normalize(d.meteo[p.meteo_index], ck.normalization), nc);
    const auto y = ck.network.predict(input);
    const std::vector<double> v(y.begin(), y.end());
    out[k] = PrecipGrid::from_masked(p.target_date, d.grid, mask, v, "prediction", "RP");
  });
  return out;
}

struct PredictArgs {
  std::optional<fs::path> checkpoint;
  std::vector<std::string> partitions{"val", "test"};
};

inline void cmd_predict(const RunConfig& cfg, const PredictArgs& a) {
  Manifest m("predict", cfg.effective);
  const auto ck_path = a.checkpoint.value_or(cfg.out("model.fppc"));
  require_file(ck_path, "run `fpp train` first");
  const auto header = read_checkpoint_header(ck_path);
  m.input(ck_path);
  const auto d = load_dataset(cfg, m, header.config.channels);
  auto run = [&]<class T>() {
    const auto ck = load_checkpoint<T>(ck_path);
    for (const auto& name : a.partitions) {
      const auto pairs = name == "all" ? d.pairs : partition_pairs(d, cfg, parse_partition(name));
      const auto series = predict_impl<T>(ck, d, pairs, cfg.threads);
      const auto path = cfg.out("rp_" + name + ".fppg");
      write_precip_series(path, series);
      m.output(path);
      std::cout << "predict: " << series.size() << " days (" << name << ") -> " << path.string() << "\n";
    }
  };
  if (header.config.precision == 64) {
    run.template operator()<double>();
  } else {
    run.template operator()<float>();
  }
  m.write(cfg.out_dir);
}

// ---- tune / scan-weight / blend / ensemble -----------------------------------

inline nlohmann::json load_post_params(const RunConfig& cfg) {
  const auto p = cfg.out("postprocess.json");
  return fs::exists(p) ? read_json(p) : nlohmann::json::object();
}

struct TuneArgs {
  std::optional<fs::path> input, output;
  std::optional<double> A;
};

inline void cmd_tune(const RunConfig& cfg, const TuneArgs& a) {
  Manifest m("tune", cfg.effective);
  fs::create_directories(cfg.out_dir);
  if (a.input) {
    if (!a.output) throw Error(ErrorKind::Config, "tune: --input needs --output");
    double A = 0.0;
    if (a.A) {
      A = *a.A;
    } else {
      const auto pp = load_post_params(cfg);
      if (!pp.contains("A")) throw Error(ErrorKind::Config, "tune: no --A given and no fitted A in postprocess.json");
      A = pp.at("A").get<double>();
    }
    require_file(*a.input);
    m.input(*a.input);
    write_precip_series(*a.output, tune(read_precip_series(*a.input), A));
    m.output(*a.output);
    m.note("A", A);
    m.write(cfg.out_dir);
    std::cout << "tune: A = " << A << " -> " << a.output->string() << "\n";
    return;
  }
  const auto rp_val_path = cfg.out("rp_val.fppg");
  require_file(rp_val_path, "run `fpp predict` first");
  require_file(cfg.obs_path());
  m.input(rp_val_path);
  m.input(cfg.obs_path());
  const auto rp_val = read_precip_series(rp_val_path);
  auto pp = load_post_params(cfg);
  double A = 0.0;
  if (a.A) {
    A = *a.A;
    pp["A"] = A;
    pp.erase("A_fit");
  } else {
    PostprocessParams fitted;
    fitted.augmentation = fit_A(rp_val, read_precip_series(cfg.obs_path()));
    A = fitted.augmentation->A;
    const auto j = to_json(fitted);
    pp["A"] = j.at("A");
    pp["A_fit"] = j.at("A_fit");
    pp["A_fit"]["validation_split"] = cfg.split.id();
    if (fitted.augmentation->below_one) {
      std::cerr << "tune: warning: fitted A = " << A << " < 1; predictions are not weaker than observations on average\n";
    }
  }
  write_json(cfg.out("postprocess.json"), pp);
  m.output(cfg.out("postprocess.json"));
  for (const auto* part : {"val", "test"}) {
    const auto in = cfg.out(std::string("rp_") + part + ".fppg");
    if (!fs::exists(in)) continue;
    const auto outp = cfg.out(std::string("tp_") + part + ".fppg");
    write_precip_series(outp, tune(read_precip_series(in), A));
    m.input(in);
    m.output(outp);
  }
  m.note("A", A);
  m.write(cfg.out_dir);
  std::cout << "tune: A = " << A << "\n";
}

struct ScanArgs {
  std::optional<fs::path> tp, reference, obs;
};

inline void cmd_scan_weight(const RunConfig& cfg, const ScanArgs& a) {
  Manifest m("scan-weight", cfg.effective);
  const auto tp_path = a.tp.value_or(cfg.out("tp_val.fppg"));
  const auto ref_path = a.reference.value_or(cfg.reference_path());
  const auto obs_path = a.obs.value_or(cfg.obs_path());
  for (const auto& p : {tp_path, ref_path, obs_path}) {
    require_file(p);
    m.input(p);
  }
  const auto scan = scan_weight(read_precip_series(tp_path), read_precip_series(ref_path), read_precip_series(obs_path),
                                cfg.post.scan_step);
  fs::create_directories(cfg.out_dir);
  auto pp = load_post_params(cfg);
  PostprocessParams p;
  p.weight = scan;
  const auto j = to_json(p);
  pp["w"] = j.at("w");
  pp["w_scan"] = j.at("w_scan");
  pp["w_scan"]["tp"] = tp_path.filename().string();
  write_json(cfg.out("postprocess.json"), pp);
  std::string csv = "w,rmse\n";
  for (std::size_t k = 0; k < scan.weights.size(); ++k) {
    char line[64];
    std::snprintf(line, sizeof line, "%.2f,%.17g\n", scan.weights[k], scan.curve[k]);
    csv += line;
  }
  io::write_file(cfg.out("weight_scan.csv"), csv);
  m.output(cfg.out("postprocess.json"));
  m.output(cfg.out("weight_scan.csv"));
  m.note("w", scan.w);
  m.write(cfg.out_dir);
  std::printf("scan-weight: w = %.2f (rmse %.6g; w=0: %.6g, w=1: %.6g)\n", scan.w, scan.rmse, scan.curve.front(),
              scan.curve.back());
}

struct BlendArgs {
  std::optional<fs::path> tp, reference, output;
  std::optional<double> w;
};

inline void cmd_blend(const RunConfig& cfg, const BlendArgs& a) {
  Manifest m("blend", cfg.effective);
  double w = 0.5;
  if (a.w) {
    w = *a.w;
  } else if (cfg.post.weight) {
    w = *cfg.post.weight;
  } else {
    const auto pp = load_post_params(cfg);
    if (!pp.contains("w")) throw Error(ErrorKind::Config, "blend: no weight given and none scanned; run `fpp scan-weight`");
    w = pp.at("w").get<double>();
  }
  const auto ref_path = a.reference.value_or(cfg.reference_path());
  require_file(ref_path);
  m.input(ref_path);
  const auto ref = read_precip_series(ref_path);
  fs::create_directories(cfg.out_dir);
  std::vector<std::pair<fs::path, fs::path>> jobs;
  if (a.tp) {
    if (!a.output) throw Error(ErrorKind::Config, "blend: --tp needs --output");
    jobs.emplace_back(*a.tp, *a.output);
  } else {
    for (const auto* part : {"val", "test"}) {
      const auto in = cfg.out(std::string("tp_") + part + ".fppg");
      if (fs::exists(in)) jobs.emplace_back(in, cfg.out(std::string("wp_") + part + ".fppg"));
    }
    if (jobs.empty()) throw Error(ErrorKind::Io, "blend: no tuned predictions in " + cfg.out_dir.string() + "; run `fpp tune`");
  }
  for (const auto& [in, outp] : jobs) {
    require_file(in);
    m.input(in);
    write_precip_series(outp, blend(read_precip_series(in), ref, w));
    m.output(outp);
    std::cout << "blend: w = " << w << " -> " << outp.string() << "\n";
  }
  m.note("w", w);
  m.write(cfg.out_dir);
}

struct EnsembleArgs {
  std::vector<fs::path> inputs;
  fs::path output;
  std::string product = "ENS";
};

inline void cmd_ensemble(const RunConfig& cfg, const EnsembleArgs& a) {
  Manifest m("ensemble", cfg.effective);
  std::vector<PrecipSeries> members;
  for (const auto& p : a.inputs) {
    require_file(p);
    m.input(p);
    members.push_back(read_precip_series(p));
  }
  fs::create_directories(cfg.out_dir);
  write_precip_series(a.output, ensemble_mean(members, a.product));
  m.output(a.output);
  m.note("members", a.inputs.size());
  m.write(cfg.out_dir);
  std::cout << "ensemble: " << members.size() << " members -> " << a.output.string() << "\n";
}

// ---- evaluate / events ----------------------------------------------------------

struct EvalArgs {
  std::string partition = "test";
  std::vector<std::string> extra;  // NAME=PATH
};

/// Products to score over the partition's days: the run's RP/TP/WP files, the
/// reference forecast, the training climatology, and any extra NAME=PATH series.
inline std::map<std::string, PrecipSeries> gather_products(const RunConfig& cfg, const EvalArgs& a,
                                                           const PrecipSeries& obs, Manifest& m) {
  if (a.partition == "train") throw Error(ErrorKind::Config, "evaluate: choose the val or test partition");
  const Partition part = parse_partition(a.partition);
  std::map<std::string, PrecipSeries> products;
  for (const auto& [name, file] : {std::pair{"RP", "rp_"}, std::pair{"TP", "tp_"}, std::pair{"WP", "wp_"}}) {
    const auto p = cfg.out(std::string(file) + a.partition + ".fppg");
    if (!fs::exists(p)) continue;
    m.input(p);
    products[name] = read_precip_series(p);
  }
  if (fs::exists(cfg.reference_path())) {
    m.input(cfg.reference_path());
    products[cfg.eval.reference] = partition_days(read_precip_series(cfg.reference_path()), cfg.split, part);
  }
  const auto train_obs = partition_days(obs, cfg.split, Partition::Train);
  if (!train_obs.empty()) {
    std::vector<Date> dates;
    for (const auto& g : partition_days(obs, cfg.split, part)) dates.push_back(g.date);
    if (!dates.empty()) products["CLIM"] = climatology(train_obs, dates);
  }
  for (const auto& e : a.extra) {
    const auto eq = e.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::Config, "expected NAME=PATH, got '" + e + "'");
    const fs::path p = e.substr(eq + 1);
    require_file(p);
    m.input(p);
    products[e.substr(0, eq)] = read_precip_series(p);
  }
  for (auto it = products.begin(); it != products.end();) {
    it = it->second.empty() ? products.erase(it) : std::next(it);
  }
  if (products.empty()) throw Error(ErrorKind::Io, "evaluate: no prediction products found in " + cfg.out_dir.string());
  return products;
}

inline void cmd_evaluate(const RunConfig& cfg, const EvalArgs& a) {
  Manifest m("evaluate", cfg.effective);
  require_file(cfg.obs_path());
  m.input(cfg.obs_path());
  const auto all_obs = read_precip_series(cfg.obs_path());
  const auto obs = partition_days(all_obs, cfg.split, parse_partition(a.partition));
  if (obs.empty()) throw Error(ErrorKind::Config, "evaluate: no observations in the " + a.partition + " partition");
  const auto products = gather_products(cfg, a, all_obs, m);
  std::vector<RegionMask> regions;
  if (cfg.eval.regions) {
    require_file(*cfg.eval.regions);
    m.input(*cfg.eval.regions);
    regions = load_regions(*cfg.eval.regions, obs.front().grid, *obs.front().mask);
  }
  fs::create_directories(cfg.out_dir);
  std::map<std::string, EvalReport> reports;
  for (const auto& [name, series] : products) {
    auto r = evaluate(series, obs, cfg.eval.bins, regions);
    r.product = name;
    r.metadata = {{"partition", a.partition}, {"lead", cfg.lead}, {"split", cfg.split.id()}};
    const auto map_path = cfg.out("rmse_map_" + name + "_" + a.partition + ".fppg");
    FppgArray arr{DType::F64, Shape{r.map.grid.nlat, r.map.grid.nlon}, r.map.values,
                  {{"kind", "rmse_map"}, {"grid", r.map.grid}, {"product", name}, {"units", "mm/day"},
                   {"missing_value", kMissing}, {"days", r.map.days}, {"domain_mean", r.map.domain_mean}}};
    write_fppg(map_path, arr);
    m.output(map_path);
    reports.emplace(name, std::move(r));
  }
  nlohmann::json j{{"partition", a.partition}, {"lead", cfg.lead}, {"reference", cfg.eval.reference}};
  std::vector<EvalReport> ordered;
  for (const auto& [name, r] : reports) {
    j["products"][name] = to_json(r);
    ordered.push_back(r);
  }
  if (const auto ref = reports.find(cfg.eval.reference); ref != reports.end()) {
    for (const auto& [name, r] : reports) j["normalized"][name] = to_json(normalize_by_reference(r, ref->second));
  }
  const auto json_path = cfg.out("report_" + a.partition + ".json");
  const auto csv_path = cfg.out("report_" + a.partition + ".csv");
  write_json(json_path, j);
  io::write_file(csv_path, report_csv(ordered, cfg.eval.bins));
  m.output(json_path);
  m.output(csv_path);
  m.write(cfg.out_dir);
  std::printf("evaluate (%s, %zu days, %zu cells):\n", a.partition.c_str(), obs.size(), obs.front().mask->count());
  for (const auto& [name, r] : reports) {
    std::printf("  %-6s rmse %.6g  mean pcc %s\n", name.c_str(), r.rmse,
                r.mean_pcc ? std::to_string(*r.mean_pcc).c_str() : "n/a");
  }
}

inline void cmd_events(const RunConfig& cfg, const EvalArgs& a) {
  Manifest m("events", cfg.effective);
  require_file(cfg.obs_path());
  m.input(cfg.obs_path());
  const auto all_obs = read_precip_series(cfg.obs_path());
  const auto obs = partition_days(all_obs, cfg.split, parse_partition(a.partition));
  const auto events = detect_events(obs, cfg.eval.event_threshold, cfg.eval.event_min_cells);
  const auto products = gather_products(cfg, a, all_obs, m);
  const auto rows = event_table(events, products, obs);
  fs::create_directories(cfg.out_dir);
  const auto json_path = cfg.out("events_" + a.partition + ".json");
  const auto csv_path = cfg.out("events_" + a.partition + ".csv");
  write_json(json_path, {{"partition", a.partition},
                         {"threshold_mm", cfg.eval.event_threshold},
                         {"min_cells", cfg.eval.event_min_cells},
                         {"events", to_json(rows)}});
  io::write_file(csv_path, event_csv(rows));
  m.output(json_path);
  m.output(csv_path);
  m.write(cfg.out_dir);
  std::cout << "events: " << rows.size() << " event day(s) in " << obs.size() << " " << a.partition << " days\n";
  for (const auto& r : rows) std::cout << "  " << r.date.iso() << "  " << r.exceed_count << " cells  best " << r.best << "\n";
}

// ---- gradcheck ----------------------------------------------------------------

/// Returns the worst relative error.
inline double cmd_gradcheck(const RunConfig& cfg, double eps, double tolerance) {
  Manifest m("gradcheck", cfg.effective);
  nlohmann::json nj{{"channels", "RU"},     {"levels", 10},   {"nlat", 12}, {"nlon", 16},
                    {"conv_filters", {2, 2, 2, 2}}, {"fc_width", 8}, {"output_dim", 6}};
  nj.update(cfg.network);
  nj["precision"] = 64;
  Network<double> net(nj.get<NetworkConfig>());
  Rng rng(derive_seed(cfg.seed, 0x6c));
  Tensor<double> input(net.input_shape());
  for (auto& v : input.data()) v = rng.normal();
  Tensor<double> target(Shape{net.config().output_dim});
  for (auto& v : target.data()) v = rng.uniform(0.0, 2.0);
  const auto dropout_seed = derive_seed(cfg.seed, 0xd0);
  const auto res = grad_check(net.parameters(), [&](Tape<double>& tape) {
    Rng drop(dropout_seed);
    return mse_loss(net.forward(tape, input, Mode::Train, drop), tape.constant(target));
  }, eps);
  fs::create_directories(cfg.out_dir);
  const nlohmann::json j{{"max_rel_error", res.max_rel_error}, {"worst_parameter", res.worst_parameter},
                         {"worst_index", res.worst_index},     {"analytic", res.analytic},
                         {"numeric", res.numeric},             {"checked", res.checked},
                         {"eps", eps},                         {"tolerance", tolerance},
                         {"network", net.config()},            {"passed", res.max_rel_error < tolerance}};
  write_json(cfg.out("gradcheck.json"), j);
  m.output(cfg.out("gradcheck.json"));
  m.write(cfg.out_dir);
  std::printf("gradcheck: %zu gradients checked, max relative error %.3e (%s[%zu]: analytic %.10g, numeric %.10g)\n",
              res.checked, res.max_rel_error, res.worst_parameter.c_str(), res.worst_index, res.analytic, res.numeric);
  return res.max_rel_error;
}

}  // namespace fpp::cli
