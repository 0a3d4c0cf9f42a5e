// fpp: command-line front end for the precipitation pipeline.
//
//   fpp synth --config run.json
//   fpp stats|train|predict|tune|scan-weight|blend|evaluate|events --config run.json
//   fpp gradcheck --config mini.json
//
// Exit codes: 0 success, 2 usage, 3 configuration, 4 I/O or file format,
// 5 numerical failure, 6 other data/domain errors, 1 unexpected.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

enum ExitCode { kOk = 0, kUnexpected = 1, kUsage = 2, kConfig = 3, kIo = 4, kNumerical = 5, kDomain = 6 };

int exit_code(fpp::ErrorKind k) {
  switch (k) {
    case fpp::ErrorKind::Config:
    case fpp::ErrorKind::Shape: return kConfig;
    case fpp::ErrorKind::Io:
    case fpp::ErrorKind::Format: return kIo;
    case fpp::ErrorKind::Numerical: return kNumerical;
    case fpp::ErrorKind::Domain:
    case fpp::ErrorKind::State: return kDomain;
  }
  return kUnexpected;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fpp::cli;
  CLI::App app{"Fast precipitation prediction from 3D meteorology"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fpp::kVersion);

  std::optional<fs::path> config_path;
  Overrides ov;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)");
    sub->add_option("--seed", ov.seed, "Seed (overrides config)");
    sub->add_option("--lead", ov.lead, "Forecast lead in days")->check(CLI::PositiveNumber);
    sub->add_option("--out", ov.out, "Output directory (synth: data directory)");
    sub->add_option("--precision", ov.precision, "Network precision")->check(CLI::IsMember({32, 64}));
    sub->add_option("--threads", ov.threads, "Worker threads (default: $FPP_THREADS or 1)")->check(CLI::PositiveNumber);
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  common(synth);

  RegridArgs regrid_args;
  auto* regrid = app.add_subcommand("regrid", "Conservatively regrid a fine precipitation series");
  common(regrid);
  regrid->add_option("--src", regrid_args.src, "Fine-grid precipitation series")->required();
  regrid->add_option("--output", regrid_args.output, "Destination series file")->required();
  regrid->add_option("--dst-grid", regrid_args.dst_grid, "Destination grid JSON (default: ERA domain 80x128)");
  regrid->add_option("--threshold", regrid_args.threshold, "Coverage fraction for mask membership")
      ->check(CLI::Range(0.0, 1.0));

  auto* stats = app.add_subcommand("stats", "Normalization statistics of the training inputs");
  common(stats);
  auto* train = app.add_subcommand("train", "Train the network");
  common(train);

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Raw predictions (RP) for data partitions");
  common(predict);
  predict->add_option("--checkpoint", predict_args.checkpoint, "Checkpoint (default: <out>/model.fppc)");
  predict->add_option("--partition", predict_args.partitions, "train, val, test or all (repeatable)")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));

  TuneArgs tune_args;
  auto* tune = app.add_subcommand("tune", "Fit A on validation and tune predictions (TP)");
  common(tune);
  tune->add_option("--input", tune_args.input, "Tune this series instead of the run's rp_* files");
  tune->add_option("--output", tune_args.output, "Output for --input");
  tune->add_option("--A", tune_args.A, "Use this augmentation factor instead of fitting")->check(CLI::PositiveNumber);

  ScanArgs scan_args;
  auto* scan = app.add_subcommand("scan-weight", "Scan the blend weight on validation data");
  common(scan);
  scan->add_option("--tp", scan_args.tp, "Tuned series (default: <out>/tp_val.fppg)");
  scan->add_option("--reference", scan_args.reference, "Reference forecast series");
  scan->add_option("--obs", scan_args.obs, "Observation series");

  BlendArgs blend_args;
  auto* blend = app.add_subcommand("blend", "Blend tuned predictions with the reference forecast (WP)");
  common(blend);
  blend->add_option("--tp", blend_args.tp, "Blend this series instead of the run's tp_* files");
  blend->add_option("--reference", blend_args.reference, "Reference forecast series");
  blend->add_option("--output", blend_args.output, "Output for --tp");
  blend->add_option("--w", blend_args.w, "Weight of the tuned prediction")->check(CLI::Range(0.0, 1.0));

  EnsembleArgs ens_args;
  auto* ensemble = app.add_subcommand("ensemble", "Elementwise mean of member prediction series");
  common(ensemble);
  ensemble->add_option("--inputs", ens_args.inputs, "Member series")->required();
  ensemble->add_option("--output", ens_args.output, "Output series")->required();
  ensemble->add_option("--product", ens_args.product, "Product name of the mean");

  EvalArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Verification report for a partition");
  common(evaluate);
  evaluate->add_option("--partition", eval_args.partition, "val or test")->check(CLI::IsMember({"val", "test"}));
  evaluate->add_option("--pred", eval_args.extra, "Extra product NAME=PATH (repeatable)");

  EvalArgs event_args;
  auto* events = app.add_subcommand("events", "Extreme-event table for a partition");
  common(events);
  events->add_option("--partition", event_args.partition, "val or test")->check(CLI::IsMember({"val", "test"}));
  events->add_option("--pred", event_args.extra, "Extra product NAME=PATH (repeatable)");

  double gc_eps = 1e-5, gc_tol = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of network gradients (64-bit)");
  common(gradcheck);
  gradcheck->add_option("--eps", gc_eps, "Central-difference step");
  gradcheck->add_option("--tolerance", gc_tol, "Pass threshold on the max relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    auto cfg = load_run_config(config_path, ov);
    if (synth->parsed()) {
      if (ov.out) cfg.data_dir = *ov.out;
      cmd_synth(cfg);
    } else if (regrid->parsed()) {
      cmd_regrid(cfg, regrid_args);
    } else if (stats->parsed()) {
      cmd_stats(cfg);
    } else if (train->parsed()) {
      cmd_train(cfg);
    } else if (predict->parsed()) {
      cmd_predict(cfg, predict_args);
    } else if (tune->parsed()) {
      cmd_tune(cfg, tune_args);
    } else if (scan->parsed()) {
      cmd_scan_weight(cfg, scan_args);
    } else if (blend->parsed()) {
      cmd_blend(cfg, blend_args);
    } else if (ensemble->parsed()) {
      cmd_ensemble(cfg, ens_args);
    } else if (evaluate->parsed()) {
      cmd_evaluate(cfg, eval_args);
    } else if (events->parsed()) {
      cmd_events(cfg, event_args);
    } else if (gradcheck->parsed()) {
      const double err = cmd_gradcheck(cfg, gc_eps, gc_tol);
      if (!(err < gc_tol)) {
        std::cerr << "gradcheck: FAILED (tolerance " << gc_tol << ")\n";
        return kNumerical;
      }
      std::cout << "gradcheck: passed (tolerance " << gc_tol << ")\n";
    }
  } catch (const fpp::Error& e) {
    std::cerr << "fpp: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "fpp: config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "fpp: io error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "fpp: " << e.what() << "\n";
    return kUnexpected;
  }
  return kOk;
}
