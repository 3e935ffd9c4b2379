#include "gaitlab/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gaitlab/config.hpp"
#include "gaitlab/gait_analysis.hpp"
#include "gaitlab/harness.hpp"
#include "gaitlab/io.hpp"
#include "gaitlab/kernels.hpp"
#include "gaitlab/phase_core.hpp"

namespace gaitlab {

namespace {

using nlohmann::json;

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config_path, "Run config (JSON, comments allowed) or a manifest to replay")
      ->required();
  cmd->add_option("--seed", o.seed, "Base seed; overrides seed.base");
  cmd->add_option("--out", o.out_dir, "Output directory; overrides output.directory");
  cmd->add_option("--override", o.overrides, "key.path=value, repeatable");
}

// Loads a config or a manifest, applies command-line overrides, and selects
// the SIMD kernel the run should use.
RunConfig prepare(const RunOptions& o) {
  std::ifstream in(o.config_path);
  if (!in) throw ConfigError("<file>", "cannot open '" + o.config_path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("parse error: ") + e.what());
  }
  std::string kernel;
  if (auto replay = as_manifest(j)) {
    j = replay->config;
    kernel = replay->kernel;
  }
  for (const std::string& ov : o.overrides) apply_override(j, ov);
  if (o.seed) j["seed"]["base"] = *o.seed;
  if (o.out_dir) j["output"]["directory"] = *o.out_dir;
  RunConfig config = RunConfig::from_json(j);

  if (kernel.empty()) kernel = config.oscillator.kernel;
  if (kernel != "auto") {
    try {
      kernels::select(kernels::parse_isa(kernel));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("oscillator.kernel", e.what());
    }
  }
  return config;
}

std::string rollout_stem(const OrcMask& mask, std::uint64_t seed) {
  return mask.name() + "_seed" + std::to_string(seed);
}

void finish_run(const std::string& command, const RunConfig& config, const std::vector<std::uint64_t>& seeds,
                std::vector<WrittenFile>& files, std::ostream& out) {
  const std::filesystem::path dir = config.output.directory;
  const json manifest = make_manifest(command, config, seeds, files);
  write_output(dir, "manifest.json", manifest.dump(2) + "\n");
  out << "config digest: " << config.digest() << "\n";
  out << "kernel: " << kernels::isa_name(kernels::active().isa) << "\n";
  for (const WrittenFile& f : files) out << "wrote " << (dir / f.name).string() << "\n";
  out << "wrote " << (dir / "manifest.json").string() << "\n";
}

void run_rollouts(const std::string& command, const RunConfig& config, std::ostream& out) {
  const std::vector<std::uint64_t> seeds = config.seeds();
  std::vector<std::pair<OrcMask, std::uint64_t>> jobs;
  for (const OrcMask& m : config.experiment.masks)
    for (std::uint64_t s : seeds) jobs.emplace_back(m, s);

  std::vector<RolloutLog> logs(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) { logs[i] = run_rollout(config, jobs[i].first, jobs[i].second); });

  const std::filesystem::path dir = config.output.directory;
  std::vector<WrittenFile> files;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const std::string stem = rollout_stem(jobs[i].first, jobs[i].second);
    files.push_back(write_output(dir, "rollout_" + stem + ".csv", rollout_csv(logs[i])));
    files.push_back(write_output(dir, "events_" + stem + ".csv", events_csv(logs[i])));
    if (logs[i].failure_time)
      out << stem << " failed at t=" << fmt(*logs[i].failure_time, 3) << " s\n";
  }
  finish_run(command, config, seeds, files, out);
}

int cmd_simulate(const RunOptions& o, std::ostream& out) {
  run_rollouts("simulate", prepare(o), out);
  return 0;
}

int cmd_experiment(const RunOptions& o, std::ostream& out) {
  const RunConfig config = prepare(o);
  const std::vector<std::uint64_t> seeds = config.seeds();
  const std::filesystem::path dir = config.output.directory;
  std::vector<WrittenFile> files;

  switch (config.experiment.type) {
    case ExperimentType::Rollout:
      run_rollouts("experiment", config, out);
      return 0;
    case ExperimentType::Balance: {
      const BalanceResult r = balance_experiment(config, seeds);
      files.push_back(write_output(dir, "fig4_balance.csv", balance_csv(r)));
      files.push_back(write_output(dir, "fig4_balance_summary.csv", balance_summary_csv(r)));
      break;
    }
    case ExperimentType::Emergence: {
      const EmergenceResult r = emergence_experiment(config, seeds);
      files.push_back(write_output(dir, "fig5_rpd.csv", emergence_csv(r)));
      files.push_back(write_output(dir, "fig6_labels.csv", labels_csv(r)));
      out << "stationary fraction: " << fmt(r.stationary_fraction(), 4) << "\n";
      break;
    }
    case ExperimentType::Disturbance: {
      const DisturbanceResult r = disturbance_experiment(config, seeds);
      files.push_back(write_output(dir, "table1_failures.csv", failure_table_csv(r)));
      files.push_back(write_output(dir, "table1_failures_long.csv", failure_detail_csv(r)));
      break;
    }
  }
  finish_run("experiment", config, seeds, files, out);
  return 0;
}

struct FixedPointOptions {
  double omega = 1.0;
  double sigma = 0.0;
  double xi = 0.0;
  double grf = 0.0;
  std::size_t curve = 0;
};

int cmd_fixed_points(const FixedPointOptions& o, std::ostream& out) {
  const OscillatorParams params(o.omega, o.sigma, o.xi);
  const std::vector<FixedPoint> points = find_fixed_points(params, o.grf);
  if (points.empty()) {
    out << "no fixed points\n";
  } else {
    out << "phase_rad,phase_deg,stability\n";
    for (const FixedPoint& p : points)
      out << fmt(p.phase) << ',' << fmt(p.phase * 180.0 / kPi, 6) << ',' << stability_name(p.stability) << "\n";
  }
  if (o.curve > 0) {
    out << "\nphase_rad,rate_rad_s\n";
    for (std::size_t k = 0; k < o.curve; ++k) {
      const double phi = kTwoPi * static_cast<double>(k) / static_cast<double>(o.curve);
      out << fmt(phi) << ',' << fmt(phase_rate(phi, o.grf, params)) << "\n";
    }
  }
  return 0;
}

struct ClassifyOptions {
  std::string input;
  std::optional<std::string> output;
  bool aggregate = false;
  bool raw_distance = false;
  double threshold = kDefaultTouchdownThreshold;
  double debounce = kDefaultDebounce;
  std::size_t window_cycles = 2;
  double stride = 5.0;
};

int cmd_classify(const ClassifyOptions& o, std::ostream& out, std::ostream& err) {
  std::ifstream in(o.input);
  if (!in) {
    err << "error: cannot open '" << o.input << "'\n";
    return 1;
  }
  std::string header;
  std::getline(in, header);
  in.clear();
  in.seekg(0);

  TouchdownLog log;
  double end_time = 0.0;
  if (header.find("grf_rf") != std::string::npos) {
    const GrfSeries series = read_rollout_grf(in);
    log = detect_touchdowns(series, o.threshold, o.debounce);
    end_time = series.start_time + series.sample_dt * static_cast<double>(series.values.size() - 1);
  } else {
    log = read_touchdown_csv(in);
    for (const auto& list : log.touchdowns)
      if (!list.empty()) end_time = std::max(end_time, list.back());
  }

  const bool wrap = !o.raw_distance;
  const RpdResult rpd = compute_rpd(log);
  std::string csv;
  if (o.aggregate) {
    const std::vector<AggregatedRpd> ticks = aggregate_rpd(rpd.samples, end_time, o.window_cycles, o.stride, wrap);
    csv = aggregated_rpd_csv(ticks);
  } else {
    csv = rpd_csv(rpd.samples, wrap);
  }
  if (!rpd.reason.empty()) err << "no RPD samples: " << rpd.reason << "\n";
  if (rpd.incomplete_cycles > 0) err << rpd.incomplete_cycles << " incomplete cycle(s) skipped\n";

  if (o.output) {
    std::ofstream f(*o.output, std::ios::binary);
    if (!f) {
      err << "error: cannot write '" << *o.output << "'\n";
      return 1;
    }
    f << csv;
  } else {
    out << csv;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decentralized phase-oscillator locomotion toolkit", "gaitlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  RunOptions sim_opts;
  auto* simulate = app.add_subcommand("simulate", "Run seeded rollouts and write per-rollout logs");
  add_run_options(simulate, sim_opts);

  RunOptions exp_opts;
  auto* experiment = app.add_subcommand("experiment", "Run the configured experiment and write summary CSVs");
  add_run_options(experiment, exp_opts);

  FixedPointOptions fp;
  auto* fixed = app.add_subcommand("fixed-points", "List oscillator fixed points at a constant load");
  fixed->add_option("--omega", fp.omega, "Nominal frequency, Hz")->required();
  fixed->add_option("--sigma", fp.sigma, "Feedback gain")->required();
  fixed->add_option("--xi", fp.xi, "Feedback offset")->required();
  fixed->add_option("--grf", fp.grf, "Normalized load")->required();
  fixed->add_option("--curve", fp.curve, "Also print the rate at N evenly spaced phases");

  ClassifyOptions cl;
  auto* classify = app.add_subcommand("classify", "RPD and gait labels from a touchdown CSV or a rollout log");
  classify->add_option("input", cl.input, "touchdown CSV (leg,time_s[,kind]) or rollout CSV")->required();
  classify->add_option("--out", cl.output, "Write the CSV here instead of standard output");
  classify->add_flag("--aggregate", cl.aggregate, "Emit the periodic two-cycle averages instead of every cycle");
  classify->add_flag("--raw-distance", cl.raw_distance, "Classify by plain Euclidean distance (no wrap)");
  classify->add_option("--threshold", cl.threshold, "Contact threshold for rollout logs");
  classify->add_option("--debounce", cl.debounce, "Debounce for rollout logs, s");
  classify->add_option("--window-cycles", cl.window_cycles, "Cycles per aggregate");
  classify->add_option("--stride", cl.stride, "Aggregation stride, s");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim_opts, out);
    if (experiment->parsed()) return cmd_experiment(exp_opts, out);
    if (fixed->parsed()) return cmd_fixed_points(fp, out);
    if (classify->parsed()) return cmd_classify(cl, out, err);
  } catch (const ConfigError& e) {
    err << "config error at '" << e.key() << "': " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << cl.input << ": " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace gaitlab
