// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gaitlab/cli.hpp"
#include "gaitlab/config.hpp"
#include "gaitlab/gait_analysis.hpp"
#include "gaitlab/harness.hpp"
#include "gaitlab/phase_core.hpp"

using namespace gaitlab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  Outcome o{false, ""};
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << title << " -- " << o.detail << std::endl;
}

std::string num(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

Outcome fixed_points() {
  const OscillatorParams standing(1, 4, 1);
  const auto t0 = Clock::now();
  const std::vector<FixedPoint> pts = find_fixed_points(standing, 0.25);
  const double elapsed = seconds_since(t0);
  const std::vector<FixedPoint> marginal = find_fixed_points(OscillatorParams(1, 4, 0), 0.25);

  bool ok = pts.size() == 2 && std::abs(pts[0].phase - kPi / 2) < 1e-9 && pts[0].stability == Stability::Unstable &&
            std::abs(pts[1].phase - 1.5 * kPi) < 1e-9 && pts[1].stability == Stability::Stable;
  ok = ok && marginal.size() == 1 && std::abs(marginal[0].phase) < 1e-9 && marginal[0].stability == Stability::Marginal;
  ok = ok && elapsed < 1e-3;
  return {ok, "points " + std::to_string(pts.size()) + "+" + std::to_string(marginal.size()) + ", " +
                  num(elapsed * 1e6, 3) + " us"};
}

Outcome rate_cap() {
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> ph(-20.0, 20.0), load(0.0, 1.0), om(0.1, 4.0), sg(0.0, 8.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100000; ++i) {
    const OscillatorParams p(om(rng), sg(rng), 1.0);
    worst = std::max(worst, phase_rate(ph(rng), load(rng), p) - kTwoPi * p.omega());
  }
  return {worst <= 1e-12, "max excess over 2*pi*omega " + num(worst)};
}

Outcome schedule_table() {
  struct Row {
    double v, omega, sigma, xi;
  };
  const std::vector<Row> table{{0.0, 1, 4, 1},   {0.5, 1, 4, 1},  {-0.5, 1, 4, 1}, {1.0, 2.5, 1, 0},
                               {-1.0, 2.5, 1, 0}, {2.5, 4, 1, 0}, {-2.5, 4, 1, 0}, {5.0, 4, 1, 0},
                               {-5.0, 4, 1, 0}};
  std::size_t bad = 0;
  for (const Row& r : table) bad += schedule_params(r.v) != OscillatorParams(r.omega, r.sigma, r.xi);
  return {bad == 0, std::to_string(table.size() - bad) + "/" + std::to_string(table.size()) + " rows exact"};
}

Outcome classifier_oracle() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  std::size_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const RpdSample s{{u(rng), u(rng), u(rng)}, 0.0, 1.0};
    double best = std::numeric_limits<double>::infinity();
    GaitLabel nearest = GaitLabel::Trot;
    for (std::size_t g = 0; g < kIdealRpd.size(); ++g) {
      double sq = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        double m = std::numeric_limits<double>::infinity();
        for (int k = -2; k <= 2; ++k) m = std::min(m, std::abs(s.values[c] - kIdealRpd[g][c] + k * kTwoPi));
        sq += m * m;
      }
      if (std::sqrt(sq) < best) {
        best = std::sqrt(sq);
        nearest = kIdealGaits[g];
      }
    }
    const GaitLabel want = best > 2.0 ? GaitLabel::Transition : nearest;
    mismatches += classify_gait(s).label != want;
  }
  std::size_t ideal_ok = 0;
  for (std::size_t g = 0; g < kIdealRpd.size(); ++g) {
    const Classification c = classify_gait(RpdSample{kIdealRpd[g], 0.0, 1.0});
    ideal_ok += c.label == kIdealGaits[g] && c.distance == 0.0;
  }
  return {mismatches == 0 && ideal_ok == 4,
          std::to_string(mismatches) + " mismatches, " + std::to_string(ideal_ok) + "/4 ideal gaits at distance 0"};
}

Outcome rpd_round_trip() {
  const double dt = 0.002;
  std::size_t samples = 0, timing_bad = 0, label_bad = 0;
  double worst = 0.0;
  for (double freq = 1.0; freq <= 4.0 + 1e-9; freq += 0.25) {
    for (std::size_t g = 0; g < kIdealRpd.size(); ++g) {
      const double period = 1.0 / freq;
      GrfSeries series;
      series.sample_dt = dt;
      const std::size_t n = static_cast<std::size_t>(8.0 / dt);
      for (std::size_t i = 0; i < n; ++i) {
        PerLeg<double> f{};
        for (std::size_t leg = 0; leg < kLegCount; ++leg) {
          const double lag = leg == 0 ? 0.0 : kIdealRpd[g][leg - 1] / kTwoPi * period;
          const double u = (double(i) * dt - 0.0191 - lag) / period;
          f[leg] = (u - std::floor(u)) < 0.5 ? 0.5 : 0.0;
        }
        series.values.push_back(f);
      }
      const RpdResult r = compute_rpd(detect_touchdowns(series));
      for (const RpdSample& s : r.samples) {
        ++samples;
        for (std::size_t c = 0; c < 3; ++c) {
          const double err_time = std::abs(wrap_signed(s.values[c] - kIdealRpd[g][c])) * s.cycle_length / kTwoPi;
          worst = std::max(worst, err_time);
          timing_bad += err_time >= dt;
        }
        label_bad += classify_gait(s).label != kIdealGaits[g];
      }
    }
  }
  return {samples > 0 && timing_bad == 0 && label_bad == 0,
          std::to_string(samples) + " cycles, worst timing error " + num(worst * 1e3) + " ms, " +
              std::to_string(label_bad) + " mislabeled"};
}

Outcome decentralization() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ph(0.0, kTwoPi), load(0.0, 1.0);
  std::size_t cases = 0, leaks = 0;
  for (int trial = 0; trial < 200; ++trial) {
    PerLeg<double> phases{}, loads{};
    for (std::size_t i = 0; i < kLegCount; ++i) {
      phases[i] = ph(rng);
      loads[i] = load(rng);
    }
    const OscillatorBank bank(phases, OscillatorParams(2.5, 1.0, 0.0), CouplingMode::Decentralized);
    const OscillatorBank base = step_oscillator(bank, GrfVector(loads), kDefaultDt);
    for (std::size_t j = 0; j < kLegCount; ++j) {
      PerLeg<double> p2 = phases, l2 = loads;
      p2[j] = ph(rng);
      l2[j] = load(rng);
      const OscillatorBank moved = step_oscillator(bank.with_phases(p2), GrfVector(l2), kDefaultDt);
      for (std::size_t i = 0; i < kLegCount; ++i) {
        if (i == j) continue;
        ++cases;
        leaks += moved.phases()[i] != base.phases()[i];
      }
    }
  }
  return {leaks == 0, std::to_string(cases) + " leg-pair cases, " + std::to_string(leaks) + " cross-influences"};
}

std::vector<std::uint64_t> seeds(std::size_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = i + 1;
  return s;
}

Outcome tracking_baseline() {
  RunConfig c;
  c.experiment.type = ExperimentType::Emergence;
  c.experiment.duration = 40.0;
  c.experiment.v_x = 1.0;
  c.experiment.eval_sigma = 0.0;
  const auto t0 = Clock::now();
  const EmergenceResult r = emergence_experiment(c, seeds(100));
  const double elapsed = seconds_since(t0);
  std::size_t tracked = 0;
  for (const EmergenceRecord& rec : r.records) {
    if (!rec.final_rpd) continue;
    double sq = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double d = wrap_signed(rec.final_rpd->rpd.values[k] - rec.initial_rpd[k]);
      sq += d * d;
    }
    tracked += std::sqrt(sq) < 0.05;
  }
  return {tracked >= 95 && elapsed < 120.0,
          std::to_string(tracked) + "/100 within 0.05 rad, " + num(elapsed, 3) + " s"};
}

Outcome entrainment() {
  RunConfig c;
  c.experiment.type = ExperimentType::Emergence;
  c.experiment.duration = 40.0;
  c.experiment.v_x = 1.0;
  const EmergenceResult r = emergence_experiment(c, seeds(100));
  const double walking = r.stationary_fraction();

  RunConfig stand;
  stand.experiment.v_x = 0.0;
  stand.experiment.terminate_on_failure = false;
  const std::vector<std::uint64_t> s = seeds(100);
  std::vector<char> settled(s.size(), 0);
  parallel_for(s.size(), [&](std::size_t i) {
    Simulator sim(SimSettings::from(stand), OrcMask{}, s[i]);
    sim.run_to_step(steps_for(10.0, stand.oscillator.dt));
    bool ok = true;
    for (double p : sim.bank().phases()) ok = ok && std::abs(wrap_signed(p - 1.5 * kPi)) < 0.05;
    settled[i] = ok;
  });
  const double standing = double(std::count(settled.begin(), settled.end(), 1)) / double(s.size());
  return {walking >= 0.7 && standing >= 0.9,
          "walking stationary " + num(100 * walking, 3) + "%, standing settled " + num(100 * standing, 3) + "%"};
}

Outcome schedule_audit() {
  RunConfig c;
  c.experiment.type = ExperimentType::Disturbance;
  c.experiment.v_x = 3.0;
  // Short settle and window: the audit concerns assignment, not outcomes.
  c.experiment.perturbation.settle = 0.5;
  c.experiment.perturbation.window = 0.05;
  c.experiment.perturbation.magnitudes = {1.5};
  const PerturbationSchedule& ps = c.experiment.perturbation;
  const std::vector<std::uint64_t> family{1};
  const DisturbanceResult r = disturbance_experiment(c, family);

  bool ok = r.trials.size() == 1800 && ps.groups == 50 && ps.group_size == 36;
  std::set<std::pair<long, long>> cells;
  std::set<std::size_t> ids;
  double t_min = std::numeric_limits<double>::infinity(), t_max = -t_min;
  for (const DisturbanceTrial& t : r.trials) {
    if (!t.applied) {
      ok = false;
      continue;
    }
    const long group = std::lround((t.applied->time - ps.settle) / 0.01);
    const double ang = std::atan2(t.applied->delta.y, t.applied->delta.x) * 180.0 / kPi;
    const long angle = std::lround(wrap_phase(ang * kPi / 180.0) * 180.0 / kPi / 10.0) % 36;
    ok = ok && std::abs(t.applied->time - (ps.settle + 0.01 * double(group))) < 1e-9;
    ok = ok && std::abs(std::remainder(ang - 10.0 * double(angle), 360.0)) < 1e-9;
    ok = ok && std::size_t(group) * 36 + std::size_t(angle) == t.trial;
    cells.insert({group, angle});
    ids.insert(t.trial);
    t_min = std::min(t_min, t.applied->time);
    t_max = std::max(t_max, t.applied->time);
  }
  ok = ok && cells.size() == 1800 && ids.size() == 1800;
  const double span = t_max - t_min + 0.01;
  ok = ok && std::abs(span - 0.5) < 1e-9;
  return {ok, std::to_string(r.trials.size()) + " trials, " + std::to_string(cells.size()) +
                  " distinct (group, angle) cells, window " + num(span, 6) + " s"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"gaitlab"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "gaitlab_acceptance_replay";
  fs::remove_all(root);
  fs::create_directories(root);
  struct Case {
    std::string name, config;
    std::vector<std::string> outputs;
  };
  const std::vector<Case> cases{
      {"balance", R"({"experiment": {"type": "balance", "duration": 5.0}, "seed": {"count": 8}})",
       {"fig4_balance.csv", "fig4_balance_summary.csv"}},
      {"emergence", R"({"experiment": {"type": "emergence", "duration": 20.0}, "seed": {"count": 8}})",
       {"fig5_rpd.csv", "fig6_labels.csv"}},
      {"disturbance",
       R"({"experiment": {"type": "disturbance", "v_x": 3.0, "masks": ["ORC111", "ORC110"],
           "perturbation": {"settle": 2.0, "groups": 2, "window": 1.0}},
           "plant": {"step_length_gain": 0.1}, "seed": {"count": 2}})",
       {"table1_failures.csv", "table1_failures_long.csv"}}};

  std::size_t identical = 0, total = 0;
  for (const Case& c : cases) {
    const fs::path cfg = root / (c.name + ".json");
    std::ofstream(cfg) << c.config;
    const fs::path first = root / (c.name + "_first"), second = root / (c.name + "_replay");
    if (cli({"experiment", "--config", cfg.string(), "--out", first.string()}) != 0) continue;
    if (cli({"experiment", "--config", (first / "manifest.json").string(), "--out", second.string()}) != 0) continue;
    for (const std::string& f : c.outputs) {
      ++total;
      const std::string a = slurp(first / f);
      identical += !a.empty() && a == slurp(second / f);
    }
  }
  fs::remove_all(root);
  return {total == 6 && identical == total,
          std::to_string(identical) + "/6 summary CSVs byte-identical on manifest replay"};
}

}  // namespace

int main() {
  report(1, "fixed-point exactness", fixed_points);
  report(2, "rate cap", rate_cap);
  report(3, "schedule table", schedule_table);
  report(4, "classifier oracle", classifier_oracle);
  report(5, "RPD round trip", rpd_round_trip);
  report(6, "decentralization", decentralization);
  report(7, "tracking baseline", tracking_baseline);
  report(8, "surrogate entrainment", entrainment);
  report(9, "perturbation schedule exactness", schedule_audit);
  report(10, "determinism", determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
