#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

#include "gaitlab/harness.hpp"

namespace gaitlab {

namespace {

struct Job {
  OrcMask mask;
  std::uint64_t seed;
};

std::vector<Job> jobs_for(const RunConfig& config, std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
  if (config.experiment.masks.empty()) throw std::invalid_argument("experiment needs at least one ORC mask");
  std::vector<Job> jobs;
  for (const OrcMask& mask : config.experiment.masks)
    for (std::uint64_t seed : seeds) jobs.push_back({mask, seed});
  return jobs;
}

// Linear interpolation between order statistics (the common "type 7" rule).
double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double rpd_distance(const std::array<double, 3>& a, const std::array<double, 3>& b, bool wrap_aware) {
  double sum = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double d = wrap_aware ? wrap_signed(a[k] - b[k]) : a[k] - b[k];
    sum += d * d;
  }
  return std::sqrt(sum);
}

template <class Result>
void check_digests(std::span<const Result> parts) {
  if (parts.empty()) throw std::invalid_argument("nothing to merge");
  for (const Result& p : parts)
    if (p.config_digest != parts.front().config_digest)
      throw std::invalid_argument("config digest mismatch: " + parts.front().config_digest + " vs " +
                                  p.config_digest);
}

}  // namespace

// ---- balance ---------------------------------------------------------------

PerLeg<double> mean_leg_load(const RolloutLog& log) {
  PerLeg<double> mean{};
  if (log.grf.empty()) return mean;
  for (const PerLeg<double>& g : log.grf)
    for (std::size_t i = 0; i < kLegCount; ++i) mean[i] += g[i];
  for (double& m : mean) m /= static_cast<double>(log.grf.size());
  return mean;
}

BalanceResult balance_experiment(const RunConfig& config, std::span<const std::uint64_t> seeds) {
  const std::vector<Job> jobs = jobs_for(config, seeds);
  BalanceResult result;
  result.config_digest = config.digest();
  result.records.resize(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const RolloutLog log = run_rollout(config, jobs[i].mask, jobs[i].seed);
    result.records[i] = {jobs[i].seed, jobs[i].mask, mean_leg_load(log), log.failure_time};
  });
  return result;
}

std::vector<BalanceSummary> BalanceResult::summarize() const {
  std::map<std::string, BalanceSummary> by_mask;
  std::map<std::string, PerLeg<std::vector<double>>> values;
  for (const BalanceRecord& r : records) {
    const std::string key = r.mask.name();
    BalanceSummary& s = by_mask[key];
    s.mask = r.mask;
    if (r.failure_time) {
      ++s.failed;
      continue;
    }
    for (std::size_t i = 0; i < kLegCount; ++i) values[key][i].push_back(r.mean_grf[i]);
  }
  std::vector<BalanceSummary> out;
  for (auto& [key, s] : by_mask) {
    for (std::size_t i = 0; i < kLegCount; ++i) {
      std::vector<double>& v = values[key][i];
      std::sort(v.begin(), v.end());
      LegDistribution& d = s.legs[i];
      d.count = v.size();
      if (v.empty()) continue;
      double sum = 0.0;
      for (double x : v) sum += x;
      d.mean = sum / static_cast<double>(v.size());
      d.min = v.front();
      d.q25 = quantile(v, 0.25);
      d.median = quantile(v, 0.5);
      d.q75 = quantile(v, 0.75);
      d.max = v.back();
    }
    out.push_back(s);
  }
  return out;
}

// ---- emergence -------------------------------------------------------------

std::array<double, 3> phase_difference_rpd(const PerLeg<double>& phases) noexcept {
  const double ref = phases[index(Leg::RF)];
  return {wrap_phase(ref - phases[index(Leg::LF)]), wrap_phase(ref - phases[index(Leg::RH)]),
          wrap_phase(ref - phases[index(Leg::LH)])};
}

EmergenceRecord analyze_emergence(const RolloutLog& log, const AnalysisSection& analysis) {
  EmergenceRecord rec;
  rec.seed = log.seed;
  rec.mask = log.mask;
  rec.failure_time = log.failure_time;
  rec.initial_rpd = phase_difference_rpd(log.initial_phases);

  const RpdResult rpd = compute_rpd(log.touchdown_log());
  rec.incomplete_cycles = rpd.incomplete_cycles;
  rec.ticks = aggregate_rpd(rpd.samples, log.end_time, analysis.window_cycles, analysis.stride, analysis.wrap_aware);
  if (rec.ticks.empty()) return rec;
  rec.final_rpd = rec.ticks.back();

  std::size_t first_stable = rec.ticks.size() - 1;
  while (first_stable > 0 && rec.ticks[first_stable - 1].gait.label == rec.final_rpd->gait.label) --first_stable;
  rec.convergence_time = rec.ticks[first_stable].time;

  const double window_start = log.end_time - analysis.stationary_window;
  std::size_t in_window = 0;
  bool within = true;
  for (const RpdSample& s : rpd.samples) {
    if (s.cycle_start + s.cycle_length <= window_start) continue;
    ++in_window;
    if (rpd_distance(s.values, rec.final_rpd->rpd.values, analysis.wrap_aware) >= analysis.stationary_tolerance)
      within = false;
  }
  rec.stationary = within && in_window > 0;
  return rec;
}

EmergenceResult emergence_experiment(const RunConfig& config, std::span<const std::uint64_t> seeds) {
  const std::vector<Job> jobs = jobs_for(config, seeds);
  EmergenceResult result;
  result.config_digest = config.digest();
  result.records.resize(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const RolloutLog log = run_rollout(config, jobs[i].mask, jobs[i].seed);
    result.records[i] = analyze_emergence(log, config.analysis);
  });
  return result;
}

double EmergenceResult::stationary_fraction() const {
  if (records.empty()) return 0.0;
  const auto n = std::count_if(records.begin(), records.end(), [](const EmergenceRecord& r) { return r.stationary; });
  return static_cast<double>(n) / static_cast<double>(records.size());
}

// ---- disturbance -----------------------------------------------------------

std::vector<TrialPlan> plan_trials(const PerturbationSchedule& schedule) {
  schedule.validate();
  std::vector<TrialPlan> plan;
  plan.reserve(schedule.trial_count());
  for (std::size_t g = 0; g < schedule.groups; ++g) {
    for (std::size_t a = 0; a < schedule.group_size; ++a) {
      plan.push_back({g * schedule.group_size + a, g, a, schedule.settle + static_cast<double>(g) * schedule.group_spacing,
                      static_cast<double>(a) * schedule.angle_spacing_deg});
    }
  }
  return plan;
}

std::uint64_t trial_seed(std::uint64_t family_seed, std::size_t trial) noexcept {
  std::seed_seq seq{static_cast<std::uint32_t>(family_seed), static_cast<std::uint32_t>(family_seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(std::uint64_t{trial} >> 32)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (std::uint64_t{words[0]} << 32) | words[1];
}

DisturbanceResult disturbance_experiment(const RunConfig& config, std::span<const std::uint64_t> family_seeds) {
  const PerturbationSchedule& schedule = config.experiment.perturbation;
  const std::vector<TrialPlan> plan = plan_trials(schedule);
  const std::vector<Job> jobs = jobs_for(config, family_seeds);
  const std::vector<double>& magnitudes = schedule.magnitudes;
  const double dt = config.oscillator.dt;

  SimSettings settings = SimSettings::from(config);
  settings.record = false;
  // Settling from random phases is allowed to stumble; the monitor is
  // restarted at the impulse and only the window after it is judged.
  settings.terminate_on_failure = false;

  const std::size_t per_job = plan.size() * magnitudes.size();
  DisturbanceResult result;
  result.config_digest = config.digest();
  result.trials.resize(jobs.size() * per_job);

  parallel_for(jobs.size() * plan.size(), [&](std::size_t work) {
    const std::size_t j = work / plan.size();
    const TrialPlan& tp = plan[work % plan.size()];
    Simulator settled(settings, jobs[j].mask, trial_seed(jobs[j].seed, tp.trial), config.experiment.initial_phases);
    const std::uint64_t impulse_step = steps_for(tp.time, dt);
    settled.run_to_step(impulse_step);
    const std::uint64_t end_step = impulse_step + steps_for(schedule.window, dt);
    const double rad = tp.angle_deg * kPi / 180.0;

    for (std::size_t m = 0; m < magnitudes.size(); ++m) {
      DisturbanceTrial& out = result.trials[j * per_job + tp.trial * magnitudes.size() + m];
      out.family = jobs[j].seed;
      out.trial = tp.trial;
      out.mask = jobs[j].mask;
      out.magnitude = magnitudes[m];
      out.settle_failure = settled.failed();
      Simulator branch = settled;
      const Vec2 delta{magnitudes[m] * std::cos(rad), magnitudes[m] * std::sin(rad)};
      branch.restart_failure_monitor(true);
      branch.apply_impulse(delta);
      out.applied = ImpulseRecord{branch.time(), delta};
      branch.run_to_step(end_step);
      out.failed = branch.failed();
      out.failure_time = branch.failure_time();
    }
  });
  return result;
}

std::vector<FailureRow> DisturbanceResult::table() const {
  struct Tally {
    std::size_t trials = 0, failed = 0, settle = 0;
  };
  // (magnitude, mask name) -> family -> tally; std::map keeps the output order fixed.
  std::map<std::pair<double, std::string>, std::map<std::uint64_t, Tally>> groups;
  std::map<std::string, OrcMask> masks;
  for (const DisturbanceTrial& t : trials) {
    const std::string name = t.mask.name();
    masks[name] = t.mask;
    Tally& tally = groups[{t.magnitude, name}][t.family];
    ++tally.trials;
    if (t.settle_failure) ++tally.settle;
    if (t.failed) ++tally.failed;
  }

  std::vector<FailureRow> rows;
  for (const auto& [key, families] : groups) {
    FailureRow row;
    row.magnitude = key.first;
    row.mask = masks[key.second];
    std::vector<double> rates;
    for (const auto& [family, tally] : families) {
      row.trials += tally.trials;
      row.settle_failures += tally.settle;
      rates.push_back(100.0 * static_cast<double>(tally.failed) / static_cast<double>(tally.trials));
    }
    row.families = rates.size();
    if (!rates.empty()) {
      double sum = 0.0;
      for (double r : rates) sum += r;
      row.mean_pct = sum / static_cast<double>(rates.size());
      if (rates.size() > 1) {
        double ss = 0.0;
        for (double r : rates) ss += (r - row.mean_pct) * (r - row.mean_pct);
        row.std_pct = std::sqrt(ss / static_cast<double>(rates.size() - 1));
      }
    }
    rows.push_back(row);
  }
  return rows;
}

// ---- merging ---------------------------------------------------------------

BalanceResult merge_results(std::span<const BalanceResult> parts) {
  check_digests(parts);
  BalanceResult out;
  out.config_digest = parts.front().config_digest;
  for (const BalanceResult& p : parts) out.records.insert(out.records.end(), p.records.begin(), p.records.end());
  const auto key = [](const BalanceRecord& r) { return std::make_tuple(r.mask.name(), r.seed); };
  std::sort(out.records.begin(), out.records.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  for (std::size_t i = 1; i < out.records.size(); ++i)
    if (key(out.records[i]) == key(out.records[i - 1]))
      throw std::invalid_argument("duplicate seed " + std::to_string(out.records[i].seed) + " for " +
                                  out.records[i].mask.name());
  return out;
}

EmergenceResult merge_results(std::span<const EmergenceResult> parts) {
  check_digests(parts);
  EmergenceResult out;
  out.config_digest = parts.front().config_digest;
  for (const EmergenceResult& p : parts) out.records.insert(out.records.end(), p.records.begin(), p.records.end());
  const auto key = [](const EmergenceRecord& r) { return std::make_tuple(r.mask.name(), r.seed); };
  std::sort(out.records.begin(), out.records.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  for (std::size_t i = 1; i < out.records.size(); ++i)
    if (key(out.records[i]) == key(out.records[i - 1]))
      throw std::invalid_argument("duplicate seed " + std::to_string(out.records[i].seed) + " for " +
                                  out.records[i].mask.name());
  return out;
}

DisturbanceResult merge_results(std::span<const DisturbanceResult> parts) {
  check_digests(parts);
  DisturbanceResult out;
  out.config_digest = parts.front().config_digest;
  for (const DisturbanceResult& p : parts) out.trials.insert(out.trials.end(), p.trials.begin(), p.trials.end());
  const auto key = [](const DisturbanceTrial& t) { return std::make_tuple(t.mask.name(), t.family, t.trial, t.magnitude); };
  std::sort(out.trials.begin(), out.trials.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  for (std::size_t i = 1; i < out.trials.size(); ++i)
    if (key(out.trials[i]) == key(out.trials[i - 1]))
      throw std::invalid_argument("duplicate trial " + std::to_string(out.trials[i].trial) + " of family " +
                                  std::to_string(out.trials[i].family) + " for " + out.trials[i].mask.name());
  return out;
}

}  // namespace gaitlab
