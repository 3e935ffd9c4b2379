#pragma once

// Seeded rollouts of the oscillator + surrogate loop and the three batch
// protocols built on them: leg-load balance, gait emergence, and staggered
// velocity-impulse disturbance.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gaitlab/config.hpp"
#include "gaitlab/gait_analysis.hpp"
#include "gaitlab/phase_core.hpp"
#include "gaitlab/plant.hpp"
#include "gaitlab/rollout_log.hpp"

namespace gaitlab {

struct SimSettings {
  OscillatorSection oscillator;
  PlantConfig plant;
  double v_x = 0.0;
  double yaw_rate = 0.0;
  std::optional<double> sigma_override;
  bool terminate_on_failure = true;
  std::size_t decimation = 1;
  bool record = true;
  std::string config_digest;

  static SimSettings from(const RunConfig& config);
};

// One rollout, advanced step by step. Copyable, so a settled state can be
// branched into several continuations.
class Simulator {
 public:
  Simulator(SimSettings settings, OrcMask mask, std::uint64_t seed,
            std::optional<PerLeg<double>> initial_phases = std::nullopt);

  void step();
  // Steps until `steps()` reaches `target_steps` or the rollout fails.
  void run_to_step(std::uint64_t target_steps);
  void apply_impulse(Vec2 impulse);
  void set_command(double v_x, double yaw_rate);
  // Forgets any earlier failure and starts judging support afresh from now.
  void restart_failure_monitor(bool terminate_on_failure);

  std::uint64_t steps() const noexcept { return steps_; }
  double time() const noexcept { return static_cast<double>(steps_) * settings_.oscillator.dt; }
  bool failed() const noexcept { return failure_.failed; }
  std::optional<double> failure_time() const;

  const OscillatorBank& bank() const noexcept { return bank_; }
  const BodyState& body() const noexcept { return body_; }
  const Legs& legs() const noexcept { return legs_; }
  const GrfVector& grf() const noexcept { return grf_; }
  const RolloutLog& log() const noexcept { return log_; }
  // Finalizes end_time and returns the log.
  RolloutLog finish() &&;

 private:
  OscillatorParams active_params() const;
  void record_sample();

  SimSettings settings_;
  OrcMask mask_;
  OscillatorBank bank_;
  BodyState body_;
  Legs legs_;
  GrfVector grf_;
  FailureMonitor monitor_;
  FailureVerdict failure_;
  std::mt19937_64 noise_;
  std::uint64_t steps_ = 0;
  Vec2 pending_impulse_;
  RolloutLog log_;
};

std::uint64_t steps_for(double duration, double dt);

// Deterministic in (config, mask, seed). Failure ends the log early when
// the experiment terminates on failure.
RolloutLog run_rollout(const RunConfig& config, const OrcMask& mask, std::uint64_t seed);

// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = GAITLAB_THREADS
// or hardware concurrency). Results must be written to per-index slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t threads = 0);
std::size_t worker_count();

// ---- balance ---------------------------------------------------------------

struct BalanceRecord {
  std::uint64_t seed = 0;
  OrcMask mask;
  PerLeg<double> mean_grf{};
  std::optional<double> failure_time;
};

struct LegDistribution {
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
};

struct BalanceSummary {
  OrcMask mask;
  PerLeg<LegDistribution> legs{};
  std::size_t failed = 0;
};

struct BalanceResult {
  std::string config_digest;
  std::vector<BalanceRecord> records;

  std::vector<BalanceSummary> summarize() const;
};

PerLeg<double> mean_leg_load(const RolloutLog& log);
BalanceResult balance_experiment(const RunConfig& config, std::span<const std::uint64_t> seeds);

// ---- emergence -------------------------------------------------------------

struct EmergenceRecord {
  std::uint64_t seed = 0;
  OrcMask mask;
  std::array<double, 3> initial_rpd{};  // from the initial oscillator phases
  std::vector<AggregatedRpd> ticks;
  std::optional<AggregatedRpd> final_rpd;
  std::optional<double> convergence_time;
  bool stationary = false;
  std::size_t incomplete_cycles = 0;
  std::optional<double> failure_time;
};

struct EmergenceResult {
  std::string config_digest;
  std::vector<EmergenceRecord> records;

  double stationary_fraction() const;
};

// Phase offsets (φ_RF − φ_j) that a clock-driven gait would show as RPD.
std::array<double, 3> phase_difference_rpd(const PerLeg<double>& phases) noexcept;

EmergenceRecord analyze_emergence(const RolloutLog& log, const AnalysisSection& analysis);
EmergenceResult emergence_experiment(const RunConfig& config, std::span<const std::uint64_t> seeds);

// ---- disturbance -----------------------------------------------------------

struct TrialPlan {
  std::size_t trial = 0;
  std::size_t group = 0;
  std::size_t angle_index = 0;
  double time = 0.0;       // s since rollout start
  double angle_deg = 0.0;  // impulse direction in the world frame
};

// Row-major: trial = group * group_size + angle_index.
std::vector<TrialPlan> plan_trials(const PerturbationSchedule& schedule);

struct DisturbanceTrial {
  std::uint64_t family = 0;
  std::size_t trial = 0;
  OrcMask mask;
  double magnitude = 0.0;
  bool settle_failure = false;  // support was lost before the impulse; informational
  bool failed = false;
  std::optional<double> failure_time;
  std::optional<ImpulseRecord> applied;
};

struct FailureRow {
  double magnitude = 0.0;
  OrcMask mask;
  double mean_pct = 0.0;
  double std_pct = 0.0;
  std::size_t families = 0;
  std::size_t trials = 0;
  std::size_t settle_failures = 0;
};

struct DisturbanceResult {
  std::string config_digest;
  std::vector<DisturbanceTrial> trials;

  // Failure rate per (magnitude, mask): mean and sample std across seed
  // families. Only failures inside the post-impulse window count.
  std::vector<FailureRow> table() const;
};

std::uint64_t trial_seed(std::uint64_t family_seed, std::size_t trial) noexcept;

DisturbanceResult disturbance_experiment(const RunConfig& config, std::span<const std::uint64_t> family_seeds);

// ---- merging ---------------------------------------------------------------

// Order-independent union of partial results. Throws std::invalid_argument
// on a digest mismatch or when a (seed, mask) pair appears twice.
BalanceResult merge_results(std::span<const BalanceResult> parts);
EmergenceResult merge_results(std::span<const EmergenceResult> parts);
DisturbanceResult merge_results(std::span<const DisturbanceResult> parts);

}  // namespace gaitlab
