#pragma once

// Phase-based gait reward and squared-exponential shaping terms, scored
// offline from rollout logs.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gaitlab/phase_core.hpp"
#include "gaitlab/rollout_log.hpp"

namespace gaitlab {

// Σ_i −F_i sin φ_i: loaded feet are penalized in [0, π) and rewarded in [π, 2π).
double gait_reward(const PerLeg<double>& phases, const PerLeg<double>& grf) noexcept;
double gait_reward(const OscillatorBank& bank, const GrfVector& grf) noexcept;

// exp(−error² / scale); throws std::invalid_argument unless scale > 0.
double squared_exponential(double error, double scale);

// Term names understood by score_rollout.
namespace reward_terms {
inline constexpr const char* kGait = "gait";
inline constexpr const char* kLinVelTracking = "lin_vel_tracking";
inline constexpr const char* kYawRateTracking = "yaw_rate_tracking";
inline constexpr const char* kOrientation = "orientation";
inline constexpr const char* kBaseHeight = "base_height";
inline constexpr const char* kTorque = "torque";
inline constexpr const char* kActionRate = "action_rate";
inline constexpr const char* kActionAccel = "action_accel";
inline constexpr const char* kHipDeviation = "hip_deviation";
inline constexpr const char* kTermination = "termination";
}  // namespace reward_terms

const std::vector<std::string>& known_reward_terms();

// A term is enabled iff it has a weight. Scales only apply to the
// squared-exponential tracking terms and default to 1.
struct RewardTable {
  std::map<std::string, double> weights;
  std::map<std::string, double> scales;

  // Every term the surrogate can feed, weight 1 and scale 1.
  static RewardTable defaults();
  double scale(const std::string& term) const;
};

struct RewardSample {
  double gait_reward = 0.0;
  std::map<std::string, std::optional<double>> tracking_terms;
  std::map<std::string, std::optional<double>> regularizers;  // penalty magnitudes, >= 0
  double termination_penalty = 0.0;
  double total = 0.0;  // weighted: + gait + tracking − regularizers − termination
};

// Scores each sample of the log. Disabled terms are reported as absent;
// an enabled term whose channel is missing throws std::invalid_argument
// naming both.
std::vector<RewardSample> score_rollout(const RolloutLog& log, const RewardTable& table);

}  // namespace gaitlab
