#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gaitlab/gait_analysis.hpp"
#include "gaitlab/legs.hpp"
#include "gaitlab/phase_core.hpp"
#include "gaitlab/plant.hpp"

namespace gaitlab {

// Observation / reward / coupling ablation switches, written ORC<o><r><c>.
struct OrcMask {
  bool observations = true;
  bool rewards = true;
  bool coupling = true;

  std::string name() const;  // e.g. "ORC110"
  // Accepts "ORC110" or "110".
  static OrcMask parse(std::string_view text);

  friend bool operator==(const OrcMask&, const OrcMask&) = default;
};

struct ContactRecord {
  Leg leg;
  ContactEvent kind;
  double time;  // interpolated to the phase crossing inside the physics step
};

struct ImpulseRecord {
  double time;
  Vec2 delta;
};

// All per-sample channels share `time`. Contact and impulse records are
// kept at physics resolution.
struct RolloutLog {
  std::uint64_t seed = 0;
  OrcMask mask;
  std::string config_digest;
  std::string kernel;
  double physics_dt = 0.0;
  double sample_dt = 0.0;
  double end_time = 0.0;
  PerLeg<double> initial_phases{};
  PerLeg<Vec2> nominal_feet{};  // body frame
  std::optional<double> failure_time;

  std::vector<double> time;
  std::vector<PerLeg<double>> phases;
  std::vector<PerLeg<double>> grf;
  std::vector<PerLeg<std::uint8_t>> stance;
  std::vector<PerLeg<Vec2>> feet;  // body frame
  std::vector<Vec2> com;
  std::vector<Vec2> velocity;
  std::vector<double> heading;
  std::vector<double> cmd_forward;
  std::vector<double> cmd_yaw_rate;
  std::vector<double> gait_reward;
  std::vector<Vec2> impulse;  // impulse applied since the previous sample

  std::optional<std::vector<PhaseObservation>> observations;
  // The surrogate has no attitude or height; these stay absent unless a
  // log from elsewhere provides them.
  std::optional<std::vector<double>> orientation_error;
  std::optional<std::vector<double>> base_height_error;

  std::vector<ContactRecord> contacts;
  std::vector<ImpulseRecord> impulses;

  std::size_t size() const noexcept { return time.size(); }
  TouchdownLog touchdown_log() const;
};

}  // namespace gaitlab
