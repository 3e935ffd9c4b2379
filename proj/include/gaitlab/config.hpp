#pragma once

// Run configuration: a JSON tree with fixed sections. Unknown keys are
// rejected with their full dotted path, and every missing key takes the
// default below. The digest covers everything that affects results, so it
// excludes the seed section and the output directory.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaitlab/phase_core.hpp"
#include "gaitlab/plant.hpp"
#include "gaitlab/rewards.hpp"
#include "gaitlab/rollout_log.hpp"

namespace gaitlab {

inline constexpr int kConfigFormatVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct OscillatorSection {
  double dt = kDefaultDt;
  CouplingMode coupling_mode = CouplingMode::Decentralized;
  double diffusive_gain = 0.5;
  double blend_width = 0.0;
  std::optional<OscillatorParams> fixed_params;  // replaces the velocity schedule
  std::string kernel = "auto";                   // auto | scalar | avx2
};

struct AnalysisSection {
  double touchdown_threshold = kDefaultTouchdownThreshold;
  double debounce = kDefaultDebounce;
  bool wrap_aware = true;
  std::size_t window_cycles = 2;
  double stride = 5.0;
  double stationary_tolerance = 0.1;  // rad
  double stationary_window = 5.0;     // s
};

struct PerturbationSchedule {
  double settle = 5.0;           // s before the first group
  double group_spacing = 0.01;   // s
  double angle_spacing_deg = 10.0;
  std::size_t group_size = 36;
  std::size_t groups = 50;
  std::vector<double> magnitudes{1.5, 2.0, 2.5, 3.0, 3.5};
  double window = 5.0;           // s after the impulse in which a failure counts

  std::size_t trial_count() const noexcept { return group_size * groups; }
  // Throws ConfigError unless the angles close the circle and the timing is positive.
  void validate() const;
};

enum class ExperimentType { Rollout, Balance, Emergence, Disturbance };

std::string_view experiment_name(ExperimentType t) noexcept;

struct ExperimentSection {
  ExperimentType type = ExperimentType::Rollout;
  double duration = 10.0;
  double v_x = 1.0;
  double yaw_rate = 0.0;
  std::vector<OrcMask> masks{OrcMask{}};
  std::optional<double> eval_sigma;
  std::optional<bool> terminate_on_failure;  // default depends on type
  std::optional<PerLeg<double>> initial_phases;
  PerturbationSchedule perturbation;

  bool terminates_on_failure() const noexcept;
};

struct OutputSection {
  std::string directory = "out";
  std::string format = "csv";
  std::size_t decimation = 5;  // physics steps per logged sample
};

struct SeedSection {
  std::uint64_t base = 1;
  std::size_t count = 1;
};

struct RunConfig {
  OscillatorSection oscillator;
  PlantConfig plant;
  RewardTable rewards = RewardTable::defaults();
  AnalysisSection analysis;
  ExperimentSection experiment;
  OutputSection output;
  SeedSection seed;

  // Throws ConfigError.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path, const std::vector<std::string>& overrides = {});

  nlohmann::json to_json() const;
  // sha256 over the canonical JSON with seed and output.directory removed.
  std::string digest() const;
  std::vector<std::uint64_t> seeds() const;
};

// Applies "dotted.key=value" to a JSON tree; value parses as JSON when it
// can, otherwise it is taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

std::string sha256_hex(std::string_view data);

}  // namespace gaitlab
