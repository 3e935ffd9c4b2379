#pragma once

// Footfall analysis: touchdown extraction, relative phase differences
// (RPD) of LF, RH, LH against the RF reference foot, and classification
// against the ideal symmetric gaits.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaitlab/legs.hpp"

namespace gaitlab {

enum class GaitLabel { Trot, Pace, Bound, Pronk, Transition };

std::string_view gait_name(GaitLabel label) noexcept;
std::optional<GaitLabel> parse_gait(std::string_view name) noexcept;

// Ideal RPDs, (LF, RH, LH) relative to RF.
inline constexpr std::array<std::array<double, 3>, 4> kIdealRpd{{
    {kPi, kPi, 0.0},   // Trot
    {kPi, 0.0, kPi},   // Pace
    {0.0, kPi, kPi},   // Bound
    {0.0, 0.0, 0.0},   // Pronk
}};
inline constexpr std::array<GaitLabel, 4> kIdealGaits{GaitLabel::Trot, GaitLabel::Pace, GaitLabel::Bound,
                                                      GaitLabel::Pronk};
inline constexpr double kTransitionDistance = 2.0;

struct TouchdownLog {
  PerLeg<std::vector<double>> touchdowns;
  PerLeg<std::vector<double>> liftoffs;
};

struct GrfSeries {
  double start_time = 0.0;
  double sample_dt = 0.0;
  std::vector<PerLeg<double>> values;
};

inline constexpr double kDefaultTouchdownThreshold = 0.02;
inline constexpr double kDefaultDebounce = 0.04;

// Touchdown when the load rises above `threshold`, liftoff when it falls
// back to or below it. A change of contact state is only accepted once it
// has persisted for `debounce` seconds; the event is stamped at the sample
// where it began. Throws std::invalid_argument on an empty series.
TouchdownLog detect_touchdowns(const GrfSeries& series, double threshold = kDefaultTouchdownThreshold,
                               double debounce = kDefaultDebounce);

struct RpdSample {
  std::array<double, 3> values{};  // LF, RH, LH in [0, 2π)
  double cycle_start = 0.0;
  double cycle_length = 0.0;
};

struct RpdResult {
  std::vector<RpdSample> samples;
  std::size_t incomplete_cycles = 0;
  PerLeg<std::size_t> missing_touchdowns{};  // per leg, cycles where it never landed
  std::string reason;                         // set when no cycle could be formed
};

RpdResult compute_rpd(const TouchdownLog& log);

struct Classification {
  GaitLabel label = GaitLabel::Transition;
  GaitLabel nearest = GaitLabel::Trot;
  double distance = 0.0;
};

// Nearest ideal gait by Euclidean distance over per-component differences
// wrapped onto (-π, π] (or raw differences when wrap_aware is false); ties
// resolve in Trot, Pace, Bound, Pronk order. Beyond distance 2 the sample
// is a Transition.
Classification classify_gait(const RpdSample& rpd, bool wrap_aware = true);

// Same rule over many samples through the active SIMD kernel table.
std::vector<Classification> classify_batch(std::span<const RpdSample> samples, bool wrap_aware = true);

std::array<double, 3> circular_mean(std::span<const RpdSample> samples);

struct AggregatedRpd {
  double time = 0.0;
  RpdSample rpd;
  Classification gait;
};

// Every `stride` seconds up to end_time, the circular mean of the
// `window_cycles` most recent complete cycles that ended within the last
// stride, then classified. Ticks with too few cycles are skipped.
std::vector<AggregatedRpd> aggregate_rpd(std::span<const RpdSample> samples, double end_time,
                                         std::size_t window_cycles = 2, double stride = 5.0,
                                         bool wrap_aware = true);

struct PhaseLockedCycle {
  std::vector<double> reference_phase;
  PerLeg<std::vector<double>> grf;
};

enum class Crossing { Zero, Pi };

struct CrossingMarker {
  Leg leg;
  Crossing kind;
  std::size_t cycle;
  double reference_phase;
};

struct PhaseLockedGrf {
  std::vector<PhaseLockedCycle> cycles;
  std::vector<CrossingMarker> markers;
};

// Each leg's load indexed by the reference leg's phase, split into cycles
// at the reference leg's wrap, plus the reference phase at which every
// leg's own oscillator crosses 0 and π.
PhaseLockedGrf phase_locked_grf(std::span<const PerLeg<double>> phases, std::span<const PerLeg<double>> grf,
                                Leg reference = Leg::RF);

}  // namespace gaitlab
