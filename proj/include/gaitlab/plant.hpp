#pragma once

// Quasi-static quadruped surrogate. Oscillator phases decide stance and
// swing, stance feet are pinned in the world, swing feet travel back to a
// body-relative foothold, and the body weight is split over the stance
// feet by force and moment balance about the CoM.

#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "gaitlab/legs.hpp"
#include "gaitlab/phase_core.hpp"

namespace gaitlab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

double norm(Vec2 v) noexcept;
double dot(Vec2 a, Vec2 b) noexcept;
double cross(Vec2 a, Vec2 b) noexcept;
Vec2 rotate(Vec2 v, double angle) noexcept;

enum class LegMode { Swing, Stance };

struct BodyState {
  Vec2 com;             // world, m
  double heading = 0.0;  // rad, [0, 2π)
  Vec2 velocity;        // world, m/s
  double cmd_forward = 0.0;   // m/s
  double cmd_yaw_rate = 0.0;  // rad/s
};

struct LegState {
  LegMode mode = LegMode::Stance;
  double phase = 0.0;     // oscillator phase the mode was derived from
  Vec2 foot_body;         // relative to the CoM, body frame
  Vec2 foot_world;        // anchor while in stance
  Vec2 liftoff_body;      // swing start, body frame
  Vec2 nominal_offset;    // rectangle corner, body frame
};

using Legs = PerLeg<LegState>;

struct PlantConfig {
  double body_half_length = 0.19;
  double body_half_width = 0.10;
  double step_length_gain = 0.15;     // s; foothold lead = gain * commanded velocity
  double failure_margin = 0.02;       // m
  double failure_grace = 0.2;         // s
  double velocity_time_constant = 0.25;  // s; relaxation of body velocity to the command
  double capture_gain = 0.1;          // s; foothold shift per m/s of velocity error
  double grf_noise_std = 0.0;         // additive noise on stance loads, off by default

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Stance iff phase ∈ [π, 2π).
LegMode leg_mode(double phase) noexcept;

Vec2 nominal_offset(Leg leg, const PlantConfig& config) noexcept;

// Feet at their nominal corners, stance anchors placed under the body.
Legs initial_legs(const OscillatorBank& bank, const BodyState& body, const PlantConfig& config);

// Minimum-norm split of unit body weight over stance feet satisfying force
// balance exactly and moment balance about the CoM in the least-squares
// sense. Feet that would pull are dropped and the rest re-solved.
GrfVector load_distribution(const BodyState& body, const Legs& legs, const PlantConfig& config);

enum class ContactEvent { Touchdown, Liftoff };

struct LegEvent {
  Leg leg;
  ContactEvent kind;
  double fraction;  // position of the phase crossing within the step, [0, 1]
};

struct PlantStep {
  BodyState body;
  Legs legs;
  GrfVector grf;
  std::vector<LegEvent> events;
};

// Advances the surrogate to the new oscillator phases. `noise` is only
// drawn from when config.grf_noise_std > 0.
PlantStep step_plant(const BodyState& body, const Legs& legs, const OscillatorBank& bank, double dt,
                     const PlantConfig& config, std::mt19937_64* noise = nullptr);

BodyState apply_perturbation(const BodyState& body, Vec2 impulse);

// Signed clearance of the CoM with respect to the stance support set:
// polygon  -> distance inside the hull minus margin (negative outside),
// segment/point -> margin minus distance,
// no feet  -> -infinity.
// Supported iff the result is >= 0.
double support_clearance(const BodyState& body, const Legs& legs, double margin);

struct SupportSample {
  double time;
  BodyState body;
  Legs legs;
};

struct FailureVerdict {
  bool failed = false;
  double time = 0.0;

  friend bool operator==(const FailureVerdict&, const FailureVerdict&) = default;
};

// Failed once the CoM has been unsupported continuously for longer than
// config.failure_grace.
FailureVerdict detect_failure(std::span<const SupportSample> history, const PlantConfig& config);

// Streaming form of detect_failure for use inside a rollout.
class FailureMonitor {
 public:
  explicit FailureMonitor(const PlantConfig& config) : margin_(config.failure_margin), grace_(config.failure_grace) {}

  FailureVerdict update(double time, const BodyState& body, const Legs& legs);

 private:
  double margin_;
  double grace_;
  std::optional<double> unsupported_since_;
  FailureVerdict verdict_;
};

}  // namespace gaitlab
