#pragma once

// Decentralized phase oscillators, one per leg, driven by their own
// normalized ground reaction force:
//
//   dφ_i/dt = 2π (ω − σ F_i (cos φ_i + ξ))
//
// Phases live on [0, 2π); [0, π) is swing and [π, 2π) is stance.

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "gaitlab/legs.hpp"

namespace gaitlab {

class OscillatorParams {
 public:
  // Throws std::invalid_argument unless omega > 0, sigma >= 0, xi >= 0.
  OscillatorParams(double omega, double sigma, double xi);

  double omega() const noexcept { return omega_; }
  double sigma() const noexcept { return sigma_; }
  double xi() const noexcept { return xi_; }

  OscillatorParams with_sigma(double sigma) const { return {omega_, sigma, xi_}; }

  friend bool operator==(const OscillatorParams&, const OscillatorParams&) = default;

 private:
  double omega_;
  double sigma_;
  double xi_;
};

enum class CouplingMode {
  Clock,          // feedback ignored, constant rate 2πω
  Decentralized,  // each leg sees only its own load
  Diffusive,      // decentralized plus all-to-all sine coupling, for comparison runs
};

std::string_view coupling_mode_name(CouplingMode mode) noexcept;
CouplingMode parse_coupling_mode(std::string_view name);

// Per-leg load as a fraction of body weight, each entry in [0, 1].
class GrfVector {
 public:
  GrfVector() = default;
  // Throws std::invalid_argument on non-finite or out-of-range entries.
  explicit GrfVector(const PerLeg<double>& values);

  // Clamps each entry to [0, 1]; non-finite entries still throw.
  static GrfVector clamped(const PerLeg<double>& values);

  double operator[](Leg leg) const noexcept { return values_[index(leg)]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  const PerLeg<double>& values() const noexcept { return values_; }
  double sum() const noexcept;

  friend bool operator==(const GrfVector&, const GrfVector&) = default;

 private:
  PerLeg<double> values_{};
};

class OscillatorBank {
 public:
  // Phases are wrapped onto [0, 2π); non-finite phases throw.
  OscillatorBank(const PerLeg<double>& phases, OscillatorParams params,
                 CouplingMode mode = CouplingMode::Decentralized, double diffusive_gain = 0.0);

  const PerLeg<double>& phases() const noexcept { return phases_; }
  double phase(Leg leg) const noexcept { return phases_[index(leg)]; }
  const OscillatorParams& params() const noexcept { return params_; }
  CouplingMode mode() const noexcept { return mode_; }
  double diffusive_gain() const noexcept { return diffusive_gain_; }

  OscillatorBank with_params(OscillatorParams params) const;
  OscillatorBank with_phases(const PerLeg<double>& phases) const;

  friend bool operator==(const OscillatorBank&, const OscillatorBank&) = default;

 private:
  PerLeg<double> phases_;
  OscillatorParams params_;
  CouplingMode mode_;
  double diffusive_gain_;
};

struct PhaseObservation {
  // [sin φ, cos φ] per leg in leg order.
  std::array<double, 2 * kLegCount> values{};
};

enum class Stability { Stable, Unstable, Marginal };

std::string_view stability_name(Stability s) noexcept;

struct FixedPoint {
  double phase;
  Stability stability;
};

inline constexpr double kDefaultDt = 0.002;
inline constexpr double kMarginalTolerance = 1e-9;

// Rate in rad/s. The phase may be any real; grf is expected in [0, 1].
double phase_rate(double phase, double grf, const OscillatorParams& params) noexcept;

// One explicit Euler step of every leg; result wrapped onto [0, 2π).
// Throws std::invalid_argument for non-finite or non-positive dt.
OscillatorBank step_oscillator(const OscillatorBank& bank, const GrfVector& grf, double dt);

// Velocity-scheduled parameters. With blend_width > 0 the two branches are
// interpolated linearly over |v_x| ∈ (0.5, 0.5 + blend_width]; zero keeps
// the hard switch.
OscillatorParams schedule_params(double v_x, double blend_width = 0.0);

PhaseObservation encode_observation(const OscillatorBank& bank) noexcept;

// Closed-form roots of the rate equation at constant load, sorted by phase.
std::vector<FixedPoint> find_fixed_points(const OscillatorParams& params, double grf);

// Uniform phases on [0, 2π) from an mt19937_64 stream seeded with `seed`.
PerLeg<double> random_phases(std::uint64_t seed) noexcept;

}  // namespace gaitlab
