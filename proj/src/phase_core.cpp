#include "gaitlab/phase_core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "gaitlab/kernels.hpp"

namespace gaitlab {

OscillatorParams::OscillatorParams(double omega, double sigma, double xi)
    : omega_(omega), sigma_(sigma), xi_(xi) {
  if (!std::isfinite(omega) || omega <= 0.0)
    throw std::invalid_argument("oscillator omega must be finite and > 0, got " + std::to_string(omega));
  if (!std::isfinite(sigma) || sigma < 0.0)
    throw std::invalid_argument("oscillator sigma must be finite and >= 0, got " + std::to_string(sigma));
  if (!std::isfinite(xi) || xi < 0.0)
    throw std::invalid_argument("oscillator xi must be finite and >= 0, got " + std::to_string(xi));
}

std::string_view coupling_mode_name(CouplingMode mode) noexcept {
  switch (mode) {
    case CouplingMode::Clock: return "clock";
    case CouplingMode::Decentralized: return "decentralized";
    case CouplingMode::Diffusive: return "diffusive";
  }
  return "unknown";
}

CouplingMode parse_coupling_mode(std::string_view name) {
  if (name == "clock") return CouplingMode::Clock;
  if (name == "decentralized") return CouplingMode::Decentralized;
  if (name == "diffusive") return CouplingMode::Diffusive;
  throw std::invalid_argument("unknown coupling mode '" + std::string(name) + "'");
}

GrfVector::GrfVector(const PerLeg<double>& values) : values_(values) {
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw std::invalid_argument("GRF entries must lie in [0, 1], got " + std::to_string(v));
  }
}

GrfVector GrfVector::clamped(const PerLeg<double>& values) {
  PerLeg<double> c{};
  for (std::size_t i = 0; i < kLegCount; ++i) {
    if (!std::isfinite(values[i])) throw std::invalid_argument("non-finite GRF entry");
    c[i] = std::clamp(values[i], 0.0, 1.0);
  }
  return GrfVector(c);
}

double GrfVector::sum() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

OscillatorBank::OscillatorBank(const PerLeg<double>& phases, OscillatorParams params, CouplingMode mode,
                               double diffusive_gain)
    : phases_(phases), params_(params), mode_(mode), diffusive_gain_(diffusive_gain) {
  for (double& p : phases_) {
    if (!std::isfinite(p)) throw std::invalid_argument("non-finite oscillator phase");
    p = wrap_phase(p);
  }
  if (!std::isfinite(diffusive_gain) || diffusive_gain < 0.0)
    throw std::invalid_argument("diffusive gain must be finite and >= 0");
}

OscillatorBank OscillatorBank::with_params(OscillatorParams params) const {
  OscillatorBank b = *this;
  b.params_ = params;
  return b;
}

OscillatorBank OscillatorBank::with_phases(const PerLeg<double>& phases) const {
  return OscillatorBank(phases, params_, mode_, diffusive_gain_);
}

std::string_view stability_name(Stability s) noexcept {
  switch (s) {
    case Stability::Stable: return "Stable";
    case Stability::Unstable: return "Unstable";
    case Stability::Marginal: return "Marginal";
  }
  return "?";
}

double phase_rate(double phase, double grf, const OscillatorParams& params) noexcept {
  return kTwoPi * (params.omega() - params.sigma() * grf * (std::cos(phase) + params.xi()));
}

OscillatorBank step_oscillator(const OscillatorBank& bank, const GrfVector& grf, double dt) {
  if (!std::isfinite(dt) || dt <= 0.0) throw std::invalid_argument("dt must be finite and > 0");
  for (double v : grf.values()) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite GRF");
  }

  const auto& k = kernels::active();
  const OscillatorParams& p = bank.params();
  PerLeg<double> phases = bank.phases();
  PerLeg<double> rates{};

  if (bank.mode() == CouplingMode::Clock) {
    // Zero load and zero gain: evaluates to the same bits as σ = 0.
    const PerLeg<double> no_load{};
    k.phase_rates(phases, no_load, {p.omega(), 0.0, p.xi()}, rates);
  } else {
    k.phase_rates(phases, grf.values(), {p.omega(), p.sigma(), p.xi()}, rates);
  }

  if (bank.mode() == CouplingMode::Diffusive) {
    const PerLeg<double>& ph = bank.phases();
    for (std::size_t i = 0; i < kLegCount; ++i) {
      double pull = 0.0;
      for (std::size_t j = 0; j < kLegCount; ++j) {
        if (j != i) pull += std::sin(ph[j] - ph[i]);
      }
      rates[i] += kTwoPi * bank.diffusive_gain() * pull;
    }
  }

  k.advance_phases(phases, rates, dt);
  return bank.with_phases(phases);
}

OscillatorParams schedule_params(double v_x, double blend_width) {
  if (!std::isfinite(v_x)) throw std::invalid_argument("commanded velocity must be finite");
  if (!std::isfinite(blend_width) || blend_width < 0.0)
    throw std::invalid_argument("blend width must be finite and >= 0");

  const double speed = std::abs(v_x);
  const OscillatorParams standing(1.0, 4.0, 1.0);
  if (speed <= 0.5) return standing;

  const OscillatorParams moving(std::min(1.5 + speed, 4.0), 1.0, 0.0);
  if (blend_width == 0.0 || speed >= 0.5 + blend_width) return moving;

  const double a = (speed - 0.5) / blend_width;
  auto lerp = [a](double x, double y) { return x + a * (y - x); };
  return {lerp(standing.omega(), moving.omega()), lerp(standing.sigma(), moving.sigma()),
          lerp(standing.xi(), moving.xi())};
}

PhaseObservation encode_observation(const OscillatorBank& bank) noexcept {
  PhaseObservation obs;
  for (std::size_t i = 0; i < kLegCount; ++i) {
    obs.values[2 * i] = std::sin(bank.phases()[i]);
    obs.values[2 * i + 1] = std::cos(bank.phases()[i]);
  }
  return obs;
}

std::vector<FixedPoint> find_fixed_points(const OscillatorParams& params, double grf) {
  std::vector<FixedPoint> out;
  const double gain = params.sigma() * grf;
  if (!(gain > 0.0)) return out;

  double c = params.omega() / gain - params.xi();
  // Absorb rounding at the tangency |c| = 1.
  constexpr double kEdge = 1e-12;
  if (std::abs(c) > 1.0 + kEdge) return out;
  c = std::clamp(c, -1.0, 1.0);

  const double a = std::acos(c);
  std::vector<double> roots{wrap_phase(a)};
  const double mirror = wrap_phase(kTwoPi - a);
  if (mirror != roots.front()) roots.push_back(mirror);
  std::sort(roots.begin(), roots.end());

  for (double phi : roots) {
    // Slope of the rate with respect to phase.
    const double slope = kTwoPi * gain * std::sin(phi);
    Stability s = Stability::Marginal;
    if (slope < -kMarginalTolerance) s = Stability::Stable;
    else if (slope > kMarginalTolerance) s = Stability::Unstable;
    out.push_back({phi, s});
  }
  return out;
}

PerLeg<double> random_phases(std::uint64_t seed) noexcept {
  std::mt19937_64 rng(seed);
  PerLeg<double> phases{};
  for (double& p : phases) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    p = wrap_phase(u * kTwoPi);
  }
  return phases;
}

}  // namespace gaitlab
