#include <algorithm>
#include <cmath>

#include "gaitlab/kernels.hpp"
#include "gaitlab/legs.hpp"
#include "gaitlab/phase_core.hpp"

namespace gaitlab::kernels {
namespace {

void phase_rates_scalar(std::span<const double> phases, std::span<const double> grf, RateParams p,
                        std::span<double> out) {
  const std::size_t n = phases.size();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = kTwoPi * (p.omega - p.sigma * grf[i] * (std::cos(phases[i]) + p.xi));
  }
}

void advance_phases_scalar(std::span<double> phases, std::span<const double> rates, double dt) {
  const std::size_t n = phases.size();
  for (std::size_t i = 0; i < n; ++i) phases[i] = wrap_phase(phases[i] + dt * rates[i]);
}

constexpr double kIdeal[kIdealGaitCount][3] = {
    {kPi, kPi, 0.0},  // trot
    {kPi, 0.0, kPi},  // pace
    {0.0, kPi, kPi},  // bound
    {0.0, 0.0, 0.0},  // pronk
};

inline double component_sq(double v, double ideal, bool wrap_aware) {
  const double d = wrap_phase(v) - ideal;
  if (!wrap_aware) return d * d;
  const double a = std::abs(d);
  const double m = std::min(a, kTwoPi - a);
  return m * m;
}

void gait_distances_scalar(std::span<const double> lf, std::span<const double> rh,
                           std::span<const double> lh, bool wrap_aware, std::span<double> out) {
  const std::size_t n = lf.size();
  for (std::size_t g = 0; g < kIdealGaitCount; ++g) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = component_sq(lf[i], kIdeal[g][0], wrap_aware);
      s += component_sq(rh[i], kIdeal[g][1], wrap_aware);
      s += component_sq(lh[i], kIdeal[g][2], wrap_aware);
      out[g * n + i] = std::sqrt(s);
    }
  }
}

const KernelTable kScalar{Isa::Scalar, phase_rates_scalar, advance_phases_scalar, gait_distances_scalar};

}  // namespace

const KernelTable& scalar() noexcept { return kScalar; }

}  // namespace gaitlab::kernels
