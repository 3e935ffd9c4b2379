#pragma once

// Data-parallel inner loops with a scalar reference and an AVX2 variant.
// The active table is picked once from the CPU at first use; it can be
// forced with GAITLAB_KERNEL=scalar|avx2 or select().
//
// Equivalence contract between implementations:
//   advance_phases, gait_distances: bit-identical.
//   phase_rates: within 1e-12 rad/s (the AVX2 cosine is a polynomial).

#include <cstddef>
#include <span>
#include <string_view>

namespace gaitlab::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

struct RateParams {
  double omega;
  double sigma;
  double xi;
};

// Ideal symmetric gaits in (LF, RH, LH) order: trot, pace, bound, pronk.
inline constexpr std::size_t kIdealGaitCount = 4;

struct KernelTable {
  Isa isa;
  // out[i] = 2π(ω − σ grf[i] (cos phases[i] + ξ))
  void (*phase_rates)(std::span<const double> phases, std::span<const double> grf, RateParams p,
                      std::span<double> out);
  // phases[i] = wrap(phases[i] + dt * rates[i])
  void (*advance_phases)(std::span<double> phases, std::span<const double> rates, double dt);
  // out[g * n + i] = distance of sample i to ideal gait g; samples are
  // given as three component arrays of length n.
  void (*gait_distances)(std::span<const double> lf, std::span<const double> rh,
                         std::span<const double> lh, bool wrap_aware, std::span<double> out);
};

const KernelTable& scalar() noexcept;
// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2() noexcept;

const KernelTable& active() noexcept;
// Throws std::invalid_argument if the requested ISA is unavailable.
void select(Isa isa);
Isa parse_isa(std::string_view name);

namespace detail {
const KernelTable* avx2_table() noexcept;
}

}  // namespace gaitlab::kernels
