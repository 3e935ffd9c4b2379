#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string_view>

namespace gaitlab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Fixed leg order used by every per-leg container in the library:
// right front, left front, right hind, left hind.
enum class Leg : std::uint8_t { RF = 0, LF = 1, RH = 2, LH = 3 };

inline constexpr std::size_t kLegCount = 4;
inline constexpr std::array<Leg, kLegCount> kLegs{Leg::RF, Leg::LF, Leg::RH, Leg::LH};

template <class T>
using PerLeg = std::array<T, kLegCount>;

constexpr std::size_t index(Leg leg) noexcept { return static_cast<std::size_t>(leg); }

constexpr std::string_view leg_name(Leg leg) noexcept {
  switch (leg) {
    case Leg::RF: return "RF";
    case Leg::LF: return "LF";
    case Leg::RH: return "RH";
    case Leg::LH: return "LH";
  }
  return "??";
}

// Accepts the canonical names and the FR/FL/HR/HL spelling.
constexpr std::optional<Leg> parse_leg(std::string_view name) noexcept {
  if (name == "RF" || name == "FR" || name == "rf" || name == "fr") return Leg::RF;
  if (name == "LF" || name == "FL" || name == "lf" || name == "fl") return Leg::LF;
  if (name == "RH" || name == "HR" || name == "rh" || name == "hr") return Leg::RH;
  if (name == "LH" || name == "HL" || name == "lh" || name == "hl") return Leg::LH;
  return std::nullopt;
}

// Floored modulo onto [0, 2π). The SIMD kernels use the same sequence of
// operations so both paths wrap identically.
inline double wrap_phase(double x) noexcept {
  double w = x - kTwoPi * std::floor(x / kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w -= kTwoPi;
  return w;
}

// Maps onto (-π, π].
inline double wrap_signed(double x) noexcept {
  double w = wrap_phase(x);
  return w > kPi ? w - kTwoPi : w;
}

}  // namespace gaitlab
