// AVX2 + FMA variants. Compiled with -mavx2 -mfma; only reached after the
// dispatcher has confirmed CPU support.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "gaitlab/kernels.hpp"
#include "gaitlab/legs.hpp"

namespace gaitlab::kernels {
namespace {

// π/2 split into three parts (Cody-Waite); the leading part has 33
// significant bits so k * kPio2Hi is exact for the small k seen here.
constexpr double kPio2Hi = 1.57079632673412561417e+00;
constexpr double kPio2Mid = 6.07710050630396597660e-11;
constexpr double kPio2Lo = 2.02226624871116645580e-21;
constexpr double kTwoOverPi = 0.636619772367581343076;

// Taylor coefficients; |r| <= π/4 keeps the truncation error below 1e-17.
constexpr double kCos[] = {1.0,
                           -1.0 / 2.0,
                           1.0 / 24.0,
                           -1.0 / 720.0,
                           1.0 / 40320.0,
                           -1.0 / 3628800.0,
                           1.0 / 479001600.0,
                           -1.0 / 87178291200.0,
                           1.0 / 20922789888000.0};
constexpr double kSin[] = {1.0,
                           -1.0 / 6.0,
                           1.0 / 120.0,
                           -1.0 / 5040.0,
                           1.0 / 362880.0,
                           -1.0 / 39916800.0,
                           1.0 / 6227020800.0,
                           -1.0 / 1307674368000.0,
                           1.0 / 355687428096000.0};

inline __m256d horner(__m256d z, const double (&c)[9]) {
  __m256d acc = _mm256_set1_pd(c[8]);
  for (int k = 7; k >= 0; --k) acc = _mm256_fmadd_pd(acc, z, _mm256_set1_pd(c[k]));
  return acc;
}

inline __m256d cos_pd(__m256d x) {
  const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kTwoOverPi)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kPio2Hi), x);
  r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kPio2Mid), r);
  r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kPio2Lo), r);

  const __m256d z = _mm256_mul_pd(r, r);
  const __m256d c = horner(z, kCos);
  const __m256d s = _mm256_mul_pd(r, horner(z, kSin));

  // Quadrant q = k mod 4: cos, -sin, -cos, sin.
  const __m128i q = _mm256_cvtpd_epi32(k);
  const __m128i one = _mm_set1_epi32(1);
  const __m128i two = _mm_set1_epi32(2);
  const __m128i use_sin = _mm_cmpeq_epi32(_mm_and_si128(q, one), one);
  const __m128i negate = _mm_cmpeq_epi32(_mm_and_si128(_mm_add_epi32(q, one), two), two);
  const __m256d sin_mask = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(use_sin));
  const __m256d neg_mask = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(negate));

  const __m256d v = _mm256_blendv_pd(c, s, sin_mask);
  const __m256d sign = _mm256_and_pd(neg_mask, _mm256_set1_pd(-0.0));
  return _mm256_xor_pd(v, sign);
}

// Same operation order as wrap_phase().
inline __m256d wrap_pd(__m256d x) {
  const __m256d two_pi = _mm256_set1_pd(kTwoPi);
  const __m256d fl = _mm256_floor_pd(_mm256_div_pd(x, two_pi));
  __m256d w = _mm256_sub_pd(x, _mm256_mul_pd(two_pi, fl));
  const __m256d neg = _mm256_cmp_pd(w, _mm256_setzero_pd(), _CMP_LT_OQ);
  w = _mm256_blendv_pd(w, _mm256_add_pd(w, two_pi), neg);
  const __m256d over = _mm256_cmp_pd(w, two_pi, _CMP_GE_OQ);
  return _mm256_blendv_pd(w, _mm256_sub_pd(w, two_pi), over);
}

double cos_tail(double x) {
  alignas(32) double buf[4] = {x, 0.0, 0.0, 0.0};
  _mm256_store_pd(buf, cos_pd(_mm256_load_pd(buf)));
  return buf[0];
}

void phase_rates_avx2(std::span<const double> phases, std::span<const double> grf, RateParams p,
                      std::span<double> out) {
  const std::size_t n = phases.size();
  const __m256d two_pi = _mm256_set1_pd(kTwoPi);
  const __m256d omega = _mm256_set1_pd(p.omega);
  const __m256d sigma = _mm256_set1_pd(p.sigma);
  const __m256d xi = _mm256_set1_pd(p.xi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ph = _mm256_loadu_pd(phases.data() + i);
    const __m256d f = _mm256_loadu_pd(grf.data() + i);
    const __m256d load = _mm256_mul_pd(sigma, f);
    const __m256d inner = _mm256_sub_pd(omega, _mm256_mul_pd(load, _mm256_add_pd(cos_pd(ph), xi)));
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(two_pi, inner));
  }
  for (; i < n; ++i) {
    out[i] = kTwoPi * (p.omega - p.sigma * grf[i] * (cos_tail(phases[i]) + p.xi));
  }
}

void advance_phases_avx2(std::span<double> phases, std::span<const double> rates, double dt) {
  const std::size_t n = phases.size();
  const __m256d step = _mm256_set1_pd(dt);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ph = _mm256_loadu_pd(phases.data() + i);
    const __m256d r = _mm256_loadu_pd(rates.data() + i);
    _mm256_storeu_pd(phases.data() + i, wrap_pd(_mm256_add_pd(ph, _mm256_mul_pd(step, r))));
  }
  for (; i < n; ++i) phases[i] = wrap_phase(phases[i] + dt * rates[i]);
}

constexpr double kIdeal[kIdealGaitCount][3] = {
    {kPi, kPi, 0.0},
    {kPi, 0.0, kPi},
    {0.0, kPi, kPi},
    {0.0, 0.0, 0.0},
};

inline __m256d component_sq_pd(__m256d v, double ideal, bool wrap_aware) {
  const __m256d d = _mm256_sub_pd(wrap_pd(v), _mm256_set1_pd(ideal));
  if (!wrap_aware) return _mm256_mul_pd(d, d);
  const __m256d a = _mm256_andnot_pd(_mm256_set1_pd(-0.0), d);
  const __m256d m = _mm256_min_pd(a, _mm256_sub_pd(_mm256_set1_pd(kTwoPi), a));
  return _mm256_mul_pd(m, m);
}

inline double component_sq(double v, double ideal, bool wrap_aware) {
  const double d = wrap_phase(v) - ideal;
  if (!wrap_aware) return d * d;
  const double a = std::abs(d);
  const double m = std::min(a, kTwoPi - a);
  return m * m;
}

void gait_distances_avx2(std::span<const double> lf, std::span<const double> rh, std::span<const double> lh,
                         bool wrap_aware, std::span<double> out) {
  const std::size_t n = lf.size();
  for (std::size_t g = 0; g < kIdealGaitCount; ++g) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      __m256d s = component_sq_pd(_mm256_loadu_pd(lf.data() + i), kIdeal[g][0], wrap_aware);
      s = _mm256_add_pd(s, component_sq_pd(_mm256_loadu_pd(rh.data() + i), kIdeal[g][1], wrap_aware));
      s = _mm256_add_pd(s, component_sq_pd(_mm256_loadu_pd(lh.data() + i), kIdeal[g][2], wrap_aware));
      _mm256_storeu_pd(out.data() + g * n + i, _mm256_sqrt_pd(s));
    }
    for (; i < n; ++i) {
      double s = component_sq(lf[i], kIdeal[g][0], wrap_aware);
      s += component_sq(rh[i], kIdeal[g][1], wrap_aware);
      s += component_sq(lh[i], kIdeal[g][2], wrap_aware);
      out[g * n + i] = std::sqrt(s);
    }
  }
}

const KernelTable kAvx2{Isa::Avx2, phase_rates_avx2, advance_phases_avx2, gait_distances_avx2};

}  // namespace

namespace detail {
const KernelTable* avx2_table() noexcept { return &kAvx2; }
}  // namespace detail

}  // namespace gaitlab::kernels
