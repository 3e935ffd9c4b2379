#include "gaitlab/plant.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gaitlab {

double norm(Vec2 v) noexcept { return std::hypot(v.x, v.y); }
double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
double cross(Vec2 a, Vec2 b) noexcept { return a.x * b.y - a.y * b.x; }

Vec2 rotate(Vec2 v, double angle) noexcept {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

void PlantConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) throw std::invalid_argument(std::string("plant.") + name + " must be > 0");
  };
  positive(body_half_length, "body_half_length");
  positive(body_half_width, "body_half_width");
  positive(step_length_gain, "step_length_gain");
  positive(failure_margin, "failure_margin");
  positive(failure_grace, "failure_grace");
  positive(velocity_time_constant, "velocity_time_constant");
  if (!std::isfinite(capture_gain) || capture_gain < 0.0)
    throw std::invalid_argument("plant.capture_gain must be >= 0");
  if (!std::isfinite(grf_noise_std) || grf_noise_std < 0.0)
    throw std::invalid_argument("plant.grf_noise_std must be >= 0");
}

LegMode leg_mode(double phase) noexcept { return phase >= kPi ? LegMode::Stance : LegMode::Swing; }

Vec2 nominal_offset(Leg leg, const PlantConfig& config) noexcept {
  const double l = config.body_half_length;
  const double w = config.body_half_width;
  switch (leg) {
    case Leg::RF: return {l, -w};
    case Leg::LF: return {l, w};
    case Leg::RH: return {-l, -w};
    case Leg::LH: return {-l, w};
  }
  return {};
}

Legs initial_legs(const OscillatorBank& bank, const BodyState& body, const PlantConfig& config) {
  config.validate();
  Legs legs{};
  for (Leg leg : kLegs) {
    LegState& s = legs[index(leg)];
    s.phase = bank.phase(leg);
    s.mode = leg_mode(s.phase);
    s.nominal_offset = nominal_offset(leg, config);
    s.foot_body = s.nominal_offset;
    s.liftoff_body = s.nominal_offset;
    s.foot_world = body.com + rotate(s.nominal_offset, body.heading);
  }
  return legs;
}

namespace {

// Least-squares moment balance over the affine set Σf = 1, minimum norm.
Eigen::VectorXd balance_loads(const std::vector<Vec2>& feet) {
  const auto n = static_cast<Eigen::Index>(feet.size());
  Eigen::VectorXd f0 = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  if (n == 1) return f0;

  Eigen::MatrixXd moment(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    moment(0, i) = feet[static_cast<std::size_t>(i)].x;
    moment(1, i) = feet[static_cast<std::size_t>(i)].y;
  }

  // Orthonormal basis of {f : Σf = 0}.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd::Ones(n, 1));
  const Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd null_basis = q.rightCols(n - 1);

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(moment * null_basis);
  cod.setThreshold(1e-9);
  const Eigen::VectorXd z = cod.solve(-moment * f0);
  return f0 + null_basis * z;
}

}  // namespace

GrfVector load_distribution(const BodyState& /*body*/, const Legs& legs, const PlantConfig& /*config*/) {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < kLegCount; ++i) {
    if (legs[i].mode == LegMode::Stance) active.push_back(i);
  }

  PerLeg<double> out{};
  while (!active.empty()) {
    std::vector<Vec2> feet;
    feet.reserve(active.size());
    for (std::size_t i : active) feet.push_back(legs[i].foot_body);
    const Eigen::VectorXd f = balance_loads(feet);

    Eigen::Index worst = 0;
    const double min_load = f.minCoeff(&worst);
    if (min_load < -1e-12) {
      active.erase(active.begin() + worst);
      continue;
    }
    for (std::size_t k = 0; k < active.size(); ++k) out[active[k]] = f(static_cast<Eigen::Index>(k));
    break;
  }
  return GrfVector::clamped(out);
}

namespace {

// Where within the step the phase crossed the boundary that changed mode.
double crossing_fraction(double before, double after) {
  const double unwrapped = before + wrap_signed(after - before);
  if (unwrapped == before) return 1.0;
  const double lo = std::min(before, unwrapped);
  const double hi = std::max(before, unwrapped);
  for (double boundary : {0.0, kPi, kTwoPi}) {
    if (lo < boundary && boundary <= hi) {
      return std::clamp((boundary - before) / (unwrapped - before), 0.0, 1.0);
    }
  }
  return 1.0;
}

}  // namespace

PlantStep step_plant(const BodyState& body, const Legs& legs, const OscillatorBank& bank, double dt,
                     const PlantConfig& config, std::mt19937_64* noise) {
  if (!std::isfinite(dt) || dt <= 0.0) throw std::invalid_argument("dt must be finite and > 0");
  const bool finite = std::isfinite(body.com.x) && std::isfinite(body.com.y) && std::isfinite(body.heading) &&
                      std::isfinite(body.velocity.x) && std::isfinite(body.velocity.y) &&
                      std::isfinite(body.cmd_forward) && std::isfinite(body.cmd_yaw_rate);
  if (!finite) throw std::invalid_argument("non-finite body state");

  PlantStep out{body, legs, {}, {}};
  BodyState& b = out.body;

  const Vec2 cmd_world = rotate({body.cmd_forward, 0.0}, body.heading);
  const double alpha = std::min(dt / config.velocity_time_constant, 1.0);
  b.velocity = b.velocity + alpha * (cmd_world - b.velocity);
  b.com = b.com + dt * b.velocity;
  b.heading = wrap_phase(body.heading + dt * body.cmd_yaw_rate);

  const Vec2 cmd_body{body.cmd_forward, 0.0};
  const Vec2 vel_body = rotate(b.velocity, -b.heading);
  const Vec2 lead = config.step_length_gain * cmd_body + config.capture_gain * (vel_body - cmd_body);

  for (Leg leg : kLegs) {
    LegState& s = out.legs[index(leg)];
    const double before = s.phase;
    const double after = bank.phase(leg);
    const LegMode mode = leg_mode(after);
    const Vec2 target = s.nominal_offset + lead;

    if (s.mode == LegMode::Stance && mode == LegMode::Swing) {
      s.liftoff_body = rotate(s.foot_world - b.com, -b.heading);
      out.events.push_back({leg, ContactEvent::Liftoff, crossing_fraction(before, after)});
    } else if (s.mode == LegMode::Swing && mode == LegMode::Stance) {
      s.foot_world = b.com + rotate(target, b.heading);
      out.events.push_back({leg, ContactEvent::Touchdown, crossing_fraction(before, after)});
    }

    s.mode = mode;
    s.phase = after;
    if (mode == LegMode::Stance) {
      s.foot_body = rotate(s.foot_world - b.com, -b.heading);
    } else {
      const double progress = after / kPi;
      s.foot_body = s.liftoff_body + progress * (target - s.liftoff_body);
    }
  }

  GrfVector grf = load_distribution(b, out.legs, config);
  if (config.grf_noise_std > 0.0 && noise != nullptr) {
    std::normal_distribution<double> gauss(0.0, config.grf_noise_std);
    PerLeg<double> noisy = grf.values();
    for (std::size_t i = 0; i < kLegCount; ++i) {
      if (out.legs[i].mode == LegMode::Stance) noisy[i] += gauss(*noise);
    }
    grf = GrfVector::clamped(noisy);
  }
  out.grf = grf;
  return out;
}

BodyState apply_perturbation(const BodyState& body, Vec2 impulse) {
  if (!std::isfinite(impulse.x) || !std::isfinite(impulse.y)) throw std::invalid_argument("non-finite impulse");
  BodyState b = body;
  b.velocity = b.velocity + impulse;
  return b;
}

namespace {

double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return norm(p - a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

double support_clearance(const BodyState& body, const Legs& legs, double margin) {
  std::vector<Vec2> feet;
  for (const LegState& s : legs) {
    if (s.mode == LegMode::Stance) feet.push_back(s.foot_world);
  }
  if (feet.empty()) return -std::numeric_limits<double>::infinity();

  const Vec2 p = body.com;
  std::vector<Vec2> hull = convex_hull(feet);
  if (hull.size() == 1) return margin - norm(p - hull[0]);

  if (hull.size() >= 3) {
    double inside = std::numeric_limits<double>::infinity();
    double area2 = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const Vec2 a = hull[i];
      const Vec2 b = hull[(i + 1) % hull.size()];
      area2 += cross(a, b);
      const double len = norm(b - a);
      inside = std::min(inside, cross(b - a, p - a) / len);
    }
    if (area2 > 1e-12) return inside - margin;
  }

  // Collinear support: distance to the segment spanned by the extremes.
  auto [lo, hi] = std::minmax_element(hull.begin(), hull.end(), [](Vec2 a, Vec2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  return margin - distance_to_segment(p, *lo, *hi);
}

FailureVerdict FailureMonitor::update(double time, const BodyState& body, const Legs& legs) {
  if (verdict_.failed) return verdict_;
  if (support_clearance(body, legs, margin_) >= 0.0) {
    unsupported_since_.reset();
    return verdict_;
  }
  if (!unsupported_since_) unsupported_since_ = time;
  if (time - *unsupported_since_ > grace_) verdict_ = {true, time};
  return verdict_;
}

FailureVerdict detect_failure(std::span<const SupportSample> history, const PlantConfig& config) {
  FailureMonitor monitor(config);
  FailureVerdict v;
  for (const SupportSample& s : history) {
    v = monitor.update(s.time, s.body, s.legs);
    if (v.failed) break;
  }
  return v;
}

}  // namespace gaitlab
