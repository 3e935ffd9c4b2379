#include "gaitlab/gait_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gaitlab/kernels.hpp"

namespace gaitlab {

std::string_view gait_name(GaitLabel label) noexcept {
  switch (label) {
    case GaitLabel::Trot: return "Trot";
    case GaitLabel::Pace: return "Pace";
    case GaitLabel::Bound: return "Bound";
    case GaitLabel::Pronk: return "Pronk";
    case GaitLabel::Transition: return "Transition";
  }
  return "?";
}

std::optional<GaitLabel> parse_gait(std::string_view name) noexcept {
  for (GaitLabel g : {GaitLabel::Trot, GaitLabel::Pace, GaitLabel::Bound, GaitLabel::Pronk, GaitLabel::Transition}) {
    if (gait_name(g) == name) return g;
  }
  return std::nullopt;
}

TouchdownLog detect_touchdowns(const GrfSeries& series, double threshold, double debounce) {
  if (series.values.empty()) throw std::invalid_argument("empty GRF series");
  if (!(series.sample_dt > 0.0)) throw std::invalid_argument("GRF series sample period must be > 0");
  if (!(debounce >= 0.0)) throw std::invalid_argument("debounce must be >= 0");

  TouchdownLog log;

  for (std::size_t leg = 0; leg < kLegCount; ++leg) {
    bool contact = false;
    std::optional<std::size_t> candidate;
    for (std::size_t i = 0; i < series.values.size(); ++i) {
      const bool raw = series.values[i][leg] > threshold;
      if (raw == contact) {
        candidate.reset();
        continue;
      }
      if (!candidate) candidate = i;
      const double held = static_cast<double>(i + 1 - *candidate) * series.sample_dt;
      if (held >= debounce - 1e-12) {
        const double t = series.start_time + static_cast<double>(*candidate) * series.sample_dt;
        (raw ? log.touchdowns[leg] : log.liftoffs[leg]).push_back(t);
        contact = raw;
        candidate.reset();
      }
    }
  }
  return log;
}

RpdResult compute_rpd(const TouchdownLog& log) {
  RpdResult out;
  const auto& ref = log.touchdowns[index(Leg::RF)];
  if (ref.size() < 2) {
    out.reason = "need at least 2 RF touchdowns, found " + std::to_string(ref.size());
    return out;
  }

  constexpr std::array<Leg, 3> kOthers{Leg::LF, Leg::RH, Leg::LH};
  for (std::size_t k = 0; k + 1 < ref.size(); ++k) {
    const double t0 = ref[k];
    const double t1 = ref[k + 1];
    const double len = t1 - t0;
    RpdSample s{{}, t0, len};
    bool complete = len > 0.0;
    for (std::size_t c = 0; c < kOthers.size(); ++c) {
      const auto& td = log.touchdowns[index(kOthers[c])];
      const auto it = std::lower_bound(td.begin(), td.end(), t0);
      if (it == td.end() || *it >= t1) {
        ++out.missing_touchdowns[index(kOthers[c])];
        complete = false;
        continue;
      }
      s.values[c] = wrap_phase(kTwoPi * (*it - t0) / len);
    }
    if (complete) out.samples.push_back(s);
    else ++out.incomplete_cycles;
  }
  return out;
}

namespace {

Classification pick(const std::array<double, 4>& dist) {
  Classification c;
  std::size_t best = 0;
  for (std::size_t g = 1; g < dist.size(); ++g) {
    if (dist[g] < dist[best]) best = g;
  }
  c.nearest = kIdealGaits[best];
  c.distance = dist[best];
  c.label = c.distance > kTransitionDistance ? GaitLabel::Transition : c.nearest;
  return c;
}

}  // namespace

Classification classify_gait(const RpdSample& rpd, bool wrap_aware) {
  std::array<double, 4> dist{};
  const auto& k = kernels::scalar();
  k.gait_distances(std::span(&rpd.values[0], 1), std::span(&rpd.values[1], 1), std::span(&rpd.values[2], 1),
                   wrap_aware, dist);
  return pick(dist);
}

std::vector<Classification> classify_batch(std::span<const RpdSample> samples, bool wrap_aware) {
  const std::size_t n = samples.size();
  std::vector<double> lf(n), rh(n), lh(n), dist(4 * n);
  for (std::size_t i = 0; i < n; ++i) {
    lf[i] = samples[i].values[0];
    rh[i] = samples[i].values[1];
    lh[i] = samples[i].values[2];
  }
  kernels::active().gait_distances(lf, rh, lh, wrap_aware, dist);
  std::vector<Classification> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = pick({dist[i], dist[n + i], dist[2 * n + i], dist[3 * n + i]});
  return out;
}

std::array<double, 3> circular_mean(std::span<const RpdSample> samples) {
  std::array<double, 3> mean{};
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0.0;
    double co = 0.0;
    for (const RpdSample& r : samples) {
      s += std::sin(r.values[c]);
      co += std::cos(r.values[c]);
    }
    double m = wrap_phase(std::atan2(s, co));
    // Snap rounding residue of a symmetric pair back onto zero.
    if (std::abs(wrap_signed(m)) < 1e-12) m = 0.0;
    mean[c] = m;
  }
  return mean;
}

std::vector<AggregatedRpd> aggregate_rpd(std::span<const RpdSample> samples, double end_time,
                                         std::size_t window_cycles, double stride, bool wrap_aware) {
  if (!(stride > 0.0)) throw std::invalid_argument("aggregation stride must be > 0");
  if (window_cycles == 0) throw std::invalid_argument("aggregation window must hold at least one cycle");
  std::vector<AggregatedRpd> out;
  constexpr double kEps = 1e-9;

  for (std::size_t k = 1;; ++k) {
    const double tick = stride * static_cast<double>(k);
    if (tick > end_time + kEps) break;

    std::vector<RpdSample> window;
    for (auto it = samples.rbegin(); it != samples.rend() && window.size() < window_cycles; ++it) {
      const double end = it->cycle_start + it->cycle_length;
      if (end > tick + kEps) continue;
      if (end <= tick - stride + kEps) break;
      window.push_back(*it);
    }
    if (window.size() < window_cycles) continue;
    std::reverse(window.begin(), window.end());

    AggregatedRpd a;
    a.time = tick;
    a.rpd.values = circular_mean(window);
    a.rpd.cycle_start = window.front().cycle_start;
    a.rpd.cycle_length = (window.back().cycle_start + window.back().cycle_length - a.rpd.cycle_start) /
                         static_cast<double>(window.size());
    a.gait = classify_gait(a.rpd, wrap_aware);
    out.push_back(a);
  }
  return out;
}

PhaseLockedGrf phase_locked_grf(std::span<const PerLeg<double>> phases, std::span<const PerLeg<double>> grf,
                                Leg reference) {
  if (phases.size() != grf.size()) throw std::invalid_argument("phase and GRF series differ in length");
  PhaseLockedGrf out;
  if (phases.empty()) return out;

  const std::size_t r = index(reference);
  out.cycles.emplace_back();
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (i > 0 && phases[i][r] < phases[i - 1][r] - kPi) out.cycles.emplace_back();
    PhaseLockedCycle& cyc = out.cycles.back();
    const double ref_phase = phases[i][r];
    cyc.reference_phase.push_back(ref_phase);
    for (std::size_t leg = 0; leg < kLegCount; ++leg) cyc.grf[leg].push_back(grf[i][leg]);

    if (i == 0) continue;
    for (Leg leg : kLegs) {
      const double before = phases[i - 1][index(leg)];
      const double after = phases[i][index(leg)];
      const std::size_t cycle = out.cycles.size() - 1;
      if (after < before - kPi) out.markers.push_back({leg, Crossing::Zero, cycle, ref_phase});
      else if (before < kPi && after >= kPi) out.markers.push_back({leg, Crossing::Pi, cycle, ref_phase});
    }
  }
  return out;
}

}  // namespace gaitlab
