#include "gaitlab/rewards.hpp"

#include <cmath>
#include <stdexcept>

namespace gaitlab {

double gait_reward(const PerLeg<double>& phases, const PerLeg<double>& grf) noexcept {
  double r = 0.0;
  for (std::size_t i = 0; i < kLegCount; ++i) r -= grf[i] * std::sin(phases[i]);
  return r;
}

double gait_reward(const OscillatorBank& bank, const GrfVector& grf) noexcept {
  return gait_reward(bank.phases(), grf.values());
}

double squared_exponential(double error, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("squared exponential scale must be finite and > 0");
  return std::exp(-error * error / scale);
}

const std::vector<std::string>& known_reward_terms() {
  using namespace reward_terms;
  static const std::vector<std::string> terms{kGait,       kLinVelTracking, kYawRateTracking, kOrientation,
                                              kBaseHeight, kTorque,         kActionRate,      kActionAccel,
                                              kHipDeviation, kTermination};
  return terms;
}

RewardTable RewardTable::defaults() {
  using namespace reward_terms;
  RewardTable t;
  for (const char* term : {kGait, kLinVelTracking, kYawRateTracking, kTorque, kActionRate, kActionAccel,
                           kHipDeviation, kTermination}) {
    t.weights[term] = 1.0;
  }
  for (const char* term : {kLinVelTracking, kYawRateTracking, kOrientation, kBaseHeight}) t.scales[term] = 1.0;
  return t;
}

double RewardTable::scale(const std::string& term) const {
  const auto it = scales.find(term);
  return it == scales.end() ? 1.0 : it->second;
}

namespace {

void require_channel(bool present, const std::string& term, const char* channel) {
  if (!present) {
    throw std::invalid_argument("reward term '" + term + "' needs log channel '" + channel +
                                "', which is absent");
  }
}

}  // namespace

std::vector<RewardSample> score_rollout(const RolloutLog& log, const RewardTable& table) {
  using namespace reward_terms;
  for (const auto& [term, w] : table.weights) {
    bool known = false;
    for (const std::string& k : known_reward_terms()) known = known || k == term;
    if (!known) throw std::invalid_argument("unknown reward term '" + term + "'");
  }
  auto enabled = [&](const char* term) { return table.weights.count(term) > 0; };
  auto weight = [&](const char* term) { return enabled(term) ? table.weights.at(term) : 0.0; };

  const std::size_t n = log.size();
  if (enabled(kGait)) {
    require_channel(log.phases.size() == n, kGait, "phases");
    require_channel(log.grf.size() == n, kGait, "grf");
  }
  if (enabled(kLinVelTracking)) {
    require_channel(log.velocity.size() == n, kLinVelTracking, "velocity");
    require_channel(log.cmd_forward.size() == n, kLinVelTracking, "cmd_forward");
    require_channel(log.heading.size() == n, kLinVelTracking, "heading");
  }
  if (enabled(kYawRateTracking)) {
    require_channel(log.heading.size() == n, kYawRateTracking, "heading");
    require_channel(log.cmd_yaw_rate.size() == n, kYawRateTracking, "cmd_yaw_rate");
  }
  if (enabled(kOrientation))
    require_channel(log.orientation_error && log.orientation_error->size() == n, kOrientation, "orientation_error");
  if (enabled(kBaseHeight))
    require_channel(log.base_height_error && log.base_height_error->size() == n, kBaseHeight, "base_height_error");
  if (enabled(kTorque)) require_channel(log.grf.size() == n, kTorque, "grf");
  if (enabled(kActionRate)) require_channel(log.stance.size() == n, kActionRate, "stance");
  if (enabled(kActionAccel)) require_channel(log.stance.size() == n, kActionAccel, "stance");
  if (enabled(kHipDeviation)) require_channel(log.feet.size() == n, kHipDeviation, "feet");

  std::vector<RewardSample> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    RewardSample& r = out[t];

    if (enabled(kGait) && log.mask.rewards) r.gait_reward = gait_reward(log.phases[t], log.grf[t]);

    r.tracking_terms[kLinVelTracking] = std::nullopt;
    if (enabled(kLinVelTracking)) {
      const Vec2 cmd = rotate({log.cmd_forward[t], 0.0}, log.heading[t]);
      r.tracking_terms[kLinVelTracking] = squared_exponential(norm(log.velocity[t] - cmd), table.scale(kLinVelTracking));
    }
    r.tracking_terms[kYawRateTracking] = std::nullopt;
    if (enabled(kYawRateTracking)) {
      double yaw_rate = log.cmd_yaw_rate[t];
      if (n > 1 && log.sample_dt > 0.0) {
        const std::size_t a = t == 0 ? 0 : t - 1;
        const std::size_t b = t == 0 ? 1 : t;
        yaw_rate = wrap_signed(log.heading[b] - log.heading[a]) / log.sample_dt;
      }
      r.tracking_terms[kYawRateTracking] =
          squared_exponential(yaw_rate - log.cmd_yaw_rate[t], table.scale(kYawRateTracking));
    }
    r.tracking_terms[kOrientation] = std::nullopt;
    if (enabled(kOrientation))
      r.tracking_terms[kOrientation] = squared_exponential((*log.orientation_error)[t], table.scale(kOrientation));
    r.tracking_terms[kBaseHeight] = std::nullopt;
    if (enabled(kBaseHeight))
      r.tracking_terms[kBaseHeight] = squared_exponential((*log.base_height_error)[t], table.scale(kBaseHeight));

    // Proxies: commanded leg loads stand in for torques, stance flags for actions.
    r.regularizers[kTorque] = std::nullopt;
    if (enabled(kTorque)) {
      double s = 0.0;
      for (double f : log.grf[t]) s += f * f;
      r.regularizers[kTorque] = s;
    }
    r.regularizers[kActionRate] = std::nullopt;
    if (enabled(kActionRate)) {
      double s = 0.0;
      if (t >= 1) {
        for (std::size_t i = 0; i < kLegCount; ++i) {
          const double d = double(log.stance[t][i]) - double(log.stance[t - 1][i]);
          s += d * d;
        }
      }
      r.regularizers[kActionRate] = s;
    }
    r.regularizers[kActionAccel] = std::nullopt;
    if (enabled(kActionAccel)) {
      double s = 0.0;
      if (t >= 2) {
        for (std::size_t i = 0; i < kLegCount; ++i) {
          const double d = double(log.stance[t][i]) - 2.0 * double(log.stance[t - 1][i]) + double(log.stance[t - 2][i]);
          s += d * d;
        }
      }
      r.regularizers[kActionAccel] = s;
    }
    r.regularizers[kHipDeviation] = std::nullopt;
    if (enabled(kHipDeviation)) {
      double s = 0.0;
      for (std::size_t i = 0; i < kLegCount; ++i) {
        const double d = log.feet[t][i].y - log.nominal_feet[i].y;
        s += d * d;
      }
      r.regularizers[kHipDeviation] = s;
    }

    if (enabled(kTermination) && log.failure_time && t + 1 == n) r.termination_penalty = weight(kTermination);

    r.total = weight(kGait) * r.gait_reward - r.termination_penalty;
    for (const auto& [term, v] : r.tracking_terms) {
      if (v) r.total += table.weights.at(term) * *v;
    }
    for (const auto& [term, v] : r.regularizers) {
      if (v) r.total -= table.weights.at(term) * *v;
    }
  }
  return out;
}

}  // namespace gaitlab
