#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "gaitlab/harness.hpp"
#include "gaitlab/kernels.hpp"
#include "gaitlab/rewards.hpp"

namespace gaitlab {

std::string OrcMask::name() const {
  std::string s = "ORC";
  s += observations ? '1' : '0';
  s += rewards ? '1' : '0';
  s += coupling ? '1' : '0';
  return s;
}

OrcMask OrcMask::parse(std::string_view text) {
  if (text.substr(0, 3) == "ORC" || text.substr(0, 3) == "orc") text.remove_prefix(3);
  if (text.size() != 3 || text.find_first_not_of("01") != std::string_view::npos)
    throw std::invalid_argument("ORC mask must be three 0/1 digits, got '" + std::string(text) + "'");
  return {text[0] == '1', text[1] == '1', text[2] == '1'};
}

TouchdownLog RolloutLog::touchdown_log() const {
  TouchdownLog out;
  for (const ContactRecord& c : contacts) {
    auto& list = c.kind == ContactEvent::Touchdown ? out.touchdowns[index(c.leg)] : out.liftoffs[index(c.leg)];
    list.push_back(c.time);
  }
  return out;
}

SimSettings SimSettings::from(const RunConfig& config) {
  SimSettings s;
  s.oscillator = config.oscillator;
  s.plant = config.plant;
  s.v_x = config.experiment.v_x;
  s.yaw_rate = config.experiment.yaw_rate;
  s.sigma_override = config.experiment.eval_sigma;
  s.terminate_on_failure = config.experiment.terminates_on_failure();
  s.decimation = config.output.decimation;
  s.config_digest = config.digest();
  return s;
}

std::uint64_t steps_for(double duration, double dt) {
  if (!(duration >= 0.0) || !(dt > 0.0)) throw std::invalid_argument("duration must be >= 0 and dt > 0");
  return static_cast<std::uint64_t>(std::llround(duration / dt));
}

namespace {

OscillatorParams scheduled(const SimSettings& s) {
  OscillatorParams p = s.oscillator.fixed_params ? *s.oscillator.fixed_params
                                                 : schedule_params(s.v_x, s.oscillator.blend_width);
  if (s.sigma_override) p = p.with_sigma(*s.sigma_override);
  return p;
}

}  // namespace

Simulator::Simulator(SimSettings settings, OrcMask mask, std::uint64_t seed,
                     std::optional<PerLeg<double>> initial_phases)
    : settings_(std::move(settings)),
      mask_(mask),
      bank_(initial_phases ? *initial_phases : random_phases(seed), scheduled(settings_),
            settings_.oscillator.coupling_mode, settings_.oscillator.diffusive_gain),
      monitor_(settings_.plant),
      noise_(seed ^ 0x9e3779b97f4a7c15ULL) {
  if (!(settings_.oscillator.dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (settings_.decimation == 0) throw std::invalid_argument("decimation must be >= 1");
  settings_.plant.validate();
  bank_ = bank_.with_params(active_params());

  body_.cmd_forward = settings_.v_x;
  body_.cmd_yaw_rate = settings_.yaw_rate;
  body_.velocity = {settings_.v_x, 0.0};
  legs_ = initial_legs(bank_, body_, settings_.plant);
  grf_ = load_distribution(body_, legs_, settings_.plant);

  log_.seed = seed;
  log_.mask = mask_;
  log_.config_digest = settings_.config_digest;
  log_.kernel = std::string(kernels::isa_name(kernels::active().isa));
  log_.physics_dt = settings_.oscillator.dt;
  log_.sample_dt = settings_.oscillator.dt * static_cast<double>(settings_.decimation);
  log_.initial_phases = bank_.phases();
  for (Leg leg : kLegs) log_.nominal_feet[index(leg)] = legs_[index(leg)].nominal_offset;
  if (mask_.observations) log_.observations.emplace();
}

OscillatorParams Simulator::active_params() const {
  OscillatorParams p = scheduled(settings_);
  if (!mask_.coupling) p = p.with_sigma(0.0);
  return p;
}

void Simulator::set_command(double v_x, double yaw_rate) {
  settings_.v_x = v_x;
  settings_.yaw_rate = yaw_rate;
  body_.cmd_forward = v_x;
  body_.cmd_yaw_rate = yaw_rate;
  bank_ = bank_.with_params(active_params());
}

void Simulator::apply_impulse(Vec2 impulse) {
  body_ = apply_perturbation(body_, impulse);
  pending_impulse_ = pending_impulse_ + impulse;
  if (settings_.record) log_.impulses.push_back({time(), impulse});
}

void Simulator::restart_failure_monitor(bool terminate_on_failure) {
  monitor_ = FailureMonitor(settings_.plant);
  failure_ = {};
  settings_.terminate_on_failure = terminate_on_failure;
}

std::optional<double> Simulator::failure_time() const {
  if (!failure_.failed) return std::nullopt;
  return failure_.time;
}

void Simulator::record_sample() {
  RolloutLog& l = log_;
  l.time.push_back(time());
  l.phases.push_back(bank_.phases());
  l.grf.push_back(grf_.values());
  PerLeg<std::uint8_t> stance{};
  PerLeg<Vec2> feet{};
  for (std::size_t i = 0; i < kLegCount; ++i) {
    stance[i] = legs_[i].mode == LegMode::Stance ? 1 : 0;
    feet[i] = legs_[i].foot_body;
  }
  l.stance.push_back(stance);
  l.feet.push_back(feet);
  l.com.push_back(body_.com);
  l.velocity.push_back(body_.velocity);
  l.heading.push_back(body_.heading);
  l.cmd_forward.push_back(body_.cmd_forward);
  l.cmd_yaw_rate.push_back(body_.cmd_yaw_rate);
  l.gait_reward.push_back(mask_.rewards ? gait_reward(bank_.phases(), grf_.values()) : 0.0);
  l.impulse.push_back(pending_impulse_);
  pending_impulse_ = {};
  if (l.observations) l.observations->push_back(encode_observation(bank_));
}

void Simulator::step() {
  if (failed() && settings_.terminate_on_failure) return;
  if (settings_.record && steps_ % settings_.decimation == 0) record_sample();

  const double dt = settings_.oscillator.dt;
  const double t0 = time();
  bank_ = step_oscillator(bank_, grf_, dt);
  PlantStep next = step_plant(body_, legs_, bank_, dt, settings_.plant, &noise_);
  body_ = next.body;
  legs_ = next.legs;
  grf_ = next.grf;
  if (settings_.record) {
    for (const LegEvent& e : next.events) log_.contacts.push_back({e.leg, e.kind, t0 + e.fraction * dt});
  }
  ++steps_;

  failure_ = monitor_.update(time(), body_, legs_);
}

void Simulator::run_to_step(std::uint64_t target_steps) {
  while (steps_ < target_steps) {
    if (failed() && settings_.terminate_on_failure) break;
    step();
  }
}

RolloutLog Simulator::finish() && {
  log_.end_time = time();
  log_.failure_time = failure_time();
  return std::move(log_);
}

RolloutLog run_rollout(const RunConfig& config, const OrcMask& mask, std::uint64_t seed) {
  Simulator sim(SimSettings::from(config), mask, seed, config.experiment.initial_phases);
  sim.run_to_step(steps_for(config.experiment.duration, config.oscillator.dt));
  return std::move(sim).finish();
}

std::size_t worker_count() {
  if (const char* env = std::getenv("GAITLAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t threads) {
  if (threads == 0) threads = worker_count();
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> has_error{false};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n && !has_error; i = next++) {
          try {
            fn(i);
          } catch (...) {
            if (!has_error.exchange(true)) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace gaitlab
