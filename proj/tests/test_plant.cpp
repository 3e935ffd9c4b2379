#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <limits>
#include <vector>

#include "gaitlab/config.hpp"
#include "gaitlab/harness.hpp"
#include "gaitlab/plant.hpp"

using namespace gaitlab;

namespace {

Legs legs_with_phases(PerLeg<double> phases, const PlantConfig& cfg = {}) {
  const OscillatorBank bank(phases, OscillatorParams(1, 4, 1));
  return initial_legs(bank, BodyState{}, cfg);
}

constexpr double kSwing = 0.5;
constexpr double kStance = 1.5 * kPi;

}  // namespace

TEST_SUITE("plant") {
  TEST_CASE("leg mode boundaries") {
    CHECK(leg_mode(0.0) == LegMode::Swing);
    CHECK(leg_mode(std::nextafter(kPi, 0.0)) == LegMode::Swing);
    CHECK(leg_mode(kPi) == LegMode::Stance);
    CHECK(leg_mode(1.5 * kPi) == LegMode::Stance);
  }

  TEST_CASE("load distribution examples") {
    const PlantConfig cfg;
    const BodyState body;

    const GrfVector four = load_distribution(body, legs_with_phases({kStance, kStance, kStance, kStance}), cfg);
    for (std::size_t i = 0; i < kLegCount; ++i) CHECK(four[i] == doctest::Approx(0.25).epsilon(1e-12));

    const GrfVector diag = load_distribution(body, legs_with_phases({kStance, kSwing, kSwing, kStance}), cfg);
    CHECK(diag[Leg::RF] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(diag[Leg::LH] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(diag[Leg::LF] == 0.0);
    CHECK(diag[Leg::RH] == 0.0);

    const GrfVector none = load_distribution(body, legs_with_phases({kSwing, kSwing, kSwing, kSwing}), cfg);
    CHECK(none.sum() == 0.0);
  }

  TEST_CASE("three feet carry the weight with moment balance") {
    // RF, LF, RH in stance: three equations in three loads, so the
    // solution is unique and the CoM lies on the LF-RH hypotenuse.
    const PlantConfig cfg;
    const Legs legs = legs_with_phases({kStance, kStance, kStance, kSwing}, cfg);
    const GrfVector f = load_distribution(BodyState{}, legs, cfg);
    CHECK(f.sum() == doctest::Approx(1.0).epsilon(1e-12));
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < kLegCount; ++i) {
      mx += f[i] * legs[i].foot_body.x;
      my += f[i] * legs[i].foot_body.y;
    }
    CHECK(std::abs(mx) < 1e-12);
    CHECK(std::abs(my) < 1e-12);
    CHECK(f[Leg::LH] == 0.0);
    CHECK(f[Leg::LF] == doctest::Approx(0.5));
    CHECK(f[Leg::RH] == doctest::Approx(0.5));
    CHECK(std::abs(f[Leg::RF]) < 1e-12);
  }

  TEST_CASE("pulling feet are dropped") {
    // Two front feet only: the CoM is behind them, so a least-squares split
    // still puts all weight on the front pair (no negative loads).
    const PlantConfig cfg;
    const GrfVector f = load_distribution(BodyState{}, legs_with_phases({kStance, kStance, kSwing, kSwing}), cfg);
    for (std::size_t i = 0; i < kLegCount; ++i) CHECK(f[i] >= 0.0);
    CHECK(f.sum() == doctest::Approx(1.0));
  }

  TEST_CASE("standing at the stable fixed point does not drift") {
    const PlantConfig cfg;
    OscillatorBank bank({kStance, kStance, kStance, kStance}, schedule_params(0.0));
    BodyState body;
    Legs legs = initial_legs(bank, body, cfg);
    GrfVector grf = load_distribution(body, legs, cfg);
    const PerLeg<Vec2> feet0{legs[0].foot_world, legs[1].foot_world, legs[2].foot_world, legs[3].foot_world};

    for (int step = 0; step < 5000; ++step) {
      bank = step_oscillator(bank, grf, kDefaultDt);
      PlantStep next = step_plant(body, legs, bank, kDefaultDt, cfg);
      body = next.body;
      legs = next.legs;
      grf = next.grf;
      for (std::size_t i = 0; i < kLegCount; ++i) REQUIRE(grf[i] == doctest::Approx(0.25).epsilon(1e-9));
    }
    CHECK(norm(body.com) < 1e-6);
    for (std::size_t i = 0; i < kLegCount; ++i) CHECK(norm(legs[i].foot_world - feet0[i]) < 1e-6);
  }

  TEST_CASE("locked trot alternates diagonal pairs") {
    RunConfig cfg;
    cfg.experiment.duration = 5.0;
    cfg.experiment.v_x = 1.0;
    cfg.experiment.initial_phases = PerLeg<double>{0.0, kPi, kPi, 0.0};
    cfg.output.decimation = 1;
    // A held trot leaves the CoM off the diagonal for most of each stance.
    cfg.experiment.terminate_on_failure = false;
    const RolloutLog log = run_rollout(cfg, OrcMask{}, 1);
    const TouchdownLog td = log.touchdown_log();

    const auto& rf = td.touchdowns[index(Leg::RF)];
    const auto& lf = td.touchdowns[index(Leg::LF)];
    const auto& lh = td.touchdowns[index(Leg::LH)];
    // ω = 2.5 Hz at 1 m/s; feedback only slows the cycle.
    REQUIRE(rf.size() >= 8);
    CHECK(rf.size() <= 13);
    for (std::size_t k = 0; k + 1 < rf.size(); ++k) {
      CAPTURE(k);
      const double t0 = rf[k], t1 = rf[k + 1];
      std::size_t lf_in = 0, lh_in = 0;
      for (double t : lf) lf_in += (t > t0 && t < t1);
      for (double t : lh) lh_in += (t >= t0 - 0.25 * (t1 - t0) && t < t0 + 0.25 * (t1 - t0));
      CHECK(lf_in == 1);  // the other diagonal lands once in between
      CHECK(lh_in == 1);  // the partner lands near RF
    }
  }

  TEST_CASE("load is conserved and only stance feet carry it") {
    RunConfig cfg;
    cfg.experiment.duration = 6.0;
    cfg.output.decimation = 1;
    cfg.experiment.terminate_on_failure = false;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const RolloutLog log = run_rollout(cfg, OrcMask{}, seed);
      for (std::size_t t = 0; t < log.size(); ++t) {
        double sum = 0.0;
        bool any = false;
        for (std::size_t i = 0; i < kLegCount; ++i) {
          sum += log.grf[t][i];
          any = any || log.stance[t][i];
          if (log.grf[t][i] > 0.0) REQUIRE(log.stance[t][i] == 1);
          REQUIRE(bool(log.stance[t][i]) == (leg_mode(log.phases[t][i]) == LegMode::Stance));
        }
        if (any) REQUIRE(sum == doctest::Approx(1.0).epsilon(1e-9));
        else REQUIRE(sum == 0.0);
      }
    }
  }

  TEST_CASE("flight phase carries no load after an impulse") {
    const PlantConfig cfg;
    OscillatorBank bank({0.3, 0.4, 0.5, 0.6}, schedule_params(1.0));
    BodyState body;
    body.cmd_forward = 1.0;
    Legs legs = initial_legs(bank, body, cfg);
    body = apply_perturbation(body, {0.0, 2.0});
    for (int step = 0; step < 20; ++step) {
      bank = step_oscillator(bank, GrfVector{}, kDefaultDt);
      PlantStep next = step_plant(body, legs, bank, kDefaultDt, cfg);
      body = next.body;
      legs = next.legs;
      CHECK(next.grf.sum() == 0.0);
    }
  }

  TEST_CASE("apply perturbation") {
    BodyState rest;
    rest.com = {0.3, -0.2};
    rest.heading = 1.0;
    CHECK(apply_perturbation(rest, {0.0, 0.0}).velocity == rest.velocity);
    const BodyState pushed = apply_perturbation(rest, {1.5, 0.0});
    CHECK(pushed.velocity == Vec2{1.5, 0.0});
    CHECK(pushed.com == rest.com);
    CHECK(pushed.heading == rest.heading);
    for (int a = 0; a < 36; ++a) {
      const double ang = a * 10.0 * kPi / 180.0;
      const BodyState b = apply_perturbation(rest, {2.5 * std::cos(ang), 2.5 * std::sin(ang)});
      CHECK(norm(b.velocity - rest.velocity) == doctest::Approx(2.5).epsilon(1e-12));
    }
    CHECK_THROWS_AS(apply_perturbation(rest, {std::nan(""), 0.0}), std::invalid_argument);
  }

  TEST_CASE("support clearance by support shape") {
    const PlantConfig cfg;
    const double m = cfg.failure_margin;
    BodyState body;

    // Rectangle: nearest edge is the side at half width.
    CHECK(support_clearance(body, legs_with_phases({kStance, kStance, kStance, kStance}), m) ==
          doctest::Approx(cfg.body_half_width - m));
    // Diagonal segment through the CoM.
    CHECK(support_clearance(body, legs_with_phases({kStance, kSwing, kSwing, kStance}), m) == doctest::Approx(m));
    // Single foot.
    const double corner = std::hypot(cfg.body_half_length, cfg.body_half_width);
    CHECK(support_clearance(body, legs_with_phases({kStance, kSwing, kSwing, kSwing}), m) ==
          doctest::Approx(m - corner));
    // No feet.
    CHECK(support_clearance(body, legs_with_phases({kSwing, kSwing, kSwing, kSwing}), m) ==
          -std::numeric_limits<double>::infinity());
    // Outside the rectangle.
    body.com = {0.0, 0.2};
    CHECK(support_clearance(body, legs_with_phases({kStance, kStance, kStance, kStance}), m) ==
          doctest::Approx(-0.1 - m));
  }

  TEST_CASE("failure detection honours the grace period") {
    const PlantConfig cfg;
    const Legs four = legs_with_phases({kStance, kStance, kStance, kStance});
    const Legs none = legs_with_phases({kSwing, kSwing, kSwing, kSwing});
    const double dt = 0.01;

    std::vector<SupportSample> ok;
    for (int i = 0; i < 200; ++i) ok.push_back({i * dt, BodyState{}, four});
    CHECK_FALSE(detect_failure(ok, cfg).failed);

    std::vector<SupportSample> flight;
    for (int i = 0; i < 50; ++i) flight.push_back({i * dt, BodyState{}, none});
    const FailureVerdict v = detect_failure(flight, cfg);
    CHECK(v.failed);
    CHECK(v.time > cfg.failure_grace);
    CHECK(v.time <= cfg.failure_grace + dt + 1e-12);

    // Outside for half the grace, then back inside.
    std::vector<SupportSample> brief;
    BodyState out;
    out.com = {0.0, 0.3};
    const int outside = int(0.5 * cfg.failure_grace / dt);
    for (int i = 0; i < 100; ++i) brief.push_back({i * dt, (i >= 10 && i < 10 + outside) ? out : BodyState{}, four});
    CHECK_FALSE(detect_failure(brief, cfg).failed);

    // Repeated short excursions never accumulate.
    std::vector<SupportSample> flicker;
    for (int i = 0; i < 300; ++i) flicker.push_back({i * dt, BodyState{}, (i % 15 < 10) ? none : four});
    CHECK_FALSE(detect_failure(flicker, cfg).failed);
  }

  TEST_CASE("config validation names the field") {
    PlantConfig cfg;
    cfg.body_half_width = 0.0;
    try {
      cfg.validate();
      FAIL("accepted");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("body_half_width") != std::string::npos);
    }
  }
}
