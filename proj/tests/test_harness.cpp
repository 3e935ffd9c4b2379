#include <doctest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>

#include "gaitlab/config.hpp"
#include "gaitlab/harness.hpp"

using namespace gaitlab;

namespace {

RunConfig walking(double duration) {
  RunConfig c;
  c.experiment.duration = duration;
  c.experiment.v_x = 1.0;
  return c;
}

double rpd_error(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < 3; ++k) s += wrap_signed(a[k] - b[k]) * wrap_signed(a[k] - b[k]);
  return std::sqrt(s);
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = first + i;
  return s;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("mask names") {
    CHECK(OrcMask{}.name() == "ORC111");
    const OrcMask m = OrcMask::parse("ORC110");
    CHECK(m.observations);
    CHECK(m.rewards);
    CHECK_FALSE(m.coupling);
    CHECK(OrcMask::parse("011") == OrcMask{false, true, true});
    CHECK_THROWS_AS(OrcMask::parse("ORC12"), std::invalid_argument);
    CHECK_THROWS_AS(OrcMask::parse("ORC1101"), std::invalid_argument);
  }

  TEST_CASE("rollouts are deterministic in their seed") {
    RunConfig c = walking(3.0);
    c.output.decimation = 1;
    const RolloutLog a = run_rollout(c, OrcMask{}, 42);
    const RolloutLog b = run_rollout(c, OrcMask{}, 42);
    const RolloutLog other = run_rollout(c, OrcMask{}, 43);
    CHECK(a.phases == b.phases);
    CHECK(a.grf == b.grf);
    CHECK(a.com == b.com);
    CHECK(a.contacts.size() == b.contacts.size());
    CHECK(a.failure_time == b.failure_time);
    CHECK(a.initial_phases != other.initial_phases);
    CHECK(a.initial_phases == random_phases(42));
  }

  TEST_CASE("sample count follows duration and decimation") {
    RunConfig c = walking(10.0);
    c.output.decimation = 1;
    c.experiment.terminate_on_failure = false;
    const RolloutLog log = run_rollout(c, OrcMask{}, 1);
    CHECK(log.size() == 5000);
    CHECK(log.phases.size() == 5000);
    CHECK(log.grf.size() == 5000);
    CHECK(log.impulse.size() == 5000);
    CHECK(log.observations->size() == 5000);

    c.output.decimation = 5;
    const RolloutLog coarse = run_rollout(c, OrcMask{}, 1);
    CHECK(coarse.size() == 1000);
    CHECK(coarse.sample_dt == doctest::Approx(0.01));
  }

  TEST_CASE("coupling off runs the phases as clocks") {
    RunConfig c = walking(4.0);
    c.output.decimation = 1;
    c.experiment.terminate_on_failure = false;
    const RolloutLog log = run_rollout(c, OrcMask::parse("ORC110"), 9);
    const double expected = kTwoPi * schedule_params(1.0).omega() * c.oscillator.dt;
    bool loaded = false;
    for (std::size_t t = 1; t < log.size(); ++t) {
      for (std::size_t i = 0; i < kLegCount; ++i) {
        REQUIRE(wrap_phase(log.phases[t][i] - log.phases[t - 1][i]) == doctest::Approx(expected).epsilon(1e-9));
        loaded = loaded || log.grf[t][i] > 0.0;
      }
    }
    CHECK(loaded);
  }

  TEST_CASE("masks shape the logged channels") {
    RunConfig c = walking(1.0);
    const RolloutLog no_obs = run_rollout(c, OrcMask::parse("ORC011"), 4);
    CHECK_FALSE(no_obs.observations.has_value());
    const RolloutLog no_reward = run_rollout(c, OrcMask::parse("ORC101"), 4);
    for (double r : no_reward.gait_reward) CHECK(r == 0.0);
    const RolloutLog full = run_rollout(c, OrcMask{}, 4);
    REQUIRE(full.observations.has_value());
    bool nonzero = false;
    for (double r : full.gait_reward) nonzero = nonzero || r != 0.0;
    CHECK(nonzero);
  }

  TEST_CASE("failure ends a terminating rollout early") {
    RunConfig c = walking(10.0);
    // All feet airborne with a tiny grace: support is lost on the first step.
    c.plant.failure_grace = 0.01;
    c.experiment.initial_phases = PerLeg<double>{0.1, 0.1, 0.1, 0.1};
    c.oscillator.fixed_params = OscillatorParams(0.05, 0.0, 0.0);
    const RolloutLog log = run_rollout(c, OrcMask{}, 1);
    REQUIRE(log.failure_time.has_value());
    CHECK(*log.failure_time < 0.1);
    CHECK(log.end_time < 0.1);

    c.experiment.terminate_on_failure = false;
    const RolloutLog kept = run_rollout(c, OrcMask{}, 1);
    CHECK(kept.failure_time.has_value());
    CHECK(kept.end_time == doctest::Approx(10.0));
  }

  TEST_CASE("trial plan") {
    const PerturbationSchedule s;
    const auto plan = plan_trials(s);
    REQUIRE(plan.size() == 1800);
    CHECK(plan[37].group == 1);
    CHECK(plan[37].angle_index == 1);
    CHECK(plan[37].time == doctest::Approx(s.settle + 0.01));
    CHECK(plan[37].angle_deg == doctest::Approx(10.0));
    CHECK(plan.back().time == doctest::Approx(s.settle + 0.49));

    std::set<std::pair<std::size_t, std::size_t>> cells;
    std::set<std::size_t> ids;
    for (const TrialPlan& t : plan) {
      cells.insert({t.group, t.angle_index});
      ids.insert(t.trial);
      CHECK(t.trial == t.group * 36 + t.angle_index);
    }
    CHECK(cells.size() == 1800);
    CHECK(ids.size() == 1800);

    PerturbationSchedule bad;
    bad.group_size = 30;
    CHECK_THROWS_AS(plan_trials(bad), ConfigError);
  }

  TEST_CASE("trial seeds are distinct") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t f = 0; f < 10; ++f)
      for (std::size_t t = 0; t < 1800; ++t) seen.insert(trial_seed(f, t));
    CHECK(seen.size() == 18000);
    CHECK(trial_seed(3, 5) == trial_seed(3, 5));
  }

  TEST_CASE("parallel_for covers every index once and rethrows") {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); }, 4);
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(
                        100, [](std::size_t i) { if (i == 57) throw std::runtime_error("boom"); }, 3),
                    std::runtime_error);
    CHECK(worker_count() >= 1);
  }

  TEST_CASE("standing balance is exact") {
    RunConfig c;
    c.experiment.type = ExperimentType::Balance;
    c.experiment.v_x = 0.0;
    c.experiment.duration = 10.0;
    c.experiment.initial_phases = PerLeg<double>{1.5 * kPi, 1.5 * kPi, 1.5 * kPi, 1.5 * kPi};
    const auto seeds = seed_range(1, 3);
    const BalanceResult r = balance_experiment(c, seeds);
    REQUIRE(r.records.size() == 3);
    for (const BalanceRecord& rec : r.records) {
      CHECK_FALSE(rec.failure_time.has_value());
      for (double m : rec.mean_grf) CHECK(m == doctest::Approx(0.25).epsilon(1e-6));
    }
  }

  TEST_CASE("a leg that is never loaded averages zero") {
    RolloutLog log;
    for (int i = 0; i < 50; ++i) log.grf.push_back({0.5, 0.0, 0.0, 0.5});
    const PerLeg<double> m = mean_leg_load(log);
    CHECK(m[1] == 0.0);
    CHECK(m[0] == doctest::Approx(0.5));
  }

  TEST_CASE("walking balance stays near an even split") {
    RunConfig c = walking(10.0);
    c.experiment.type = ExperimentType::Balance;
    const auto seeds = seed_range(1, 40);
    const BalanceResult r = balance_experiment(c, seeds);
    const auto summary = r.summarize();
    REQUIRE(summary.size() == 1);
    MESSAGE("failed rollouts: " << summary[0].failed << " of " << r.records.size());
    REQUIRE(summary[0].failed < r.records.size());
    for (const LegDistribution& d : summary[0].legs) {
      CHECK(d.count + summary[0].failed == r.records.size());
      CHECK(std::abs(d.mean - 0.25) <= 0.1);
      CHECK(d.min <= d.q25);
      CHECK(d.q25 <= d.median);
      CHECK(d.median <= d.q75);
      CHECK(d.q75 <= d.max);
    }
  }

  TEST_CASE("without coupling the final relative phase tracks the initial phases") {
    RunConfig c = walking(40.0);
    c.experiment.type = ExperimentType::Emergence;
    c.experiment.eval_sigma = 0.0;
    const auto seeds = seed_range(1, 20);
    const EmergenceResult r = emergence_experiment(c, seeds);
    std::size_t tracked = 0;
    for (const EmergenceRecord& rec : r.records) {
      REQUIRE(rec.final_rpd.has_value());
      tracked += rpd_error(rec.final_rpd->rpd.values, rec.initial_rpd) < 0.05;
    }
    CHECK(tracked >= 19);
  }

  TEST_CASE("with coupling the relative phase settles") {
    RunConfig c = walking(40.0);
    c.experiment.type = ExperimentType::Emergence;
    const auto seeds = seed_range(1, 20);
    const EmergenceResult r = emergence_experiment(c, seeds);
    CHECK(r.stationary_fraction() >= 0.7);
    for (const EmergenceRecord& rec : r.records) {
      for (const AggregatedRpd& t : rec.ticks) {
        const GaitLabel l = t.gait.label;
        CHECK((l == GaitLabel::Trot || l == GaitLabel::Pace || l == GaitLabel::Bound || l == GaitLabel::Pronk ||
               l == GaitLabel::Transition));
      }
      if (!rec.convergence_time) continue;
      // Nothing changes label after the convergence tick.
      for (const AggregatedRpd& t : rec.ticks)
        if (t.time >= *rec.convergence_time) CHECK(t.gait.label == rec.final_rpd->gait.label);
    }
  }

  TEST_CASE("standing from random phases settles mid-stance") {
    RunConfig c;
    c.experiment.v_x = 0.0;
    c.experiment.duration = 10.0;
    c.experiment.terminate_on_failure = false;
    std::size_t settled = 0;
    const std::size_t n = 30;
    for (std::uint64_t seed = 1; seed <= n; ++seed) {
      Simulator sim(SimSettings::from(c), OrcMask{}, seed);
      sim.run_to_step(steps_for(10.0, c.oscillator.dt));
      bool ok = true;
      for (double p : sim.bank().phases()) ok = ok && std::abs(wrap_signed(p - 1.5 * kPi)) < 0.05;
      settled += ok;
    }
    CHECK(double(settled) >= 0.9 * double(n));
  }

  TEST_CASE("disturbance sweep") {
    RunConfig c;
    c.experiment.type = ExperimentType::Disturbance;
    c.experiment.v_x = 3.0;
    c.plant.step_length_gain = 0.1;
    c.experiment.perturbation.settle = 20.0;
    c.experiment.perturbation.groups = 2;
    c.experiment.perturbation.magnitudes = {0.0, 1.5, 3.5};
    const auto families = seed_range(1, 2);
    const DisturbanceResult r = disturbance_experiment(c, families);
    REQUIRE(r.trials.size() == 2 * 72 * 3);

    std::set<std::tuple<std::uint64_t, std::size_t, double>> keys;
    for (const DisturbanceTrial& t : r.trials) {
      REQUIRE(t.applied.has_value());
      const TrialPlan p = plan_trials(c.experiment.perturbation)[t.trial];
      CHECK(t.applied->time == doctest::Approx(p.time));
      CHECK(norm(t.applied->delta) == doctest::Approx(t.magnitude));
      keys.insert({t.family, t.trial, t.magnitude});
      if (t.failed) {
        REQUIRE(t.failure_time.has_value());
        CHECK(*t.failure_time >= p.time);
        CHECK(*t.failure_time <= p.time + c.experiment.perturbation.window + 1e-9);
      }
    }
    CHECK(keys.size() == r.trials.size());

    const auto rows = r.table();
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].magnitude == 0.0);
    CHECK(rows[0].mean_pct == 0.0);
    CHECK(rows[0].families == 2);
    CHECK(rows[0].trials == 144);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].mean_pct >= rows[i - 1].mean_pct);
    CHECK(rows.back().mean_pct > 0.0);
  }

  TEST_CASE("failure table statistics") {
    DisturbanceResult r;
    // Family 1 fails 1 of 4 trials, family 2 fails 3 of 4.
    for (std::uint64_t fam : {1u, 2u}) {
      for (std::size_t t = 0; t < 4; ++t) {
        DisturbanceTrial d;
        d.family = fam;
        d.trial = t;
        d.magnitude = 2.0;
        d.failed = fam == 1 ? t == 0 : t != 0;
        r.trials.push_back(d);
      }
    }
    const auto rows = r.table();
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].mean_pct == doctest::Approx(50.0));
    CHECK(rows[0].std_pct == doctest::Approx(std::sqrt(2.0 * 625.0)));
  }

  TEST_CASE("merging partial results") {
    RunConfig c = walking(2.0);
    c.experiment.type = ExperimentType::Balance;
    const auto all = seed_range(1, 6);
    const auto first = seed_range(1, 3);
    const auto second = seed_range(4, 3);
    const BalanceResult whole = balance_experiment(c, all);
    const BalanceResult a = balance_experiment(c, first);
    const BalanceResult b = balance_experiment(c, second);

    const std::vector<BalanceResult> ab{a, b}, ba{b, a};
    const BalanceResult m1 = merge_results(std::span<const BalanceResult>(ab));
    const BalanceResult m2 = merge_results(std::span<const BalanceResult>(ba));
    REQUIRE(m1.records.size() == 6);
    REQUIRE(m2.records.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(m1.records[i].seed == m2.records[i].seed);
      CHECK(m1.records[i].mean_grf == m2.records[i].mean_grf);
      CHECK(m1.records[i].mean_grf == whole.records[i].mean_grf);
    }
    const auto s1 = m1.summarize();
    const auto s0 = whole.summarize();
    for (std::size_t i = 0; i < kLegCount; ++i) CHECK(s1[0].legs[i].mean == s0[0].legs[i].mean);

    const std::vector<BalanceResult> dup{a, a};
    CHECK_THROWS_AS(merge_results(std::span<const BalanceResult>(dup)), std::invalid_argument);

    BalanceResult foreign = b;
    foreign.config_digest = "other";
    const std::vector<BalanceResult> mixed{a, foreign};
    CHECK_THROWS_AS(merge_results(std::span<const BalanceResult>(mixed)), std::invalid_argument);
  }

  TEST_CASE("merging emergence and disturbance parts") {
    EmergenceResult e1, e2;
    e1.config_digest = e2.config_digest = "d";
    e1.records.push_back({});
    e1.records.back().seed = 2;
    e2.records.push_back({});
    e2.records.back().seed = 1;
    const std::vector<EmergenceResult> ep{e1, e2};
    const EmergenceResult em = merge_results(std::span<const EmergenceResult>(ep));
    REQUIRE(em.records.size() == 2);
    CHECK(em.records[0].seed == 1);

    DisturbanceResult d1, d2;
    d1.config_digest = d2.config_digest = "d";
    d1.trials.push_back({});
    d2.trials.push_back({});
    const std::vector<DisturbanceResult> dp{d1, d2};
    CHECK_THROWS_AS(merge_results(std::span<const DisturbanceResult>(dp)), std::invalid_argument);
    d2.trials.back().trial = 1;
    const std::vector<DisturbanceResult> dq{d1, d2};
    CHECK(merge_results(std::span<const DisturbanceResult>(dq)).trials.size() == 2);
  }
}
