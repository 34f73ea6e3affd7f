#include "doctest.h"

#include "oracle_values.hpp"
#include "ringcal/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace ringcal;

TEST_SUITE("sim") {

TEST_CASE("equilibrium start spaces cars evenly at the given speed") {
    const ScenarioConfig cfg = scenario_sugiyama(DriverParams{}, 0);
    const WorldState w = initial_world(cfg);
    REQUIRE(w.agents.size() == 22);
    const std::vector<double> gaps = bumper_gaps(w.agents, cfg.ring);
    const double total = std::accumulate(cfg.ring.lengths.begin(), cfg.ring.lengths.end(), 0.0);
    for (double g : gaps) CHECK(g == doctest::Approx((230.0 - total) / 22.0).epsilon(1e-9));
    for (const auto& a : w.agents) CHECK(a.v == 6.0);
}

TEST_CASE("perturbed start slows one car") {
    ScenarioConfig cfg = scenario_sugiyama(DriverParams{}, 0);
    cfg.initial = InitialCondition::Perturbed;
    cfg.perturbed_agent = 5;
    const WorldState w = initial_world(cfg);
    CHECK(w.agents[5].v == doctest::Approx(4.0));
    CHECK(w.agents[4].v == 6.0);
}

TEST_CASE("noise-free single step follows the kinematics") {
    ScenarioConfig cfg = scenario_sugiyama(DriverParams{}, 0);
    cfg.accel_noise_on = false;
    const WorldState w = initial_world(cfg);
    SimRng rng(0, cfg.ring.size());
    const WorldState next = step(w, cfg, rng);
    CHECK(next.step == 1);
    for (std::size_t i = 0; i < w.agents.size(); ++i) {
        CHECK(next.agents[i].x == doctest::Approx(wrap_position(w.agents[i].x + cfg.ring.dt * 6.0, 230.0)));
        CHECK(next.agents[i].v == doctest::Approx(6.0 + cfg.ring.dt * next.agents[i].a));
        // no noise and no previous deviation: the action is the Boltzmann mean
        CHECK(next.agents[i].a == doctest::Approx(next.prev_mean_action[i]));
    }
}

TEST_CASE("a lone car on a long ring drifts to its ideal speed") {
    ScenarioConfig cfg;
    cfg.ring.circumference = 5000.0;
    cfg.ring.lengths = {4.3};
    cfg.agents = {DriverParams{}};
    cfg.accel_noise_on = false;
    cfg.initial_speed = 0.0;
    cfg.T_steps = 600;
    const SimOutput out = simulate(cfg);
    CHECK(std::abs(out.v(0, cfg.T_steps) - 10.26) < 0.6);
    CHECK(out.collisions.empty());
}

TEST_CASE("simulation output shape and wrap") {
    ScenarioConfig cfg = scenario_sugiyama(DriverParams{}, 3);
    cfg.T_steps = 30;
    const SimOutput out = simulate(cfg);
    CHECK(out.x.rows() == 22);
    CHECK(out.samples() == 31);
    CHECK(out.x.minCoeff() >= 0.0);
    CHECK(out.x.maxCoeff() < 230.0);
    CHECK(out.a.col(30) == out.a.col(29));
}

TEST_CASE("homogeneous switch averages every parameter") {
    ScenarioConfig cfg = scenario_sugiyama_heterogeneous(DriverParams{}, 4);
    cfg.heterogeneity_on = false;
    const auto agents = effective_agents(cfg);
    double mean_v = 0.0;
    for (const auto& p : cfg.agents) mean_v += p.utility.v_star;
    mean_v /= 22.0;
    for (const auto& p : agents) CHECK(p.utility.v_star == doctest::Approx(mean_v));
}

TEST_CASE("scenario builders") {
    const ScenarioConfig base = scenario_sugiyama(DriverParams{}, 0);
    CHECK(scenario_low_ideal_speed(base, 7.0).agents[0].utility.v_star == 7.0);
    CHECK(scenario_low_ideal_speed(base, 7.0).agents[1].utility.v_star == 10.26);
    CHECK(scenario_high_risk_premium(base, 2.0).agents[0].utility.kappa_v == 2.0);
    CHECK_THROWS_AS(scenario_low_ideal_speed(base, -1.0), ValidationError);

    const ScenarioConfig t = scenario_tadaki(30);
    CHECK(t.ring.circumference == 314.0);
    CHECK(t.ring.size() == 30);

    const ScenarioConfig hw = scenario_highway(base);
    CHECK(hw.ring.circumference == doctest::Approx(690.0));
    CHECK(hw.agents[0].utility.v_star == doctest::Approx(3 * 10.26));
    CHECK(hw.agents[0].utility.kappa_c == doctest::Approx(2.0));
    CHECK_THROWS_AS(scenario_highway(hw), ValidationError);
}

TEST_CASE("time-step rescaling keeps the window and the per-second persistence") {
    const ScenarioConfig base = scenario_sugiyama(DriverParams{}, 0);
    const ScenarioConfig r = rescale_dt(base, 0.2);
    CHECK(r.agents[0].noise.rho == doctest::Approx(oracle::kRescaledRho).epsilon(1e-14));
    CHECK(r.anticipation.h * r.anticipation.dt == doctest::Approx(1.2));
    CHECK(r.T_steps == 1250);
}

TEST_CASE("shuffling permutes parameters and lengths together") {
    ScenarioConfig base = scenario_sugiyama_heterogeneous(DriverParams{}, 1);
    const ScenarioConfig s = shuffle_order(base, 77);
    std::vector<double> a = base.ring.lengths, b = s.ring.lengths;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    for (std::size_t k = 0; k < 22; ++k) {
        bool found = false;
        for (std::size_t j = 0; j < 22; ++j)
            found = found || (s.ring.lengths[k] == base.ring.lengths[j] &&
                              s.agents[k].utility.v_star == base.agents[j].utility.v_star);
        CHECK(found);
    }
    CHECK_THROWS_AS(shuffle_order(base, std::vector<std::size_t>(22, 0)), ValidationError);
}

TEST_CASE("observation noise has the requested size") {
    ScenarioConfig cfg = scenario_sugiyama(DriverParams{}, 0);
    cfg.T_steps = 400;
    const SimOutput out = simulate(cfg);
    const RawTrajectorySet raw = observe(out, std::vector<double>(22, 0.5), 9);
    double ss = 0.0;
    long n = 0;
    for (Eigen::Index i = 0; i < raw.positions.rows(); ++i)
        for (Eigen::Index t = 0; t < raw.positions.cols(); ++t) {
            double d = raw.positions(i, t) - out.x(i, t);
            d -= 230.0 * std::round(d / 230.0);
            ss += d * d;
            ++n;
        }
    CHECK(std::sqrt(ss / n) == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("configuration validation") {
    ScenarioConfig cfg = scenario_sugiyama(DriverParams{}, 0);
    cfg.noise_deflation = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.noise_deflation = 0.5;
    cfg.agents.pop_back();
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = scenario_sugiyama(DriverParams{}, 0);
    cfg.ring.lengths.assign(22, 11.0);
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

}
