#include "doctest.h"

#include "oracle_values.hpp"
#include "ringcal/analysis.hpp"

#include <cmath>
#include <map>
#include <numbers>

using namespace ringcal;

namespace {

// Same partition up to relabelling.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    std::map<int, int> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (ab.emplace(a[i], b[i]).first->second != b[i]) return false;
        if (ba.emplace(b[i], a[i]).first->second != a[i]) return false;
    }
    return true;
}

Matrix ward_points() {
    return Eigen::Map<const Eigen::Matrix<double, 8, 3, Eigen::RowMajor>>(oracle::kWardPoints.data());
}

SimOutput wavy_run() {
    DriverParams p;
    p.utility.kappa_v = 0.4;
    ScenarioConfig cfg = scenario_sugiyama(p, 5);
    cfg.accel_noise_on = false;
    cfg.initial = InitialCondition::Perturbed;
    cfg.perturbation_dv = 4.0;
    cfg.T_steps = 750;
    return simulate(cfg);
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("speed profile identities") {
    Matrix v(3, 2);
    v << 1.0, 4.0, 2.0, 5.0, 6.0, 3.0;
    const SpeedProfile p = speed_profile(v);
    CHECK(p.v_avg[0] == doctest::Approx(3.0));
    CHECK(p.v_min[0] == 1.0);
    CHECK(p.v_max[0] == 6.0);
    CHECK(p.v_range[1] == 2.0);
    for (long t = 0; t < p.size(); ++t) {
        CHECK(p.v_range[t] == p.v_max[t] - p.v_min[t]);
        CHECK(p.v_min[t] <= p.v_avg[t]);
        CHECK(p.v_avg[t] <= p.v_max[t]);
    }
}

TEST_CASE("quasi-period amplitude against the oracle") {
    const int n = 600;
    const double dt = 1.0 / 3.0;
    Vector y(n);
    for (int k = 0; k < n; ++k) {
        const double t = k * dt;
        y[k] = 6.0 + 0.01 * t + 1.5 * std::sin(2 * std::numbers::pi * t / 50.0) +
               0.4 * std::sin(2 * std::numbers::pi * t / 8.0);
    }
    CHECK(quasi_period_amplitude(y, dt, 20.0, 100.0) == doctest::Approx(oracle::kQuasiAmplitude).epsilon(1e-10));
    CHECK(quasi_period_amplitude(Vector::Constant(n, 3.0), dt, 20.0, 100.0) < 1e-12);
}

TEST_CASE("free flow has no wave") {
    ScenarioConfig cfg = scenario_sugiyama(DriverParams{}, 1);
    cfg.accel_noise_on = false;
    cfg.T_steps = 300;
    const SimOutput out = simulate(cfg);
    WaveOptions opts;
    const WaveMetrics m = wave_metrics(out.x, out.v, opts);
    CHECK_FALSE(m.backward_wave_speed.has_value());
    CHECK(m.tracks == 0);
    const CollectiveSummary s = collective_summary(out);
    CHECK(s.slow_fraction == 0.0);
    CHECK(s.slow_episodes == 0);
    CHECK(s.mean_gap.size() == 22);
}

TEST_CASE("an unstable ring produces upstream waves, negated under time reversal") {
    const SimOutput out = wavy_run();
    WaveOptions opts;
    opts.first = 0;
    const WaveMetrics fwd = wave_metrics(out.x, out.v, opts);
    REQUIRE(fwd.backward_wave_speed.has_value());
    CHECK(*fwd.backward_wave_speed < -2.0);
    CHECK(fwd.mean_queue_length >= 1.0);
    CHECK(fwd.queue_event_frequency > 0.0);

    const Matrix xr = out.x.rowwise().reverse();
    const Matrix vr = out.v.rowwise().reverse();
    const WaveMetrics rev = wave_metrics(xr, vr, opts);
    REQUIRE(rev.backward_wave_speed.has_value());
    CHECK(*rev.backward_wave_speed == doctest::Approx(-*fwd.backward_wave_speed).epsilon(1e-9));
}

TEST_CASE("Ward clustering against scipy") {
    const ClusterResult r = cluster_features(ward_points(), 4);
    REQUIRE(r.tree.size() == 7);
    for (std::size_t k = 0; k < 7; ++k) CHECK(r.tree[k].height == doctest::Approx(oracle::kWardHeights[k]).epsilon(1e-12));
    CHECK(same_partition(r.labels, oracle::kWardLabels4));
    CHECK(same_partition(cut_tree(r.tree, 8, 2), oracle::kWardLabels2));
    CHECK(r.labels[0] == 0);
    CHECK(r.tree.back().size == 8);
    CHECK(r.gap_k == 2);
    CHECK(r.cluster_means.rows() == 4);
}

TEST_CASE("clustering is invariant to affine feature rescaling") {
    Matrix raw = ward_points();
    const ClusterResult a = cluster_features(raw, 4);
    raw.col(0) = 3.0 * raw.col(0).array() + 1.0;
    raw.col(1) = 0.1 * raw.col(1).array() - 7.0;
    const ClusterResult b = cluster_features(raw, 4);
    CHECK(a.labels == b.labels);
}

TEST_CASE("constant features warn instead of dividing by zero") {
    Matrix raw = ward_points();
    raw.col(2).setConstant(0.5);
    const ClusterResult r = cluster_features(raw, 2);
    CHECK(r.warnings.size() == 1);
    CHECK(r.features.allFinite());
}

TEST_CASE("cutting a tree") {
    const std::vector<MergeStep> tree = {{0, 1, 1.0, 2}, {2, 3, 1.5, 2}, {4, 5, 10.0, 4}};
    CHECK(cut_tree(tree, 4, 4) == std::vector<int>{0, 1, 2, 3});
    CHECK(cut_tree(tree, 4, 2) == std::vector<int>{0, 0, 1, 1});
    CHECK(cut_tree(tree, 4, 1) == std::vector<int>{0, 0, 0, 0});
    CHECK(largest_gap_clusters(tree, 4) == 2);
}

TEST_CASE("fundamental diagram identity") {
    std::vector<SimOutput> runs;
    for (std::size_t n : {10u, 20u}) {
        ScenarioConfig cfg = scenario_tadaki(n, DriverParams{}, 2);
        cfg.T_steps = 240;
        runs.push_back(simulate(cfg));
    }
    const auto fd = fundamental_diagram(runs);
    REQUIRE(fd.size() == 2);
    CHECK(fd[0].density < fd[1].density);
    for (const auto& p : fd) CHECK(p.flow == doctest::Approx(p.density * p.mean_speed * 3.6).epsilon(1e-12));
    CHECK(fd[0].density == doctest::Approx(10.0 / 0.314));
}

TEST_CASE("recovery report") {
    const DriverParams truth;
    std::vector<CalibrationResult> est(5);
    for (auto& e : est) e.theta_hat = truth;
    for (const auto& row : recovery_report(truth, est)) {
        CHECK(row.mean_error == 0.0);
        CHECK(row.sd_error == 0.0);
        CHECK_FALSE(row.biased);
    }
    for (std::size_t k = 0; k < est.size(); ++k) {
        est[k].theta_hat.utility.v_star += 0.1;
        est[k].theta_hat.noise.sigma_a += (k % 2 ? 0.01 : -0.01);
    }
    const auto rows = recovery_report(truth, est);
    CHECK(rows[2].name == "v_star");
    CHECK(rows[2].biased);
    CHECK(rows[2].mean_abs_error == doctest::Approx(0.1));
    CHECK_FALSE(rows[0].biased);
    CHECK_FALSE(rows[1].biased);
    CHECK_FALSE(rows[3].biased);
}

}
