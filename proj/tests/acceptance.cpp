// Acceptance runner. `ringcal_acceptance` runs every criterion; with a number
// argument it runs only that one. One PASS/FAIL line per criterion, exit code
// 1 when any selected criterion fails.

#include "joint_gaussian.hpp"
#include "properties.hpp"
#include "ringcal/analysis.hpp"
#include "ringcal/decision.hpp"
#include "ringcal/rng.hpp"
#include "ringcal/sim.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

using namespace ringcal;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int worker_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 16u));
}

// Runs every configuration on its own thread pool slot; results keep input order.
std::vector<SimOutput> simulate_all(const std::vector<ScenarioConfig>& cfgs) {
    std::vector<SimOutput> out(cfgs.size());
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < worker_count(); ++w)
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < cfgs.size(); k = next++) out[k] = simulate(cfgs[k]);
            });
    }
    return out;
}

// The stop-and-go signature of the ring experiment, after burn-in.
struct WaveSignature {
    bool recurring_stops = false;
    bool fast_phase = false;
    bool upstream = false;
    bool speed_level = false;

    bool all() const { return recurring_stops && fast_phase && upstream && speed_level; }
};

WaveSignature signature(const CollectiveSummary& s) {
    WaveSignature w;
    w.recurring_stops = s.slow_episodes >= 2;
    w.fast_phase = s.max_v_max >= 8.0;
    w.upstream = s.waves.backward_wave_speed.has_value() && *s.waves.backward_wave_speed < 0.0;
    w.speed_level = std::abs(s.mean_v_avg - 6.0) <= 1.5;
    return w;
}

std::string describe(const CollectiveSummary& s) {
    std::ostringstream o;
    o << std::setprecision(3) << "stops=" << s.slow_episodes << " Vmax=" << s.max_v_max << " Vavg=" << s.mean_v_avg
      << " wave=";
    if (s.waves.backward_wave_speed)
        o << *s.waves.backward_wave_speed;
    else
        o << "none";
    return o.str();
}

// Whole-run profile maximum of V_range and time spent above 2 m/s.
std::pair<double, double> range_stats(const SimOutput& out) {
    const SpeedProfile p = speed_profile(out.v);
    double over = 0.0;
    for (long k = 0; k < p.size(); ++k)
        if (p.v_range[k] > 2.0) over += out.config.ring.dt;
    return {p.v_range.maxCoeff(), over};
}

// ---------------------------------------------------------------------------

Outcome criterion_1() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const int T = 1 + rep % 10;
        const double dt = 0.1 + 0.5 * u(rng);
        const SystemMatrices mats =
            SystemMatrices::make(dt, 0.95 * u(rng), 0.01 + 0.3 * u(rng), 0.01 + 0.3 * u(rng), 0.05 + u(rng));
        const double sigma_nu = 0.05 + 0.5 * u(rng);
        const Mat3 P0 = testing_util::random_spd(rng, 0.001);
        const Vec3 m0(10.0 * n(rng), 5.0 + n(rng), n(rng));
        std::vector<Vec3> controls;
        std::vector<double> z;
        for (int k = 0; k < T; ++k) {
            controls.emplace_back(0.0, 0.0, n(rng));
            z.push_back(m0[0] + 5.0 * dt * (k + 1) + n(rng));
        }
        const double ll = run_filter<Real>(FilterState{m0, P0}, std::span<const double>(z), controls, mats, sigma_nu)
                              .log_likelihood;
        const double ref = testing_util::joint_log_likelihood(m0, P0, z, controls, mats, sigma_nu);
        worst = std::max(worst, std::abs(ll - ref));
    }
    // the vehicle-level likelihood, with decision-model controls and the first innovation skipped
    for (int rep = 0; rep < 20; ++rep) {
        VehicleData d;
        d.pair = VehiclePair{4.0 + u(rng), 4.0 + u(rng), 230.0};
        const int T = 3 + rep % 8;
        double x = 230.0 * u(rng);
        for (int k = 0; k < T; ++k) {
            PerceivedState s;
            s.self_pos = x;
            s.self_vel = 10.0 * u(rng);
            s.pred = NeighborState{wrap_position(x + 5.0 + 25.0 * u(rng), 230.0), 10.0 * u(rng)};
            d.perceived.push_back(s);
            d.z.push_back(x + 0.3 * n(rng));
            x += d.dt * 6.0;
        }
        DriverParams theta;
        theta.set_free_vector(Eigen::Vector4d(0.05 + 0.5 * u(rng), 0.05 + u(rng), 8.0 + 4.0 * u(rng), 0.1 + u(rng)));
        const ModelSettings settings;
        const std::vector<double> abar = mean_actions(theta, d, settings);
        std::vector<Vec3> controls;
        for (std::size_t k = 0; k + 1 < abar.size(); ++k)
            controls.push_back(control_input(abar[k + 1], abar[k], theta.noise.rho));
        const FilterState init = initial_filter_state(d, theta.noise.sigma_nu);
        const std::vector<double> z(d.z.begin() + 1, d.z.end());
        const double ref = testing_util::joint_log_likelihood(init.mean, init.cov, z, controls,
                                                              system_matrices(d.dt, theta.noise),
                                                              theta.noise.sigma_nu, 1);
        worst = std::max(worst, std::abs(log_likelihood(theta, d, settings) - ref));
    }
    const double elapsed = seconds_since(t0);
    o.detail << "max |filter - joint Gaussian| = " << worst << " over 40 instances, " << elapsed << " s";
    o.require(worst <= 1e-8, "tolerance 1e-8");
    o.require(elapsed < 1.0, "runtime < 1 s");
    return o;
}

Outcome criterion_2() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> speed(0.0, 12.0), gap(0.3, 30.0), pos(0.0, 230.0), unit(0.0, 1.0);
    DecisionModel sharp;
    sharp.grid.lambda = 1e6;
    const DecisionModel soft;
    double worst_gap = 0.0, worst_sum = 0.0;
    for (int k = 0; k < 50; ++k) {
        PerceivedState s;
        s.self_pos = pos(rng);
        s.self_vel = speed(rng);
        const VehiclePair pair{3.5 + unit(rng), 3.5 + unit(rng), 230.0};
        if (k % 10 != 9) {
            const double half = 0.5 * (pair.length_self + pair.length_pred);
            s.pred = NeighborState{wrap_position(s.self_pos + half + gap(rng), 230.0), speed(rng)};
        }
        worst_gap = std::max(worst_gap, std::abs(mean_action(s, sharp, pair) - optimal_action(s, sharp, pair)));
        const ActionDistribution d = action_distribution(s, soft, pair);
        worst_sum = std::max(worst_sum, std::abs(d.probabilities.sum() - 1.0));
    }
    const double elapsed = seconds_since(t0);
    o.detail << "max |mean - argmax| at lambda 1e6 = " << worst_gap << ", max |sum p - 1| at lambda 200 = "
             << worst_sum << ", " << elapsed << " s";
    o.require(worst_gap <= 0.125, "half grid spacing");
    o.require(worst_sum <= 1e-12, "normalisation");
    o.require(elapsed < 1.0, "runtime < 1 s");
    return o;
}

Outcome criterion_3() {
    Outcome o;
    const auto t0 = Clock::now();
    const DriverParams truth;
    const std::uint64_t seed = 42;
    ScenarioConfig cfg = scenario_sugiyama(truth, seed);
    // data carry every state-equation noise at full size
    cfg.noise_deflation = 1.0;
    cfg.process_noise_on = true;
    cfg.T_steps = 750;
    const SimOutput run = simulate(cfg);
    const RawTrajectorySet measured =
        observe(run, std::vector<double>(run.agents(), truth.noise.sigma_nu), split_seed(seed, 99));
    // perceived states come from the smoothed measurements, as for a real recording
    const std::vector<VehicleData> data = vehicle_data(build_perceived_states(measured));

    CalibrationConfig cc;
    cc.reg.gamma_v = 0.0;
    cc.reg.gamma_kappa = 0.0;
    cc.search.hops = 20;
    const CalibrationBatch batch = calibrate_all(data, cc, seed, worker_count());
    const std::vector<RecoveryRow> rows = recovery_report(truth, batch.results);
    const double limits[4] = {0.03, 0.06, 0.15, 0.03};
    o.detail << std::setprecision(3) << batch.results.size() << " vehicles, " << seconds_since(t0) << " s;";
    o.require(batch.failures.empty() && batch.results.size() == 22, "all 22 vehicles calibrated");
    for (std::size_t j = 0; j < 4; ++j) {
        const RecoveryRow& r = rows[j];
        o.detail << " " << r.name << " mae=" << r.mean_abs_error << " bias=" << r.mean_error << " sd=" << r.sd_error;
        o.require(r.mean_abs_error <= limits[j], r.name + " mean absolute error");
        o.require(!r.biased, r.name + " systematic bias");
    }
    return o;
}

Outcome criterion_4() {
    Outcome o;
    const auto t0 = Clock::now();
    std::vector<ScenarioConfig> cfgs;
    for (std::uint64_t s : {1u, 2u, 3u}) cfgs.push_back(scenario_sugiyama(DriverParams{}, s));
    const auto runs = simulate_all(cfgs);
    for (const SimOutput& r : runs) {
        const CollectiveSummary s = collective_summary(r);
        const WaveSignature w = signature(s);
        o.detail << "seed " << r.seed << ": " << describe(s) << "; ";
        o.require(w.recurring_stops, "recurring V_min < 1 episodes, seed " + std::to_string(r.seed));
        o.require(w.fast_phase, "V_max >= 8, seed " + std::to_string(r.seed));
        o.require(w.upstream, "upstream wave speed, seed " + std::to_string(r.seed));
        o.require(w.speed_level, "V_avg within 6 +- 1.5, seed " + std::to_string(r.seed));
    }
    const double elapsed = seconds_since(t0);
    o.detail << "deflation " << cfgs[0].noise_deflation << ", " << elapsed << " s";
    o.require(elapsed < 120.0, "runtime < 2 min");
    return o;
}

Outcome criterion_5() {
    Outcome o;
    const std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::vector<ScenarioConfig> cfgs;
    for (std::uint64_t s : seeds) {
        ScenarioConfig homo = scenario_sugiyama_heterogeneous(DriverParams{}, s);
        homo.accel_noise_on = false;
        homo.heterogeneity_on = false;
        cfgs.push_back(homo);
        ScenarioConfig het = scenario_sugiyama_heterogeneous(DriverParams{}, s);
        het.accel_noise_on = false;
        cfgs.push_back(het);
        cfgs.push_back(scenario_sugiyama_heterogeneous(DriverParams{}, s));
        ScenarioConfig pert = scenario_sugiyama_heterogeneous(DriverParams{}, s);
        pert.accel_noise_on = false;
        pert.initial = InitialCondition::Perturbed;
        cfgs.push_back(pert);
    }
    const auto runs = simulate_all(cfgs);
    for (std::size_t k = 0; k < seeds.size(); ++k) {
        const std::string tag = " seed " + std::to_string(seeds[k]);
        const auto [homo_range, homo_over] = range_stats(runs[4 * k]);
        const auto [het_range, het_over] = range_stats(runs[4 * k + 1]);
        const CollectiveSummary noisy = collective_summary(runs[4 * k + 2]);
        const auto [pert_range, pert_over] = range_stats(runs[4 * k + 3]);
        o.detail << std::setprecision(3) << "seed " << seeds[k] << ": quiet homogeneous max range " << homo_range
                 << ", quiet heterogeneous " << het_range << ", noisy " << describe(noisy)
                 << ", perturbed range>2 for " << pert_over << " s; ";
        o.require(homo_range < 2.0, "no waves, noise off homogeneous" + tag);
        o.require(het_range < 2.0, "no waves, noise off heterogeneous" + tag);
        o.require(signature(noisy).all(), "waves with noise on" + tag);
        o.require(pert_over >= 100.0, "perturbation sustained >= 100 s" + tag);
    }
    return o;
}

Outcome criterion_6() {
    Outcome o;
    const std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::vector<ScenarioConfig> cfgs;
    for (std::uint64_t s : seeds) {
        const ScenarioConfig base = scenario_sugiyama_heterogeneous(DriverParams{}, s);
        cfgs.push_back(base);
        cfgs.push_back(scenario_low_ideal_speed(base, 7.0));
        cfgs.push_back(scenario_high_risk_premium(base, 2.0));
    }
    const auto runs = simulate_all(cfgs);
    for (std::size_t k = 0; k < seeds.size(); ++k) {
        const std::string tag = " seed " + std::to_string(seeds[k]);
        const CollectiveSummary base = collective_summary(runs[3 * k]);
        const CollectiveSummary slow = collective_summary(runs[3 * k + 1]);
        const CollectiveSummary risk = collective_summary(runs[3 * k + 2]);
        const double fleet_gap =
            std::accumulate(risk.mean_gap.begin(), risk.mean_gap.end(), 0.0) / static_cast<double>(risk.mean_gap.size());
        o.detail << std::setprecision(3) << "seed " << seeds[k] << ": slow fraction baseline " << base.slow_fraction
                 << " vs v0*=7 " << slow.slow_fraction << ", kappa0=2 " << describe(risk) << " gap0 "
                 << risk.mean_gap[0] << " vs fleet " << fleet_gap << "; ";
        // suppression needs something to suppress
        o.require(base.slow_fraction > 0.0, "baseline has stop phases to suppress" + tag);
        o.require(slow.slow_fraction <= 0.5 * base.slow_fraction, "slow time halves with v0*=7" + tag);
        o.require(signature(risk).all(), "waves persist with kappa0=2" + tag);
        o.require(risk.mean_gap[0] >= 1.5 * fleet_gap, "vehicle 0 gap >= 1.5 x fleet mean" + tag);
    }
    return o;
}

Outcome criterion_7() {
    Outcome o;
    std::vector<ScenarioConfig> cfgs;
    for (std::size_t n = 10; n <= 38; n += 4) cfgs.push_back(scenario_tadaki(n, DriverParams{}, split_seed(7, n)));
    const auto runs = simulate_all(cfgs);
    const auto fd = fundamental_diagram(runs);
    std::vector<bool> free_flow, jammed;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const CollectiveSummary s = collective_summary(runs[k]);
        const WaveSignature w = signature(s);
        free_flow.push_back(s.max_v_range < 2.0);
        jammed.push_back(w.recurring_stops && w.upstream && s.max_v_range > 2.0);
        o.detail << std::setprecision(3) << "N=" << runs[k].agents() << (free_flow.back() ? " free" : "")
                 << (jammed.back() ? " jam" : "") << " flow=" << fd[k].flow << " range=" << s.max_v_range << " " << describe(s) << "; ";
    }
    o.require(free_flow.front(), "free flow at the lowest density");
    o.require(jammed.back(), "jammed oscillation at the highest density");
    // one regime change: free flow, optional transition, jam
    std::size_t k = 0;
    while (k < runs.size() && free_flow[k]) ++k;
    while (k < runs.size() && !free_flow[k] && !jammed[k]) ++k;
    while (k < runs.size() && jammed[k]) ++k;
    o.require(k == runs.size(), "regimes ordered by density");
    // rises then falls, tolerating one step against the trend
    std::size_t peak = 0;
    for (std::size_t j = 1; j < fd.size(); ++j)
        if (fd[j].flow > fd[peak].flow) peak = j;
    int against = 0;
    for (std::size_t j = 1; j < fd.size(); ++j) {
        const bool up = fd[j].flow > fd[j - 1].flow;
        if ((j <= peak && !up) || (j > peak && up)) ++against;
    }
    o.require(peak > 0 && peak + 1 < fd.size(), "flow peaks inside the sweep");
    o.require(against <= 1, "flow unimodal within one step");
    return o;
}

Outcome criterion_8() {
    Outcome o;
    std::vector<ScenarioConfig> cfgs;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        ScenarioConfig c = scenario_sugiyama_heterogeneous(DriverParams{}, s);
        c.noise_deflation = 0.5;
        cfgs.push_back(c);
    }
    const auto runs = simulate_all(cfgs);
    std::size_t events = 0;
    double min_gap = 1e9;
    for (const SimOutput& r : runs) {
        events += r.collisions.size();
        for (long t = 0; t < r.samples(); ++t) {
            std::vector<AgentState> snap(r.agents());
            for (std::size_t i = 0; i < snap.size(); ++i) snap[i].x = r.x(static_cast<Eigen::Index>(i), t);
            const auto g = bumper_gaps(snap, r.config.ring);
            min_gap = std::min(min_gap, *std::min_element(g.begin(), g.end()));
        }
    }
    o.detail << std::setprecision(3) << "20 runs, " << events << " overlap events, smallest gap " << min_gap << " m";
    o.require(events == 0, "zero bumper overlaps");
    return o;
}

Outcome criterion_9() {
    Outcome o;
    const auto t0 = Clock::now();
    const std::pair<const char*, std::function<std::string()>> checks[] = {
        {"smoothing affine", [] { return testing_util::check_smoothing_affine(); }},
        {"phi2 shape", [] { return testing_util::check_phi2_shape(); }},
        {"compact form", [] { return testing_util::check_compact_form(); }},
        {"order invariance", [] { return testing_util::check_order_invariance(); }},
        {"ring conservation", [] { return testing_util::check_ring_conservation(); }},
        {"reruns", [] { return testing_util::check_reruns(); }},
    };
    for (const auto& [name, fn] : checks) {
        const std::string err = fn();
        o.detail << name << (err.empty() ? " ok; " : " FAILED; ");
        o.require(err.empty(), std::string(name) + ": " + err);
    }
    const double elapsed = seconds_since(t0);
    o.detail << elapsed << " s";
    o.require(elapsed < 30.0, "runtime < 30 s");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::function<Outcome()> criteria[] = {criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                                                 criterion_6, criterion_7, criterion_8, criterion_9};
    std::vector<int> selected;
    for (int k = 1; k < argc; ++k) {
        const int c = std::atoi(argv[k]);
        if (c < 1 || c > 9) {
            std::cerr << "criterion must be 1..9\n";
            return 2;
        }
        selected.push_back(c);
    }
    if (selected.empty())
        for (int c = 1; c <= 9; ++c) selected.push_back(c);

    bool all = true;
    for (int c : selected) {
        Outcome r;
        try {
            r = criteria[c - 1]();
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail << "exception: " << e.what();
        }
        all = all && r.pass;
        std::cout << "criterion " << c << ": " << (r.pass ? "PASS" : "FAIL") << "  " << r.detail.str() << std::endl;
    }
    return all ? 0 : 1;
}
