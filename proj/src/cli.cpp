#include "ringcal/cli.hpp"

#include "ringcal/analysis.hpp"
#include "ringcal/calibrate.hpp"
#include "ringcal/io.hpp"
#include "ringcal/rng.hpp"
#include "ringcal/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <thread>

#ifndef RINGCAL_VERSION
#define RINGCAL_VERSION "unknown"
#endif

namespace ringcal::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version_string() {
    std::string s = std::string("ringcal ") + RINGCAL_VERSION;
    s += " (Eigen " + std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
#if defined(__VERSION__)
    s += ", compiler " + std::string(__VERSION__);
#endif
#if defined(NDEBUG)
    s += ", release";
#else
    s += ", debug";
#endif
    s += ")";
    return s;
}

namespace {

struct Common {
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct SimOptions {
    std::string scenario = "sugiyama";
    long steps = 750;
    double deflation = 0.5;
    bool no_noise = false;
    bool homogeneous = false;
    bool process_noise = false;
    bool argmax = false;
    std::string initial = "equilibrium";
    double v0 = 7.0;
    double kappa0 = 2.0;
    std::string n = "22";
    long n_step = 4;
    double dt = 1.0 / 3.0;
    std::optional<std::uint64_t> shuffle_seed;
    std::string params;
    double burn_in = 60.0;
    double lambda = 200.0;
    int runs = 1;
    bool trajectories = false;
};

json to_json(const DriverParams& p) {
    json j;
    const Vector full = p.full_vector();
    for (std::size_t k = 0; k < kFullParamNames.size(); ++k) j[std::string(kFullParamNames[k])] = full[static_cast<Eigen::Index>(k)];
    return j;
}

json to_json(const WaveMetrics& m) {
    json j;
    j["backward_wave_speed"] = m.backward_wave_speed ? json(*m.backward_wave_speed) : json(nullptr);
    j["mean_queue_length"] = m.mean_queue_length;
    j["queue_event_frequency"] = m.queue_event_frequency;
    j["quasi_period_amplitude"] = m.quasi_period_amplitude;
    j["tracks"] = m.tracks;
    return j;
}

json to_json(const CollectiveSummary& s) {
    json j;
    j["mean_v_avg"] = s.mean_v_avg;
    j["max_v_max"] = s.max_v_max;
    j["max_v_range"] = s.max_v_range;
    j["slow_fraction"] = s.slow_fraction;
    j["slow_episodes"] = s.slow_episodes;
    j["range_over_2_s"] = s.range_over_2_s;
    j["waves"] = to_json(s.waves);
    j["mean_gap"] = s.mean_gap;
    return j;
}

// Runs body(k) for k in [0, n) on up to `jobs` threads. Each k writes only its own slot.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    if (workers <= 1) {
        for (std::size_t k = 0; k < n; ++k) body(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < n; k = next++) {
                    try {
                        body(k);
                    } catch (...) {
                        errors[k] = std::current_exception();
                    }
                }
            });
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::pair<long, long> parse_range(const std::string& s) {
    const auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            const long v = std::stol(s);
            return {v, v};
        }
        return {std::stol(s.substr(0, dots)), std::stol(s.substr(dots + 2))};
    } catch (const std::exception&) {
        throw ValidationError("bad count or range '" + s + "' (expected N or A..B)");
    }
}

ScenarioConfig build_scenario(const SimOptions& o, std::size_t n_override, std::uint64_t seed) {
    DriverParams base;
    ScenarioConfig cfg;
    const std::string& name = o.scenario;
    if (name == "sugiyama") {
        cfg = scenario_sugiyama(base, seed);
    } else if (name == "sugiyama-het") {
        cfg = scenario_sugiyama_heterogeneous(base, seed);
    } else if (name == "low-speed") {
        cfg = scenario_low_ideal_speed(scenario_sugiyama(base, seed), o.v0);
    } else if (name == "risk-premium") {
        cfg = scenario_high_risk_premium(scenario_sugiyama(base, seed), o.kappa0);
    } else if (name == "tadaki") {
        cfg = scenario_tadaki(n_override, base, seed);
    } else if (name == "highway") {
        cfg = scenario_highway(scenario_sugiyama(base, seed));
    } else {
        throw ValidationError("unknown scenario '" + name +
                              "' (sugiyama, sugiyama-het, low-speed, risk-premium, tadaki, highway)");
    }

    if (!o.params.empty()) {
        const auto rows = io::read_results(o.params);
        require(rows.size() == cfg.agents.size(), "parameter file must have one row per agent");
        for (const auto& r : rows) {
            require(r.vehicle_id < cfg.agents.size(), "parameter file vehicle_id out of range");
            const double v_star = cfg.agents[r.vehicle_id].utility.v_star;
            cfg.agents[r.vehicle_id] = r.theta_hat;
            // keep the scenario's own override of agent 0
            if (r.vehicle_id == 0 && name == "low-speed") cfg.agents[0].utility.v_star = v_star;
        }
        if (name == "risk-premium") cfg.agents[0].utility.kappa_v = o.kappa0;
    }

    cfg.T_steps = o.steps;
    cfg.noise_deflation = o.deflation;
    cfg.accel_noise_on = !o.no_noise;
    cfg.heterogeneity_on = !o.homogeneous;
    cfg.process_noise_on = o.process_noise;
    cfg.use_argmax = o.argmax;
    cfg.burn_in_s = o.burn_in;
    cfg.grid.lambda = o.lambda;
    if (o.initial == "equilibrium") {
        cfg.initial = InitialCondition::Equilibrium;
    } else if (o.initial == "perturbed") {
        cfg.initial = InitialCondition::Perturbed;
    } else {
        throw ValidationError("initial condition must be equilibrium or perturbed");
    }
    if (std::abs(o.dt - cfg.ring.dt) > 1e-12) cfg = rescale_dt(cfg, o.dt);
    if (o.shuffle_seed) cfg = shuffle_order(cfg, *o.shuffle_seed);
    cfg.validate();
    return cfg;
}

void add_sim_options(CLI::App* cmd, SimOptions& o) {
    cmd->add_option("--steps", o.steps, "time steps to simulate")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--deflation", o.deflation, "factor applied to sigma_a")->check(CLI::NonNegativeNumber)->capture_default_str();
    cmd->add_flag("--no-noise", o.no_noise, "switch acceleration noise off");
    cmd->add_flag("--homogeneous", o.homogeneous, "give every agent the fleet-average parameters");
    cmd->add_flag("--process-noise", o.process_noise, "add kinematic position and speed noise");
    cmd->add_flag("--argmax", o.argmax, "act on the grid argmax instead of the Boltzmann mean");
    cmd->add_option("--initial", o.initial, "equilibrium or perturbed")->capture_default_str();
    cmd->add_option("--v0", o.v0, "agent 0 ideal speed (low-speed)")->capture_default_str();
    cmd->add_option("--kappa0", o.kappa0, "agent 0 kappa_v (risk-premium)")->capture_default_str();
    cmd->add_option("--dt", o.dt, "step length, s")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--shuffle-seed", o.shuffle_seed, "permute agent parameters and lengths");
    cmd->add_option("--params", o.params, "results CSV supplying per-agent parameters");
    cmd->add_option("--burn-in", o.burn_in, "seconds discarded before metrics")->check(CLI::NonNegativeNumber)->capture_default_str();
    cmd->add_option("--lambda", o.lambda, "Boltzmann sharpness")->check(CLI::PositiveNumber)->capture_default_str();
}

void write_sim_outputs(const SimOutput& sim, const fs::path& dir, const std::string& stem) {
    io::write_trajectories(io::trajectories_of(sim), dir / (stem + ".csv"), dir / (stem + ".meta"));
}

json collisions_json(const SimOutput& sim) {
    json arr = json::array();
    for (const auto& c : sim.collisions) arr.push_back({{"t", c.t}, {"agent", c.agent}, {"gap", c.gap}});
    return arr;
}

int cmd_smooth(const fs::path& input, const fs::path& meta, const fs::path& out) {
    const RawTrajectorySet raw = io::read_trajectories(input, meta);
    const PerceivedDataset ds = build_perceived_states(raw);
    io::write_smoothed(ds, out / "smoothed.csv");
    io::write_perceived(ds, out / "perceived.csv");
    return kExitOk;
}

struct CalibrateOptions {
    std::vector<std::size_t> vehicles;
    int hops = 20;
    double step_fraction = 0.15;
    double temperature = 1.0;
    int max_evals = 400;
    double rel_tol = 1e-6;
    double gamma_v = 50.0;
    double gamma_kappa = 500.0;
    double v_bar = 11.0;
    double kappa_bar = 0.5;
    std::vector<double> lower{0.02, 0.02, 6.0, 0.02};
    std::vector<double> upper{1.0, 2.0, 15.0, 2.0};
    double lambda = 200.0;
    bool hessian = false;
};

int cmd_calibrate(const fs::path& input, const fs::path& meta, const fs::path& out, const CalibrateOptions& o,
                  const Common& common, std::ostream& log) {
    const RawTrajectorySet raw = io::read_trajectories(input, meta);
    const PerceivedDataset ds = build_perceived_states(raw);
    std::vector<VehicleData> all = vehicle_data(ds);
    std::vector<VehicleData> data;
    if (o.vehicles.empty()) {
        data = std::move(all);
    } else {
        for (std::size_t id : o.vehicles) {
            require(id < all.size(), "vehicle " + std::to_string(id) + " is not in the recording");
            data.push_back(all[id]);
        }
    }

    CalibrationConfig cfg;
    cfg.settings.anticipation.dt = raw.dt;
    cfg.settings.grid.lambda = o.lambda;
    cfg.search.hops = o.hops;
    cfg.search.step_fraction = o.step_fraction;
    cfg.search.temperature = o.temperature;
    cfg.search.local.max_evals = o.max_evals;
    cfg.search.local.rel_tol = o.rel_tol;
    cfg.reg = {o.gamma_v, o.gamma_kappa, o.v_bar, o.kappa_bar};
    require(o.lower.size() == 4 && o.upper.size() == 4, "bounds need four values each");
    cfg.bounds.lower = Eigen::Vector4d(o.lower[0], o.lower[1], o.lower[2], o.lower[3]);
    cfg.bounds.upper = Eigen::Vector4d(o.upper[0], o.upper[1], o.upper[2], o.upper[3]);
    cfg.settings.anticipation.validate();
    cfg.settings.grid.validate();
    cfg.bounds.validate();
    cfg.reg.validate();

    const CalibrationBatch batch = calibrate_all(data, cfg, common.seed, common.jobs);
    io::write_results(batch.results, out / "results.csv");
    for (const auto& r : batch.results)
        io::write_filtered(r, ds.first, out / "filtered" / ("vehicle_" + std::to_string(r.vehicle_id) + ".csv"));

    json report;
    report["seed"] = common.seed;
    report["vehicles"] = json::array();
    for (const auto& r : batch.results) {
        json v;
        v["vehicle_id"] = r.vehicle_id;
        v["theta"] = to_json(r.theta_hat);
        v["objective"] = r.objective;
        v["log_likelihood"] = r.log_likelihood;
        v["penalty"] = r.penalty;
        v["penalty_ratio"] = r.penalty_ratio;
        v["hops"] = r.n_hops;
        v["evaluations"] = r.n_evals;
        v["converged"] = r.converged;
        v["best_history"] = r.best_history;
        if (o.hessian) {
            const auto it = std::find_if(data.begin(), data.end(), [&](const VehicleData& d) { return d.vehicle_id == r.vehicle_id; });
            try {
                const HessianReport h = hessian_spectrum(r.theta_hat, *it, cfg.settings);
                v["hessian_eigenvalues"] = std::vector<double>(h.eigenvalues.data(), h.eigenvalues.data() + h.eigenvalues.size());
            } catch (const NumericError& e) {
                v["hessian_error"] = e.what();
            }
        }
        report["vehicles"].push_back(v);
    }
    report["failures"] = json::array();
    for (const auto& [id, msg] : batch.failures) report["failures"].push_back({{"vehicle_id", id}, {"error", msg}});
    json summary;
    for (std::size_t j = 0; j < 4; ++j) {
        summary[std::string(kFreeParamNames[j])] = {{"mean", batch.summary.mean[static_cast<Eigen::Index>(j)]},
                                                    {"sd", batch.summary.sd[static_cast<Eigen::Index>(j)]}};
    }
    report["summary"] = summary;
    io::write_text(out / "diagnostics.json", report.dump(2) + "\n");

    for (const auto& [id, msg] : batch.failures) log << "vehicle " << id << " failed: " << msg << "\n";
    if (batch.results.empty() && !batch.failures.empty()) return kExitNumeric;
    return kExitOk;
}

int cmd_simulate(const SimOptions& o, const fs::path& out, const Common& common) {
    const auto [n, n_hi] = parse_range(o.n);
    require(n == n_hi && n > 0, "simulate takes a single vehicle count");
    const ScenarioConfig cfg = build_scenario(o, static_cast<std::size_t>(n), common.seed);
    const SimOutput sim = simulate(cfg);
    write_sim_outputs(sim, out, "trajectory");

    const CollectiveSummary s = collective_summary(sim);
    const long first = std::min<long>(sim.samples(), std::llround(cfg.burn_in_s / cfg.ring.dt));
    io::write_speed_profile(speed_profile(sim.v), 0, out / "speed_profile.csv");
    io::write_wave_metrics(s.waves, out / "waves.csv");
    json j;
    j["scenario"] = cfg.name;
    j["seed"] = common.seed;
    j["burn_in_samples"] = first;
    j["summary"] = to_json(s);
    j["collisions"] = collisions_json(sim);
    io::write_text(out / "metrics.json", j.dump(2) + "\n");
    return kExitOk;
}

int cmd_scenario(const SimOptions& o, const fs::path& out, const Common& common) {
    std::vector<std::pair<std::size_t, std::uint64_t>> runs;   // (vehicle count, seed)
    if (o.scenario == "tadaki") {
        const auto [lo, hi] = parse_range(o.n);
        require(lo > 0 && hi >= lo && o.n_step > 0, "vehicle range must be positive and increasing");
        for (long n = lo; n <= hi; n += o.n_step)
            for (int r = 0; r < o.runs; ++r)
                runs.emplace_back(static_cast<std::size_t>(n), o.runs == 1 ? common.seed : split_seed(common.seed, static_cast<std::uint64_t>(r)));
    } else {
        require(o.runs >= 1, "--runs must be at least 1");
        for (int r = 0; r < o.runs; ++r)
            runs.emplace_back(22, o.runs == 1 ? common.seed : split_seed(common.seed, static_cast<std::uint64_t>(r)));
    }
    // validate every configuration before spending time on any run
    std::vector<ScenarioConfig> configs;
    for (const auto& [n, seed] : runs) configs.push_back(build_scenario(o, n, seed));

    std::vector<SimOutput> sims(configs.size());
    std::vector<CollectiveSummary> sums(configs.size());
    parallel_for(configs.size(), common.jobs, [&](std::size_t k) {
        sims[k] = simulate(configs[k]);
        sums[k] = collective_summary(sims[k]);
    });

    std::ostringstream csv;
    csv << "run,vehicles,seed,mean_v_avg,max_v_max,max_v_range,slow_fraction,slow_episodes,range_over_2_s,"
           "backward_wave_speed,mean_queue_length,collisions\n";
    for (std::size_t k = 0; k < sims.size(); ++k) {
        const auto& s = sums[k];
        csv << k << ',' << sims[k].agents() << ',' << sims[k].seed << ',' << io::format_number(s.mean_v_avg) << ','
            << io::format_number(s.max_v_max) << ',' << io::format_number(s.max_v_range) << ','
            << io::format_number(s.slow_fraction) << ',' << s.slow_episodes << ',' << io::format_number(s.range_over_2_s)
            << ',' << io::format_optional(s.waves.backward_wave_speed) << ','
            << io::format_number(s.waves.mean_queue_length) << ',' << sims[k].collisions.size() << '\n';
        if (o.trajectories) write_sim_outputs(sims[k], out, "trajectory_" + std::to_string(k));
    }
    io::write_text(out / "runs.csv", csv.str());
    if (o.scenario == "tadaki") io::write_fundamental_diagram(fundamental_diagram(sims), out / "fundamental_diagram.csv");
    return kExitOk;
}

int cmd_cluster(const fs::path& input, int k, const fs::path& out) {
    const auto results = io::read_results(input);
    std::vector<CalibrationResult> ordered = results;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const CalibrationResult& a, const CalibrationResult& b) { return a.vehicle_id < b.vehicle_id; });
    const ClusterResult c = cluster_drivers(ordered, k);
    std::ostringstream labels;
    labels << "vehicle_id,cluster\n";
    for (std::size_t i = 0; i < ordered.size(); ++i) labels << ordered[i].vehicle_id << ',' << c.labels[i] << '\n';
    io::write_text(out / "clusters.csv", labels.str());
    std::ostringstream gap;
    gap << "vehicle_id,cluster\n";
    for (std::size_t i = 0; i < ordered.size(); ++i) gap << ordered[i].vehicle_id << ',' << c.gap_labels[i] << '\n';
    io::write_text(out / "clusters_gap.csv", gap.str());
    io::write_merge_tree(c.tree, out / "merge_tree.csv");

    json j;
    j["k"] = c.k;
    j["gap_k"] = c.gap_k;
    j["warnings"] = c.warnings;
    j["cluster_means"] = json::array();
    for (Eigen::Index r = 0; r < c.cluster_means.rows(); ++r)
        j["cluster_means"].push_back({{"sigma_a", c.cluster_means(r, 0)},
                                      {"v_star", c.cluster_means(r, 1)},
                                      {"kappa_v", c.cluster_means(r, 2)}});
    io::write_text(out / "clusters.json", j.dump(2) + "\n");
    return kExitOk;
}

int cmd_metrics(const fs::path& input, const fs::path& meta, double burn_in, double threshold, const fs::path& out) {
    const RawTrajectorySet raw = io::read_trajectories(input, meta);
    const long T = raw.sample_count();
    require(T >= 2, "metrics need at least two samples");
    const auto n = static_cast<Eigen::Index>(raw.vehicle_count());
    Matrix v(n, T);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector lift = unwrap_positions(raw.positions.row(i).transpose(), raw.circumference).lift;
        for (long t = 0; t + 1 < T; ++t) v(i, t) = (lift[t + 1] - lift[t]) / raw.dt;
        v(i, T - 1) = v(i, T - 2);
    }
    const long first = std::min<long>(T, std::llround(burn_in / raw.dt));
    WaveOptions opts;
    opts.slow_threshold = threshold;
    opts.dt = raw.dt;
    opts.circumference = raw.circumference;
    opts.first = first;
    io::write_speed_profile(speed_profile(v), 0, out / "speed_profile.csv");
    io::write_wave_metrics(wave_metrics(raw.positions, v, opts), out / "waves.csv");
    return kExitOk;
}

int cmd_recover(const fs::path& results, const fs::path& truth, const fs::path& out) {
    const DriverParams t = io::read_truth(truth);
    io::write_recovery(recovery_report(t, io::read_results(results)), out / "recovery.csv");
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Driver-behaviour calibration and ring-road traffic simulation"};
    app.set_version_flag("--version", version_string());
    app.set_config("--config", "", "TOML run configuration (unknown keys are rejected)");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    Common common;
    app.add_option("--seed", common.seed, "master seed for every random draw")->envname("RINGCAL_SEED")->capture_default_str();
    app.add_option("--jobs", common.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();

    fs::path input, meta, output = "out";
    auto io_options = [&](CLI::App* cmd, bool needs_input) {
        auto* in = cmd->add_option("--input,-i", input, "input file");
        if (needs_input) in->required();
        cmd->add_option("--out,-o", output, "output directory")->capture_default_str();
    };

    auto* smooth = app.add_subcommand("smooth", "smooth a recording and derive perceived states");
    io_options(smooth, true);
    smooth->add_option("--meta", meta, "metadata file (default: input with .meta extension)");

    CalibrateOptions copt;
    auto* calibrate = app.add_subcommand("calibrate", "fit per-vehicle parameters by maximum likelihood");
    io_options(calibrate, true);
    calibrate->add_option("--meta", meta, "metadata file (default: input with .meta extension)");
    calibrate->add_option("--vehicles", copt.vehicles, "vehicle ids to fit (default: all)")->delimiter(',');
    calibrate->add_option("--hops", copt.hops, "basin-hopping iterations")->check(CLI::NonNegativeNumber)->capture_default_str();
    calibrate->add_option("--step-fraction", copt.step_fraction, "hop half-width as a fraction of the box")->capture_default_str();
    calibrate->add_option("--temperature", copt.temperature, "Metropolis temperature")->check(CLI::PositiveNumber)->capture_default_str();
    calibrate->add_option("--max-evals", copt.max_evals, "local search evaluation budget")->check(CLI::PositiveNumber)->capture_default_str();
    calibrate->add_option("--rel-tol", copt.rel_tol, "local search tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    calibrate->add_option("--gamma-v", copt.gamma_v, "v_star regularisation weight")->capture_default_str();
    calibrate->add_option("--gamma-kappa", copt.gamma_kappa, "kappa_v regularisation weight")->capture_default_str();
    calibrate->add_option("--v-bar", copt.v_bar, "v_star anchor")->capture_default_str();
    calibrate->add_option("--kappa-bar", copt.kappa_bar, "kappa_v anchor")->capture_default_str();
    calibrate->add_option("--lower", copt.lower, "lower bounds: sigma_nu,sigma_a,v_star,kappa_v")->delimiter(',')->expected(4)->capture_default_str();
    calibrate->add_option("--upper", copt.upper, "upper bounds: sigma_nu,sigma_a,v_star,kappa_v")->delimiter(',')->expected(4)->capture_default_str();
    calibrate->add_option("--lambda", copt.lambda, "Boltzmann sharpness")->check(CLI::PositiveNumber)->capture_default_str();
    calibrate->add_flag("--hessian", copt.hessian, "add Hessian eigenvalues at the optimum to the report");

    SimOptions sopt;
    auto* simulate_cmd = app.add_subcommand("simulate", "run one simulated world");
    io_options(simulate_cmd, false);
    simulate_cmd->add_option("--scenario", sopt.scenario, "scenario name")->capture_default_str();
    simulate_cmd->add_option("--n", sopt.n, "vehicle count (tadaki)")->capture_default_str();
    add_sim_options(simulate_cmd, sopt);

    auto* scenario = app.add_subcommand("scenario", "run a named study over seeds or densities");
    io_options(scenario, false);
    scenario->add_option("name", sopt.scenario, "scenario name")->required();
    scenario->add_option("--n", sopt.n, "vehicle count or range A..B (tadaki)")->capture_default_str();
    scenario->add_option("--step", sopt.n_step, "vehicle count step (tadaki)")->capture_default_str();
    scenario->add_option("--runs", sopt.runs, "seeds per configuration")->check(CLI::PositiveNumber)->capture_default_str();
    scenario->add_flag("--trajectories", sopt.trajectories, "also write every run's trajectory");
    add_sim_options(scenario, sopt);

    int k = 4;
    auto* cluster = app.add_subcommand("cluster", "hierarchical clustering of calibrated parameters");
    io_options(cluster, true);
    cluster->add_option("--k", k, "clusters in the default cut")->check(CLI::PositiveNumber)->capture_default_str();

    double burn_in = 60.0, threshold = 2.0;
    auto* metrics = app.add_subcommand("metrics", "speed profile and wave metrics of a trajectory file");
    io_options(metrics, true);
    metrics->add_option("--meta", meta, "metadata file (default: input with .meta extension)");
    metrics->add_option("--burn-in", burn_in, "seconds discarded before wave metrics")->capture_default_str();
    metrics->add_option("--slow-threshold", threshold, "slow-cluster speed threshold, m/s")->capture_default_str();

    fs::path truth;
    auto* recover = app.add_subcommand("recover", "estimation error table against known parameters");
    io_options(recover, true);
    recover->add_option("--truth", truth, "key=value file of true parameters")->required();

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitValidation;
    }

    try {
        if (meta.empty() && !input.empty()) meta = io::meta_path_for(input);
        fs::create_directories(output);
        io::write_text(output / "config_echo.toml", app.config_to_str(true, false));
        if (smooth->parsed()) return cmd_smooth(input, meta, output);
        if (calibrate->parsed()) return cmd_calibrate(input, meta, output, copt, common, err);
        if (simulate_cmd->parsed()) return cmd_simulate(sopt, output, common);
        if (scenario->parsed()) return cmd_scenario(sopt, output, common);
        if (cluster->parsed()) return cmd_cluster(input, k, output);
        if (metrics->parsed()) return cmd_metrics(input, meta, burn_in, threshold, output);
        if (recover->parsed()) return cmd_recover(input, truth, output);
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ValidationError& e) {
        err << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const fs::filesystem_error& e) {
        err << "file error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace ringcal::cli
