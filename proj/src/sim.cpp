#include "ringcal/sim.hpp"

#include "ringcal/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ringcal {

const std::vector<double>& sugiyama_lengths() {
    static const std::vector<double> lengths = {3.52, 4.65, 3.68, 4.54, 3.90, 4.92, 4.87, 5.03, 4.62, 4.81, 4.92,
                                                3.95, 4.11, 3.95, 4.49, 4.81, 4.81, 3.57, 4.38, 4.06, 3.08, 4.71};
    return lengths;
}

void RingRoad::validate() const {
    require(circumference > 0.0, "ring circumference must be positive");
    require(dt > 0.0, "dt must be positive");
    double total = 0.0;
    for (double l : lengths) {
        require(l > 0.0, "vehicle lengths must be positive");
        total += l;
    }
    require(lengths.empty() || total < circumference, "vehicles do not fit on the ring");
}

void ScenarioConfig::validate() const {
    ring.validate();
    require(agents.size() == ring.size(), "one parameter set per vehicle is required");
    for (const auto& p : agents) p.validate();
    anticipation.validate();
    grid.validate();
    require(noise_deflation >= 0.0 && noise_deflation <= 1.0, "noise deflation must lie in [0, 1]");
    require(T_steps >= 0, "step count must be non-negative");
    require(burn_in_s >= 0.0, "burn-in must be non-negative");
    if (initial == InitialCondition::Perturbed) {
        require(ring.size() == 0 || perturbed_agent < ring.size(), "perturbed agent index out of range");
    }
    if (initial == InitialCondition::FromData) {
        require(initial_states.size() == ring.size(), "from_data needs one initial state per vehicle");
    }
}

SimRng::SimRng(std::uint64_t seed, std::size_t agents) {
    streams_.reserve(agents);
    for (std::size_t i = 0; i < agents; ++i) streams_.emplace_back(split_seed(seed, i));
}

std::array<double, 3> SimRng::draw(std::size_t agent) {
    auto& g = streams_.at(agent);
    normal_.reset();
    const double e = normal_(g);
    normal_.reset();
    const double mx = normal_(g);
    normal_.reset();
    const double mv = normal_(g);
    normal_.reset();
    return {e, mx, mv};
}

std::vector<DriverParams> effective_agents(const ScenarioConfig& cfg) {
    if (cfg.heterogeneity_on || cfg.agents.empty()) return cfg.agents;
    Vector acc = Vector::Zero(11);
    for (const auto& p : cfg.agents) acc += p.full_vector();
    acc /= static_cast<double>(cfg.agents.size());
    DriverParams avg = cfg.agents.front();
    avg.set_full_vector(acc);
    avg.utility.omega1 = 1.0;
    return std::vector<DriverParams>(cfg.agents.size(), avg);
}

std::vector<double> bumper_gaps(const std::vector<AgentState>& agents, const RingRoad& ring) {
    const std::size_t n = agents.size();
    std::vector<double> gaps(n, 0.0);
    if (n < 2) {
        if (n == 1) gaps[0] = ring.circumference - ring.lengths[0];
        return gaps;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t p = (i + n - 1) % n;
        const double d = wrap_position(agents[p].x - agents[i].x, ring.circumference);
        gaps[i] = d - 0.5 * (ring.lengths[i] + ring.lengths[p]);
    }
    return gaps;
}

WorldState initial_world(const ScenarioConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.ring.size();
    WorldState w;
    w.agents.resize(n);
    w.prev_mean_action.assign(n, 0.0);
    if (n == 0) return w;

    if (cfg.initial == InitialCondition::FromData) {
        for (std::size_t i = 0; i < n; ++i) {
            w.agents[i] = cfg.initial_states[i];
            w.agents[i].x = wrap_position(w.agents[i].x, cfg.ring.circumference);
            w.prev_mean_action[i] = w.agents[i].a;
        }
        return w;
    }

    const double total_length = std::accumulate(cfg.ring.lengths.begin(), cfg.ring.lengths.end(), 0.0);
    const double gap = (cfg.ring.circumference - total_length) / static_cast<double>(n);
    double x = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) x -= 0.5 * (cfg.ring.lengths[i - 1] + cfg.ring.lengths[i]) + gap;
        w.agents[i] = AgentState{wrap_position(x, cfg.ring.circumference), cfg.initial_speed, 0.0};
    }
    if (cfg.initial == InitialCondition::Perturbed) {
        w.agents[cfg.perturbed_agent].v -= cfg.perturbation_dv;
    }
    return w;
}

namespace {

PerceivedState perceive(const std::vector<AgentState>& agents, std::size_t i, long t) {
    const std::size_t n = agents.size();
    PerceivedState s;
    s.t = t;
    s.self_pos = agents[i].x;
    s.self_vel = agents[i].v;
    if (n > 1) {
        const std::size_t p = (i + n - 1) % n;
        const std::size_t f = (i + 1) % n;
        s.pred = NeighborState{agents[p].x, agents[p].v};
        s.foll = NeighborState{agents[f].x, agents[f].v};
    }
    return s;
}

WorldState step_with(const WorldState& world, const ScenarioConfig& cfg, const std::vector<DriverParams>& params,
                     SimRng& rng, std::vector<CollisionEvent>* collisions, std::span<const std::size_t> order) {
    const std::size_t n = world.agents.size();
    const double dt = cfg.ring.dt;
    WorldState next = world;
    next.step = world.step + 1;

    std::vector<std::size_t> seq;
    if (order.empty()) {
        seq.resize(n);
        std::iota(seq.begin(), seq.end(), std::size_t{0});
        order = seq;
    }
    require(order.size() == n, "iteration order must cover every agent");

    for (std::size_t i : order) {
        const DriverParams& p = params[i];
        const std::size_t pred = (i + n - 1) % n;
        const VehiclePair pair{cfg.ring.lengths[i], cfg.ring.lengths[pred], cfg.ring.circumference};
        const DecisionModel model{p.utility, cfg.anticipation, cfg.grid};
        const PerceivedState s = perceive(world.agents, i, world.step);

        const double abar = cfg.use_argmax ? optimal_action(s, model, pair) : mean_action(s, model, pair);
        const auto noise = rng.draw(i);
        const double eps = cfg.accel_noise_on ? cfg.noise_deflation * p.noise.sigma_a * noise[0] : 0.0;
        const AgentState& cur = world.agents[i];
        const double a = abar + p.noise.rho * (cur.a - world.prev_mean_action[i]) + eps;

        double x = cur.x + dt * cur.v;
        double v = cur.v + dt * a;
        if (cfg.process_noise_on) {
            x += p.noise.sigma_x * noise[1];
            v += p.noise.sigma_v * noise[2];
        }
        if (!std::isfinite(x) || !std::isfinite(v) || !std::isfinite(a)) {
            std::ostringstream msg;
            msg << "nonfinite state for agent " << i << " at step " << world.step;
            throw NumericError(msg.str(), world.step);
        }
        next.agents[i] = AgentState{wrap_position(x, cfg.ring.circumference), v, a};
        next.prev_mean_action[i] = abar;
    }

    if (collisions && n > 1) {
        const std::vector<double> gaps = bumper_gaps(next.agents, cfg.ring);
        for (std::size_t i = 0; i < n; ++i) {
            if (gaps[i] < 0.0) collisions->push_back(CollisionEvent{next.step, i, gaps[i]});
        }
    }
    return next;
}

}  // namespace

WorldState step(const WorldState& world, const ScenarioConfig& cfg, SimRng& rng,
                std::vector<CollisionEvent>* collisions, std::span<const std::size_t> order) {
    require(world.agents.size() == cfg.ring.size(), "world and scenario disagree on the vehicle count");
    return step_with(world, cfg, effective_agents(cfg), rng, collisions, order);
}

SimOutput simulate(const ScenarioConfig& cfg) {
    WorldState world = initial_world(cfg);
    const std::size_t n = cfg.ring.size();
    const auto cols = static_cast<Eigen::Index>(cfg.T_steps + 1);
    const auto rows = static_cast<Eigen::Index>(n);

    SimOutput out;
    out.config = cfg;
    out.seed = cfg.seed;
    out.x.resize(rows, cols);
    out.v.resize(rows, cols);
    out.a.resize(rows, cols);

    const std::vector<DriverParams> params = effective_agents(cfg);
    SimRng rng(cfg.seed, n);
    for (Eigen::Index t = 0; t < cols; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            out.x(r, t) = world.agents[i].x;
            out.v(r, t) = world.agents[i].v;
        }
        if (t + 1 == cols) break;
        world = step_with(world, cfg, params, rng, &out.collisions, {});
        for (std::size_t i = 0; i < n; ++i) out.a(static_cast<Eigen::Index>(i), t) = world.agents[i].a;
    }
    // the final sample has no decision of its own; hold the last action
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out.a(r, cols - 1) = cols > 1 ? out.a(r, cols - 2) : world.agents[i].a;
    }
    return out;
}

RawTrajectorySet observe(const SimOutput& out, const std::vector<double>& sigma_nu, std::uint64_t seed) {
    require(sigma_nu.size() == out.agents(), "one measurement sigma per vehicle is required");
    RawTrajectorySet raw;
    raw.dt = out.config.ring.dt;
    raw.circumference = out.config.ring.circumference;
    raw.lengths = out.config.ring.lengths;
    raw.positions = out.x;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < out.agents(); ++i) {
        std::mt19937_64 g(split_seed(seed, 1000003 + i));
        for (Eigen::Index t = 0; t < out.x.cols(); ++t) {
            const auto r = static_cast<Eigen::Index>(i);
            raw.positions(r, t) = wrap_position(out.x(r, t) + sigma_nu[i] * normal(g), raw.circumference);
        }
    }
    return raw;
}

std::vector<VehicleData> truth_perceived_data(const SimOutput& out, const RawTrajectorySet& measured) {
    const std::size_t n = out.agents();
    require(measured.vehicle_count() == n && measured.sample_count() == out.samples(),
            "measurements do not match the simulation shape");
    const RingRoad& ring = out.config.ring;
    std::vector<VehicleData> data;
    data.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        VehicleData d;
        d.vehicle_id = i;
        d.dt = ring.dt;
        d.first_t = 0;
        const std::size_t p = (i + n - 1) % n;
        d.pair = VehiclePair{ring.lengths[i], ring.lengths[p], ring.circumference};
        const Vector row = measured.positions.row(r).transpose();
        const Vector lift = unwrap_positions(row, ring.circumference).lift;
        d.z.assign(lift.data(), lift.data() + lift.size());
        d.perceived.reserve(static_cast<std::size_t>(out.samples()));
        for (Eigen::Index t = 0; t < out.samples(); ++t) {
            PerceivedState s;
            s.t = t;
            s.self_pos = out.x(r, t);
            s.self_vel = out.v(r, t);
            if (n > 1) {
                const auto pr = static_cast<Eigen::Index>(p);
                const auto fr = static_cast<Eigen::Index>((i + 1) % n);
                s.pred = NeighborState{out.x(pr, t), out.v(pr, t)};
                s.foll = NeighborState{out.x(fr, t), out.v(fr, t)};
            }
            d.perceived.push_back(s);
        }
        data.push_back(std::move(d));
    }
    return data;
}

ScenarioConfig scenario_sugiyama(const DriverParams& params, std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.name = "sugiyama";
    cfg.ring.circumference = 230.0;
    cfg.ring.lengths = sugiyama_lengths();
    cfg.ring.dt = 1.0 / 3.0;
    cfg.agents.assign(cfg.ring.size(), params);
    cfg.anticipation.dt = cfg.ring.dt;
    cfg.T_steps = 750;
    cfg.seed = seed;
    return cfg;
}

ScenarioConfig scenario_sugiyama_heterogeneous(const DriverParams& params, std::uint64_t seed) {
    ScenarioConfig cfg = scenario_sugiyama(params, seed);
    cfg.name = "sugiyama_heterogeneous";
    std::mt19937_64 g(split_seed(seed, 0xC0FFEE));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& p : cfg.agents) {
        p.utility.v_star = params.utility.v_star + 0.4 * normal(g);
        p.utility.kappa_v = std::max(0.05, params.utility.kappa_v + 0.04 * normal(g));
        p.noise.sigma_a = std::max(0.02, params.noise.sigma_a + 0.05 * normal(g));
    }
    return cfg;
}

ScenarioConfig scenario_low_ideal_speed(const ScenarioConfig& base, double v0_star) {
    require(v0_star > 0.0 && v0_star <= 50.0, "ideal speed override must lie in (0, 50] m/s");
    require(!base.agents.empty(), "scenario has no agents");
    ScenarioConfig cfg = base;
    cfg.agents[0].utility.v_star = v0_star;
    return cfg;
}

ScenarioConfig scenario_high_risk_premium(const ScenarioConfig& base, double kappa0_v) {
    require(kappa0_v > 0.0, "risk premium override must be positive");
    require(!base.agents.empty(), "scenario has no agents");
    ScenarioConfig cfg = base;
    cfg.agents[0].utility.kappa_v = kappa0_v;
    return cfg;
}

ScenarioConfig scenario_tadaki(std::size_t n, const DriverParams& params, std::uint64_t seed) {
    const auto& ref = sugiyama_lengths();
    const double mean_length = std::accumulate(ref.begin(), ref.end(), 0.0) / static_cast<double>(ref.size());
    ScenarioConfig cfg;
    cfg.name = "tadaki";
    cfg.ring.circumference = 314.0;
    cfg.ring.lengths.assign(n, mean_length);
    cfg.ring.dt = 1.0 / 3.0;
    cfg.agents.assign(n, params);
    cfg.anticipation.dt = cfg.ring.dt;
    cfg.T_steps = 750;
    cfg.seed = seed;
    return cfg;
}

ScenarioConfig scenario_highway(const ScenarioConfig& base) {
    require(!base.highway_scaled, "scenario is already scaled to highway size");
    ScenarioConfig cfg = base;
    cfg.name = base.name + "_highway";
    cfg.highway_scaled = true;
    cfg.ring.circumference *= 3.0;
    for (auto& p : cfg.agents) {
        p.utility.v_star *= 3.0;
        p.utility.kappa_v *= 3.0;
        p.utility.kappa_c *= 5.0;
    }
    return cfg;
}

ScenarioConfig rescale_dt(const ScenarioConfig& cfg, double new_dt) {
    require(new_dt > 0.0, "new dt must be positive");
    const double old_dt = cfg.ring.dt;
    if (new_dt == old_dt) return cfg;
    ScenarioConfig out = cfg;
    out.ring.dt = new_dt;
    out.anticipation.dt = new_dt;
    const double window = cfg.anticipation.h * cfg.anticipation.dt;
    out.anticipation.h = std::max(1, static_cast<int>(std::floor(window / new_dt + 1e-9)));
    const double ratio = new_dt / old_dt;
    for (auto& p : out.agents) p.noise.rho = std::pow(p.noise.rho, ratio);
    out.T_steps = static_cast<long>(std::llround(static_cast<double>(cfg.T_steps) / ratio));
    return out;
}

ScenarioConfig shuffle_order(const ScenarioConfig& cfg, const std::vector<std::size_t>& permutation) {
    const std::size_t n = cfg.ring.size();
    require(permutation.size() == n, "permutation size must equal the vehicle count");
    std::vector<bool> seen(n, false);
    for (std::size_t k : permutation) {
        require(k < n && !seen[k], "not a permutation");
        seen[k] = true;
    }
    ScenarioConfig out = cfg;
    for (std::size_t k = 0; k < n; ++k) {
        out.agents[k] = cfg.agents[permutation[k]];
        out.ring.lengths[k] = cfg.ring.lengths[permutation[k]];
    }
    return out;
}

ScenarioConfig shuffle_order(const ScenarioConfig& cfg, std::uint64_t seed) {
    std::vector<std::size_t> perm(cfg.ring.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 g(split_seed(seed, 0x5EED));
    // Fisher-Yates with an explicit modulus draw; std::shuffle's sequence is library-specific
    for (std::size_t k = perm.size(); k > 1; --k) {
        const std::size_t j = static_cast<std::size_t>(g() % k);
        std::swap(perm[k - 1], perm[j]);
    }
    return shuffle_order(cfg, perm);
}

}  // namespace ringcal
