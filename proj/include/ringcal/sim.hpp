#pragma once

#include "ringcal/calibrate.hpp"
#include "ringcal/ingest.hpp"
#include "ringcal/params.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ringcal {

/// Vehicle lengths measured for the 22-car ring experiment, in vehicle order.
const std::vector<double>& sugiyama_lengths();

struct RingRoad {
    double circumference = 230.0;
    std::vector<double> lengths;
    double dt = 1.0 / 3.0;

    std::size_t size() const { return lengths.size(); }
    void validate() const;
};

enum class InitialCondition { Equilibrium, FromData, Perturbed };

/// One simulated world. Agents are indexed in ring order: agent i-1 is
/// directly ahead of agent i.
struct ScenarioConfig {
    std::string name = "custom";
    RingRoad ring;
    std::vector<DriverParams> agents;
    AnticipationConfig anticipation;
    ActionGrid grid;
    double noise_deflation = 0.5;    // applied to sigma_a
    bool heterogeneity_on = true;    // false: every agent gets the fleet-average parameters
    bool accel_noise_on = true;
    bool process_noise_on = false;   // sigma_x / sigma_v kinematic noise
    bool use_argmax = false;         // grid argmax instead of the Boltzmann mean action
    InitialCondition initial = InitialCondition::Equilibrium;
    double initial_speed = 6.0;
    std::size_t perturbed_agent = 0;
    double perturbation_dv = 2.0;
    std::vector<AgentState> initial_states;   // FromData: wrapped x, v, a per agent
    long T_steps = 750;
    std::uint64_t seed = 0;
    double burn_in_s = 60.0;
    bool highway_scaled = false;

    void validate() const;
};

/// Time-t snapshot. AgentState::a holds the action realised at t-1.
struct WorldState {
    std::vector<AgentState> agents;
    std::vector<double> prev_mean_action;
    long step = 0;
};

struct CollisionEvent {
    long t = 0;
    std::size_t agent = 0;
    double gap = 0.0;
};

/// Per-agent normal streams split from one master seed.
class SimRng {
public:
    SimRng(std::uint64_t seed, std::size_t agents);
    /// Three standard normals for one agent: (accel, position, velocity).
    std::array<double, 3> draw(std::size_t agent);

private:
    std::vector<std::mt19937_64> streams_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

struct SimOutput {
    Matrix x;   // N x (T+1), wrapped
    Matrix v;
    Matrix a;   // action realised at t; last column repeats the final action
    std::vector<CollisionEvent> collisions;
    ScenarioConfig config;
    std::uint64_t seed = 0;

    long samples() const { return static_cast<long>(x.cols()); }
    std::size_t agents() const { return static_cast<std::size_t>(x.rows()); }
};

/// The parameters each agent actually uses after the heterogeneity switch.
std::vector<DriverParams> effective_agents(const ScenarioConfig& cfg);

/// Bumper-to-bumper gap of agent i to agent i-1.
std::vector<double> bumper_gaps(const std::vector<AgentState>& agents, const RingRoad& ring);

WorldState initial_world(const ScenarioConfig& cfg);

/// Synchronous update of every agent from the time-t snapshot. `order` only
/// changes the iteration order, never the result.
WorldState step(const WorldState& world, const ScenarioConfig& cfg, SimRng& rng,
                std::vector<CollisionEvent>* collisions = nullptr, std::span<const std::size_t> order = {});

SimOutput simulate(const ScenarioConfig& cfg);

/// Noisy wrapped position measurements of a run, as a recording.
RawTrajectorySet observe(const SimOutput& out, const std::vector<double>& sigma_nu, std::uint64_t seed);

/// Calibration inputs whose perceived states are the simulated true states and
/// whose measurements come from `measured`.
std::vector<VehicleData> truth_perceived_data(const SimOutput& out, const RawTrajectorySet& measured);

// Scenario builders.

/// 22 cars on a 230 m ring at dt = 1/3 s with the given (shared) parameters.
ScenarioConfig scenario_sugiyama(const DriverParams& params = DriverParams{}, std::uint64_t seed = 0);
/// Same ring with per-agent parameters scattered around `params`, drawn from `seed`.
ScenarioConfig scenario_sugiyama_heterogeneous(const DriverParams& params, std::uint64_t seed);
ScenarioConfig scenario_low_ideal_speed(const ScenarioConfig& base, double v0_star);
ScenarioConfig scenario_high_risk_premium(const ScenarioConfig& base, double kappa0_v);
/// n identical cars (mean measured length) on a 314 m ring.
ScenarioConfig scenario_tadaki(std::size_t n, const DriverParams& params = DriverParams{}, std::uint64_t seed = 0);
/// Three-fold ring with v_star x3, kappa_v x3 and kappa_c x5.
ScenarioConfig scenario_highway(const ScenarioConfig& base);
/// Change the step length, keeping the anticipation window and the AR(1)
/// persistence per unit time.
ScenarioConfig rescale_dt(const ScenarioConfig& cfg, double new_dt);
ScenarioConfig shuffle_order(const ScenarioConfig& cfg, const std::vector<std::size_t>& permutation);
ScenarioConfig shuffle_order(const ScenarioConfig& cfg, std::uint64_t seed);

}  // namespace ringcal
