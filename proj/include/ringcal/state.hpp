#pragma once

#include <optional>

namespace ringcal {

/// Latent kinematic state of one vehicle: unwrapped position (m), speed (m/s),
/// acceleration (m/s^2).
struct AgentState {
    double x = 0.0;
    double v = 0.0;
    double a = 0.0;
};

struct NeighborState {
    double pos = 0.0;
    double vel = 0.0;
};

/// What driver i conditions on at time t: the vehicle immediately ahead,
/// itself, and the vehicle immediately behind. An empty predecessor means an
/// open road ahead.
struct PerceivedState {
    std::optional<NeighborState> pred;
    double self_pos = 0.0;
    double self_vel = 0.0;
    std::optional<NeighborState> foll;
    long t = 0;
};

}  // namespace ringcal
