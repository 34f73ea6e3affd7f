#include "ringcal/decision.hpp"

#include <cmath>

namespace ringcal {

Vector ActionGrid::points() const {
    Vector p(n_points);
    for (int k = 0; k < n_points; ++k) p[k] = point(k);
    return p;
}

void ActionGrid::validate() const {
    require(n_points >= 2, "action grid needs at least 2 points");
    require(a_max > a_min, "action grid needs a_max > a_min");
    require(lambda > 0.0, "lambda must be positive");
}

Vector utility_profile(const PerceivedState& s, const DecisionModel& model, const VehiclePair& pair) {
    const ActionGrid& grid = model.grid;
    Vector u(grid.n_points);
    for (int k = 0; k < grid.n_points; ++k) {
        u[k] = effective_utility(grid.point(k), s, model.utility, model.anticipation, pair);
    }
    return u;
}

int argmax_index(const Vector& u, const ActionGrid& grid) {
    require(u.size() == grid.n_points, "utility profile does not match the grid");
    int best = 0;
    for (int k = 1; k < grid.n_points; ++k) {
        if (u[k] > u[best]) {
            best = k;
        } else if (u[k] == u[best]) {
            const double ak = grid.point(k);
            const double ab = grid.point(best);
            if (std::abs(ak) < std::abs(ab) || (std::abs(ak) == std::abs(ab) && ak < ab)) best = k;
        }
    }
    return best;
}

ActionDistribution boltzmann(const Vector& u, double lambda) {
    require(lambda > 0.0, "lambda must be positive");
    require(u.size() > 0, "empty utility profile");
    const double shift = lambda * u.maxCoeff();
    if (!std::isfinite(shift)) throw NumericError("nonfinite utility in Boltzmann weights");
    ActionDistribution d;
    d.probabilities.resize(u.size());
    double z = 0.0;
    for (Eigen::Index k = 0; k < u.size(); ++k) {
        d.probabilities[k] = std::exp(lambda * u[k] - shift);
        z += d.probabilities[k];
    }
    d.probabilities /= z;
    d.log_partition = std::log(z) + shift;
    return d;
}

double optimal_action(const PerceivedState& s, const DecisionModel& model, const VehiclePair& pair) {
    return model.grid.point(argmax_index(utility_profile(s, model, pair), model.grid));
}

ActionDistribution action_distribution(const PerceivedState& s, const DecisionModel& model,
                                       const VehiclePair& pair) {
    return boltzmann(utility_profile(s, model, pair), model.grid.lambda);
}

double mean_action(const PerceivedState& s, const DecisionModel& model, const VehiclePair& pair) {
    const ActionGrid& grid = model.grid;
    const Vector u = utility_profile(s, model, pair);
    const double lambda = grid.lambda;
    const double shift = lambda * u.maxCoeff();
    if (!std::isfinite(shift)) throw NumericError("nonfinite utility in mean action");
    double z = 0.0;
    double acc = 0.0;
    for (int k = 0; k < grid.n_points; ++k) {
        const double w = std::exp(lambda * u[k] - shift);
        z += w;
        acc += w * grid.point(k);
    }
    return acc / z;
}

}  // namespace ringcal
