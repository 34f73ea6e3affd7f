#pragma once

#include "ringcal/utility.hpp"

namespace ringcal {

/// Equally spaced candidate accelerations and the Boltzmann sharpness.
struct ActionGrid {
    double a_min = -6.0;
    double a_max = 4.0;
    int n_points = 41;
    double lambda = 200.0;

    double spacing() const { return (a_max - a_min) / (n_points - 1); }
    double point(int k) const { return a_min + k * spacing(); }
    Vector points() const;
    void validate() const;
};

struct ActionDistribution {
    Vector probabilities;
    double log_partition = 0.0;
};

/// Everything a single decision needs besides the perceived state.
struct DecisionModel {
    UtilityParams utility;
    AnticipationConfig anticipation;
    ActionGrid grid;
};

/// Effective utility at every grid point, in grid order.
Vector utility_profile(const PerceivedState& s, const DecisionModel& model, const VehiclePair& pair);

/// Index of the best grid utility; exact ties go to the smaller |a|, then to braking.
int argmax_index(const Vector& utilities, const ActionGrid& grid);

/// Boltzmann weights exp(lambda * u) / Z, normalised with a max shift.
ActionDistribution boltzmann(const Vector& utilities, double lambda);

double optimal_action(const PerceivedState& s, const DecisionModel& model, const VehiclePair& pair);
ActionDistribution action_distribution(const PerceivedState& s, const DecisionModel& model,
                                       const VehiclePair& pair);
/// Probability-weighted mean of the grid under the Boltzmann distribution.
double mean_action(const PerceivedState& s, const DecisionModel& model, const VehiclePair& pair);

}  // namespace ringcal
