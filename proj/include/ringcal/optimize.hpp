#pragma once

#include "ringcal/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace ringcal {

/// Objective to MAXIMISE. Implementations may throw NumericError; the
/// optimisers treat such points as -infinity.
using Objective = std::function<double(const Vector&)>;

struct Box {
    Vector lower;
    Vector upper;

    Vector clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
    Vector center() const { return 0.5 * (lower + upper); }
    Vector range() const { return upper - lower; }
    bool contains(const Vector& x) const {
        return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
    }
    void validate(Eigen::Index dim) const;
};

struct SimplexConfig {
    double rel_tol = 1e-6;
    int max_evals = 400;
    double initial_step = 0.05;   // fraction of the box range
};

struct LocalResult {
    Vector x;
    double value = 0.0;
    int evals = 0;
    bool tolerance_reached = false;
};

/// Nelder-Mead maximisation with every trial point projected into `box`.
LocalResult nelder_mead(const Objective& f, const Vector& start, const Box& box, const SimplexConfig& cfg);

struct BasinHopConfig {
    int hops = 20;
    double step_fraction = 0.15;   // perturbation half-width, fraction of the box range
    double temperature = 1.0;      // Metropolis temperature in objective units
    SimplexConfig local;
};

struct BasinHopResult {
    Vector best_x;
    double best_value = 0.0;
    int hops = 0;
    int evals = 0;
    bool improved = false;              // some local search beat its starting point
    std::vector<double> best_history;   // best-ever value after the initial search and each hop
};

/// Basin hopping: local search, then repeated bounded uniform perturbation,
/// local search, and Metropolis acceptance. Deterministic for a given seed.
BasinHopResult basin_hopping(const Objective& f, const Vector& start, const Box& box, const BasinHopConfig& cfg,
                             std::uint64_t seed);

/// Central-difference Hessian of f at x with per-coordinate steps, symmetrised.
/// Throws NumericError naming the entry when a difference is nonfinite.
Matrix finite_difference_hessian(const Objective& f, const Vector& x, const Vector& steps);

/// Eigenvalues of a symmetric matrix, largest first.
Vector sorted_eigenvalues(const Matrix& symmetric);

}  // namespace ringcal
