#pragma once

#include "ringcal/ingest.hpp"
#include "ringcal/optimize.hpp"
#include "ringcal/ssm.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ringcal {

/// Natural-unit bounds on (sigma_nu, sigma_a, v_star, kappa_v).
struct ParamBounds {
    Eigen::Vector4d lower{0.02, 0.02, 6.0, 0.02};
    Eigen::Vector4d upper{1.0, 2.0, 15.0, 2.0};

    bool contains(const Eigen::Vector4d& x) const {
        return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
    }
    void validate() const;
};

/// Quadratic pulls of v_star and kappa_v towards common anchors.
struct RegularizationConfig {
    double gamma_v = 50.0;
    double gamma_kappa = 500.0;
    double v_bar = 11.0;
    double kappa_bar = 0.5;

    void validate() const;
};

struct CalibrationConfig {
    ModelSettings settings;
    DriverParams base;   // supplies the fixed parameters and the free mask
    ParamBounds bounds;
    RegularizationConfig reg;
    BasinHopConfig search;
};

struct CalibrationResult {
    std::size_t vehicle_id = 0;
    DriverParams theta_hat;
    double objective = 0.0;        // regularised log-likelihood at the optimum
    double log_likelihood = 0.0;   // unregularised part
    double penalty = 0.0;          // subtracted regularisation
    double penalty_ratio = 0.0;    // penalty / |log_likelihood|
    int n_hops = 0;
    int n_evals = 0;
    bool converged = false;
    std::vector<double> best_history;
    std::vector<FilterState> filtered;
};

/// gamma_v (v* - v_bar)^2 + gamma_kappa (kappa_v - kappa_bar)^2
double regularization_penalty(double v_star, double kappa_v, const RegularizationConfig& reg);

/// log_likelihood(theta) minus the regularisation penalty, with theta's free
/// entries replaced by `free_params` (natural units).
double regularized_objective(const Eigen::Vector4d& free_params, const VehicleData& data,
                             const CalibrationConfig& cfg);

/// Per-vehicle maximum likelihood by basin hopping. Sigmas are searched in
/// log space, v_star and kappa_v in natural units; the search starts from
/// the box centre with v_star and kappa_v at the regularisation anchors.
CalibrationResult calibrate_vehicle(const VehicleData& data, const CalibrationConfig& cfg, std::uint64_t seed);

struct ParameterSummary {
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    Eigen::Vector4d sd = Eigen::Vector4d::Zero();
};

struct CalibrationBatch {
    std::vector<CalibrationResult> results;
    std::vector<std::pair<std::size_t, std::string>> failures;
    ParameterSummary summary;
};

/// Calibrate every vehicle independently. Per-vehicle seeds are split from
/// `seed` by vehicle id, so results do not depend on `jobs`.
CalibrationBatch calibrate_all(const std::vector<VehicleData>& dataset, const CalibrationConfig& cfg,
                               std::uint64_t seed, int jobs = 1);

ParameterSummary summarize(const std::vector<CalibrationResult>& results);

/// Cut a perceived dataset into per-vehicle calibration inputs.
std::vector<VehicleData> vehicle_data(const PerceivedDataset& ds);

struct HessianReport {
    Matrix hessian;
    Vector eigenvalues;   // descending
};

/// Central-difference Hessian of the unregularised log-likelihood over all 11
/// DriverParams scalars, with steps of rel_step times each parameter's scale.
HessianReport hessian_spectrum(const DriverParams& theta, const VehicleData& data, const ModelSettings& settings,
                               double rel_step = 1e-3);

}  // namespace ringcal
