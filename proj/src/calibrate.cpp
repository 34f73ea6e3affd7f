#include "ringcal/calibrate.hpp"

#include "ringcal/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>

namespace ringcal {

void ParamBounds::validate() const {
    require((lower.array() < upper.array()).all(), "parameter bounds must satisfy lower < upper");
    require(lower[0] > 0.0 && lower[1] > 0.0, "sigma bounds must be positive");
    require(lower[2] > 0.0, "v_star bounds must be positive");
    require(lower[3] >= 0.0, "kappa_v bounds must be non-negative");
}

void RegularizationConfig::validate() const {
    require(gamma_v >= 0.0 && gamma_kappa >= 0.0, "regularisation weights must be non-negative");
}

double regularization_penalty(double v_star, double kappa_v, const RegularizationConfig& reg) {
    const double dv = v_star - reg.v_bar;
    const double dk = kappa_v - reg.kappa_bar;
    return reg.gamma_v * dv * dv + reg.gamma_kappa * dk * dk;
}

double regularized_objective(const Eigen::Vector4d& free_params, const VehicleData& data,
                             const CalibrationConfig& cfg) {
    DriverParams theta = cfg.base;
    theta.set_free_vector(free_params);
    const double ll = log_likelihood(theta, data, cfg.settings);
    return ll - regularization_penalty(theta.utility.v_star, theta.utility.kappa_v, cfg.reg);
}

namespace {

constexpr bool kLogScale[4] = {true, true, false, false};

// Maps between the masked search vector and natural-unit free parameters.
struct SearchSpace {
    std::vector<int> coords;   // free-parameter index for each search coordinate
    Eigen::Vector4d fixed;

    Eigen::Vector4d natural(const Vector& y) const {
        Eigen::Vector4d x = fixed;
        for (std::size_t k = 0; k < coords.size(); ++k) {
            const int i = coords[k];
            x[i] = kLogScale[i] ? std::exp(y[static_cast<Eigen::Index>(k)]) : y[static_cast<Eigen::Index>(k)];
        }
        return x;
    }
    double to_search(int i, double v) const { return kLogScale[i] ? std::log(v) : v; }
};

}  // namespace

CalibrationResult calibrate_vehicle(const VehicleData& data, const CalibrationConfig& cfg, std::uint64_t seed) {
    data.validate();
    cfg.bounds.validate();
    cfg.reg.validate();

    SearchSpace space;
    space.fixed = cfg.base.free_vector();
    for (int i = 0; i < 4; ++i)
        if (cfg.base.free_mask[static_cast<std::size_t>(i)]) space.coords.push_back(i);
    const auto dim = static_cast<Eigen::Index>(space.coords.size());

    CalibrationResult result;
    result.vehicle_id = data.vehicle_id;

    Box box{Vector(dim), Vector(dim)};
    Vector start(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        const int i = space.coords[static_cast<std::size_t>(k)];
        box.lower[k] = space.to_search(i, cfg.bounds.lower[i]);
        box.upper[k] = space.to_search(i, cfg.bounds.upper[i]);
        start[k] = 0.5 * (box.lower[k] + box.upper[k]);
        if (i == 2) start[k] = std::clamp(cfg.reg.v_bar, cfg.bounds.lower[2], cfg.bounds.upper[2]);
        if (i == 3) start[k] = std::clamp(cfg.reg.kappa_bar, cfg.bounds.lower[3], cfg.bounds.upper[3]);
    }

    const Objective objective = [&](const Vector& y) {
        return regularized_objective(space.natural(y), data, cfg);
    };

    Eigen::Vector4d best = space.fixed;
    if (dim > 0) {
        const BasinHopResult hop = basin_hopping(objective, start, box, cfg.search, seed);
        best = space.natural(hop.best_x);
        result.n_hops = hop.hops;
        result.n_evals = hop.evals;
        result.converged = hop.improved && std::isfinite(hop.best_value);
        result.best_history = hop.best_history;
    }

    result.theta_hat = cfg.base;
    result.theta_hat.set_free_vector(best);
    result.penalty = regularization_penalty(result.theta_hat.utility.v_star, result.theta_hat.utility.kappa_v, cfg.reg);
    try {
        const FilterTrace<Real> trace = filtered_states(result.theta_hat, data, cfg.settings);
        result.log_likelihood = trace.log_likelihood;
        result.filtered = trace.posteriors;
    } catch (const NumericError&) {
        result.log_likelihood = -std::numeric_limits<double>::infinity();
        result.converged = false;
    }
    result.objective = result.log_likelihood - result.penalty;
    result.penalty_ratio = result.log_likelihood != 0.0 ? result.penalty / std::abs(result.log_likelihood) : 0.0;
    return result;
}

ParameterSummary summarize(const std::vector<CalibrationResult>& results) {
    ParameterSummary s;
    if (results.empty()) return s;
    const double n = static_cast<double>(results.size());
    for (const auto& r : results) s.mean += r.theta_hat.free_vector();
    s.mean /= n;
    if (results.size() > 1) {
        for (const auto& r : results) s.sd += (r.theta_hat.free_vector() - s.mean).cwiseAbs2();
        s.sd = (s.sd / (n - 1.0)).cwiseSqrt();
    }
    return s;
}

CalibrationBatch calibrate_all(const std::vector<VehicleData>& dataset, const CalibrationConfig& cfg,
                               std::uint64_t seed, int jobs) {
    const std::size_t n = dataset.size();
    std::vector<std::optional<CalibrationResult>> slots(n);
    std::vector<std::string> errors(n);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                slots[k] = calibrate_vehicle(dataset[k], cfg, split_seed(seed, dataset[k].vehicle_id));
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    CalibrationBatch batch;
    for (std::size_t k = 0; k < n; ++k) {
        if (slots[k]) {
            batch.results.push_back(std::move(*slots[k]));
        } else {
            batch.failures.emplace_back(dataset[k].vehicle_id, errors[k]);
        }
    }
    batch.summary = summarize(batch.results);
    return batch;
}

std::vector<VehicleData> vehicle_data(const PerceivedDataset& ds) {
    std::vector<VehicleData> out;
    out.reserve(ds.vehicle_count());
    for (std::size_t i = 0; i < ds.vehicle_count(); ++i) {
        VehicleData d;
        d.vehicle_id = i;
        d.dt = ds.dt;
        d.first_t = ds.first;
        d.perceived = ds.states[i];
        d.z.reserve(static_cast<std::size_t>(ds.window_size()));
        for (long t = ds.first; t <= ds.last; ++t) d.z.push_back(ds.series[i].z.at(t));
        d.pair.length_self = ds.lengths[i];
        d.pair.length_pred = ds.lengths[ds.predecessor[i]];
        d.pair.circumference = ds.circumference;
        out.push_back(std::move(d));
    }
    return out;
}

HessianReport hessian_spectrum(const DriverParams& theta, const VehicleData& data, const ModelSettings& settings,
                               double rel_step) {
    const Vector x0 = theta.full_vector();
    Vector steps(x0.size());
    for (Eigen::Index i = 0; i < x0.size(); ++i) steps[i] = rel_step * std::max(std::abs(x0[i]), 1e-2);
    const Objective f = [&](const Vector& x) {
        DriverParams p = theta;
        p.set_full_vector(x);
        return log_likelihood(p, data, settings);
    };
    HessianReport report;
    report.hessian = finite_difference_hessian(f, x0, steps);
    report.eigenvalues = sorted_eigenvalues(report.hessian);
    return report;
}

}  // namespace ringcal
