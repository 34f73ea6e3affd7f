#include "ringcal/ssm.hpp"

namespace ringcal {

void NoiseParams::validate() const {
    require(sigma_x >= 0.0 && sigma_v >= 0.0 && sigma_a >= 0.0 && sigma_nu >= 0.0, "noise sigmas must be >= 0");
    require(rho >= 0.0 && rho < 1.0, "rho must lie in [0, 1)");
}

Eigen::Vector4d DriverParams::free_vector() const {
    return {noise.sigma_nu, noise.sigma_a, utility.v_star, utility.kappa_v};
}

void DriverParams::set_free_vector(const Eigen::Vector4d& x) {
    noise.sigma_nu = x[0];
    noise.sigma_a = x[1];
    utility.v_star = x[2];
    utility.kappa_v = x[3];
}

Vector DriverParams::full_vector() const {
    Vector x(11);
    x << noise.sigma_nu, noise.sigma_a, utility.v_star, utility.kappa_v, noise.sigma_x, noise.sigma_v, noise.rho,
        utility.kappa1, utility.kappa_c, utility.kappa_d, utility.omega2;
    return x;
}

void DriverParams::set_full_vector(const Vector& x) {
    require(x.size() == 11, "full parameter vector has 11 entries");
    noise.sigma_nu = x[0];
    noise.sigma_a = x[1];
    utility.v_star = x[2];
    utility.kappa_v = x[3];
    noise.sigma_x = x[4];
    noise.sigma_v = x[5];
    noise.rho = x[6];
    utility.kappa1 = x[7];
    utility.kappa_c = x[8];
    utility.kappa_d = x[9];
    utility.omega2 = x[10];
}

void DriverParams::validate() const {
    utility.validate();
    noise.validate();
}

SystemMatrices system_matrices(double dt, const NoiseParams& noise) {
    return SystemMatrices::make(dt, noise.rho, noise.sigma_x, noise.sigma_v, noise.sigma_a);
}

void VehicleData::validate() const {
    require(dt > 0.0, "dt must be positive");
    require(z.size() == perceived.size(), "measurements and perceived states are not aligned");
    require(z.size() >= 3, "need at least 3 aligned samples");
}

FilterState initial_filter_state(const VehicleData& data, double sigma_nu) {
    FilterState init;
    init.mean << data.z[0], (data.z[1] - data.z[0]) / data.dt, 0.0;
    const double sv = 2.0 * sigma_nu / data.dt;
    init.cov.diagonal() << sigma_nu * sigma_nu, sv * sv, 1.0;
    return init;
}

std::vector<double> mean_actions(const DriverParams& theta, const VehicleData& data, const ModelSettings& settings) {
    const DecisionModel model{theta.utility, settings.anticipation, settings.grid};
    std::vector<double> out(data.perceived.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = mean_action(data.perceived[k], model, data.pair);
        if (!std::isfinite(out[k])) throw NumericError("nonfinite mean action", data.first_t + static_cast<long>(k));
    }
    return out;
}

namespace {

FilterTrace<Real> run_vehicle(const DriverParams& theta, const VehicleData& data, const ModelSettings& settings,
                              bool keep_states) {
    data.validate();
    require(theta.noise.sigma_nu > 0.0, "sigma_nu must be positive for the likelihood");
    const std::vector<double> abar = mean_actions(theta, data, settings);
    const SystemMatrices mats = system_matrices(data.dt, theta.noise);
    const std::size_t n = data.z.size() - 1;

    std::vector<Vec3> controls(n);
    for (std::size_t k = 0; k < n; ++k) controls[k] = control_input(abar[k + 1], abar[k], theta.noise.rho);

    const FilterState init = initial_filter_state(data, theta.noise.sigma_nu);
    try {
        FilterTrace<Real> trace = run_filter<Real>(init, std::span<const double>(data.z).subspan(1), controls, mats,
                                                   theta.noise.sigma_nu, 1, keep_states);
        if (!std::isfinite(trace.log_likelihood)) throw NumericError("nonfinite log-likelihood", data.first_t);
        if (keep_states) {
            trace.posteriors.insert(trace.posteriors.begin(), init);
            trace.innovations.insert(trace.innovations.begin(), Innovation{0.0, 0.0});
        }
        return trace;
    } catch (const NumericError& e) {
        // re-anchor the step index on the recording's time axis
        if (e.index() >= 0) throw NumericError(e.what(), data.first_t + 1 + e.index());
        throw;
    }
}

}  // namespace

double log_likelihood(const DriverParams& theta, const VehicleData& data, const ModelSettings& settings) {
    return run_vehicle(theta, data, settings, false).log_likelihood;
}

FilterTrace<Real> filtered_states(const DriverParams& theta, const VehicleData& data, const ModelSettings& settings) {
    return run_vehicle(theta, data, settings, true);
}

}  // namespace ringcal
