#pragma once

#include "ringcal/decision.hpp"
#include "ringcal/params.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace ringcal {

/// Kalman mean (x, v, a) and covariance for one vehicle at one step.
template <typename Scalar>
struct FilterStateT {
    Vector3<Scalar> mean = Vector3<Scalar>::Zero();
    Matrix3<Scalar> cov = Matrix3<Scalar>::Zero();
};
using FilterState = FilterStateT<Real>;

/// One-dimensional innovation and its variance.
template <typename Scalar>
struct InnovationT {
    Scalar epsilon = Scalar(0);
    Scalar variance = Scalar(0);
};
using Innovation = InnovationT<Real>;

/// Transition, observation, control selector and process covariance of the
/// kinematic particle model with AR(1) acceleration.
template <typename Scalar>
struct SystemMatricesT {
    Matrix3<Scalar> Phi;
    RowVector3<Scalar> A;
    Matrix3<Scalar> Upsilon;
    Matrix3<Scalar> Omega_mu;

    static SystemMatricesT make(Scalar dt, Scalar rho, Scalar sigma_x, Scalar sigma_v, Scalar sigma_a) {
        SystemMatricesT m;
        m.Phi << Scalar(1), dt, Scalar(0),
                 Scalar(0), Scalar(1), dt,
                 Scalar(0), Scalar(0), rho;
        m.A << Scalar(1), Scalar(0), Scalar(0);
        m.Upsilon.setZero();
        m.Upsilon(2, 2) = Scalar(1);
        m.Omega_mu.setZero();
        m.Omega_mu.diagonal() << sigma_x * sigma_x, sigma_v * sigma_v, sigma_a * sigma_a;
        return m;
    }
};
using SystemMatrices = SystemMatricesT<Real>;

SystemMatrices system_matrices(double dt, const NoiseParams& noise);

/// (0, 0, a*_t - rho a*_{t-1})
template <typename Scalar>
Vector3<Scalar> control_input(Scalar a_star, Scalar a_star_prev, Scalar rho) {
    return Vector3<Scalar>(Scalar(0), Scalar(0), a_star - rho * a_star_prev);
}

/// True when every principal minor of the symmetric part is >= -tol and the
/// matrix is symmetric within tol.
template <typename Scalar>
bool is_psd(const Matrix3<Scalar>& P, Scalar tol = Scalar(1e-10)) {
    using std::abs;
    if (!P.allFinite()) return false;
    const Scalar scale = std::max(Scalar(1), P.cwiseAbs().maxCoeff());
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
    for (int i = 0; i < 3; ++i)
        if (P(i, i) < -tol * scale) return false;
    const Scalar s2 = scale * scale;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (P(i, i) * P(j, j) - P(i, j) * P(j, i) < -tol * s2) return false;
    return P.determinant() >= -tol * s2 * scale;
}

/// Predict with Phi and the control input, then update with a scalar position
/// measurement. The covariance update uses the Joseph form.
template <typename Scalar>
std::pair<FilterStateT<Scalar>, InnovationT<Scalar>> kalman_step(const FilterStateT<Scalar>& prior, Scalar z,
                                                                  const Vector3<Scalar>& c,
                                                                  const SystemMatricesT<Scalar>& mats,
                                                                  Scalar sigma_nu) {
    if (!is_psd<Scalar>(prior.cov)) throw ValidationError("prior covariance is not positive semidefinite");

    const Vector3<Scalar> mean_pred = mats.Phi * prior.mean + mats.Upsilon * c;
    const Matrix3<Scalar> cov_pred = mats.Phi * prior.cov * mats.Phi.transpose() + mats.Omega_mu;

    InnovationT<Scalar> innov;
    innov.epsilon = z - mats.A.dot(mean_pred);
    innov.variance = (mats.A * cov_pred * mats.A.transpose())(0, 0) + sigma_nu * sigma_nu;
    if (!(innov.variance > Scalar(0))) throw NumericError("innovation variance is not positive");

    const Vector3<Scalar> gain = cov_pred * mats.A.transpose() / innov.variance;
    const Matrix3<Scalar> I_KA = Matrix3<Scalar>::Identity() - gain * mats.A;

    FilterStateT<Scalar> post;
    post.mean = mean_pred + gain * innov.epsilon;
    post.cov = I_KA * cov_pred * I_KA.transpose() + (sigma_nu * sigma_nu) * gain * gain.transpose();
    post.cov = (Scalar(0.5) * (post.cov + post.cov.transpose())).eval();
    return {post, innov};
}

/// Output of a filter pass.
template <typename Scalar>
struct FilterTrace {
    Scalar log_likelihood = Scalar(0);
    std::vector<FilterStateT<Scalar>> posteriors;   // one per measurement
    std::vector<InnovationT<Scalar>> innovations;
};

/// Run the filter from `initial` (the posterior before measurement 0) over
/// measurements z[k] with control inputs controls[k]. The Gaussian
/// log-likelihood, including the -ln(2 pi)/2 constant per term, sums the
/// innovations with index >= skip.
template <typename Scalar>
FilterTrace<Scalar> run_filter(const FilterStateT<Scalar>& initial, std::span<const Scalar> z,
                               std::span<const Vector3<Scalar>> controls, const SystemMatricesT<Scalar>& mats,
                               Scalar sigma_nu, std::size_t skip = 0, bool keep_states = true) {
    require(z.size() == controls.size(), "measurement and control sequences differ in length");
    using std::log;
    const Scalar half_log_2pi = Scalar(0.5) * log(Scalar(2) * std::numbers::pi_v<Scalar>);
    FilterTrace<Scalar> trace;
    if (keep_states) {
        trace.posteriors.reserve(z.size());
        trace.innovations.reserve(z.size());
    }
    FilterStateT<Scalar> state = initial;
    for (std::size_t k = 0; k < z.size(); ++k) {
        auto [post, innov] = kalman_step<Scalar>(state, z[k], controls[k], mats, sigma_nu);
        if (!std::isfinite(static_cast<double>(innov.epsilon)) || !post.mean.allFinite()) {
            throw NumericError("nonfinite filter state", static_cast<long>(k));
        }
        if (k >= skip) {
            trace.log_likelihood -=
                half_log_2pi + Scalar(0.5) * log(innov.variance) +
                Scalar(0.5) * innov.epsilon * innov.epsilon / innov.variance;
        }
        state = post;
        if (keep_states) {
            trace.posteriors.push_back(post);
            trace.innovations.push_back(innov);
        }
    }
    return trace;
}

/// One vehicle's calibration data: raw unwrapped measurements and the
/// perceived states on the same time window.
struct VehicleData {
    std::size_t vehicle_id = 0;
    double dt = 1.0 / 3.0;
    std::vector<double> z;
    std::vector<PerceivedState> perceived;
    VehiclePair pair;
    long first_t = 0;

    void validate() const;
};

/// Fixed model settings shared by all likelihood evaluations.
struct ModelSettings {
    AnticipationConfig anticipation;
    ActionGrid grid;
};

/// Filter initialisation from the first two measurements: position from
/// z0, speed from the first difference, acceleration diffuse.
FilterState initial_filter_state(const VehicleData& data, double sigma_nu);

/// Boltzmann mean actions for every perceived state under theta's utility.
std::vector<double> mean_actions(const DriverParams& theta, const VehicleData& data, const ModelSettings& settings);

/// Innovation log-likelihood of one vehicle's measurements with the decision
/// model entering as control input. The first innovation is excluded.
double log_likelihood(const DriverParams& theta, const VehicleData& data, const ModelSettings& settings);

/// Same pass, returning the per-step posterior states (first entry is the
/// initial state at data.first_t).
FilterTrace<Real> filtered_states(const DriverParams& theta, const VehicleData& data, const ModelSettings& settings);

}  // namespace ringcal
