#pragma once

#include "ringcal/utility.hpp"

#include <array>
#include <string_view>

namespace ringcal {

/// Process and measurement noise of the state-space model. The acceleration
/// noise follows an AR(1) with persistence rho.
struct NoiseParams {
    double sigma_x = 0.05;    // m
    double sigma_v = 0.1;     // m/s
    double sigma_a = 0.273;   // m/s^2
    double sigma_nu = 0.263;  // m, measurement
    double rho = 0.7;

    void validate() const;
};

/// The four parameters estimated per vehicle, in this order everywhere.
enum class FreeParam { SigmaNu = 0, SigmaA = 1, VStar = 2, KappaV = 3 };
inline constexpr std::array<std::string_view, 4> kFreeParamNames = {"sigma_nu", "sigma_a", "v_star", "kappa_v"};

/// Every scalar of DriverParams that can be perturbed, used for the Hessian
/// diagnostics over the full parameter space.
enum class FullParam {
    SigmaNu, SigmaA, VStar, KappaV, SigmaX, SigmaV, Rho, Kappa1, KappaC, KappaD, Omega2
};
inline constexpr std::array<std::string_view, 11> kFullParamNames = {
    "sigma_nu", "sigma_a", "v_star", "kappa_v", "sigma_x", "sigma_v",
    "rho", "kappa1", "kappa_c", "kappa_d", "omega2"};

struct DriverParams {
    UtilityParams utility;
    NoiseParams noise;
    std::array<bool, 4> free_mask = {true, true, true, true};

    /// (sigma_nu, sigma_a, v_star, kappa_v)
    Eigen::Vector4d free_vector() const;
    void set_free_vector(const Eigen::Vector4d& x);

    Vector full_vector() const;
    void set_full_vector(const Vector& x);

    void validate() const;
};

}  // namespace ringcal
