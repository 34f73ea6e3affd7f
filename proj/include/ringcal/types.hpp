#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ringcal {

using Real = double;

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using RowVector3 = Eigen::Matrix<Scalar, 1, 3>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3 = Vector3<Real>;
using Mat3 = Matrix3<Real>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Input that violates a documented precondition (bad file, bad parameter, bad shape).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced a nonfinite or otherwise unusable intermediate.
/// `index` carries the offending time step when one is known, or -1.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what, long index = -1)
        : std::runtime_error(what), index_(index) {}
    long index() const noexcept { return index_; }

private:
    long index_;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ValidationError(message);
}

}  // namespace ringcal
