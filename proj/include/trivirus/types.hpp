#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace trivirus {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An operation was called on inputs outside its stated contract.
class PreconditionError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

namespace tol {
// Slack allowed when checking membership of the state domain.
inline constexpr double domain = 1e-12;
// Half-width of the "inconclusive" band around radius 1 and abscissa 0.
inline constexpr double band = 1e-8;
// Real-part threshold below which an eigenvalue counts as stable.
inline constexpr double stable = 1e-8;
// Per-virus positivity threshold separating a live block from a dead one.
inline constexpr double live = 1e-8;
// Infinity-norm residual an equilibrium must attain to be certified.
inline constexpr double equilibriumResidual = 1e-10;
inline constexpr double dedup = 1e-6;
inline constexpr double continuumMidpoint = 1e-9;
// Smallest admissible sigma_min / sigma_max of a Jacobian before it is called degenerate.
inline constexpr double nondegenerate = 1e-9;
}  // namespace tol

inline void requireFinite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw PreconditionError(std::string(what) + ": non-finite entry");
}

}  // namespace trivirus
