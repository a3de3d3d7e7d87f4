#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sparse_koopman {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

// Malformed or out-of-contract arguments.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure that could not produce a result (divergence,
// non-convergence of an inner solve, eigensolver failure).
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration documents, unknown keys, unreadable model files.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw InvalidInput(message);
}

template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m)
{
    return m.allFinite();
}

} // namespace detail
} // namespace sparse_koopman
