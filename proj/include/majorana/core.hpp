#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace majorana {

using cplx = std::complex<double>;
using MatrixC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;
using MatrixR = Eigen::MatrixXd;
using VectorR = Eigen::VectorXd;

inline constexpr double pi = 3.14159265358979323846;

// Input that violates a documented precondition.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An algorithm could not deliver its postcondition (nonconvergence, breakdown).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Internal consistency violated; indicates a bug or a pathological input.
class LogicError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace majorana
