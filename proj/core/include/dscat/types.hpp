#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dscat {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr cplx I{0.0, 1.0};
inline constexpr double PI = 3.141592653589793238462643383279502884;

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input or violated precondition (CLI exit code 2).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Quadrature, extrapolation or iteration failed to reach its target (CLI exit code 3).
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace dscat
