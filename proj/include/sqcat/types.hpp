#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace sqcat {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;
using SparseCMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

/// Angular frequency in rad/s from a frequency in Hz.
constexpr double two_pi_hz(double hz) { return 2.0 * kPi * hz; }

/// Thrown when a truncated Fock basis cannot hold a state to the required accuracy.
class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, double leakage, int dim)
      : std::runtime_error(what + " (leakage " + std::to_string(leakage) +
                           ", dim " + std::to_string(dim) + ")"),
        leakage_(leakage),
        dim_(dim) {}

  double leakage() const noexcept { return leakage_; }
  int dim() const noexcept { return dim_; }

 private:
  double leakage_;
  int dim_;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solver ran out of iterations.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, int iterations)
      : std::runtime_error(what), iterations_(iterations) {}
  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

}  // namespace sqcat
