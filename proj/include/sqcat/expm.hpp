#pragma once

// Matrix exponentials: dense Pade scaling-and-squaring, and the action of
// exp(t*A) on a vector for sparse generators.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "sqcat/types.hpp"

namespace sqcat {

namespace detail {

inline double norm1(const CMatrix& a) {
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

// Pade coefficients b_0..b_m of the diagonal (m,m) approximant.
inline constexpr std::array<double, 4> kPade3{120.0, 60.0, 12.0, 1.0};
inline constexpr std::array<double, 6> kPade5{30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
inline constexpr std::array<double, 8> kPade7{17297280.0, 8648640.0, 1995840.0, 277200.0,
                                              25200.0,    1512.0,    56.0,      1.0};
inline constexpr std::array<double, 10> kPade9{17643225600.0, 8821612800.0, 2075673600.0,
                                               302702400.0,   30270240.0,   2162160.0,
                                               110880.0,      3960.0,       90.0,
                                               1.0};
inline constexpr std::array<double, 14> kPade13{
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

// Backward-error bounds for each order in double precision.
inline constexpr double kTheta3 = 1.495585217958292e-2;
inline constexpr double kTheta5 = 2.539398330063230e-1;
inline constexpr double kTheta7 = 9.504178996162932e-1;
inline constexpr double kTheta9 = 2.097847961257068e+0;
inline constexpr double kTheta13 = 5.371920351148152e+0;

template <std::size_t N>
CMatrix pade_low_order(const CMatrix& a, const std::array<double, N>& b) {
  const auto n = a.rows();
  const CMatrix id = CMatrix::Identity(n, n);
  const CMatrix a2 = a * a;
  CMatrix power = id;
  CMatrix u_sum = b[1] * id;
  CMatrix v = b[0] * id;
  for (std::size_t k = 2; k + 1 < N; k += 2) {
    power = power * a2;
    v += b[k] * power;
    u_sum += b[k + 1] * power;
  }
  const CMatrix u = a * u_sum;
  return (v - u).partialPivLu().solve(v + u);
}

inline CMatrix pade13(const CMatrix& a) {
  const auto& b = kPade13;
  const auto n = a.rows();
  const CMatrix id = CMatrix::Identity(n, n);
  const CMatrix a2 = a * a;
  const CMatrix a4 = a2 * a2;
  const CMatrix a6 = a4 * a2;
  CMatrix inner = b[13] * a6 + b[11] * a4 + b[9] * a2;
  const CMatrix u =
      a * (a6 * inner + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  inner = b[12] * a6 + b[10] * a4 + b[8] * a2;
  const CMatrix v = a6 * inner + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

/** \brief Dense matrix exponential by scaling and squaring.
 *
 *  Chooses the Pade order from the 1-norm of \p a and scales by 2^-s so the
 *  scaled norm lies below the order's backward-error bound, then squares s
 *  times.
 */
inline CMatrix expm(const CMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("expm: matrix must be square");
  if (a.rows() == 0) return a;
  const double norm = detail::norm1(a);
  if (norm <= detail::kTheta3) return detail::pade_low_order(a, detail::kPade3);
  if (norm <= detail::kTheta5) return detail::pade_low_order(a, detail::kPade5);
  if (norm <= detail::kTheta7) return detail::pade_low_order(a, detail::kPade7);
  if (norm <= detail::kTheta9) return detail::pade_low_order(a, detail::kPade9);

  int squarings = 0;
  if (norm > detail::kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / detail::kTheta13)));
  }
  CMatrix result = detail::pade13(a * std::ldexp(1.0, -squarings));
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

/** \brief Action of exp(t*generator) on \p v without forming the exponential.
 *
 *  Splits t into substeps with ||t*generator||_1 / steps <= 1 and sums the
 *  Taylor series on each until the next term is below machine precision
 *  relative to the partial sum.
 */
inline CVector expm_action(const SparseCMatrix& generator, double t, CVector v) {
  if (generator.rows() != generator.cols() || generator.cols() != v.size()) {
    throw DimensionError("expm_action: dimension mismatch");
  }
  if (t == 0.0 || generator.nonZeros() == 0) return v;

  // ||A||_1 is the max column sum; rows are stored contiguously here, so
  // accumulate per column.
  RVector col_sums = RVector::Zero(generator.cols());
  for (int row = 0; row < generator.outerSize(); ++row) {
    for (SparseCMatrix::InnerIterator it(generator, row); it; ++it) {
      col_sums[it.col()] += std::abs(it.value());
    }
  }
  const double norm = std::abs(t) * col_sums.maxCoeff();
  const int steps = std::max(1, static_cast<int>(std::ceil(norm)));
  const double h = t / steps;
  constexpr double kTol = std::numeric_limits<double>::epsilon();
  constexpr int kMaxTerms = 60;

  CVector term(v.size());
  for (int step = 0; step < steps; ++step) {
    term = v;
    for (int k = 1; k <= kMaxTerms; ++k) {
      term = (h / k) * (generator * term);
      v += term;
      if (term.lpNorm<Eigen::Infinity>() <= kTol * v.lpNorm<Eigen::Infinity>()) break;
    }
  }
  return v;
}

}  // namespace sqcat
