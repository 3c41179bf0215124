#pragma once

#include <cmath>

namespace sqcat {

/// |<n+1| e^{i eta (a + a^dag)} |n>| = e^{-eta^2/2} eta L^1_n(eta^2) / sqrt(n+1).
inline double sideband_coupling(int n, double eta) {
  return std::exp(-eta * eta / 2.0) * eta *
         std::assoc_laguerre(static_cast<unsigned>(n), 1u, eta * eta) /
         std::sqrt(static_cast<double>(n + 1));
}

}  // namespace sqcat
