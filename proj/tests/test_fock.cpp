#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sqcat/fock.hpp"

namespace {

using namespace sqcat;
using namespace sqcat::fock;

// p(2m) = (2m)! / (2^m m!)^2 * tanh^{2m} r / cosh r, in log form.
double squeezed_vacuum_oracle(int n, double r) {
  if (n % 2 == 1) return 0.0;
  const int m = n / 2;
  if (r == 0.0) return n == 0 ? 1.0 : 0.0;
  const double log_p = std::lgamma(2.0 * m + 1) - 2.0 * (m * std::log(2.0) + std::lgamma(m + 1.0)) +
                       2.0 * m * std::log(std::tanh(r)) - std::log(std::cosh(r));
  return std::exp(log_p);
}

Complex coherent_oracle(int n, Complex alpha) {
  // e^{-|a|^2/2} a^n / sqrt(n!)
  if (alpha == Complex{0.0, 0.0}) return n == 0 ? 1.0 : 0.0;
  const double log_mag = -0.5 * std::norm(alpha) + n * std::log(std::abs(alpha)) - 0.5 * std::lgamma(n + 1.0);
  return std::polar(std::exp(log_mag), n * std::arg(alpha));
}

TEST(NumberState, BasisVectors) {
  const auto s0 = number_state(0, 4);
  const auto s2 = number_state(2, 4);
  EXPECT_EQ(s0[0], Complex(1.0));
  for (int n = 1; n < 4; ++n) EXPECT_EQ(s0[n], Complex(0.0));
  EXPECT_EQ(s2[2], Complex(1.0));
  EXPECT_EQ(s2[0], Complex(0.0));
  EXPECT_THROW(number_state(5, 4), std::domain_error);
  EXPECT_THROW(number_state(-1, 4), std::domain_error);
}

TEST(SqueezeParam, DecibelConversion) {
  EXPECT_NEAR(SqueezeParam(1.08, 0.0).reduction_db(), 9.3808, 1e-4);
  EXPECT_NEAR(SqueezeParam::from_db(9.3808).r, 1.08, 1e-4);
  EXPECT_DOUBLE_EQ(SqueezeParam(0.0, 0.0).reduction_db(), 0.0);
  EXPECT_THROW(SqueezeParam(-0.1, 0.0), std::domain_error);
  EXPECT_NEAR(SqueezeParam(0.5, -kPi / 2).phi_s, 1.5 * kPi, 1e-15);
}

TEST(SqueezedVacuum, ZeroSqueezingIsVacuum) {
  const auto s = squeezed_vacuum({0.0, 0.0}, 8);
  EXPECT_EQ(s[0], Complex(1.0));
  EXPECT_DOUBLE_EQ(s.norm(), 1.0);
}

TEST(SqueezedVacuum, MatchesAnalyticDistribution) {
  const double r = 1.08;
  const auto s = squeezed_vacuum({r, 0.0}, 200);
  const auto dist = number_distribution(s);
  EXPECT_NEAR(dist.p[0], 0.6090, 5e-5);
  EXPECT_NEAR(dist.p[0], 1.0 / std::cosh(r), 1e-9);
  double mean = 0.0;
  for (int n = 0; n < 200; ++n) {
    EXPECT_NEAR(dist.p[n], squeezed_vacuum_oracle(n, r), 1e-9) << "n=" << n;
    mean += n * dist.p[n];
  }
  EXPECT_NEAR(mean, 1.697, 5e-4);
  EXPECT_NEAR(mean, std::sinh(r) * std::sinh(r), 1e-8);
}

TEST(SqueezedVacuum, OddAmplitudesAreExactlyZero) {
  for (double phi : {0.0, 0.7, kPi}) {
    const auto s = squeezed_vacuum({1.2, phi});
    for (int n = 1; n < s.dim(); n += 2) EXPECT_EQ(s[n], Complex(0.0)) << n;
  }
}

TEST(SqueezedVacuum, SmallBasisIsRejectedWithLeakage) {
  try {
    squeezed_vacuum({1.08, 0.0}, 46);
    FAIL() << "expected TruncationError";
  } catch (const TruncationError& e) {
    EXPECT_GT(e.leakage(), 1e-8);
    EXPECT_EQ(e.dim(), 46);
  }
}

TEST(DisplacedSqueezed, Limits) {
  const auto vac = displaced_squeezed(0.0, {0.0, 0.0}, 10);
  EXPECT_NEAR(std::abs(vac[0]), 1.0, 1e-15);

  const auto coh = displaced_squeezed(1.0, {0.0, 0.0});
  EXPECT_NEAR(std::norm(coh[0]), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(std::norm(coh[0]), 0.3679, 5e-5);
}

TEST(DisplacedSqueezed, MeanNumberFollowsCaves) {
  const auto s = displaced_squeezed(2.4, {1.08, 0.0});
  const auto m = number_distribution(s).moments();
  EXPECT_NEAR(m.mean, 7.46, 5e-3);
  EXPECT_NEAR(m.mean, 5.76 + std::sinh(1.08) * std::sinh(1.08), 1e-6 * m.mean);
}

TEST(DisplacedSqueezed, CoherentStateCompositionProperty) {
  for (Complex alpha : {Complex{0.3, 0.0}, Complex{-1.2, 2.0}, Complex{0.0, 4.5}, Complex{7.0, -3.0}}) {
    const auto s = displaced_squeezed(alpha, {0.0, 0.0});
    for (int n = 0; n < s.dim(); ++n) {
      EXPECT_LT(std::abs(s[n] - coherent_oracle(n, alpha)), 1e-9) << alpha << " n=" << n;
    }
  }
}

TEST(DisplacedSqueezed, UnitarityAndMeanOverParameterRange) {
  // Spans r <= 1.3 and |alpha| <= 11 on both principal axes.
  struct Case { double r; Complex alpha; double phi_s; };
  const Case cases[] = {{1.3, {11.0, 0.0}, 0.0},  {0.5, {0.0, 6.0}, 0.0},
                        {1.08, {3.0, 3.0}, 1.0}, {1.3, {0.0, 4.0}, 0.0},
                        {0.0, {11.0, 0.0}, 0.0}};
  for (const auto& c : cases) {
    const SqueezeParam xi{c.r, c.phi_s};
    const auto s = displaced_squeezed(c.alpha, xi);
    EXPECT_LT(s.leakage(), 1e-8);
    EXPECT_NEAR(s.norm(), 1.0, 1e-9);
    const auto mom = number_distribution(s).moments();
    const double expected = std::norm(c.alpha) + std::sinh(c.r) * std::sinh(c.r);
    EXPECT_NEAR(mom.mean, expected, 1e-6 * expected) << c.alpha << " r=" << c.r;
  }
}

TEST(DisplacedSqueezed, TooSmallBasisThrows) {
  EXPECT_THROW(displaced_squeezed(5.0, {1.08, 0.0}, 30), TruncationError);
}

TEST(Overlap, BasicAndMismatch) {
  EXPECT_EQ(overlap(number_state(0, 4), number_state(0, 4)), Complex(1.0));
  EXPECT_EQ(overlap(number_state(0, 4), number_state(2, 4)), Complex(0.0));
  EXPECT_THROW(overlap(number_state(0, 4), number_state(0, 5)), DimensionError);
}

TEST(Overlap, CatBranchesAlongSqueezedAxis) {
  const SqueezeParam xi{1.08, 0.0};
  const int dim = required_dim(0.5, xi);
  const auto plus = displaced_squeezed(0.5, xi, dim);
  const auto minus = displaced_squeezed(-0.5, xi, dim);
  const Complex x = overlap(minus, plus);
  EXPECT_NEAR(x.real(), 0.0131, 5e-5);
  EXPECT_NEAR(x.real(), std::exp(-0.5 * std::exp(2.16)), 1e-9);
  EXPECT_NEAR(x.imag(), 0.0, 1e-12);
}

TEST(NumberDistribution, Basics) {
  const auto vac = number_distribution(number_state(0, 5));
  EXPECT_EQ(vac.p[0], 1.0);
  EXPECT_EQ(vac.n_max, 4);
  EXPECT_EQ(number_distribution(number_state(1, 5)).p[1], 1.0);
}

TEST(Husimi, VacuumPeak) {
  PhaseGridSpec spec{-1, 1, -1, 1, 3, 3};
  const auto g = husimi_q(number_state(0, 10), spec);
  EXPECT_NEAR(g.values(1, 1), 1.0 / kPi, 1e-15);
}

TEST(Husimi, CoherentStateMaximumAtAlpha) {
  const auto s = displaced_squeezed(2.0, {0.0, 0.0});
  PhaseGridSpec spec{-1, 5, -3, 3, 61, 61};
  const auto g = husimi_q(s, spec);
  Eigen::Index i, j;
  g.values.maxCoeff(&i, &j);
  EXPECT_NEAR(g.x[i], 2.0, 1e-12);
  EXPECT_NEAR(g.p[j], 0.0, 1e-12);
}

TEST(Husimi, SqueezedVacuumVarianceRatioAndNormalization) {
  const double r = 1.08;
  const auto s = squeezed_vacuum({r, 0.0});
  PhaseGridSpec spec{-5, 5, -9, 9, 201, 361};
  const auto g = husimi_q(s, spec);
  EXPECT_GE(g.values.minCoeff(), 0.0);
  EXPECT_NEAR(g.integral(), 1.0, 0.02);
  // Second moments of Q: (e^{-2r}+1)/4 along x, (e^{2r}+1)/4 along p.
  double w = 0, vx = 0, vp = 0;
  for (int i = 0; i < spec.nx; ++i)
    for (int j = 0; j < spec.np; ++j) {
      w += g.values(i, j);
      vx += g.values(i, j) * g.x[i] * g.x[i];
      vp += g.values(i, j) * g.p[j] * g.p[j];
    }
  vx /= w;
  vp /= w;
  EXPECT_NEAR(vx, (std::exp(-2 * r) + 1) / 4, 1e-4);
  EXPECT_NEAR(vp, (std::exp(2 * r) + 1) / 4, 1e-3);
  EXPECT_NEAR(vp / vx, std::exp(2 * r), 0.01 * std::exp(2 * r));
  EXPECT_NEAR(std::exp(2 * r), 8.67, 0.01);
}

TEST(Husimi, CsvLayout) {
  PhaseGridSpec spec{0, 1, 0, 1, 2, 2};
  std::ostringstream os;
  husimi_q(number_state(0, 3), spec).write_csv(os);
  const std::string out = os.str();
  EXPECT_EQ(out.rfind("x,p,value\n", 0), 0u);
  EXPECT_EQ(std::count(out.begin(), out.end(), '\n'), 5);
}

}  // namespace
