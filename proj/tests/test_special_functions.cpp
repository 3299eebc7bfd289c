#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "steinmix/special_functions.hpp"

namespace sm = steinmix;

namespace {

// erf by its Maclaurin series in extended precision; the alternating terms
// grow to about e^{x^2} before cancelling, which long double absorbs for |x| <= 3.
double erf_series(double xd) {
  const long double x = xd;
  long double term = x, sum = x;
  for (int k = 1; k < 400; ++k) {
    term *= -x * x / k;
    const long double add = term / (2 * k + 1);
    sum += add;
    if (std::abs(add) < 1e-22L * std::abs(sum)) break;
  }
  return static_cast<double>(2.0L / std::sqrt(std::numbers::pi_v<long double>) * sum);
}

double log_factorial(int m) {
  double s = 0.0;
  for (int k = 2; k <= m; ++k) s += std::log(static_cast<double>(k));
  return s;
}

}  // namespace

TEST(LogGamma, IntegerAndHalfIntegerValues) {
  for (int m = 1; m <= 30; ++m) EXPECT_NEAR(sm::log_gamma(m), log_factorial(m - 1), 1e-12) << m;
  EXPECT_NEAR(sm::log_gamma(0.5), 0.5 * std::log(std::numbers::pi), 1e-14);
  // Gamma(3/2) = sqrt(pi)/2
  EXPECT_NEAR(sm::log_gamma(1.5), 0.5 * std::log(std::numbers::pi) - std::log(2.0), 1e-14);
}

TEST(LogGamma, RelativeAccuracyAtLargeArguments) {
  // ln Gamma(m) = ln (m-1)!, summed directly.
  for (int m : {1000, 20000, 100000}) {
    const double want = log_factorial(m - 1);
    EXPECT_NEAR(sm::log_gamma(m), want, 1e-13 * want) << m;
  }
}

TEST(LogGamma, RejectsNonPositive) {
  EXPECT_THROW(sm::log_gamma(0.0), sm::domain_error);
  EXPECT_THROW(sm::log_gamma(-2.5), sm::domain_error);
}

TEST(LogGammaRatio, MatchesShiftedProducts) {
  // ln Gamma(z+k) - ln Gamma(z) = sum_{j<k} ln(z+j) for integer k.
  for (double z : {32.0, 100.5, 1e4, 1e7}) {
    for (int k : {1, 2, 5}) {
      double want = 0.0;
      for (int j = 0; j < k; ++j) want += std::log(z + j);
      EXPECT_NEAR(sm::log_gamma_ratio_large(z, k), want, 1e-14 * std::abs(want) + 1e-15) << z << " " << k;
    }
  }
}

TEST(BFactor, SmallCasesByHand) {
  EXPECT_DOUBLE_EQ(sm::b_factor(7, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(sm::b_factor(1, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(sm::b_factor(2, 1.0), 1.0 / 3.0);
  EXPECT_NEAR(sm::b_factor(1, 2.0), 1.0 / 3.0, 1e-16);
  // b_{n,1} = 1/(n+1), b_{n,2} = 2/((n+1)(n+2)).
  for (std::uint64_t n : {1u, 10u, 64u, 65u, 1000u, 123456u}) {
    const double nd = static_cast<double>(n);
    EXPECT_NEAR(sm::b_factor(n, 1.0), 1.0 / (nd + 1.0), 1e-13 / nd) << n;
    EXPECT_NEAR(sm::b_factor(n, 2.0) * (nd + 1.0) * (nd + 2.0), 2.0, 1e-12) << n;
  }
}

TEST(BFactor, GammaBranchMatchesProductAcrossThreshold) {
  for (double x : {0.5, 1.0, 1.7, 3.0}) {
    for (std::uint64_t n = 50; n <= 80; ++n)
      EXPECT_NEAR(sm::b_factor(n, x) / sm::b_factor_product(n, x), 1.0, 1e-12) << n << " " << x;
    for (std::uint64_t n : {1000u, 100000u})
      EXPECT_NEAR(sm::b_factor(n, x) / sm::b_factor_product(n, x), 1.0, 1e-11) << n << " " << x;
  }
}

TEST(BFactor, DecreasingInN) {
  double prev = 1.0;
  for (std::uint64_t n = 1; n < 300; ++n) {
    const double b = sm::b_factor(n, 0.8);
    EXPECT_LT(b, prev);
    prev = b;
  }
}

TEST(BFactor, DomainChecks) {
  EXPECT_THROW(sm::b_factor(0, 1.0), sm::domain_error);
  EXPECT_THROW(sm::b_factor(5, -1.0), sm::domain_error);
}

TEST(Harmonic, ExactAndAsymptoticBranches) {
  EXPECT_DOUBLE_EQ(sm::harmonic(1), 1.0);
  EXPECT_NEAR(sm::harmonic(4), 25.0 / 12.0, 1e-15);
  // Both sides of the branch switch against an extended-precision sum.
  long double h = 0.0L;
  for (std::uint64_t k = 1; k <= 2'000'000; ++k) {
    h += 1.0L / static_cast<long double>(k);
    if (k == 99 || k == 100 || k == 101 || k == 1000 || k == 123456 || k == 2'000'000) {
      const double want = static_cast<double>(h);
      EXPECT_NEAR(sm::harmonic(k), want, 2.0 * (std::nextafter(want, 99.0) - want)) << k;  // 2 ulp
    }
  }
  EXPECT_THROW(sm::harmonic(0), sm::domain_error);
}

TEST(Zeta, KnownValues) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  EXPECT_NEAR(sm::zeta(2.0), pi2 / 6.0, 1e-14);
  EXPECT_NEAR(sm::zeta(4.0), pi2 * pi2 / 90.0, 1e-14);
  EXPECT_NEAR(sm::zeta(1.5), 2.6123753486854883, 1e-13);
  EXPECT_THROW(sm::zeta(1.0), sm::domain_error);
}

TEST(Zeta, PartialSumPlusIntegralTail) {
  // sum_{k<N} k^{-r} + N^{1-r}/(r-1) + N^{-r}/2 has error O(N^{-r-1}).
  for (double r : {1.2, 1.5, 2.5, 3.0}) {
    const int big = 200000;
    double s = 0.0;
    for (int k = big - 1; k >= 1; --k) s += std::pow(static_cast<double>(k), -r);
    s += std::pow(big, 1.0 - r) / (r - 1.0) + 0.5 * std::pow(big, -r);
    EXPECT_NEAR(sm::zeta(r), s, 1e-11) << r;
  }
}

TEST(NormalCdf, AgreesWithErfSeries) {
  for (double z = -4.2; z <= 4.2; z += 0.05)
    EXPECT_NEAR(sm::std_normal_cdf(z), 0.5 * (1.0 + erf_series(z / std::numbers::sqrt2)), 2e-15) << z;
}

TEST(NormalCdf, TailsAndSymmetry) {
  EXPECT_DOUBLE_EQ(sm::std_normal_cdf(0.0), 0.5);
  EXPECT_NEAR(sm::std_normal_cdf(1.959963984540054), 0.975, 1e-15);
  EXPECT_NEAR(sm::std_normal_cdf(-10.0) / 7.6198530241605269e-24, 1.0, 1e-12);
  for (double z : {0.3, 1.0, 2.5, 6.0}) EXPECT_NEAR(sm::std_normal_cdf(z) + sm::std_normal_cdf(-z), 1.0, 1e-15);
}

TEST(NormalPdf, Values) {
  EXPECT_NEAR(sm::std_normal_pdf(0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-16);
  EXPECT_NEAR(sm::std_normal_pdf(2.0), std::exp(-2.0) / std::sqrt(2.0 * std::numbers::pi), 1e-16);
}

TEST(NormalQuantile, RoundTripsThroughCdf) {
  for (double p : {1e-300, 1e-100, 1e-20, 1e-8, 1e-3, 0.02, 0.1, 0.3, 0.5, 0.7, 0.975, 0.999, 1.0 - 1e-9}) {
    const double z = sm::std_normal_quantile(p);
    const double back = p < 0.5 ? sm::std_normal_cdf(z) : 1.0 - sm::std_normal_cdf(-z);
    EXPECT_NEAR(back / p, 1.0, p < 1e-8 ? 1e-12 : 1e-14) << p;
  }
  EXPECT_NEAR(sm::std_normal_quantile(0.975), 1.959963984540054, 1e-14);
  EXPECT_DOUBLE_EQ(sm::std_normal_quantile(0.5), 0.0);
  EXPECT_THROW(sm::std_normal_quantile(0.0), sm::domain_error);
  EXPECT_THROW(sm::std_normal_quantile(1.0), sm::domain_error);
}
