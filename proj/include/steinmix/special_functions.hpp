#pragma once

// Scalar special functions shared by the bound and model code: log-gamma,
// the b_{n,x} product, harmonic numbers, Riemann zeta and the standard
// normal distribution.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace steinmix {

class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw domain_error(what);
}

// Bernoulli numbers B_2, B_4, ..., B_20.
inline constexpr std::array<double, 10> kBernoulliEven = {
    1.0 / 6.0,   -1.0 / 30.0,      1.0 / 42.0,  -1.0 / 30.0,  5.0 / 66.0,
    -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0, 43867.0 / 798.0, -174611.0 / 330.0};

}  // namespace detail

/// Natural log of Gamma(x) for x > 0.
inline double log_gamma(double x) {
  detail::require(x > 0.0 && std::isfinite(x), "log_gamma: argument must be positive");
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);  // re-entrant, no write to signgam
#else
  return std::lgamma(x);
#endif
}

/// log Gamma(z + x) - log Gamma(z) for z >= 32, accurate to a few ulp of the
/// result even when both log-gammas are large.
inline double log_gamma_ratio_large(double z, double x) {
  // (z+x-1/2) ln(z+x) - (z-1/2) ln z - x, rearranged to avoid cancellation.
  double value = (z - 0.5) * std::log1p(x / z) + x * std::log(z + x) - x;
  const double zx = z + x;
  double pz = z, pzx = zx;
  const double z2 = z * z, zx2 = zx * zx;
  for (std::size_t k = 1; k <= 8; ++k) {
    const double b = detail::kBernoulliEven[k - 1];
    const double coef = b / static_cast<double>(2 * k * (2 * k - 1));
    value += coef * (1.0 / pzx - 1.0 / pz);
    pz *= z2;
    pzx *= zx2;
  }
  return value;
}

inline constexpr std::uint64_t kBFactorProductThreshold = 64;

namespace detail {
// Multiplier applied to every b_{n,x}; only the self-check's mutation run
// changes it.
inline double b_factor_fault_scale = 1.0;
}  // namespace detail

/// Gamma-function form of b_{n,x} for any n.
inline double b_factor_gamma(std::uint64_t n, double x) {
  detail::require(n >= 1, "b_factor: n must be >= 1");
  detail::require(x > -1.0, "b_factor: x must exceed -1");
  const double z = static_cast<double>(n) + 1.0;
  if (z >= 32.0) return std::exp(log_gamma(x + 1.0) - log_gamma_ratio_large(z, x));
  return std::exp(log_gamma(z) + log_gamma(x + 1.0) - log_gamma(z + x));
}

/// b_{n,x} = prod_{k=1}^{n} k/(k+x) = Gamma(n+1)Gamma(x+1)/Gamma(n+x+1), the
/// Laplace transform of the Yule tree height.
inline double b_factor(std::uint64_t n, double x) {
  detail::require(n >= 1, "b_factor: n must be >= 1");
  detail::require(x > -1.0, "b_factor: x must exceed -1");
  if (x == 0.0) return detail::b_factor_fault_scale;
  if (n <= kBFactorProductThreshold) {
    double prod = 1.0;
    for (std::uint64_t k = 1; k <= n; ++k) {
      const double kd = static_cast<double>(k);
      prod *= kd / (kd + x);
    }
    return detail::b_factor_fault_scale * prod;
  }
  return detail::b_factor_fault_scale * b_factor_gamma(n, x);
}

/// Product form of b_{n,x} for any n; O(n). Used as the reference for the
/// gamma-ratio branch.
inline double b_factor_product(std::uint64_t n, double x) {
  detail::require(n >= 1, "b_factor: n must be >= 1");
  detail::require(x > -1.0, "b_factor: x must exceed -1");
  double log_prod = 0.0;
  for (std::uint64_t k = 1; k <= n; ++k) {
    const double kd = static_cast<double>(k);
    log_prod -= std::log1p(x / kd);
  }
  return std::exp(log_prod);
}

/// H_n = 1 + 1/2 + ... + 1/n.
inline double harmonic(std::uint64_t n) {
  detail::require(n >= 1, "harmonic: n must be >= 1");
  if (n > 100) {
    const double nd = static_cast<double>(n);
    const double inv2 = 1.0 / (nd * nd);
    return std::log(nd) + std::numbers::egamma + 0.5 / nd -
           inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
  }
  // Smallest terms first.
  double sum = 0.0;
  for (std::uint64_t k = n; k >= 1; --k) sum += 1.0 / static_cast<double>(k);
  return sum;
}

/// Riemann zeta for real r > 1 via Euler-Maclaurin corrected partial sums.
inline double zeta(double r) {
  detail::require(r > 1.0 && std::isfinite(r), "zeta: argument must exceed 1");
  constexpr int kTerms = 16;
  const double big_n = kTerms;
  double sum = 0.0;
  for (int k = kTerms - 1; k >= 1; --k) sum += std::pow(static_cast<double>(k), -r);
  sum += std::pow(big_n, 1.0 - r) / (r - 1.0) + 0.5 * std::pow(big_n, -r);
  // sum_j B_{2j}/(2j)! * r(r+1)...(r+2j-2) * N^{-r-2j+1}
  double rising = r;                  // r(r+1)...(r+2j-2)
  double factorial = 2.0;             // (2j)!
  double power = std::pow(big_n, -r - 1.0);
  for (std::size_t j = 1; j <= detail::kBernoulliEven.size(); ++j) {
    const double term = detail::kBernoulliEven[j - 1] / factorial * rising * power;
    sum += term;
    if (std::abs(term) < 1e-18 * sum) break;
    const double jd = static_cast<double>(j);
    rising *= (r + 2.0 * jd - 1.0) * (r + 2.0 * jd);
    factorial *= (2.0 * jd + 1.0) * (2.0 * jd + 2.0);
    power /= big_n * big_n;
  }
  return sum;
}

inline double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// Phi(z) through erfc, which keeps full relative accuracy in the lower tail.
inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Phi^{-1}(p): rational initial guess (Acklam) polished by Halley steps.
inline double std_normal_quantile(double p) {
  detail::require(p > 0.0 && p < 1.0, "std_normal_quantile: p must lie in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int iter = 0; iter < 3; ++iter) {
    // Work in the tail that keeps the residual well conditioned.
    const double e = x <= 0.0 ? std_normal_cdf(x) - p : (1.0 - p) - std_normal_cdf(-x);
    const double u = e / std_normal_pdf(x);
    if (!std::isfinite(u)) break;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace steinmix
