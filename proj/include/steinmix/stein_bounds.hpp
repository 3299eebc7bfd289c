#pragma once

// Distance bounds between a normal mixture and its matched normal, driven by
// the first two moments of the conditional mean and variance.

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "steinmix/special_functions.hpp"

namespace steinmix {

enum class DistanceKind { kolmogorov, wasserstein };
enum class BoundKind { upper, lower };

inline std::string_view to_string(DistanceKind d) {
  return d == DistanceKind::kolmogorov ? "kolmogorov" : "wasserstein";
}
inline std::string_view to_string(BoundKind k) { return k == BoundKind::upper ? "upper" : "lower"; }

/// E(X), E(V(X|G)), V(V(X|G)), V(E(X|G)).
struct MomentSummary {
  double mean = 0.0;
  double ev = 1.0;
  double vv = 0.0;
  double ve = 0.0;

  void validate() const {
    detail::require(ev > 0.0 && std::isfinite(ev), "MomentSummary: ev must be positive");
    detail::require(vv >= 0.0 && std::isfinite(vv), "MomentSummary: vv must be nonnegative");
    detail::require(ve >= 0.0 && std::isfinite(ve), "MomentSummary: ve must be nonnegative");
  }
  double total_variance() const { return ev + ve; }
};

struct BoundTerm {
  std::string label;
  double value = 0.0;
};

struct BoundReport {
  DistanceKind distance = DistanceKind::kolmogorov;
  BoundKind kind = BoundKind::upper;
  std::vector<BoundTerm> terms;
  double total = 0.0;
  // Free-form annotations: regime, exact/leading-order ingredients, flags.
  std::vector<std::string> notes;

  bool has_note(std::string_view note) const {
    for (const auto& n : notes)
      if (n == note) return true;
    return false;
  }
};

namespace detail {
inline constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2/pi)

inline BoundReport assemble_upper(DistanceKind d, std::vector<BoundTerm> terms) {
  BoundReport r;
  r.distance = d;
  r.kind = BoundKind::upper;
  r.terms = std::move(terms);
  for (const auto& t : r.terms) r.total += t.value;
  return r;
}
}  // namespace detail

/// Kolmogorov upper bound for the standardized mixture.
inline BoundReport dk_upper(const MomentSummary& ms) {
  ms.validate();
  const double sqrt_vv = std::sqrt(ms.vv);
  const double sqrt_ve = std::sqrt(ms.ve);
  return detail::assemble_upper(
      DistanceKind::kolmogorov,
      {{"sqrt(vv)/ev", sqrt_vv / ms.ev},
       {"ve/ev", ms.ve / ms.ev},
       {"sqrt(2/pi)*sqrt(ve)*vv^(1/4)/ev", detail::kSqrt2OverPi * sqrt_ve * std::sqrt(sqrt_vv) / ms.ev}});
}

/// Wasserstein upper bound for the standardized mixture.
inline BoundReport dw_upper(const MomentSummary& ms) {
  ms.validate();
  const double sqrt_vv = std::sqrt(ms.vv);
  const double sqrt_ve = std::sqrt(ms.ve);
  const double ev32 = ms.ev * std::sqrt(ms.ev);
  return detail::assemble_upper(
      DistanceKind::wasserstein,
      {{"sqrt(2/pi)*vv^(3/4)/ev^(3/2)", detail::kSqrt2OverPi * sqrt_vv * std::sqrt(sqrt_vv) / ev32},
       {"sqrt(ve)*sqrt(vv)/ev^(3/2)", sqrt_ve * sqrt_vv / ev32},
       {"ve/ev", ms.ve / ms.ev},
       {"sqrt(2/pi)*sqrt(ve)*vv^(1/4)/ev", detail::kSqrt2OverPi * sqrt_ve * std::sqrt(sqrt_vv) / ms.ev}});
}

inline BoundReport upper_bound(const MomentSummary& ms, DistanceKind d) {
  return d == DistanceKind::kolmogorov ? dk_upper(ms) : dw_upper(ms);
}

/// d_K(N(m, tau2), N(mu, sigma2)) upper bound.
inline double dk_two_normals_upper(double m, double tau2, double mu, double sigma2) {
  detail::require(tau2 > 0.0 && sigma2 > 0.0, "dk_two_normals_upper: variances must be positive");
  return std::abs(sigma2 - tau2) / sigma2 +
         std::sqrt(2.0 * std::numbers::pi) / (4.0 * std::sqrt(sigma2)) * std::abs(mu - m);
}

/// d_W(N(m, tau2), N(mu, sigma2)) upper bound.
inline double dw_two_normals_upper(double m, double tau2, double mu, double sigma2) {
  detail::require(tau2 > 0.0 && sigma2 > 0.0, "dw_two_normals_upper: variances must be positive");
  return 4.0 / sigma2 * std::abs(sigma2 - tau2) + 2.0 / std::sqrt(sigma2) * std::abs(mu - m);
}

/// kappa(x) = (s2 - x)((s2/(s2+x))^{3/2} - 2^{-3/2}); its expectation at the
/// conditional variance drives the lower bound.
inline double kappa(double x, double sigma2) {
  detail::require(x >= 0.0, "kappa: x must be nonnegative");
  detail::require(sigma2 > 0.0, "kappa: sigma2 must be positive");
  if (x == sigma2) return 0.0;
  const double ratio = sigma2 / (sigma2 + x);
  return (sigma2 - x) * (ratio * std::sqrt(ratio) - 0.5 / std::numbers::sqrt2);
}

namespace detail {

// F(x) = (1 - 2x^2) e^{-x^2/2} is an antiderivative of (2x^3 - 5x) e^{-x^2/2}.
inline double lower_bound_antiderivative(double x) { return (1.0 - 2.0 * x * x) * std::exp(-0.5 * x * x); }

inline double lower_bound_integrand(double x) { return (2.0 * x * x * x - 5.0 * x) * std::exp(-0.5 * x * x); }

// Derivative of the integrand up to the positive factor e^{-x^2/2}.
inline double lower_bound_integrand_slope(double x) {
  const double x2 = x * x;
  return -2.0 * x2 * x2 + 11.0 * x2 - 5.0;
}

inline double kolmogorov_lower_constant() {
  // Integrand is odd in x; on [0, sqrt(5/2)] it is negative, positive beyond.
  const double root = std::sqrt(2.5);
  const double inner = lower_bound_antiderivative(0.0) - lower_bound_antiderivative(root);
  const double outer = 0.0 - lower_bound_antiderivative(root);
  return 2.0 * (inner + outer);
}

inline double wasserstein_lower_constant() {
  // Critical points of |2x^3 - 5x| e^{-x^2/2} on x > 0: bracket sign changes of
  // the slope polynomial on a scan, then bisect. The function is odd.
  double best = 0.0;
  constexpr int kScan = 400;
  constexpr double kHi = 8.0;
  double prev_x = 0.0;
  double prev_s = lower_bound_integrand_slope(prev_x);
  for (int i = 1; i <= kScan; ++i) {
    const double x = kHi * i / kScan;
    const double s = lower_bound_integrand_slope(x);
    if ((prev_s < 0.0) != (s < 0.0)) {
      double lo = prev_x, hi = x;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((lower_bound_integrand_slope(mid) < 0.0) == (prev_s < 0.0))
          lo = mid;
        else
          hi = mid;
      }
      best = std::max(best, std::abs(lower_bound_integrand(0.5 * (lo + hi))));
    }
    prev_x = x;
    prev_s = s;
  }
  return best;
}

}  // namespace detail

/// C in the lower bound: integral of |2x^3-5x|e^{-x^2/2} (Kolmogorov) or its
/// maximum (Wasserstein).
inline double lower_bound_constant(DistanceKind d) {
  static const double k = detail::kolmogorov_lower_constant();
  static const double w = detail::wasserstein_lower_constant();
  return d == DistanceKind::kolmogorov ? k : w;
}

/// Proxies for |T1| (~ V(E(X|G))) and |T2| (~ E(kappa(V(X|G)))) with
/// sigma2 = E(V(X|G)).
struct LowerBoundInputs {
  double t1 = 0.0;
  double t2 = 0.0;
  double sigma2 = 1.0;

  void validate() const {
    detail::require(sigma2 > 0.0, "LowerBoundInputs: sigma2 must be positive");
    detail::require(t1 >= 0.0 && t2 >= 0.0, "LowerBoundInputs: t1, t2 must be nonnegative");
  }
};

/// ||T1| - |T2|| / (C sigma2). Valid only asymptotically; the report says so.
inline BoundReport lower_bound(const LowerBoundInputs& in, DistanceKind d) {
  in.validate();
  const double c = lower_bound_constant(d);
  BoundReport r;
  r.distance = d;
  r.kind = BoundKind::lower;
  r.terms = {{"t1", in.t1}, {"t2", in.t2}, {"C", c}, {"sigma2", in.sigma2}};
  r.total = std::abs(in.t1 - in.t2) / (c * in.sigma2);
  r.notes.emplace_back("asymptotic lower bound");
  return r;
}

}  // namespace steinmix
