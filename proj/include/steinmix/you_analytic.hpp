#pragma once

// Closed-form and leading-order moments of the normalized trait average in the
// Yule-Ornstein-Uhlenbeck model, with and without jumps at speciation, and the
// distance-bound curves they induce.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "steinmix/special_functions.hpp"
#include "steinmix/stein_bounds.hpp"

namespace steinmix {

class unsupported_regime : public domain_error {
 public:
  unsupported_regime()
      : domain_error("unsupported regime (no normal limit expected): alpha < 1/2 gives a non-normal limit") {}
  explicit unsupported_regime(const std::string& what) : domain_error(what) {}
};

enum class Model { you, youj };

inline std::string_view to_string(Model m) { return m == Model::you ? "YOU" : "YOUj"; }

/// OU parameters on the tree: dX = -alpha X dt + sigma_a dW, X(0) = x0.
struct YouParams {
  double alpha = 1.0;
  double sigma_a2 = 1.0;
  double x0 = 0.0;

  /// delta = x0 sqrt(2 alpha / sigma_a2).
  double delta() const { return x0 * std::sqrt(2.0 * alpha / sigma_a2); }
  /// Factor turning a trait variance into the normalized scale of Y = X sqrt(2 alpha / sigma_a2).
  double normalization() const { return 2.0 * alpha / sigma_a2; }

  void validate() const {
    detail::require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
    detail::require(sigma_a2 > 0.0 && std::isfinite(sigma_a2), "sigma_a2 must be positive");
    detail::require(std::isfinite(x0), "x0 must be finite");
  }
};

struct JumpRate {
  double p = 0.0;
  double sigma_c2 = 0.0;
};

/// Jump probability and variance attached to each speciation event (1-based).
class JumpSchedule {
 public:
  enum class Mode { none, constant, per_event };

  JumpSchedule() = default;

  static JumpSchedule none() { return {}; }
  static JumpSchedule constant(double p, double sigma_c2) {
    JumpSchedule s;
    s.mode_ = Mode::constant;
    s.constant_ = {p, sigma_c2};
    s.validate();
    return s;
  }
  static JumpSchedule per_event(std::vector<JumpRate> rates) {
    JumpSchedule s;
    s.mode_ = Mode::per_event;
    s.rates_ = std::move(rates);
    s.validate();
    return s;
  }

  Mode mode() const { return mode_; }
  bool is_constant() const { return mode_ == Mode::constant; }
  const JumpRate& constant_rate() const { return constant_; }
  std::span<const JumpRate> rates() const { return rates_; }

  JumpRate at(std::uint64_t event) const {
    switch (mode_) {
      case Mode::none:
        return {};
      case Mode::constant:
        return constant_;
      case Mode::per_event:
        detail::require(event >= 1 && event <= rates_.size(), "jump schedule does not cover event");
        return rates_[event - 1];
    }
    return {};
  }

  /// True when events 1..n-1 all have an entry.
  bool covers(std::uint64_t n) const { return mode_ != Mode::per_event || rates_.size() + 1 >= n; }

  void validate() const {
    auto check = [](const JumpRate& r) {
      detail::require(r.p >= 0.0 && r.p <= 1.0, "jump probability must lie in [0,1]");
      detail::require(r.sigma_c2 >= 0.0 && std::isfinite(r.sigma_c2), "jump variance must be nonnegative");
    };
    if (mode_ == Mode::constant) check(constant_);
    for (const auto& r : rates_) check(r);
  }

 private:
  Mode mode_ = Mode::none;
  JumpRate constant_{};
  std::vector<JumpRate> rates_;
};

enum class Regime { critical, fast, slow };

/// Sub-regimes of the leading-order V(V(Y_n | tree)).
enum class VvRegime { half, half_to_3q, three_quarters, three_quarters_to_one, one, above_one };

inline constexpr double kRegimeWindow = 1e-9;

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::critical:
      return "critical";
    case Regime::fast:
      return "fast";
    case Regime::slow:
      return "slow";
  }
  return "?";
}

inline std::string_view to_string(VvRegime r) {
  switch (r) {
    case VvRegime::half:
      return "alpha=1/2";
    case VvRegime::half_to_3q:
      return "1/2<alpha<3/4";
    case VvRegime::three_quarters:
      return "alpha=3/4";
    case VvRegime::three_quarters_to_one:
      return "3/4<alpha<1";
    case VvRegime::one:
      return "alpha=1";
    case VvRegime::above_one:
      return "alpha>1";
  }
  return "?";
}

inline Regime classify_regime(double alpha) {
  if (std::abs(alpha - 0.5) <= kRegimeWindow) return Regime::critical;
  return alpha > 0.5 ? Regime::fast : Regime::slow;
}

inline void require_normal_regime(double alpha) {
  if (classify_regime(alpha) == Regime::slow) throw unsupported_regime();
}

inline VvRegime classify_vv_regime(double alpha) {
  require_normal_regime(alpha);
  if (std::abs(alpha - 0.5) <= kRegimeWindow) return VvRegime::half;
  if (std::abs(alpha - 0.75) <= kRegimeWindow) return VvRegime::three_quarters;
  if (std::abs(alpha - 1.0) <= kRegimeWindow) return VvRegime::one;
  if (alpha < 0.75) return VvRegime::half_to_3q;
  if (alpha < 1.0) return VvRegime::three_quarters_to_one;
  return VvRegime::above_one;
}

/// c * n^{-power} * ln(n)^{log_power}.
struct Rate {
  double power = 0.0;
  double log_power = 0.0;

  double at(double n) const {
    double v = std::pow(n, -power);
    if (log_power != 0.0) v *= std::pow(std::log(n), log_power);
    return v;
  }
};

/// Leading constants and rates of E(V), V(E), V(V) for the YOU model.
struct AsymptoticConstants {
  double c_ev = 0.0;
  Rate ev_rate;
  double c_ve = 0.0;
  Rate ve_rate;
  double c_vv = 0.0;
  Rate vv_rate;
  VvRegime vv_regime = VvRegime::one;
};

inline AsymptoticConstants asymptotic_constants_you(const YouParams& params) {
  params.validate();
  const double a = params.alpha;
  AsymptoticConstants c;
  c.vv_regime = classify_vv_regime(a);
  if (c.vv_regime == VvRegime::half) {
    c.c_ev = 2.0;
    c.ev_rate = {1.0, 1.0};
  } else {
    c.c_ev = (2.0 * a + 1.0) / (2.0 * a - 1.0);
    c.ev_rate = {1.0, 0.0};
  }
  const double d = params.delta();
  const double g1 = std::exp(log_gamma(a + 1.0));
  c.c_ve = d * d * (std::exp(log_gamma(2.0 * a + 1.0)) - g1 * g1);
  c.ve_rate = {2.0 * a, 0.0};
  switch (c.vv_regime) {
    case VvRegime::half: {
      // (Gamma(3) - Gamma(2))^2 = 1
      c.c_vv = 8.0 * zeta(2.0) + 1.0;
      c.vv_rate = {2.0, 0.0};
      break;
    }
    case VvRegime::half_to_3q: {
      const double cross = std::exp(log_gamma(4.0 * a + 1.0)) - std::exp(log_gamma(2.0 * a + 1.0));
      c.c_vv = 32.0 * a * a / (2.0 - 2.0 * a) * zeta(4.0 - 4.0 * a) + cross * cross;
      c.vv_rate = {4.0 * a, 0.0};
      break;
    }
    case VvRegime::three_quarters:
      c.c_vv = 36.0;
      c.vv_rate = {3.0, 1.0};
      break;
    case VvRegime::one:
      c.c_vv = 16.0;
      c.vv_rate = {3.0, 0.0};
      break;
    case VvRegime::three_quarters_to_one:
    case VvRegime::above_one:
      c.c_vv = 32.0 * a * a / ((2.0 * a - 1.0) * (4.0 * a - 3.0) * (4.0 * a - 2.0));
      c.vv_rate = {3.0, 0.0};
      break;
  }
  return c;
}

/// E(e^{-x U_n}) = b_{n,x}.
inline double laplace_height(std::uint64_t n, double x) { return b_factor(n, x); }

/// V(e^{-x U_n}) = b_{n,2x} - b_{n,x}^2.
inline double laplace_height_variance(std::uint64_t n, double x) {
  const double b = b_factor(n, x);
  return b_factor(n, 2.0 * x) - b * b;
}

inline constexpr double kCoalescenceBranchWindow = 1e-12;

/// E(e^{-y tau^{(n)}}) for the coalescence time of a uniformly chosen tip pair.
inline double laplace_pair_coalescence(std::uint64_t n, double y) {
  detail::require(n >= 2, "laplace_pair_coalescence: n must be >= 2");
  if (!(y >= 1.0 - kCoalescenceBranchWindow))
    throw unsupported_regime("laplace_pair_coalescence: y < 1 is outside the supported regime");
  const double nd = static_cast<double>(n);
  if (std::abs(y - 1.0) <= kCoalescenceBranchWindow) {
    return 2.0 / (nd - 1.0) * (harmonic(n) - 1.0) - 1.0 / (nd + 1.0);
  }
  return (2.0 - (nd + 1.0) * (y + 1.0) * b_factor(n, y)) / ((nd - 1.0) * (y - 1.0));
}

/// mu_n = E(Y_n) = delta b_{n,alpha}.
inline double mu_n(std::uint64_t n, const YouParams& params) {
  params.validate();
  const double d = params.delta();
  if (d == 0.0) return 0.0;
  return d * b_factor(n, params.alpha);
}

/// sigma_n^2 = E(V(Y_n | tree)) = 1/n + (1 - 1/n) E(e^{-2 alpha tau}) - b_{n,2 alpha}.
inline double sigma2_n_you(std::uint64_t n, const YouParams& params) {
  params.validate();
  detail::require(n >= 2, "sigma2_n_you: n must be >= 2");
  require_normal_regime(params.alpha);
  const double nd = static_cast<double>(n);
  const double y = classify_regime(params.alpha) == Regime::critical ? 1.0 : 2.0 * params.alpha;
  const double pair = laplace_pair_coalescence(n, y);
  return 1.0 / nd + (1.0 - 1.0 / nd) * pair - b_factor(n, y);
}

/// V(E(Y_n | tree)) = delta^2 (b_{n,2 alpha} - b_{n,alpha}^2).
inline double ve_exact(std::uint64_t n, const YouParams& params) {
  params.validate();
  const double d = params.delta();
  if (d == 0.0) return 0.0;
  return d * d * laplace_height_variance(n, params.alpha);
}

/// delta^2 (Gamma(2 alpha + 1) - Gamma(alpha + 1)^2) n^{-2 alpha}.
inline double ve_asymptotic(std::uint64_t n, const YouParams& params) {
  params.validate();
  const double a = params.alpha;
  const double d = params.delta();
  const double g1 = std::exp(log_gamma(a + 1.0));
  return d * d * (std::exp(log_gamma(2.0 * a + 1.0)) - g1 * g1) * std::pow(static_cast<double>(n), -2.0 * a);
}

/// Leading-order V(V(Y_n | tree)) for the YOU model.
inline double vv_asymptotic_you(std::uint64_t n, const YouParams& params) {
  const auto c = asymptotic_constants_you(params);
  return c.c_vv * c.vv_rate.at(static_cast<double>(n));
}

/// E(sum_i phi*_i): expected discounted jump exposure of a random lineage.
inline double jump_sum_mean_star(std::uint64_t n, double alpha, double p) {
  detail::require(n >= 2, "jump_sum_mean_star: n must be >= 2");
  detail::require(p >= 0.0 && p <= 1.0, "jump probability must lie in [0,1]");
  require_normal_regime(alpha);
  if (p == 0.0) return 0.0;
  const double y = 2.0 * alpha;
  return 2.0 * p / y * (1.0 - (1.0 + y) * b_factor(n, y));
}

/// E(sum_i phi_i): expected discounted jump exposure shared by a random pair.
inline double jump_sum_mean(std::uint64_t n, double alpha, double p) {
  detail::require(n >= 2, "jump_sum_mean: n must be >= 2");
  detail::require(p >= 0.0 && p <= 1.0, "jump probability must lie in [0,1]");
  require_normal_regime(alpha);
  if (p == 0.0) return 0.0;
  const double nd = static_cast<double>(n);
  if (classify_regime(alpha) == Regime::critical) {
    return 4.0 * p / (nd - 1.0) * (harmonic(n) - (5.0 * nd - 1.0) / (2.0 * (nd + 1.0)));
  }
  const double y = 2.0 * alpha;
  return 2.0 * p / y * (2.0 - (y + 1.0) * (y * nd - y + 2.0) * b_factor(n, y)) / ((nd - 1.0) * (y - 1.0));
}

namespace detail {
inline const JumpRate& require_constant_schedule(const JumpSchedule& s, const char* who) {
  if (s.mode() == JumpSchedule::Mode::per_event)
    throw domain_error(std::string(who) +
                       ": per-event jump schedules have no closed form; use the Monte Carlo harness");
  static const JumpRate kNone{};
  return s.is_constant() ? s.constant_rate() : kNone;
}
}  // namespace detail

/// sigma_n^2 for the YOU model with constant-rate jumps.
inline double sigma2_n_youj(std::uint64_t n, const YouParams& params, const JumpSchedule& schedule) {
  const JumpRate& r = detail::require_constant_schedule(schedule, "sigma2_n_youj");
  const double base = sigma2_n_you(n, params);
  if (r.p == 0.0 || r.sigma_c2 == 0.0) return base;
  const double nd = static_cast<double>(n);
  const double scale = params.normalization() * r.sigma_c2;
  return base + scale * (jump_sum_mean_star(n, params.alpha, r.p) / nd +
                         (1.0 - 1.0 / nd) * jump_sum_mean(n, params.alpha, r.p));
}

/// Which expression vv_upper_youj used.
enum class YoujVvSource { no_jumps, leading_pair_term, all_jumps_fallback };

struct YoujVv {
  double value = 0.0;
  YoujVvSource source = YoujVvSource::no_jumps;
};

/// Leading-order upper bound on V(V(Y_n | tree, jumps)) for constant jump rates.
/// With p = 1 the p(1-p) pair term vanishes; the bound is then assembled from
/// the remaining terms of the Cauchy-Schwarz split, all of YOU order.
inline YoujVv vv_upper_youj_detailed(std::uint64_t n, const YouParams& params, const JumpSchedule& schedule) {
  const JumpRate& r = detail::require_constant_schedule(schedule, "vv_upper_youj");
  const double vv_you = vv_asymptotic_you(n, params);
  if (r.p == 0.0 || r.sigma_c2 == 0.0) return {vv_you, YoujVvSource::no_jumps};
  const double a = params.alpha;
  const double nd = static_cast<double>(n);
  const double norm2 = params.normalization() * params.normalization();
  const double s4 = r.sigma_c2 * r.sigma_c2;
  const double pq = r.p * (1.0 - r.p);
  if (pq > 0.0) {
    double pair_var;
    if (classify_regime(a) == Regime::critical) {
      pair_var = 16.0 * pq * std::log(nd) / (nd * nd);
    } else {
      pair_var = 32.0 * pq / ((4.0 * a) * (4.0 * a - 1.0) * (4.0 * a - 2.0)) / (nd * nd);
    }
    return {4.0 * norm2 * s4 * pair_var, YoujVvSource::leading_pair_term};
  }
  const double star_var = 4.0 * r.p * r.p / (4.0 * a - 1.0) / nd;
  const double height_var = laplace_height_variance(n, 2.0 * a);
  const double value = 4.0 * (vv_you + height_var + norm2 * s4 * star_var / (nd * nd));
  return {value, YoujVvSource::all_jumps_fallback};
}

inline double vv_upper_youj(std::uint64_t n, const YouParams& params, const JumpSchedule& schedule) {
  return vv_upper_youj_detailed(n, params, schedule).value;
}

/// One evaluated point of a bound curve.
struct CurvePoint {
  std::uint64_t n = 0;
  Model model = Model::you;
  Regime regime = Regime::fast;
  VvRegime vv_regime = VvRegime::one;
  MomentSummary moments;
  BoundReport report;
  bool non_convergent = false;
};

inline constexpr std::string_view kNonConvergentNote = "non-convergent regime";

/// Moment summary with exact E(V), V(E) and leading-order V(V).
inline MomentSummary analytic_moment_summary(Model model, std::uint64_t n, const YouParams& params,
                                             const JumpSchedule& schedule) {
  MomentSummary ms;
  ms.mean = mu_n(n, params);
  ms.ve = ve_exact(n, params);
  if (model == Model::you) {
    ms.ev = sigma2_n_you(n, params);
    ms.vv = vv_asymptotic_you(n, params);
  } else {
    ms.ev = sigma2_n_youj(n, params, schedule);
    ms.vv = vv_upper_youj(n, params, schedule);
  }
  return ms;
}

inline CurvePoint bound_at(Model model, const YouParams& params, const JumpSchedule& schedule,
                           DistanceKind distance, std::uint64_t n) {
  params.validate();
  require_normal_regime(params.alpha);
  CurvePoint pt;
  pt.n = n;
  pt.model = model;
  pt.regime = classify_regime(params.alpha);
  pt.vv_regime = classify_vv_regime(params.alpha);
  pt.moments = analytic_moment_summary(model, n, params, schedule);
  pt.report = upper_bound(pt.moments, distance);
  auto& notes = pt.report.notes;
  notes.emplace_back("regime=" + std::string(to_string(pt.regime)));
  notes.emplace_back("vv_regime=" + std::string(to_string(pt.vv_regime)));
  notes.emplace_back("ev=exact");
  notes.emplace_back("ve=exact");
  if (model == Model::you) {
    notes.emplace_back("vv=leading-order");
  } else {
    const auto src = vv_upper_youj_detailed(n, params, schedule).source;
    switch (src) {
      case YoujVvSource::no_jumps:
        notes.emplace_back("vv=leading-order");
        break;
      case YoujVvSource::leading_pair_term:
        notes.emplace_back("vv=leading-order upper bound");
        break;
      case YoujVvSource::all_jumps_fallback:
        notes.emplace_back("vv=leading-order upper bound (p=1 fallback)");
        break;
    }
    const JumpRate& r = schedule.is_constant() ? schedule.constant_rate() : JumpRate{};
    if (pt.regime == Regime::fast && r.p > 0.0 && r.p < 1.0 && r.sigma_c2 > 0.0) {
      pt.non_convergent = true;
      notes.emplace_back(kNonConvergentNote);
    }
  }
  return pt;
}

/// Upper-bound curve over an ascending grid of tip counts.
inline std::vector<CurvePoint> bound_curve(Model model, const YouParams& params, const JumpSchedule& schedule,
                                           DistanceKind distance, std::span<const std::uint64_t> n_grid) {
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    detail::require(n_grid[i - 1] < n_grid[i], "bound_curve: n_grid must be strictly ascending");
  std::vector<CurvePoint> out;
  out.reserve(n_grid.size());
  for (auto n : n_grid) out.push_back(bound_at(model, params, schedule, distance, n));
  return out;
}

enum class Scaling { sqrt_n_over_log_n, sqrt_n };

inline std::string_view to_string(Scaling s) {
  return s == Scaling::sqrt_n ? "sqrt(n)" : "sqrt(n/ln n)";
}

struct LimitLaw {
  Scaling scaling = Scaling::sqrt_n;
  double variance = 0.0;
};

/// Normal limit of the scaled trait average.
inline LimitLaw limit_distribution(Model model, const YouParams& params, const JumpSchedule& schedule) {
  params.validate();
  require_normal_regime(params.alpha);
  const double a = params.alpha;
  double jump_factor = 0.0;
  if (model == Model::youj) {
    const JumpRate& r = detail::require_constant_schedule(schedule, "limit_distribution");
    jump_factor = 2.0 * r.p * r.sigma_c2 / params.sigma_a2;
  }
  if (classify_regime(a) == Regime::critical) return {Scaling::sqrt_n_over_log_n, 2.0 + 2.0 * jump_factor};
  return {Scaling::sqrt_n, (2.0 * a + 1.0) / (2.0 * a - 1.0) * (1.0 + jump_factor)};
}

}  // namespace steinmix
