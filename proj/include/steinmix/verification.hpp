#pragma once

// Self-check suite behind `steinmix verify` and the acceptance binary. Each
// criterion returns its own pass/fail plus readable detail lines. The
// brute-force references here rebuild quantities the slow way (explicit tip
// paths, full covariance matrices, adaptive quadrature) and share no code with
// the fast paths they check.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "steinmix/mc_harness.hpp"
#include "steinmix/report.hpp"
#include "steinmix/special_functions.hpp"
#include "steinmix/stein_bounds.hpp"
#include "steinmix/you_analytic.hpp"
#include "steinmix/yule_tree.hpp"

namespace steinmix::verify {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = true;
  std::vector<std::string> details;
  double seconds = 0.0;

  CriterionResult(int id_, std::string title_) : id(id_), title(std::move(title_)) {}

  void check(bool ok, const std::string& what) {
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    pass = pass && ok;
  }
};

namespace detail {

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Root-to-tip path of every tip as (event, side) pairs, built by replaying the
// splits forward with explicit lineage labels.
inline std::vector<std::vector<std::pair<std::uint64_t, int>>> tip_paths(const YuleTree& t) {
  const std::uint64_t n = t.tips();
  std::vector<std::vector<std::pair<std::uint64_t, int>>> path(n + 1);  // by lineage label
  for (std::uint64_t k = 1; k < n; ++k) {
    const std::uint32_t s = t.split_lineage(k);
    path[k + 1] = path[s];
    path[s].emplace_back(k, 0);
    path[k + 1].emplace_back(k, 1);
  }
  path.erase(path.begin());
  return path;
}

// Event at which two tips' paths diverge (their most recent common ancestor).
inline std::uint64_t mrca_event(const std::vector<std::pair<std::uint64_t, int>>& a,
                                const std::vector<std::pair<std::uint64_t, int>>& b) {
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
    if (a[i] != b[i]) return a[i].first;
  return 0;
}

inline double pair_mean_exp_all_pairs(const YuleTree& t, double y) {
  const auto paths = tip_paths(t);
  const std::uint64_t n = t.tips();
  double sum = 0.0;
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t j = i + 1; j < n; ++j) {
      double tau = 0.0;
      for (std::uint64_t k = mrca_event(paths[i], paths[j]) + 1; k <= n; ++k) tau += t.period(k);
      sum += std::exp(-y * tau);
    }
  return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

// (1/n^2) * sum of the full normalized conditional covariance matrix.
inline double cond_var_matrix(const YuleTree& t, const YouParams& p, const JumpRealization* jumps) {
  const auto paths = tip_paths(t);
  const std::uint64_t n = t.tips();
  const double a = p.alpha;
  double height = 0.0;
  for (std::uint64_t k = 1; k <= n; ++k) height += t.period(k);
  double total = 0.0;
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t j = 0; j < n; ++j) {
      double tau = 0.0;
      if (i != j)
        for (std::uint64_t k = mrca_event(paths[i], paths[j]) + 1; k <= n; ++k) tau += t.period(k);
      double c = std::exp(-2.0 * a * tau) - std::exp(-2.0 * a * height);
      if (jumps != nullptr) {
        // Shared jumps: every (event, side) on both root-to-tip paths.
        for (const auto& step : paths[i]) {
          if (!jumps->jumped[step.first - 1][step.second]) continue;
          if (std::find(paths[j].begin(), paths[j].end(), step) == paths[j].end()) continue;
          double r = 0.0;
          for (std::uint64_t k = step.first + 1; k <= n; ++k) r += t.period(k);
          c += p.normalization() * jumps->variance[step.first - 1] * std::exp(-2.0 * a * r);
        }
      }
      total += c;
    }
  return total / (static_cast<double>(n) * static_cast<double>(n));
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int depth = 60) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps, int d) {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        const double diff = left + right - whole;
        if (d <= 0 || std::abs(diff) <= 15.0 * eps) return left + right + diff / 15.0;
        return rec(lo, mid, flo, flm, fmid, left, 0.5 * eps, d - 1) +
               rec(mid, hi, fmid, frm, fhi, right, 0.5 * eps, d - 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline YouParams fig_params(double alpha) { return {alpha, 1.0, 1.0 / std::sqrt(2.0 * alpha)}; }

}  // namespace detail

inline CriterionResult criterion_closed_forms() {
  CriterionResult r{1, "closed-form consistency"};
  for (double x : {0.5, 1.0, 2.0, 3.0}) {
    double worst = 0.0, worst_dispatch = 0.0;
    double log_prod = 0.0;  // running product, one factor per n
    for (std::uint64_t n = 1; n <= 10'000; ++n) {
      log_prod -= std::log1p(x / static_cast<double>(n));
      const double prod = std::exp(log_prod);
      worst = std::max(worst, detail::rel_err(b_factor_gamma(n, x), prod));
      worst_dispatch = std::max(worst_dispatch, detail::rel_err(b_factor(n, x), prod));
    }
    r.check(worst <= 1e-10 && worst_dispatch <= 1e-10,
            "b_{n,x} gamma form vs product, n <= 1e4, x = " + detail::num(x) +
                ": max rel err " + detail::num(std::max(worst, worst_dispatch)));
  }
  for (double y : {1.5, 2.0, 3.0}) {
    const double got = laplace_pair_coalescence(2, y), want = 2.0 / (2.0 + y);
    r.check(std::abs(got - want) <= 1e-12, "pair transform at n = 2, y = " + detail::num(y) + ": " +
                                               detail::num(got) + " vs 2/(2+y) = " + detail::num(want));
  }
  return r;
}

inline CriterionResult criterion_brute_force(std::uint64_t seed = 20240601) {
  CriterionResult r{2, "brute-force tree oracles"};
  std::mt19937_64 rng(seed);
  double worst_pair = 0.0;
  for (std::uint64_t n = 2; n <= 64; ++n)
    for (int rep = 0; rep < 3; ++rep) {
      const YuleTree t = YuleTree::sample(n, rng);
      for (double y : {0.7, 1.0, 2.0, 3.5})
        worst_pair = std::max(worst_pair, std::abs(t.pair_mean_exp(y) - detail::pair_mean_exp_all_pairs(t, y)));
    }
  r.check(worst_pair <= 1e-12, "pair_mean_exp node counts vs all pairs, n <= 64: max abs err " +
                                   detail::num(worst_pair));

  double worst_you = 0.0, worst_youj = 0.0;
  std::uniform_int_distribution<std::uint64_t> tips(2, 32);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const std::uint64_t n = tips(rng);
    const YouParams p{0.25 + 2.0 * unit(rng), 0.5 + unit(rng), unit(rng)};
    const YuleTree t = YuleTree::sample(n, rng);
    worst_you = std::max(worst_you, std::abs(conditional_moments_you(t, p).cond_var -
                                             detail::cond_var_matrix(t, p, nullptr)));
    std::vector<JumpRate> rates(n - 1);
    for (auto& jr : rates) jr = {unit(rng), 2.0 * unit(rng)};
    const JumpRealization j = sample_jumps(t, JumpSchedule::per_event(rates), rng);
    worst_youj = std::max(worst_youj, std::abs(conditional_moments_youj(t, j, p).cond_var -
                                               detail::cond_var_matrix(t, p, &j)));
  }
  r.check(worst_you <= 1e-10, "conditional variance vs covariance matrix, 100 trees n <= 32: max abs err " +
                                  detail::num(worst_you));
  r.check(worst_youj <= 1e-10, "conditional variance with jumps vs covariance matrix: max abs err " +
                                   detail::num(worst_youj));
  return r;
}

inline CriterionResult criterion_monte_carlo(unsigned workers, std::uint64_t replicates = 100'000,
                                             std::uint64_t seed = 31337) {
  CriterionResult r{3, "Monte Carlo vs closed forms (|z| <= 4)"};
  struct Case {
    Model model;
    std::uint64_t n;
    double alpha;
    double p;
  };
  for (const Case& c : {Case{Model::you, 50, 1.0, 0.0}, Case{Model::you, 100, 1.0, 0.0},
                        Case{Model::you, 200, 0.5, 0.0}, Case{Model::youj, 50, 1.0, 0.5}}) {
    ExperimentConfig cfg;
    cfg.model = c.model;
    cfg.n = c.n;
    cfg.params = detail::fig_params(c.alpha);
    if (c.model == Model::youj) cfg.schedule = JumpSchedule::constant(c.p, 1.0);
    cfg.replicates = replicates;
    cfg.seed = seed;
    cfg.workers = workers;
    for (const auto& chk : oracle_checks(cfg))
      r.check(chk.pass, std::string(to_string(c.model)) + " alpha=" + detail::num(c.alpha) + ": " + chk.name +
                            ": closed " + detail::num(chk.closed_form) + ", MC " + detail::num(chk.estimate.value) +
                            " +- " + detail::num(chk.estimate.se) + ", z = " + detail::num(chk.z));
  }
  return r;
}

inline CriterionResult criterion_limits() {
  CriterionResult r{4, "limit reproduction"};
  const JumpSchedule jumps = JumpSchedule::constant(0.5, 1.0);
  for (double a : {1.0, 2.0}) {
    const YouParams p = detail::fig_params(a);
    const std::uint64_t n = 100'000;
    const double got = static_cast<double>(n) * sigma2_n_you(n, p);
    const double want = (2.0 * a + 1.0) / (2.0 * a - 1.0);
    r.check(detail::rel_err(got, want) <= 0.02, "YOU alpha=" + detail::num(a) + ": n sigma_n^2 at n=1e5 = " +
                                                    detail::num(got) + " vs " + detail::num(want) +
                                                    " (rel " + detail::num(detail::rel_err(got, want)) + ", tol 0.02)");
    const double got_j = static_cast<double>(n) * sigma2_n_youj(n, p, jumps);
    const double want_j = want * (1.0 + 2.0 * 0.5 * 1.0 / p.sigma_a2);
    r.check(detail::rel_err(got_j, want_j) <= 0.05,
            "YOUj p=1/2 alpha=" + detail::num(a) + ": n sigma_n^2 at n=1e5 = " + detail::num(got_j) + " vs " +
                detail::num(want_j) + " (rel " + detail::num(detail::rel_err(got_j, want_j)) + ", tol 0.05)");
  }
  {
    const YouParams p = detail::fig_params(0.5);
    const std::uint64_t n = 1'000'000;
    const double scale = static_cast<double>(n) / std::log(static_cast<double>(n));
    const double got = scale * sigma2_n_you(n, p);
    r.check(detail::rel_err(got, 2.0) <= 0.05, "YOU alpha=1/2: (n/ln n) sigma_n^2 at n=1e6 = " + detail::num(got) +
                                                   " vs 2 (rel " + detail::num(detail::rel_err(got, 2.0)) +
                                                   ", tol 0.05)");
    const double want_j = 2.0 + 4.0 * 0.5 * 1.0 / p.sigma_a2;
    const double got_j = scale * sigma2_n_youj(n, p, jumps);
    r.check(detail::rel_err(got_j, want_j) <= 0.05,
            "YOUj p=1/2 alpha=1/2: (n/ln n) sigma_n^2 at n=1e6 = " + detail::num(got_j) + " vs " +
                detail::num(want_j) + " (rel " + detail::num(detail::rel_err(got_j, want_j)) + ", tol 0.05)");
  }
  return r;
}

inline CriterionResult criterion_rates() {
  CriterionResult r{5, "bound-curve rates"};
  std::vector<std::uint64_t> grid;
  std::vector<double> xs;
  for (int q = 16; q <= 28; ++q) {  // quarter decades, 1e4 .. 1e7
    grid.push_back(static_cast<std::uint64_t>(std::llround(std::pow(10.0, q / 4.0))));
    xs.push_back(static_cast<double>(grid.back()));
  }
  auto slope = [&](double a, DistanceKind d) {
    std::vector<double> ys;
    for (const auto& pt : bound_curve(Model::you, detail::fig_params(a), JumpSchedule::none(), d, grid))
      ys.push_back(pt.report.total);
    return detail::loglog_slope(xs, ys);
  };
  struct Case {
    double alpha;
    DistanceKind d;
    double want;
  };
  for (const Case& c : {Case{0.6, DistanceKind::kolmogorov, -0.2}, Case{1.0, DistanceKind::kolmogorov, -0.5},
                        Case{1.0, DistanceKind::wasserstein, -0.75}}) {
    const double got = slope(c.alpha, c.d);
    r.check(std::abs(got - c.want) <= 0.05, "YOU " + std::string(to_string(c.d)) + " alpha=" + detail::num(c.alpha) +
                                                ": log-log slope " + detail::num(got) + " vs " + detail::num(c.want));
  }
  const YouParams half = detail::fig_params(0.5);
  auto scaled = [&](std::uint64_t n) {
    return bound_at(Model::you, half, JumpSchedule::none(), DistanceKind::kolmogorov, n).report.total *
           std::log(static_cast<double>(n));
  };
  const double lo = scaled(100'000), hi = scaled(10'000'000);
  const double var = std::abs(hi - lo) / std::max(lo, hi);
  r.check(var < 0.03, "YOU kolmogorov alpha=1/2: total * ln n = " + detail::num(lo) + " (1e5), " + detail::num(hi) +
                          " (1e7), relative change " + detail::num(var));
  return r;
}

inline CriterionResult criterion_sandwich(unsigned workers, std::uint64_t replicates = 200'000,
                                          std::uint64_t seed = 42) {
  CriterionResult r{6, "empirical distances inside the bounds"};
  struct Case {
    Model model;
    double alpha;
  };
  for (const Case& c : {Case{Model::you, 1.0}, Case{Model::you, 0.5}, Case{Model::youj, 1.0}}) {
    ExperimentConfig cfg;
    cfg.model = c.model;
    cfg.n = 200;
    cfg.params = detail::fig_params(c.alpha);
    if (c.model == Model::youj) cfg.schedule = JumpSchedule::constant(1.0, 1.0);
    cfg.replicates = replicates;
    cfg.seed = seed;
    cfg.workers = workers;
    const SandwichReport s = run_sandwich(cfg);
    const std::string tag = std::string(to_string(c.model)) + " alpha=" + detail::num(c.alpha) + " n=200: ";
    r.check(s.empirical_dk <= s.upper_dk.total + s.dkw_band,
            tag + "d_K " + detail::num(s.empirical_dk) + " <= upper " + detail::num(s.upper_dk.total) + " + band " +
                detail::num(s.dkw_band) + " (lower " + detail::num(s.lower_dk.total) + ", " +
                std::string(to_string(s.verdict_dk)) + ")");
    r.check(s.empirical_dw <= s.upper_dw.total + 3.0 * s.bootstrap_se_dw,
            tag + "d_W " + detail::num(s.empirical_dw) + " <= upper " + detail::num(s.upper_dw.total) + " + 3 SE " +
                detail::num(3.0 * s.bootstrap_se_dw) + " (lower " + detail::num(s.lower_dw.total) + ", " +
                std::string(to_string(s.verdict_dw)) + ")");
    r.check(s.lower_dk.total <= s.upper_dk.total && s.lower_dw.total <= s.upper_dw.total,
            tag + "lower bound <= upper bound for both distances");
  }
  return r;
}

inline CriterionResult criterion_kappa() {
  CriterionResult r{7, "kappa and lower-bound constants"};
  bool zero_ok = true, env_ok = true;
  for (double s2 : {0.05, 0.5, 1.0, 3.0}) {
    zero_ok = zero_ok && kappa(s2, s2) == 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double x = 20.0 * s2 * i / 999.0;
      const double k = kappa(x, s2);
      const double q = (s2 - x) * (s2 - x) / s2;
      if (k > 27.0 / 8.0 * q * (1.0 + 1e-12) + 1e-300) env_ok = false;
      if (x <= s2 && k < 3.0 / std::pow(2.0, 3.5) * q * (1.0 - 1e-12)) env_ok = false;
    }
  }
  r.check(zero_ok, "kappa(sigma^2) = 0");
  r.check(env_ok, "quadratic envelopes of kappa on a 1000-point grid");
  // Even integrand; unit panels so no panel starts out looking flat.
  double quad = 0.0;
  for (int k = 0; k < 40; ++k)
    quad += 2.0 * detail::adaptive_simpson(
                      [](double x) { return std::abs(2.0 * x * x * x - 5.0 * x) * std::exp(-0.5 * x * x); }, k,
                      k + 1.0, 1e-15);
  const double ck = lower_bound_constant(DistanceKind::kolmogorov);
  r.check(std::abs(ck - quad) <= 1e-9,
          "C_K antiderivative " + detail::num(ck) + " vs quadrature " + detail::num(quad) + ", |diff| " +
              detail::num(std::abs(ck - quad)));
  return r;
}

inline CriterionResult criterion_determinism(std::uint64_t replicates = 200'000, std::uint64_t seed = 42) {
  CriterionResult r{8, "determinism across worker counts"};
  ExperimentConfig cfg;
  cfg.model = Model::you;
  cfg.n = 200;
  cfg.params = detail::fig_params(1.0);
  cfg.replicates = replicates;
  cfg.seed = seed;
  std::string reference;
  for (unsigned w : {1u, 4u, 8u}) {
    cfg.workers = w;
    const std::string doc = to_json(run_simulation(cfg)).dump(2);
    if (reference.empty()) {
      reference = doc;
      r.check(!doc.empty(), "workers=1 reference document, " + std::to_string(doc.size()) + " bytes");
    } else {
      r.check(doc == reference, "workers=" + std::to_string(w) + " JSON byte-identical to workers=1");
    }
  }
  return r;
}

enum class Level { quick, full };

inline CriterionResult timed(const std::function<CriterionResult()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r = f();
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Quick runs the analytic and brute-force criteria; full adds Monte Carlo.
inline std::vector<std::function<CriterionResult()>> suite(Level level, unsigned workers) {
  std::vector<std::function<CriterionResult()>> out = {criterion_closed_forms, [] { return criterion_brute_force(); }};
  if (level == Level::full) out.push_back([workers] { return criterion_monte_carlo(workers); });
  out.push_back(criterion_limits);
  out.push_back(criterion_rates);
  if (level == Level::full) out.push_back([workers] { return criterion_sandwich(workers); });
  out.push_back(criterion_kappa);
  if (level == Level::full) out.push_back([] { return criterion_determinism(); });
  return out;
}

}  // namespace steinmix::verify
