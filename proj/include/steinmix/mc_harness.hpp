#pragma once

// Replicated Monte Carlo over Yule trees: moment-summary estimates, empirical
// Kolmogorov and Wasserstein distances of the standardized trait average, the
// upper/lower bound sandwich, and closed-form-vs-simulation checks.
//
// Every replicate owns a generator seeded from (seed, replicate index), results
// land in a slot indexed by replicate and all reductions run in index order, so
// output does not depend on the worker count.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "steinmix/special_functions.hpp"
#include "steinmix/stein_bounds.hpp"
#include "steinmix/you_analytic.hpp"
#include "steinmix/yule_tree.hpp"

namespace steinmix {

struct ExperimentConfig {
  Model model = Model::you;
  std::uint64_t n = 200;
  YouParams params{};
  JumpSchedule schedule{};
  std::uint64_t replicates = 100'000;
  std::uint64_t seed = 0;
  unsigned workers = 1;

  void validate() const {
    detail::require(n >= 2, "n must be >= 2");
    detail::require(replicates >= 2, "replicates must be >= 2");
    detail::require(workers >= 1, "workers must be >= 1");
    params.validate();
    schedule.validate();
    if (model == Model::you)
      detail::require(schedule.mode() == JumpSchedule::Mode::none, "model YOU takes no jump schedule");
    if (!schedule.covers(n)) throw std::invalid_argument("jump schedule shorter than n-1 events");
  }
};

struct EstimateWithSE {
  double value = 0.0;
  double se = 0.0;
  std::uint64_t r_used = 0;
};

/// Generator for replicate `index` of a run seeded with `seed`.
inline std::mt19937_64 replicate_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Evaluates fn(index, rng) for index = 0..count-1 across `workers` threads.
/// Slot i of the result always holds replicate i.
template <class T, class Fn>
std::vector<T> run_replicates(std::uint64_t count, std::uint64_t seed, unsigned workers, Fn fn) {
  std::vector<T> out(count);
  auto work = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      auto rng = replicate_stream(seed, i);
      out[i] = fn(i, rng);
    }
  };
  const std::uint64_t w = std::max<std::uint64_t>(1, std::min<std::uint64_t>(workers, count));
  if (w == 1) {
    work(0, count);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(w);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::uint64_t t = 0; t < w; ++t) {
    const std::uint64_t begin = count * t / w, end = count * (t + 1) / w;
    pool.emplace_back([&, begin, end] {
      try {
        work(begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// What one replicate records.
struct ReplicateDraw {
  double cond_mean = 0.0;
  double cond_var = 0.0;
  double ybar = 0.0;
};

/// Tree, then jumps, then the trait draw, all from one stream.
template <class Urbg>
ReplicateDraw draw_replicate(const ExperimentConfig& cfg, Urbg& rng) {
  const YuleTree tree = YuleTree::sample(cfg.n, rng);
  ConditionalMoments m;
  if (cfg.model == Model::youj) {
    const JumpRealization jumps = sample_jumps(tree, cfg.schedule, rng);
    m = conditional_moments_youj(tree, jumps, cfg.params);
  } else {
    m = conditional_moments_you(tree, cfg.params);
  }
  return {m.cond_mean, m.cond_var, sample_ybar(m, rng)};
}

inline std::vector<ReplicateDraw> simulate_replicates(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_replicates<ReplicateDraw>(cfg.replicates, cfg.seed, cfg.workers,
                                       [&](std::uint64_t, std::mt19937_64& rng) { return draw_replicate(cfg, rng); });
}

// ---- estimators -----------------------------------------------------------

inline EstimateWithSE mean_estimate(const std::vector<double>& x) {
  detail::require(x.size() >= 2, "need at least two values");
  const double r = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= r;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (r - 1.0) / r), x.size()};
}

inline constexpr std::size_t kJackknifeBatches = 32;

/// Unbiased sample variance with a delete-one-batch jackknife SE.
inline EstimateWithSE variance_estimate(const std::vector<double>& x) {
  detail::require(x.size() >= 2, "need at least two values");
  const std::size_t r = x.size();
  double centre = 0.0;
  for (double v : x) centre += v;
  centre /= static_cast<double>(r);

  const std::size_t batches = std::min(kJackknifeBatches, r);
  std::vector<double> s1(batches, 0.0), s2(batches, 0.0);
  std::vector<std::size_t> cnt(batches, 0);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t b = i * batches / r;
    const double d = x[i] - centre;
    s1[b] += d;
    s2[b] += d * d;
    ++cnt[b];
  }
  auto var_of = [](double sum1, double sum2, double count) {
    return (sum2 - sum1 * sum1 / count) / (count - 1.0);
  };
  double t1 = 0.0, t2 = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    t1 += s1[b];
    t2 += s2[b];
  }
  const double value = var_of(t1, t2, static_cast<double>(r));

  double se = 0.0;
  if (batches >= 2 && r - r / batches >= 2) {
    std::vector<double> loo(batches);
    double loo_mean = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      loo[b] = var_of(t1 - s1[b], t2 - s2[b], static_cast<double>(r - cnt[b]));
      loo_mean += loo[b];
    }
    loo_mean /= static_cast<double>(batches);
    double acc = 0.0;
    for (double v : loo) acc += (v - loo_mean) * (v - loo_mean);
    se = std::sqrt(acc * static_cast<double>(batches - 1) / static_cast<double>(batches));
  }
  return {value, se, r};
}

struct MomentEstimates {
  EstimateWithSE ev, vv, ve, mean;
};

inline MomentEstimates summarize_moments(const std::vector<ReplicateDraw>& draws) {
  std::vector<double> cv(draws.size()), cm(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    cv[i] = draws[i].cond_var;
    cm[i] = draws[i].cond_mean;
  }
  return {mean_estimate(cv), variance_estimate(cv), variance_estimate(cm), mean_estimate(cm)};
}

inline MomentEstimates estimate_moment_summary(const ExperimentConfig& cfg) {
  return summarize_moments(simulate_replicates(cfg));
}

// ---- empirical distances ----------------------------------------------------

/// One-sample Kolmogorov-Smirnov statistic against N(0,1).
inline double empirical_dk(std::vector<double> samples) {
  detail::require(!samples.empty(), "empirical_dk: empty sample");
  std::sort(samples.begin(), samples.end());
  const double r = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = std_normal_cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / r - f, f - static_cast<double>(i) / r});
  }
  return std::clamp(d, 0.0, 1.0);
}

namespace detail {
// G(z) = z Phi(z) + phi(z), an antiderivative of Phi.
inline double phi_antiderivative(double z) { return z * std_normal_cdf(z) + std_normal_pdf(z); }

// Integral of |level - Phi(x)| over [a, b] for a <= b.
inline double segment_l1(double a, double b, double level) {
  const double fa = std_normal_cdf(a), fb = std_normal_cdf(b);
  auto signed_area = [level](double lo, double hi) {
    return level * (hi - lo) - (phi_antiderivative(hi) - phi_antiderivative(lo));
  };
  if (fa < level && level < fb) {
    const double c = std::clamp(std_normal_quantile(level), a, b);
    return std::abs(signed_area(a, c)) + std::abs(signed_area(c, b));
  }
  return std::abs(signed_area(a, b));
}
}  // namespace detail

/// L1 distance between the empirical CDF and Phi (1-D Wasserstein distance).
inline double empirical_dw(std::vector<double> samples) {
  detail::require(!samples.empty(), "empirical_dw: empty sample");
  std::sort(samples.begin(), samples.end());
  const std::size_t r = samples.size();
  double total = detail::phi_antiderivative(samples.front()) + detail::phi_antiderivative(-samples.back());
  for (std::size_t i = 0; i + 1 < r; ++i) {
    if (samples[i + 1] == samples[i]) continue;
    total += detail::segment_l1(samples[i], samples[i + 1], static_cast<double>(i + 1) / static_cast<double>(r));
  }
  return std::max(total, 0.0);
}

/// Half-width of the 99% Dvoretzky-Kiefer-Wolfowitz band.
inline double dkw_band(std::uint64_t r, double level = 0.99) {
  detail::require(r >= 1, "dkw_band: r must be >= 1");
  return std::sqrt(std::log(2.0 / (1.0 - level)) / (2.0 * static_cast<double>(r)));
}

inline constexpr std::uint64_t kBootstrapResamples = 40;
inline constexpr std::uint64_t kBootstrapSeedSalt = 0x9e3779b97f4a7c15ULL;

/// Bootstrap SE of empirical_dw; resample b uses stream (seed ^ salt, b).
inline double bootstrap_se_dw(const std::vector<double>& samples, std::uint64_t seed, unsigned workers,
                              std::uint64_t resamples = kBootstrapResamples) {
  detail::require(samples.size() >= 2 && resamples >= 2, "bootstrap needs >= 2 samples and resamples");
  const auto stats = run_replicates<double>(
      resamples, seed ^ kBootstrapSeedSalt, workers, [&](std::uint64_t, std::mt19937_64& rng) {
        std::vector<double> re(samples.size());
        for (auto& v : re) v = samples[uniform_below(rng, samples.size())];
        return empirical_dw(std::move(re));
      });
  return mean_estimate(stats).se * std::sqrt(static_cast<double>(resamples));
}

// ---- sandwich ---------------------------------------------------------------

enum class Verdict { pass, fail, inconclusive };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "?";
}

/// Below this n a miss of the lower bound is reported as inconclusive.
inline constexpr std::uint64_t kLowerBoundTrustN = 1000;

inline Verdict sandwich_verdict(double empirical, double lower, double upper, double slack, std::uint64_t n) {
  if (empirical > upper + slack) return Verdict::fail;
  if (empirical < lower - slack) return n < kLowerBoundTrustN ? Verdict::inconclusive : Verdict::fail;
  return Verdict::pass;
}

struct SandwichReport {
  double empirical_dk = 0.0;
  double empirical_dw = 0.0;
  double dkw_band = 0.0;
  double bootstrap_se_dw = 0.0;
  EstimateWithSE kappa_mean;  // MC estimate of E(kappa(V(X|G)))
  BoundReport upper_dk, upper_dw, lower_dk, lower_dw;
  Verdict verdict_dk = Verdict::pass;
  Verdict verdict_dw = Verdict::pass;
  MomentEstimates moments;
};

inline SandwichReport sandwich_from_draws(const ExperimentConfig& cfg, const std::vector<ReplicateDraw>& draws) {
  require_normal_regime(cfg.params.alpha);
  detail::require(cfg.schedule.mode() != JumpSchedule::Mode::per_event,
                  "sandwich needs a closed-form bound; per-event schedules have none");
  const double mu = mu_n(cfg.n, cfg.params);
  const double s2 = cfg.model == Model::you ? sigma2_n_you(cfg.n, cfg.params)
                                            : sigma2_n_youj(cfg.n, cfg.params, cfg.schedule);
  const double s = std::sqrt(s2);

  std::vector<double> z(draws.size()), kap(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    z[i] = (draws[i].ybar - mu) / s;
    kap[i] = kappa(std::max(draws[i].cond_var, 0.0), s2);
  }

  SandwichReport rep;
  rep.moments = summarize_moments(draws);
  rep.empirical_dk = empirical_dk(z);
  rep.empirical_dw = empirical_dw(z);
  rep.dkw_band = dkw_band(draws.size());
  rep.bootstrap_se_dw = bootstrap_se_dw(z, cfg.seed, cfg.workers);
  rep.kappa_mean = mean_estimate(kap);

  rep.upper_dk = bound_at(cfg.model, cfg.params, cfg.schedule, DistanceKind::kolmogorov, cfg.n).report;
  rep.upper_dw = bound_at(cfg.model, cfg.params, cfg.schedule, DistanceKind::wasserstein, cfg.n).report;
  const LowerBoundInputs lb{ve_exact(cfg.n, cfg.params), rep.kappa_mean.value, s2};
  rep.lower_dk = lower_bound(lb, DistanceKind::kolmogorov);
  rep.lower_dw = lower_bound(lb, DistanceKind::wasserstein);

  rep.verdict_dk =
      sandwich_verdict(rep.empirical_dk, rep.lower_dk.total, rep.upper_dk.total, rep.dkw_band, cfg.n);
  rep.verdict_dw = sandwich_verdict(rep.empirical_dw, rep.lower_dw.total, rep.upper_dw.total,
                                    3.0 * rep.bootstrap_se_dw, cfg.n);
  return rep;
}

inline SandwichReport run_sandwich(const ExperimentConfig& cfg) {
  cfg.validate();
  require_normal_regime(cfg.params.alpha);
  return sandwich_from_draws(cfg, simulate_replicates(cfg));
}

// ---- closed form vs simulation ------------------------------------------------

struct OracleCheck {
  std::string name;
  double closed_form = 0.0;
  EstimateWithSE estimate;
  double z = 0.0;
  bool pass = false;
};

inline constexpr double kOracleZ = 4.0;

inline OracleCheck make_check(std::string name, double closed_form, const EstimateWithSE& est) {
  OracleCheck c{std::move(name), closed_form, est, 0.0, false};
  const double diff = est.value - closed_form;
  if (est.se > 0.0) {
    c.z = diff / est.se;
  } else {
    const double scale = std::max({std::abs(closed_form), std::abs(est.value), 1e-300});
    c.z = std::abs(diff) <= 1e-12 * scale ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  c.pass = std::abs(c.z) <= kOracleZ;
  return c;
}

/// Per-replicate statistics for the oracle checks.
struct OracleDraw {
  double height = 0.0;
  std::array<double, 3> pair{};  // pair_mean_exp at the probe y values
  double cond_mean = 0.0;
  double cond_var = 0.0;
  double jump_lineage = 0.0;
  double jump_pair = 0.0;
};

/// Every closed form that applies to `cfg`, each against its MC estimate:
/// height Laplace transform at x in {1, alpha, 2 alpha}, pair-coalescence
/// transform at y in {1, 2, 2 alpha} (y >= 1), E(V), V(E), and for constant
/// jump schedules the two jump sums.
inline std::vector<OracleCheck> oracle_checks(const ExperimentConfig& cfg) {
  cfg.validate();
  const double a = cfg.params.alpha;
  std::vector<double> xs{1.0};
  for (double x : {a, 2.0 * a})
    if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
  std::vector<double> ys{1.0, 2.0};
  if (2.0 * a > 1.0 && 2.0 * a != 2.0) ys.push_back(2.0 * a);

  const auto draws = run_replicates<OracleDraw>(
      cfg.replicates, cfg.seed, cfg.workers, [&](std::uint64_t, std::mt19937_64& rng) {
        OracleDraw d;
        const YuleTree tree = YuleTree::sample(cfg.n, rng);
        d.height = tree.height();
        for (std::size_t j = 0; j < ys.size(); ++j) d.pair[j] = tree.pair_mean_exp(ys[j]);
        ConditionalMoments m = conditional_moments_you(tree, cfg.params);
        if (cfg.model == Model::youj) {
          const JumpRealization jumps = sample_jumps(tree, cfg.schedule, rng);
          const JumpExposure e = jump_exposure(tree, jumps, cfg.params);
          d.jump_lineage = e.lineage;
          d.jump_pair = e.pair;
          m.cond_var += jump_variance_part(tree, jumps, cfg.params);
        }
        d.cond_mean = m.cond_mean;
        d.cond_var = m.cond_var;
        return d;
      });

  auto column = [&](auto get) {
    std::vector<double> v(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) v[i] = get(draws[i]);
    return v;
  };
  const std::string at = "(n=" + std::to_string(cfg.n) + ")";
  auto fmt = [](double v) {
    std::string s = std::to_string(v);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  };

  std::vector<OracleCheck> out;
  for (double x : xs)
    out.push_back(make_check("E exp(-" + fmt(x) + " U_n) vs b_{n,x} " + at, b_factor(cfg.n, x),
                             mean_estimate(column([x](const OracleDraw& d) { return std::exp(-x * d.height); }))));
  for (std::size_t j = 0; j < ys.size(); ++j) {
    const double y = ys[j];
    out.push_back(make_check("E_pairs exp(-" + fmt(y) + " tau) vs closed form " + at,
                             laplace_pair_coalescence(cfg.n, y),
                             mean_estimate(column([j](const OracleDraw& d) { return d.pair[j]; }))));
  }

  const bool closed_ev = cfg.model == Model::you || cfg.schedule.mode() != JumpSchedule::Mode::per_event;
  if (closed_ev && classify_regime(a) != Regime::slow) {
    const double ev = cfg.model == Model::you ? sigma2_n_you(cfg.n, cfg.params)
                                              : sigma2_n_youj(cfg.n, cfg.params, cfg.schedule);
    out.push_back(make_check("E V(Ybar|G) vs sigma_n^2 " + at, ev,
                             mean_estimate(column([](const OracleDraw& d) { return d.cond_var; }))));
  }
  out.push_back(make_check("V E(Ybar|G) vs delta^2 (b_{n,2a} - b_{n,a}^2) " + at, ve_exact(cfg.n, cfg.params),
                           variance_estimate(column([](const OracleDraw& d) { return d.cond_mean; }))));

  if (cfg.model == Model::youj && cfg.schedule.is_constant()) {
    const JumpRate r = cfg.schedule.constant_rate();
    out.push_back(make_check("E sum sigma_c^2 phi* vs closed form " + at,
                             r.sigma_c2 * jump_sum_mean_star(cfg.n, a, r.p),
                             mean_estimate(column([](const OracleDraw& d) { return d.jump_lineage; }))));
    if (classify_regime(a) != Regime::slow)
      out.push_back(make_check("E sum sigma_c^2 phi vs closed form " + at, r.sigma_c2 * jump_sum_mean(cfg.n, a, r.p),
                               mean_estimate(column([](const OracleDraw& d) { return d.jump_pair; }))));
  }
  return out;
}

}  // namespace steinmix
