#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "steinmix/you_analytic.hpp"
#include "steinmix/yule_tree.hpp"

namespace sm = steinmix;
using sm::JumpSchedule;
using sm::Model;
using sm::YouParams;

namespace {

// E exp(-y (T_{k+1} + ... + T_n)) with T_j ~ Exp(j) independent.
double tail_transform(std::uint64_t k, std::uint64_t n, double y) {
  double v = 1.0;
  for (std::uint64_t j = k + 1; j <= n; ++j) v *= static_cast<double>(j) / (static_cast<double>(j) + y);
  return v;
}

// Averages over every equally likely split sequence of an n-tip tree;
// f receives the tree (unit times, only its topology is used).
template <class F>
double average_over_topologies(std::uint64_t n, F f) {
  std::vector<std::uint32_t> splits(n - 1, 1);
  double sum = 0.0;
  std::uint64_t count = 0;
  while (true) {
    sm::YuleTree t(std::vector<double>(n, 1.0), splits);
    sum += f(t);
    ++count;
    std::size_t i = 0;
    while (i < splits.size() && splits[i] == i + 1) splits[i++] = 1;
    if (i == splits.size()) break;
    ++splits[i];
  }
  return sum / static_cast<double>(count);
}

double exact_pair_transform(std::uint64_t n, double y) {
  const double pairs = 0.5 * static_cast<double>(n * (n - 1));
  return average_over_topologies(n, [&](const sm::YuleTree& t) {
    double s = 0.0;
    for (std::uint64_t k = 1; k <= t.events(); ++k)
      s += static_cast<double>(t.tips_below(k, 0) * t.tips_below(k, 1)) * tail_transform(k, n, y);
    return s / pairs;
  });
}

// E over topology and times of sum_k p (d_k / n or d_k(d_k-1)/(n(n-1))) e^{-y R_k}.
double exact_jump_sum(std::uint64_t n, double y, double p, bool pair) {
  const double nd = static_cast<double>(n);
  return average_over_topologies(n, [&](const sm::YuleTree& t) {
    double s = 0.0;
    for (std::uint64_t k = 1; k <= t.events(); ++k)
      for (int side = 0; side < 2; ++side) {
        const double d = static_cast<double>(t.tips_below(k, side));
        s += p * (pair ? d * (d - 1.0) / (nd * (nd - 1.0)) : d / nd) * tail_transform(k, n, y);
      }
    return s;
  });
}

YouParams params_for(double alpha) { return {alpha, 1.0, 1.0 / std::sqrt(2.0 * alpha)}; }

}  // namespace

TEST(Enumeration, TopologyCountIsFactorial) {
  std::uint64_t seen = 0;
  average_over_topologies(6, [&](const sm::YuleTree&) {
    ++seen;
    return 0.0;
  });
  EXPECT_EQ(seen, 120u);
}

TEST(PairTransform, MatchesExactEnumeration) {
  for (std::uint64_t n = 2; n <= 7; ++n)
    for (double y : {1.0, 1.5, 2.0, 3.0, 4.0})
      EXPECT_NEAR(sm::laplace_pair_coalescence(n, y), exact_pair_transform(n, y), 1e-14) << n << " " << y;
}

TEST(PairTransform, BranchesAgreeNearOne) {
  for (std::uint64_t n : {5u, 100u, 10000u}) {
    const double at_one = sm::laplace_pair_coalescence(n, 1.0);
    EXPECT_NEAR(sm::laplace_pair_coalescence(n, 1.0 + 1e-6), at_one, 5e-6) << n;
  }
  EXPECT_THROW(sm::laplace_pair_coalescence(10, 0.5), sm::unsupported_regime);
  EXPECT_THROW(sm::laplace_pair_coalescence(1, 2.0), sm::domain_error);
}

TEST(Sigma2, MatchesExactEnumeration) {
  for (double a : {0.5, 0.75, 1.0, 2.0}) {
    const YouParams p = params_for(a);
    const double y = 2.0 * a;
    for (std::uint64_t n = 2; n <= 7; ++n) {
      const double nd = static_cast<double>(n);
      const double want = 1.0 / nd + (1.0 - 1.0 / nd) * exact_pair_transform(n, y) - tail_transform(0, n, y);
      EXPECT_NEAR(sm::sigma2_n_you(n, p), want, 1e-14) << a << " " << n;
    }
  }
}

TEST(Sigma2, ScaleFreeInSigmaA2AndX0) {
  EXPECT_DOUBLE_EQ(sm::sigma2_n_you(50, {1.0, 1.0, 0.0}), sm::sigma2_n_you(50, {1.0, 9.0, 4.0}));
}

TEST(Sigma2, LeadingOrder) {
  // n sigma_n^2 -> (2a+1)/(2a-1) for a > 1/2.
  EXPECT_NEAR(1e7 * sm::sigma2_n_you(10'000'000, params_for(1.0)), 3.0, 1e-5);
  EXPECT_NEAR(1e7 * sm::sigma2_n_you(10'000'000, params_for(2.0)), 5.0 / 3.0, 1e-5);
}

TEST(JumpSums, MatchExactEnumeration) {
  for (double a : {0.5, 1.0, 1.5}) {
    for (double p : {0.3, 1.0}) {
      for (std::uint64_t n = 2; n <= 7; ++n) {
        EXPECT_NEAR(sm::jump_sum_mean_star(n, a, p), exact_jump_sum(n, 2.0 * a, p, false), 1e-14)
            << a << " " << p << " " << n;
        EXPECT_NEAR(sm::jump_sum_mean(n, a, p), exact_jump_sum(n, 2.0 * a, p, true), 1e-14)
            << a << " " << p << " " << n;
      }
    }
  }
}

TEST(Youj, ZeroRateReducesToYou) {
  const YouParams p = params_for(1.0);
  for (std::uint64_t n : {10u, 1000u}) {
    EXPECT_EQ(sm::sigma2_n_youj(n, p, JumpSchedule::constant(0.0, 2.0)), sm::sigma2_n_you(n, p));
    EXPECT_EQ(sm::sigma2_n_youj(n, p, JumpSchedule::constant(0.4, 0.0)), sm::sigma2_n_you(n, p));
    EXPECT_EQ(sm::vv_upper_youj(n, p, JumpSchedule::constant(0.0, 2.0)), sm::vv_asymptotic_you(n, p));
  }
}

TEST(Youj, PerEventScheduleHasNoClosedForm) {
  const auto sched = JumpSchedule::per_event({{0.5, 1.0}, {0.5, 1.0}, {0.5, 1.0}});
  EXPECT_THROW(sm::sigma2_n_youj(4, params_for(1.0), sched), sm::domain_error);
  EXPECT_THROW(sm::bound_at(Model::youj, params_for(1.0), sched, sm::DistanceKind::kolmogorov, 4),
               sm::domain_error);
}

TEST(Youj, ScheduleValidation) {
  EXPECT_THROW(JumpSchedule::constant(1.5, 1.0), sm::domain_error);
  EXPECT_THROW(JumpSchedule::constant(0.5, -1.0), sm::domain_error);
  const auto s = JumpSchedule::per_event({{0.1, 1.0}, {0.2, 2.0}});
  EXPECT_TRUE(s.covers(3));
  EXPECT_FALSE(s.covers(4));
  EXPECT_DOUBLE_EQ(s.at(2).p, 0.2);
}

TEST(VvTable, LeadingConstants) {
  const double n = 1000.0;
  const auto u = static_cast<std::uint64_t>(n);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  EXPECT_NEAR(sm::vv_asymptotic_you(u, params_for(0.5)) * n * n, 8.0 * pi2 / 6.0 + 1.0, 1e-10);
  EXPECT_NEAR(sm::vv_asymptotic_you(u, params_for(0.75)) * n * n * n / std::log(n), 36.0, 1e-10);
  EXPECT_NEAR(sm::vv_asymptotic_you(u, params_for(1.0)) * n * n * n, 16.0, 1e-10);
  // 32 a^2 / ((2a-1)(4a-3)(4a-2)) at a = 2 and a = 0.9
  EXPECT_NEAR(sm::vv_asymptotic_you(u, params_for(2.0)) * n * n * n, 128.0 / 90.0, 1e-10);
  EXPECT_NEAR(sm::vv_asymptotic_you(u, params_for(0.9)) * n * n * n, 32.0 * 0.81 / (0.8 * 0.6 * 1.6), 1e-10);

  // a = 0.6: 32 a^2/(2-2a) zeta(4-4a) + (Gamma(4a+1) - Gamma(2a+1))^2, rate n^{-4a}
  const double a = 0.6;
  double z = 0.0;
  for (int k = 1; k < 2'000'000; ++k) z += std::pow(k, -(4.0 - 4.0 * a));
  z += std::pow(2e6, 1.0 - (4.0 - 4.0 * a)) / (4.0 - 4.0 * a - 1.0);
  const double cross = std::tgamma(4.0 * a + 1.0) - std::tgamma(2.0 * a + 1.0);
  const double want = 32.0 * a * a / (2.0 - 2.0 * a) * z + cross * cross;
  EXPECT_NEAR(sm::vv_asymptotic_you(u, params_for(a)) * std::pow(n, 4.0 * a), want, 1e-5 * want);
}

TEST(VvTable, RegimeWindows) {
  EXPECT_EQ(sm::classify_vv_regime(0.5 + 1e-10), sm::VvRegime::half);
  EXPECT_EQ(sm::classify_vv_regime(0.5 + 1e-6), sm::VvRegime::half_to_3q);
  EXPECT_EQ(sm::classify_vv_regime(0.75), sm::VvRegime::three_quarters);
  EXPECT_EQ(sm::classify_vv_regime(0.8), sm::VvRegime::three_quarters_to_one);
  EXPECT_EQ(sm::classify_vv_regime(1.0 - 1e-10), sm::VvRegime::one);
  EXPECT_EQ(sm::classify_vv_regime(3.0), sm::VvRegime::above_one);
}

TEST(Regimes, SlowRegimeIsRejected) {
  try {
    sm::bound_at(Model::you, params_for(0.4), {}, sm::DistanceKind::kolmogorov, 100);
    FAIL() << "expected unsupported_regime";
  } catch (const sm::unsupported_regime& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported regime (no normal limit expected)"), std::string::npos);
  }
  EXPECT_THROW(sm::sigma2_n_you(10, params_for(0.3)), sm::unsupported_regime);
  EXPECT_THROW(sm::limit_distribution(Model::you, params_for(0.49), {}), sm::unsupported_regime);
  EXPECT_EQ(sm::classify_regime(0.5 - 1e-10), sm::Regime::critical);
}

TEST(VarianceOfMean, SmallCases) {
  // n = 1, delta = 1, alpha = 1: b_{1,2} - b_{1,1}^2 = 1/3 - 1/4.
  EXPECT_NEAR(sm::ve_exact(1, params_for(1.0)), 1.0 / 12.0, 1e-16);
  EXPECT_EQ(sm::ve_exact(100, {1.0, 1.0, 0.0}), 0.0);
  EXPECT_NEAR(sm::mu_n(3, {1.0, 2.0, 3.0}), 3.0 * 0.25, 1e-15);  // delta = 3, b_{3,1} = 1/4
  EXPECT_NEAR(sm::ve_exact(1'000'000, params_for(1.0)) / sm::ve_asymptotic(1'000'000, params_for(1.0)), 1.0, 1e-5);
}

TEST(Curves, NonConvergentFlag) {
  const auto jumpy = JumpSchedule::constant(0.5, 1.0);
  const auto fast = sm::bound_at(Model::youj, params_for(1.0), jumpy, sm::DistanceKind::kolmogorov, 1000);
  EXPECT_TRUE(fast.non_convergent);
  EXPECT_TRUE(fast.report.has_note(sm::kNonConvergentNote));
  EXPECT_FALSE(sm::bound_at(Model::youj, params_for(0.5), jumpy, sm::DistanceKind::kolmogorov, 1000).non_convergent);
  EXPECT_FALSE(sm::bound_at(Model::youj, params_for(1.0), JumpSchedule::constant(1.0, 1.0),
                            sm::DistanceKind::kolmogorov, 1000)
                   .non_convergent);
  EXPECT_FALSE(sm::bound_at(Model::you, params_for(1.0), {}, sm::DistanceKind::kolmogorov, 1000).non_convergent);
}

TEST(Curves, NonConvergentTotalPlateaus) {
  const auto jumpy = JumpSchedule::constant(0.5, 1.0);
  const double a = sm::bound_at(Model::youj, params_for(1.0), jumpy, sm::DistanceKind::kolmogorov, 100'000).report.total;
  const double b = sm::bound_at(Model::youj, params_for(1.0), jumpy, sm::DistanceKind::kolmogorov, 10'000'000).report.total;
  EXPECT_NEAR(b / a, 1.0, 0.02);
}

TEST(Curves, YouBoundsDecreaseInN) {
  std::vector<std::uint64_t> grid;
  for (int q = 4; q <= 24; ++q) grid.push_back(static_cast<std::uint64_t>(std::llround(std::pow(10.0, q / 4.0))));
  for (double a : {0.5, 0.6, 0.75, 1.0, 2.0})
    for (auto d : {sm::DistanceKind::kolmogorov, sm::DistanceKind::wasserstein}) {
      const auto curve = sm::bound_curve(Model::you, params_for(a), {}, d, grid);
      for (std::size_t i = 1; i < curve.size(); ++i)
        EXPECT_LT(curve[i].report.total, curve[i - 1].report.total) << a << " " << grid[i];
    }
  const std::vector<std::uint64_t> bad{10, 10};
  EXPECT_THROW(sm::bound_curve(Model::you, params_for(1.0), {}, sm::DistanceKind::kolmogorov, bad), sm::domain_error);
}

TEST(Curves, NotesDescribeSources) {
  const auto pt = sm::bound_at(Model::youj, params_for(1.0), JumpSchedule::constant(1.0, 1.0),
                               sm::DistanceKind::wasserstein, 200);
  EXPECT_TRUE(pt.report.has_note("vv=leading-order upper bound (p=1 fallback)"));
  EXPECT_TRUE(pt.report.has_note("ev=exact"));
  EXPECT_TRUE(pt.report.has_note("regime=fast"));
}

TEST(LimitLaw, Variances) {
  auto l = sm::limit_distribution(Model::you, params_for(1.0), {});
  EXPECT_EQ(l.scaling, sm::Scaling::sqrt_n);
  EXPECT_DOUBLE_EQ(l.variance, 3.0);
  l = sm::limit_distribution(Model::you, params_for(0.5), {});
  EXPECT_EQ(l.scaling, sm::Scaling::sqrt_n_over_log_n);
  EXPECT_DOUBLE_EQ(l.variance, 2.0);
  l = sm::limit_distribution(Model::youj, {1.0, 2.0, 0.0}, JumpSchedule::constant(0.5, 2.0));
  EXPECT_DOUBLE_EQ(l.variance, 3.0 * 2.0);
}
