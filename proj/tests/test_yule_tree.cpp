#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "steinmix/mc_harness.hpp"
#include "steinmix/yule_tree.hpp"

namespace sm = steinmix;

namespace {

struct Step {
  std::uint64_t event;
  int side;
};

// For each tip, the (event, daughter) pairs on its path, found by replaying
// the lineage relabelling backwards from the present.
std::vector<std::vector<Step>> paths(const sm::YuleTree& t) {
  const std::uint64_t n = t.tips();
  std::vector<std::vector<Step>> out(n);
  for (std::uint64_t tip = 1; tip <= n; ++tip) {
    std::uint64_t lin = tip;
    for (std::uint64_t k = n - 1; k >= 1; --k) {
      if (lin == k + 1) {
        out[tip - 1].push_back({k, 1});
        lin = t.split_lineage(k);
      } else if (lin == t.split_lineage(k)) {
        out[tip - 1].push_back({k, 0});
      }
    }
  }
  return out;
}

double time_after(const sm::YuleTree& t, std::uint64_t k) {
  double s = 0.0;
  for (std::uint64_t j = k + 1; j <= t.tips(); ++j) s += t.period(j);
  return s;
}

bool on_path(const std::vector<Step>& p, std::uint64_t k, int side) {
  for (const auto& s : p)
    if (s.event == k && s.side == side) return true;
  return false;
}

}  // namespace

TEST(YuleTree, ConstructionChecks) {
  EXPECT_THROW(sm::YuleTree({}, {}), sm::domain_error);
  EXPECT_THROW(sm::YuleTree({1.0, 1.0}, {}), sm::domain_error);
  EXPECT_THROW(sm::YuleTree({1.0, 1.0}, {2}), sm::domain_error);
  EXPECT_THROW(sm::YuleTree({1.0, -1.0}, {1}), sm::domain_error);
  const sm::YuleTree one({0.7}, {});
  EXPECT_EQ(one.tips(), 1u);
  EXPECT_DOUBLE_EQ(one.height(), 0.7);
}

TEST(YuleTree, PairCountIsChooseTwo) {
  std::mt19937_64 rng(5);
  for (std::uint64_t n : {2u, 3u, 17u, 500u}) {
    const auto t = sm::YuleTree::sample(n, rng);
    EXPECT_EQ(t.pair_count(), n * (n - 1) / 2);
    EXPECT_EQ(t.tips_below(1, 0) + t.tips_below(1, 1), n);
  }
}

TEST(YuleTree, DescendantCountsMatchPathReplay) {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    const auto t = sm::YuleTree::sample(25, rng);
    const auto p = paths(t);
    for (std::uint64_t k = 1; k <= t.events(); ++k)
      for (int side = 0; side < 2; ++side) {
        std::uint64_t c = 0;
        for (const auto& path : p) c += on_path(path, k, side);
        EXPECT_EQ(t.tips_below(k, side), c);
      }
    for (std::uint64_t k = 1; k <= t.events(); ++k) EXPECT_NEAR(t.remaining(k), time_after(t, k), 1e-12);
  }
}

TEST(YuleTree, PairTransformMatchesAllPairs) {
  std::mt19937_64 rng(3);
  const auto t = sm::YuleTree::sample(30, rng);
  const auto p = paths(t);
  for (double y : {1.0, 2.0, 3.5}) {
    double s = 0.0;
    std::uint64_t pairs = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = i + 1; j < p.size(); ++j) {
        // Most recent event where both paths pass, on different daughters.
        std::uint64_t mrca = 0;
        for (const auto& a : p[i])
          for (const auto& b : p[j])
            if (a.event == b.event && a.side != b.side) mrca = std::max(mrca, a.event);
        ASSERT_GT(mrca, 0u);
        s += std::exp(-y * time_after(t, mrca));
        ++pairs;
      }
    EXPECT_NEAR(t.pair_mean_exp(y), s / static_cast<double>(pairs), 1e-14);
  }
}

TEST(YuleTree, JumpVarianceMatchesCovarianceSum) {
  std::mt19937_64 rng(8);
  const sm::YouParams params{0.8, 1.5, 0.3};
  for (int rep = 0; rep < 10; ++rep) {
    const auto t = sm::YuleTree::sample(20, rng);
    const auto j = sm::sample_jumps(t, sm::JumpSchedule::constant(0.4, 2.0), rng);
    const auto p = paths(t);
    const double n = static_cast<double>(t.tips());
    double cov = 0.0;
    for (const auto& a : p)
      for (const auto& b : p)
        for (std::uint64_t k = 1; k <= t.events(); ++k)
          for (int side = 0; side < 2; ++side)
            if (j.jumped[k - 1][side] && on_path(a, k, side) && on_path(b, k, side))
              cov += j.variance[k - 1] * std::exp(-2.0 * params.alpha * time_after(t, k));
    const double want = params.normalization() * cov / (n * n);
    EXPECT_NEAR(sm::jump_variance_part(t, j, params), want, 1e-13 * std::max(1.0, want));
  }
}

TEST(YuleTree, DumpFormat) {
  const sm::YuleTree t({0.5, 0.25, 1.0}, {1, 1});
  std::ostringstream plain;
  t.dump(plain);
  EXPECT_EQ(plain.str(), "# event\tT_k\tsplit_lineage\tjump_flags\n1\t0.5\t1\t--\n2\t0.25\t1\t--\n3\t1\t-\t--\n");
  const std::vector<std::array<bool, 2>> jumps{{true, false}, {false, true}};
  std::ostringstream flagged;
  t.dump(flagged, &jumps);
  EXPECT_EQ(flagged.str(), "# event\tT_k\tsplit_lineage\tjump_flags\n1\t0.5\t1\t10\n2\t0.25\t1\t01\n3\t1\t-\t--\n");
}

TEST(Jumps, ShortScheduleIsAnError) {
  std::mt19937_64 rng(1);
  const auto t = sm::YuleTree::sample(5, rng);
  const auto sched = sm::JumpSchedule::per_event({{0.5, 1.0}, {0.5, 1.0}, {0.5, 1.0}});
  EXPECT_THROW(sm::sample_jumps(t, sched, rng), std::invalid_argument);
  const auto ok = sm::JumpSchedule::per_event({{0.0, 1.0}, {1.0, 3.0}, {0.0, 1.0}, {0.0, 1.0}});
  const auto j = sm::sample_jumps(t, ok, rng);
  EXPECT_EQ(j.count(), 2u);
  EXPECT_TRUE(j.jumped[1][0] && j.jumped[1][1]);
  EXPECT_DOUBLE_EQ(j.variance[1], 3.0);
}

TEST(SampleYbar, MomentsOfOneMillionDraws) {
  std::mt19937_64 rng(2024);
  const sm::ConditionalMoments m{0.3, 2.0};
  const int r = 1'000'000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < r; ++i) {
    const double x = sm::sample_ybar(m, rng);
    s += x;
    s2 += x * x;
  }
  const double mean = s / r, var = s2 / r - mean * mean;
  EXPECT_NEAR(mean, 0.3, 5.0 * std::sqrt(2.0 / r));
  EXPECT_NEAR(var, 2.0, 5.0 * 2.0 * std::sqrt(2.0 / r));
  EXPECT_EQ(sm::sample_ybar(sm::ConditionalMoments{0.7, 0.0}, rng), 0.7);
}

TEST(YuleTree, HeightAndSplitsByMonteCarlo) {
  // E U_n = H_n; event k splits each of its k lineages with probability 1/k.
  const std::uint64_t n = 12, r = 40'000;
  std::vector<double> h(r);
  std::vector<std::uint64_t> first_of_three(3, 0);
  for (std::uint64_t i = 0; i < r; ++i) {
    auto rng = sm::replicate_stream(77, i);
    const auto t = sm::YuleTree::sample(n, rng);
    h[i] = t.height();
    ++first_of_three[t.split_lineage(3) - 1];
  }
  const auto est = sm::mean_estimate(h);
  EXPECT_LT(std::abs(est.value - sm::harmonic(n)) / est.se, 4.0);
  for (auto c : first_of_three) {
    const double pr = 1.0 / 3.0, sd = std::sqrt(r * pr * (1 - pr));
    EXPECT_LT(std::abs(static_cast<double>(c) - r * pr) / sd, 4.0);
  }
}

TEST(ConditionalMoments, SingleTipAndNoDrift) {
  const sm::YuleTree one({0.4}, {});
  const sm::YouParams p{1.0, 1.0, 1.0 / std::sqrt(2.0)};
  const auto m = sm::conditional_moments_you(one, p);
  EXPECT_NEAR(m.cond_var, 1.0 - std::exp(-0.8), 1e-15);
  EXPECT_NEAR(m.cond_mean, std::exp(-0.4), 1e-15);
}
