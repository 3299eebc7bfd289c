#pragma once

// Pure-birth (Yule) trees stored event by event, jump placement on daughter
// lineages, and the exact conditional mean and variance of the normalized trait
// average given the tree (and jumps).

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "steinmix/special_functions.hpp"
#include "steinmix/you_analytic.hpp"

namespace steinmix {

/// Uniform double in (0, 1) from the top 53 bits of a 64-bit draw.
template <class Urbg>
  requires std::uniform_random_bit_generator<Urbg>
double uniform_open01(Urbg& rng) {
  static_assert(Urbg::min() == 0 && Urbg::max() == std::numeric_limits<std::uint64_t>::max(),
                "a full-range 64-bit generator is required");
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform integer in [0, bound) via 128-bit multiply-shift.
template <class Urbg>
  requires std::uniform_random_bit_generator<Urbg>
std::uint64_t uniform_below(Urbg& rng, std::uint64_t bound) {
  __extension__ using u128 = unsigned __int128;
  const u128 wide = static_cast<u128>(static_cast<std::uint64_t>(rng())) * bound;
  return static_cast<std::uint64_t>(wide >> 64);
}

/// Exp(rate) by inversion.
template <class Urbg>
double exponential_draw(Urbg& rng, double rate) {
  return -std::log(uniform_open01(rng)) / rate;
}

/// An n-tip Yule tree with unit birth rate, including the stem period.
///
/// Period k (k = 1..n) has k lineages alive and lasts T_k ~ Exp(k). Event k
/// (k = 1..n-1) closes period k: lineage splits[k] in {1..k} splits into itself
/// (daughter 0) and the new lineage k+1 (daughter 1).
class YuleTree {
 public:
  YuleTree(std::vector<double> inter_event_times, std::vector<std::uint32_t> splits)
      : times_(std::move(inter_event_times)), splits_(std::move(splits)) {
    detail::require(!times_.empty(), "YuleTree: n must be >= 1");
    detail::require(splits_.size() + 1 == times_.size(), "YuleTree: need exactly n-1 split choices");
    for (double t : times_) detail::require(t > 0.0 && std::isfinite(t), "YuleTree: times must be positive");
    for (std::size_t k = 1; k <= splits_.size(); ++k)
      detail::require(splits_[k - 1] >= 1 && splits_[k - 1] <= k, "YuleTree: split lineage out of range");
    index();
  }

  template <class Urbg>
  static YuleTree sample(std::uint64_t n, Urbg& rng) {
    detail::require(n >= 1, "sample_tree: n must be >= 1");
    std::vector<double> times(n);
    std::vector<std::uint32_t> splits(n - 1);
    for (std::uint64_t k = 1; k <= n; ++k) {
      times[k - 1] = exponential_draw(rng, static_cast<double>(k));
      if (k < n) splits[k - 1] = static_cast<std::uint32_t>(uniform_below(rng, k) + 1);
    }
    return YuleTree(std::move(times), std::move(splits));
  }

  std::uint64_t tips() const { return times_.size(); }
  std::uint64_t events() const { return splits_.size(); }

  /// T_k, k = 1..n.
  double period(std::uint64_t k) const { return times_[k - 1]; }
  std::span<const double> periods() const { return times_; }
  std::uint32_t split_lineage(std::uint64_t event) const { return splits_[event - 1]; }

  /// U_n, origin to present.
  double height() const { return height_; }

  /// Time from just after event k to the present: T_{k+1} + ... + T_n.
  double remaining(std::uint64_t event) const { return remaining_[event - 1]; }

  /// Tips below daughter `side` (0 or 1) of event k.
  std::uint64_t tips_below(std::uint64_t event, int side) const { return below_[event - 1][side]; }

  /// Mean of e^{-y tau} over all C(n,2) tip pairs, tau the pair's coalescence time.
  double pair_mean_exp(double y) const {
    detail::require(tips() >= 2, "pair_mean_exp: n must be >= 2");
    const double n = static_cast<double>(tips());
    double sum = 0.0;
    for (std::uint64_t k = 1; k <= events(); ++k) {
      const double pairs = static_cast<double>(below_[k - 1][0] * below_[k - 1][1]);
      sum += pairs * std::exp(-y * remaining_[k - 1]);
    }
    return sum / (0.5 * n * (n - 1.0));
  }

  /// Sum over events of left*right tip counts; n(n-1)/2 for every tree.
  std::uint64_t pair_count() const {
    std::uint64_t s = 0;
    for (const auto& b : below_) s += b[0] * b[1];
    return s;
  }

  /// Debug dump, one line per event: index, T_k, split lineage, jump flags.
  void dump(std::ostream& os, const std::vector<std::array<bool, 2>>* jumps = nullptr) const;

 private:
  void index() {
    const std::uint64_t n = tips();
    height_ = 0.0;
    for (double t : times_) height_ += t;
    remaining_.assign(events(), 0.0);
    double tail = 0.0;
    for (std::uint64_t k = n - 1; k >= 1; --k) {
      tail += times_[k];  // T_{k+1}
      remaining_[k - 1] = tail;
    }
    // Walk events backwards, merging the new lineage's tips into its parent.
    std::vector<std::uint64_t> count(n + 1, 1);
    below_.assign(events(), {0, 0});
    for (std::uint64_t k = n - 1; k >= 1; --k) {
      const std::uint32_t s = splits_[k - 1];
      below_[k - 1] = {count[s], count[k + 1]};
      count[s] += count[k + 1];
    }
  }

  std::vector<double> times_;
  std::vector<std::uint32_t> splits_;
  double height_ = 0.0;
  std::vector<double> remaining_;
  std::vector<std::array<std::uint64_t, 2>> below_;
};

/// Which daughter lineages jumped, with the variance of each event's jumps.
struct JumpRealization {
  std::vector<std::array<bool, 2>> jumped;  // per event k = 1..n-1
  std::vector<double> variance;             // sigma_{c,k}^2

  std::size_t slots() const { return 2 * jumped.size(); }
  std::size_t count() const {
    std::size_t c = 0;
    for (const auto& j : jumped) c += static_cast<std::size_t>(j[0]) + static_cast<std::size_t>(j[1]);
    return c;
  }
};

template <class Urbg>
JumpRealization sample_jumps(const YuleTree& tree, const JumpSchedule& schedule, Urbg& rng) {
  if (!schedule.covers(tree.tips())) throw std::invalid_argument("jump schedule shorter than n-1 events");
  JumpRealization out;
  out.jumped.resize(tree.events());
  out.variance.resize(tree.events());
  for (std::uint64_t k = 1; k <= tree.events(); ++k) {
    const JumpRate r = schedule.at(k);
    out.variance[k - 1] = r.sigma_c2;
    for (int side = 0; side < 2; ++side) out.jumped[k - 1][side] = uniform_open01(rng) < r.p;
  }
  return out;
}

struct ConditionalMoments {
  double cond_mean = 0.0;
  double cond_var = 0.0;
};

/// E and V of the normalized trait average given the tree.
inline ConditionalMoments conditional_moments_you(const YuleTree& tree, const YouParams& params) {
  params.validate();
  const double n = static_cast<double>(tree.tips());
  const double a = params.alpha;
  const double decay = std::exp(-2.0 * a * tree.height());
  ConditionalMoments m;
  m.cond_mean = params.delta() * std::exp(-a * tree.height());
  if (tree.tips() == 1) {
    m.cond_var = -std::expm1(-2.0 * a * tree.height());
  } else {
    m.cond_var = 1.0 / n + (1.0 - 1.0 / n) * tree.pair_mean_exp(2.0 * a) - decay;
  }
  return m;
}

/// Normalized variance contributed by the realized jumps given the tree.
inline double jump_variance_part(const YuleTree& tree, const JumpRealization& jumps, const YouParams& params) {
  detail::require(jumps.jumped.size() == tree.events(), "jump realization does not match the tree");
  const double n = static_cast<double>(tree.tips());
  const double a = params.alpha;
  double sum = 0.0;
  for (std::uint64_t k = 1; k <= tree.events(); ++k) {
    const auto& flags = jumps.jumped[k - 1];
    if (!flags[0] && !flags[1]) continue;
    const double w = jumps.variance[k - 1] * std::exp(-2.0 * a * tree.remaining(k));
    for (int side = 0; side < 2; ++side) {
      if (!flags[side]) continue;
      const double d = static_cast<double>(tree.tips_below(k, side));
      sum += w * d * d;
    }
  }
  return params.normalization() * sum / (n * n);
}

/// Split of the jump part into the random-lineage (d) and random-pair (d(d-1))
/// sums, matching sum sigma_c^2 phi* and sum sigma_c^2 phi.
struct JumpExposure {
  double lineage = 0.0;  // sum sigma_c^2 phi*_i
  double pair = 0.0;     // sum sigma_c^2 phi_i
};

inline JumpExposure jump_exposure(const YuleTree& tree, const JumpRealization& jumps, const YouParams& params) {
  detail::require(jumps.jumped.size() == tree.events(), "jump realization does not match the tree");
  const double n = static_cast<double>(tree.tips());
  JumpExposure e;
  for (std::uint64_t k = 1; k <= tree.events(); ++k) {
    const double w = jumps.variance[k - 1] * std::exp(-2.0 * params.alpha * tree.remaining(k));
    for (int side = 0; side < 2; ++side) {
      if (!jumps.jumped[k - 1][side]) continue;
      const double d = static_cast<double>(tree.tips_below(k, side));
      e.lineage += w * d / n;
      if (tree.tips() >= 2) e.pair += w * d * (d - 1.0) / (n * (n - 1.0));
    }
  }
  return e;
}

inline ConditionalMoments conditional_moments_youj(const YuleTree& tree, const JumpRealization& jumps,
                                                   const YouParams& params) {
  ConditionalMoments m = conditional_moments_you(tree, params);
  m.cond_var += jump_variance_part(tree, jumps, params);
  return m;
}

/// One exact draw of the trait average from its conditional normal law.
template <class Urbg>
double sample_ybar(const ConditionalMoments& m, Urbg& rng) {
  if (!(m.cond_var > 0.0)) return m.cond_mean;
  return m.cond_mean + std::sqrt(m.cond_var) * std_normal_quantile(uniform_open01(rng));
}

inline void YuleTree::dump(std::ostream& os, const std::vector<std::array<bool, 2>>* jumps) const {
  os << "# event\tT_k\tsplit_lineage\tjump_flags\n";
  const auto old_precision = os.precision(17);
  for (std::uint64_t k = 1; k <= tips(); ++k) {
    os << k << '\t' << period(k) << '\t';
    if (k <= events()) {
      os << split_lineage(k) << '\t';
      if (jumps != nullptr && k <= jumps->size())
        os << ((*jumps)[k - 1][0] ? '1' : '0') << ((*jumps)[k - 1][1] ? '1' : '0');
      else
        os << "--";
    } else {
      os << "-\t--";  // final period, no event closes it
    }
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace steinmix
