#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bigraph/params.hpp"

namespace bigraph::oracle {

/// Exact law of an integer-valued graph statistic.
struct ExactDistribution {
  std::vector<std::pair<std::int64_t, double>> support;
  double mean = 0.0;
  double variance = 0.0;

  double probability_of(std::int64_t value) const;
};

enum class StatisticKind { L1, L2, SL, ComponentCount, RootComponent };

/// Statistic selector. SL uses thresholds (l1, l2) and reports the count for
/// `type`; RootComponent reports the size of the component holding `vertex`.
struct Statistic {
  StatisticKind kind = StatisticKind::L1;
  std::vector<double> thresholds;
  std::size_t type = 0;
  std::int64_t vertex = 0;

  static Statistic l1() { return {StatisticKind::L1, {}, 0, 0}; }
  static Statistic l2() { return {StatisticKind::L2, {}, 0, 0}; }
  static Statistic component_count() { return {StatisticKind::ComponentCount, {}, 0, 0}; }
  static Statistic root_component(std::int64_t v) { return {StatisticKind::RootComponent, {}, 0, v}; }
  static Statistic s_l(std::vector<double> l, std::size_t type) { return {StatisticKind::SL, std::move(l), type, 0}; }
};

inline constexpr int kMaxEnumeratedPairs = 22;

/// Enumerates all 2^C(n,2) edge subsets of G(n, P), weighting each by its
/// exact probability. Throws TooLarge beyond 22 vertex pairs.
ExactDistribution enumerate_exact(const TypeCounts& n, const ProbMatrix& p, const Statistic& stat);

/// Probability that the process rooted at `root_type` is extinct within
/// `generations` generations (a lower bound on the extinction probability).
double extinction_truncated(const TypeCounts& n, const ProbMatrix& p, std::size_t root_type,
                            std::int64_t generations);

/// sum_{t=0..terms} H^t by repeated multiplication. Throws Divergent once an
/// entry becomes non-finite or exceeds 1e300.
Mat2 progeny_series(const Mat2& h, std::int64_t terms);

}  // namespace bigraph::oracle
