#include <doctest.h>

#include <cmath>

#include "bigraph/branching.hpp"
#include "bigraph/error.hpp"
#include "bigraph/graphgen.hpp"
#include "bigraph/oracle.hpp"
#include "bigraph/theory.hpp"
#include "oracles.hpp"

using namespace bigraph;
using namespace bigraph::branching;

namespace {
bool within_sigma(double est, double target, double se, double k = 3.0) {
  return std::fabs(est - target) <= k * se + 1e-12;
}
}  // namespace

TEST_CASE("binomial sampler passes chi-square") {
  for (auto [trials, p] : {std::pair<std::int64_t, double>{30, 0.2}, {1000, 0.3}, {200000, 1e-4}}) {
    rng::Engine eng = rng::make_engine(trials);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(trials) + 1, 0);
    for (int i = 0; i < 1000000; ++i) ++counts[static_cast<std::size_t>(binomial(eng, trials, p))];
    CHECK(oracles::binomial_chi_square_p(counts, trials, p) > 1e-3);
  }
}

TEST_CASE("simulate: trivial and deterministic cases") {
  TypeCounts n{10, 10};
  const auto out = simulate(1, n, ProbMatrix{{0.0, 0.0}, {0.0, 0.0}}, StopConfig{}, 3);
  CHECK(out.totals == Count2{0, 1});
  CHECK(out.stop == StopReason::Extinct);
  CHECK(out.width == 1);

  StopConfig caps;
  caps.max_generations = 2;
  const auto det = simulate(0, TypeCounts{1, 7}, ProbMatrix{{0.0, 1.0}, {1.0, 0.0}}, caps, 3);
  CHECK(det.totals == Count2{1, 7});
  CHECK(det.width == 7);
  CHECK(det.stop == StopReason::CapGenerations);
}

TEST_CASE("simulate: subcritical mean total size") {
  TypeCounts n{50000, 50000};
  const auto p = row_sum_instance(n, 0.9, 0.3);
  const auto e = theory::expected_primal_sizes(validate(p, n));
  const int runs = 100000;
  double sum = 0.0, sumsq = 0.0;
  int escaped = 0;
  rng::Engine eng = rng::make_engine(99);
  for (int r = 0; r < runs; ++r) {
    const auto o = simulate(0, n, p, StopConfig{}, eng);
    if (o.stop != StopReason::Extinct) ++escaped;
    const double t = static_cast<double>(o.totals[0] + o.totals[1]);
    sum += t;
    sumsq += t * t;
  }
  CHECK(escaped == 0);
  const double mean = sum / runs;
  const double se = std::sqrt((sumsq / runs - mean * mean) / runs);
  CHECK(within_sigma(mean, e.row_total(0), se));
}

TEST_CASE("simulate: caps") {
  TypeCounts n{100000, 100000};
  const auto p = row_sum_instance(n, 1.5, 0.5);
  StopConfig caps;
  caps.l = {50.0, kNoThreshold};
  for (int s = 0; s < 200; ++s) {
    const auto o = simulate(0, n, p, caps, s);
    if (o.stop == StopReason::CapTotal) CHECK(o.totals[0] >= 50);
    else CHECK(o.stop == StopReason::Extinct);
  }
  StopConfig wide;
  wide.width_cap = 20;
  for (int s = 0; s < 200; ++s) {
    const auto o = simulate(0, n, p, wide, s);
    CHECK(o.width <= 20);
  }
  StopConfig bad;
  bad.max_total = 0;
  CHECK_THROWS_AS(simulate(0, n, p, bad, 1), Error);
}

TEST_CASE("estimate_survival") {
  TypeCounts n{100000, 100000};
  const auto zero = estimate_survival(0, n, ProbMatrix{{0.0, 0.0}, {0.0, 0.0}}, 100, 1000, 1);
  CHECK(zero.value == 0.0);

  const auto sub = estimate_survival(0, n, row_sum_instance(n, 0.95, 0.3), 100000, 2000, 2);
  CHECK(sub.successes == 0);

  const auto p = row_sum_instance(n, 1.1, 0.5);
  const double rho = theory::solve_survival(p, n).rho[0];
  const auto est = estimate_survival(0, n, p, default_survival_threshold(0.1), 20000, 3);
  CHECK(within_sigma(est.value, rho, est.std_error));
  CHECK(default_survival_threshold(0.1) == 10000);
  CHECK(default_survival_threshold(0.05) == 40000);

  // A higher threshold never raises the estimate on the same seeds.
  const auto a = estimate_survival(1, n, p, 100, 3000, 4);
  const auto b = estimate_survival(1, n, p, 2000, 3000, 4);
  CHECK(b.successes <= a.successes);
}

TEST_CASE("explore_stopped") {
  SampledGraph iso(TypeCounts{3, 3}, {{0, 1}}, 0);
  const auto r = explore_stopped(iso, 4, StopConfig{});
  CHECK_FALSE(r.stopped);
  CHECK(r.stop_reason == ExploreStop::Exhausted);
  CHECK(r.tree_totals == Count2{0, 1});

  const std::int64_t m = 20;
  std::vector<Edge> star;
  for (std::int64_t i = 1; i <= m; ++i) star.push_back({0, i});
  SampledGraph g(TypeCounts{1, m}, star, 0);
  StopConfig cfg;
  cfg.l = {kNoThreshold, m / 2.0};
  const auto s = explore_stopped(g, 0, cfg);
  CHECK(s.stopped);
  CHECK(s.stop_reason == ExploreStop::ReachedLj);
  CHECK(s.tree_totals == Count2{1, m / 2});

  StopConfig wcfg;
  wcfg.width_cap = 5;
  const auto w = explore_stopped(g, 0, wcfg);
  CHECK(w.stopped);
  CHECK(w.stop_reason == ExploreStop::BoundaryCap);
  CHECK(w.boundary_count <= 6);
}

TEST_CASE("coupled_upper: domination and exact mean") {
  TypeCounts n{300, 200};
  const auto p = row_sum_instance(n, 1.3, 0.4);
  Coupler c(n, p);
  StopConfig caps;
  caps.max_total = 5000;
  for (int s = 0; s < 10000; ++s) {
    const auto r = c.upper(s % 2, caps, s);
    CHECK(r.graph_totals[0] <= r.branching_totals[0]);
    CHECK(r.graph_totals[1] <= r.branching_totals[1]);
  }
  const auto z = coupled_upper(0, n, ProbMatrix{{0.0, 0.0}, {0.0, 0.0}}, caps, 1);
  CHECK(z.graph_totals == Count2{1, 0});
  CHECK(z.branching_totals == Count2{1, 0});

  TypeCounts tiny{2, 2};
  ProbMatrix dense{{0.9, 0.9}, {0.9, 0.9}};
  const auto exact = oracle::enumerate_exact(tiny, dense, oracle::Statistic::root_component(0));
  Coupler ct(tiny, dense);
  StopConfig small;
  small.max_total = 1000;
  const int runs = 100000;
  double sum = 0.0;
  for (int s = 0; s < runs; ++s) {
    const auto r = ct.upper(0, small, rng::derive(17, s));
    sum += static_cast<double>(r.graph_totals[0] + r.graph_totals[1]);
  }
  CHECK(within_sigma(sum / runs, exact.mean, std::sqrt(exact.variance / runs)));
}

TEST_CASE("coupled_lower") {
  TypeCounts n{300, 200};
  const auto p = row_sum_instance(n, 1.3, 0.4);
  Coupler c(n, p);
  StopConfig caps;
  caps.max_total = 5000;
  int free_runs = 0;
  for (int s = 0; s < 10000; ++s) {
    const auto r = c.lower(s % 2, Count2{30, 20}, caps, s);
    if (r.overflow) continue;
    ++free_runs;
    CHECK(r.reduced_totals[0] <= r.graph_totals[0]);
    CHECK(r.reduced_totals[1] <= r.graph_totals[1]);
  }
  CHECK(free_runs > 0);
  for (int s = 0; s < 500; ++s) {
    const auto r = c.lower(0, Count2{0, 0}, caps, s);
    CHECK(r.reduced_totals == r.graph_totals);
  }
  CHECK_THROWS_AS(c.lower(0, Count2{301, 0}, caps, 1), Error);
}

TEST_CASE("coupled_lower: reduced survival matches the solver on n - m") {
  const double eps = 0.1;
  TypeCounts n{100000, 100000};
  const auto p = row_sum_instance(n, 1.0 + eps, 0.5);
  const std::int64_t m = 2000;
  const double rho = theory::solve_survival(p, TypeCounts{n[0] - m, n[1] - m}).rho[0];
  Coupler c(n, p);
  StopConfig caps;
  caps.l = {m / 2.0, m / 2.0};
  const int runs = 4000;
  int survived = 0;
  for (int s = 0; s < runs; ++s) {
    const auto r = c.lower(0, Count2{m, m}, caps, rng::derive(23, s));
    if (r.reduced_reached_l) ++survived;
  }
  const auto est = binomial_estimate(survived, runs);
  CHECK(within_sigma(est.value, rho, est.std_error));
}

TEST_CASE("width_conditional_extinction") {
  TypeCounts n{1000000, 1000000};
  const auto z = width_conditional_extinction(0, n, ProbMatrix{{0.0, 0.0}, {0.0, 0.0}}, 2, 1000, 1);
  CHECK(z.value == 0.0);
  const auto p = row_sum_instance(n, 1.1, 0.5);
  const double rho = theory::solve_survival(p, n).rho[0];
  WidthOptions opts;
  opts.survive_generation_size = 100000;
  const auto one = width_conditional_extinction(0, n, p, 1, 20000, 2, opts);
  CHECK(within_sigma(one.value, 1.0 - rho, one.std_error));
  const auto wide = width_conditional_extinction(0, n, p, 500, 20000, 3, opts);
  CHECK(wide.value <= 0.1 * 0.1);
}
