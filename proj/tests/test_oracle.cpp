#include <doctest.h>

#include <cmath>
#include <random>

#include "bigraph/error.hpp"
#include "bigraph/oracle.hpp"
#include "bigraph/theory.hpp"
#include "oracles.hpp"

using namespace bigraph;
using namespace bigraph::oracle;

namespace {
double total_probability(const ExactDistribution& d) {
  double s = 0.0;
  for (const auto& [v, p] : d.support) {
    CHECK(p >= 0.0);
    s += p;
  }
  return s;
}
}  // namespace

TEST_CASE("single pair") {
  const auto d = enumerate_exact(TypeCounts{2}, ProbMatrix(1, {0.3}), Statistic::l1());
  CHECK(d.probability_of(1) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(d.probability_of(2) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(d.mean == doctest::Approx(1.3));
}

TEST_CASE("complete and empty graphs are point masses") {
  TypeCounts n{3, 2};
  const auto full = enumerate_exact(n, ProbMatrix{{1.0, 1.0}, {1.0, 1.0}}, Statistic::l1());
  CHECK(full.probability_of(5) == 1.0);
  const auto none = enumerate_exact(n, ProbMatrix{{0.0, 0.0}, {0.0, 0.0}}, Statistic::component_count());
  CHECK(none.probability_of(5) == 1.0);
}

TEST_CASE("frozen reference for n=(3,2)") {
  TypeCounts n{3, 2};
  ProbMatrix p{{0.2, 0.5}, {0.5, 0.4}};
  // Reference values from an independent exhaustive enumeration.
  const auto l1 = enumerate_exact(n, p, Statistic::l1());
  CHECK(std::fabs(l1.mean - 4.1743) <= 1e-12);
  CHECK(std::fabs(l1.variance - 0.95836951) <= 1e-12);
  CHECK(std::fabs(enumerate_exact(n, p, Statistic::root_component(0)).mean - 3.7983) <= 1e-12);
  CHECK(std::fabs(enumerate_exact(n, p, Statistic::component_count()).mean - 1.72545) <= 1e-12);
  CHECK(std::fabs(total_probability(l1) - 1.0) <= 1e-12);
}

TEST_CASE("probabilities sum to one and type swap preserves L1") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 6; ++i) {
    const double a = u(gen), b = u(gen), c = u(gen);
    ProbMatrix p{{a, b}, {b, c}};
    TypeCounts n{4, 3};
    const auto d = enumerate_exact(n, p, Statistic::l1());
    CHECK(std::fabs(total_probability(d) - 1.0) <= 1e-12);
    const auto s = enumerate_exact(swap_types(n), swap_types(p), Statistic::l1());
    CHECK(d.support.size() == s.support.size());
    for (std::size_t k = 0; k < d.support.size(); ++k) {
      CHECK(d.support[k].first == s.support[k].first);
      CHECK(std::fabs(d.support[k].second - s.support[k].second) <= 1e-12);
    }
    const auto sl = enumerate_exact(n, p, Statistic::s_l({1, 1}, 0));
    CHECK(sl.probability_of(4) == doctest::Approx(1.0));
  }
}

TEST_CASE("enumeration size cap") {
  bool threw = false;
  try {
    enumerate_exact(TypeCounts{4, 4}, ProbMatrix{{0.5, 0.5}, {0.5, 0.5}}, Statistic::l1());
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::TooLarge;
  }
  CHECK(threw);
}

TEST_CASE("extinction_truncated") {
  TypeCounts n{100, 100};
  CHECK(extinction_truncated(n, ProbMatrix{{0.0, 0.0}, {0.0, 0.0}}, 0, 1) == 1.0);
  CHECK(extinction_truncated(n, ProbMatrix{{0.01, 0.01}, {0.01, 0.01}}, 0, 0) == 0.0);

  const auto sub = row_sum_instance(n, 0.8, 0.3);
  CHECK(std::fabs(extinction_truncated(n, sub, 0, 10000) - 1.0) <= 1e-10);

  TypeCounts big{50000, 50000};
  const auto sup = row_sum_instance(big, 1.2, 0.5);
  const double rho = theory::solve_survival(sup, big).rho[0];
  CHECK(std::fabs(extinction_truncated(big, sup, 0, 10000) - (1.0 - rho)) <= 1e-8);
  double prev = 0.0;
  for (int g : {0, 1, 2, 5, 10, 50, 200}) {
    const double q = extinction_truncated(big, sup, 1, g);
    CHECK(q >= prev);
    prev = q;
  }
}

TEST_CASE("progeny_series") {
  const Mat2 id = progeny_series(Mat2{}, 100);
  CHECK(id[0][0] == 1.0);
  CHECK(id[0][1] == 0.0);
  const Mat2 half = progeny_series(Mat2{{{0.5, 0.0}, {0.0, 0.5}}}, 2000);
  CHECK(half[0][0] == doctest::Approx(2.0).epsilon(1e-14));
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int i = 0; i < 50; ++i) {
    Mat2 h{{{u(gen), u(gen)}, {u(gen), u(gen)}}};
    if (theory::perron_frobenius(h) > 0.9) continue;
    theory::DualSpec d;
    d.h = h;
    d.d = 1 - h[0][0] - h[1][1] + h[0][0] * h[1][1] - h[0][1] * h[1][0];
    const auto e = theory::expected_dual_sizes(d);
    const Mat2 s = progeny_series(h, 100000);
    const auto inv = oracles::inverse_i_minus(h);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        CHECK(std::fabs(s[a][b] - e.e[a][b]) <= 1e-10);
        CHECK(std::fabs(s[a][b] - inv[a][b]) <= 1e-10);
      }
    }
    const Mat2 s10 = progeny_series(h, 10);
    const Mat2 s20 = progeny_series(h, 20);
    CHECK(s20[0][1] >= s10[0][1]);
  }
  bool threw = false;
  try {
    progeny_series(Mat2{{{1.5, 0.5}, {0.5, 1.5}}}, 100000);
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::Divergent;
  }
  CHECK(threw);
}
