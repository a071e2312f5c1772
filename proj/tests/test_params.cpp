#include <doctest.h>

#include <cmath>

#include "bigraph/error.hpp"
#include "bigraph/params.hpp"

using namespace bigraph;

namespace {
ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}
}  // namespace

TEST_CASE("probability matrix validation") {
  CHECK_NOTHROW(ProbMatrix{{0.1, 0.2}, {0.2, 0.3}});
  CHECK(code_of([] { ProbMatrix{{0.1, 0.2}, {0.3, 0.3}}; }) == ErrorCode::AsymmetricMatrix);
  CHECK(code_of([] { ProbMatrix{{0.1, 1.5}, {1.5, 0.3}}; }) == ErrorCode::ProbabilityOutOfRange);
  CHECK(code_of([] { ProbMatrix{{-0.1, 0.0}, {0.0, 0.3}}; }) == ErrorCode::ProbabilityOutOfRange);
  CHECK(code_of([] { ProbMatrix(2, {0.1, 0.2, 0.2}); }) == ErrorCode::DimensionMismatch);
  // Symmetry is bit-exact.
  CHECK(code_of([] { ProbMatrix{{0.1, 0.2}, {std::nextafter(0.2, 1.0), 0.3}}; }) == ErrorCode::AsymmetricMatrix);
}

TEST_CASE("type counts") {
  TypeCounts n{3, 5};
  CHECK(n.total() == 8);
  CHECK(n.offset(0) == 0);
  CHECK(n.offset(1) == 3);
  CHECK(code_of([] { TypeCounts{3, 0}; }) == ErrorCode::InvalidCounts);
}

TEST_CASE("validate builds the expectation matrix") {
  ProbMatrix p{{0.01, 0.02}, {0.02, 0.03}};
  TypeCounts n{100, 50};
  const auto m = validate(p, n);
  CHECK(m(0, 0) == doctest::Approx(1.0));
  CHECK(m(0, 1) == doctest::Approx(1.0));
  CHECK(m(1, 0) == doctest::Approx(2.0));
  CHECK(m(1, 1) == doctest::Approx(1.5));
  CHECK(code_of([&] { validate(p, TypeCounts{1, 2, 3}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("diagnose: weakly supercritical instance") {
  TypeCounts n{200000, 200000};
  const auto p = row_sum_instance(n, 1.08, 0.3);
  const auto r = diagnose(validate(p, n), n);
  CHECK(r.lambda == doctest::Approx(1.08).epsilon(1e-12));
  CHECK(r.epsilon == doctest::Approx(0.08).epsilon(1e-9));
  CHECK(r.classification == Criticality::Supercritical);
  // alpha = 1 since mu21 > eps; eps^3 n2 = 102.4
  CHECK(r.condition_super == doctest::Approx(102.4).epsilon(1e-9));
  CHECK(r.condition_sub == doctest::Approx(102.4).epsilon(1e-9));
  CHECK(r.row_sums[0] == doctest::Approx(1.08));
  CHECK(r.row_sums[1] == doctest::Approx(1.08));
}

TEST_CASE("diagnose: alpha below one and subcritical classification") {
  TypeCounts n{1000000, 1000000};
  const auto p = row_sum_instance(n, 1.1, 0.02);
  const auto r = diagnose(validate(p, n), n);
  // alpha = 0.02 / 0.1
  CHECK(r.condition_super == doctest::Approx(0.2 * 1e-3 * 1e6).epsilon(1e-9));
  const auto sub = diagnose(validate(row_sum_instance(n, 0.9, 0.3), n), n);
  CHECK(sub.classification == Criticality::Subcritical);
  CHECK(sub.epsilon == doctest::Approx(-0.1));
  CHECK(classify(1.0) == Criticality::Critical);
  CHECK(classify(1.0 + 1e-12) == Criticality::Critical);
}

TEST_CASE("diagnose rejects k != 2") {
  ProbMatrix p(3, {0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1});
  TypeCounts n{2, 2, 2};
  CHECK(code_of([&] { diagnose(validate(p, n), n); }) == ErrorCode::UnsupportedK);
}

TEST_CASE("type swap permutes the diagnosis") {
  TypeCounts n{1000, 3000};
  ProbMatrix p{{0.0005, 0.0002}, {0.0002, 0.0001}};
  const auto a = diagnose(validate(p, n), n);
  const auto b = diagnose(validate(swap_types(p), swap_types(n)), swap_types(n));
  CHECK(a.lambda == doctest::Approx(b.lambda).epsilon(1e-14));
  CHECK(a.row_sums[0] == doctest::Approx(b.row_sums[1]));
  CHECK(a.row_sums[1] == doctest::Approx(b.row_sums[0]));
}

TEST_CASE("row_sum_instance") {
  TypeCounts n{1000, 2000};
  const auto p = row_sum_instance(n, 1.2, 0.4);
  const auto m = validate(p, n);
  CHECK(m.row_sum(0) == doctest::Approx(1.2));
  CHECK(m.row_sum(1) == doctest::Approx(1.2));
  CHECK(m(1, 0) == doctest::Approx(0.4));
  CHECK(code_of([&] { row_sum_instance(n, 0.5, 0.6); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("scaled") {
  ProbMatrix p{{0.1, 0.2}, {0.2, 0.4}};
  const auto q = p.scaled(2.0);
  CHECK(q(1, 1) == 0.8);
  CHECK(code_of([&] { p.scaled(3.0); }) == ErrorCode::ProbabilityOutOfRange);
}
