#pragma once

#include <array>
#include <cstdint>

#include "bigraph/params.hpp"

namespace bigraph::theory {

/// Largest eigenvalue of a nonnegative 2x2 matrix. The discriminant is
/// evaluated as (a-d)^2 + 4bc, which is never negative.
double perron_frobenius(const Mat2& m);
double perron_frobenius(const ExpectationMatrix& m);

struct SurvivalPair {
  std::array<double, 2> rho{0.0, 0.0};
  std::array<double, 2> residual{0.0, 0.0};
  std::int64_t iterations = 0;
};

struct SolverOptions {
  double step_tol = 1e-13;
  double residual_tol = 1e-12;
  std::int64_t max_iterations = 10'000'000;
};

/// F_i(rho) = 1 - rho_i - prod_j (1 - p_ij rho_j)^{n_j}, evaluated with
/// exp(n log1p(-x)) powers.
std::array<double, 2> survival_residual(const Mat2& p, const Count2& n,
                                        const std::array<double, 2>& rho);

/// One step of the extinction-probability map
/// q_i <- prod_j (1 - p_ij (1 - q_j))^{n_j}.
std::array<double, 2> extinction_step(const Mat2& p, const Count2& n,
                                      const std::array<double, 2>& q);

/// Survival probabilities of the two-type binomial branching process.
/// Subcritical and critical instances (lambda <= 1 + 1e-9) return (0,0).
/// Otherwise: monotone extinction iteration from q = 0 interleaved with
/// safeguarded Newton steps on F.
SurvivalPair solve_survival(const ExpectationMatrix& m, const TypeCounts& n,
                            const SolverOptions& opts = {});
SurvivalPair solve_survival(const ProbMatrix& p, const TypeCounts& n,
                            const SolverOptions& opts = {});

struct DualSpec {
  Mat2 pi{};
  Mat2 h{};
  double d = 0.0;
};

/// pi_ij = p_ij (1 - rho_j) / (1 - rho_j p_ij), h_ij = pi_ij n_j,
/// d = 1 - h11 - h22 + h11 h22 - h12 h21.
DualSpec dual_matrix(const ProbMatrix& p, const SurvivalPair& rho, const TypeCounts& n);

/// e[i][j] = expected number of type-j individuals in a tree rooted at type i
/// (root counted when j == i).
struct ProgenyExpectation {
  Mat2 e{};
  double row_total(std::size_t i) const noexcept { return e[i][0] + e[i][1]; }
};

/// Closed form e[i][i] = (1 - h_{3-i,3-i}) / d, e[i][3-i] = h_{i,3-i} / d.
/// Throws NonpositiveDenominator unless the offspring matrix is strictly
/// subcritical.
ProgenyExpectation expected_dual_sizes(const DualSpec& dual);
ProgenyExpectation expected_primal_sizes(const ExpectationMatrix& m);

/// Positive root of 1 - rho - exp(-(1 + eps) rho) = 0.
double rho_epsilon(double eps);

}  // namespace bigraph::theory
