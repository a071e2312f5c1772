#include "bigraph/theory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bigraph/error.hpp"

namespace bigraph::theory {

double perron_frobenius(const Mat2& m) {
  const double a = m[0][0];
  const double b = m[0][1];
  const double c = m[1][0];
  const double d = m[1][1];
  const double diff = a - d;
  const double disc = diff * diff + 4.0 * (b * c);
  return 0.5 * (a + d) + 0.5 * std::sqrt(disc);
}

double perron_frobenius(const ExpectationMatrix& m) { return perron_frobenius(m.as_mat2()); }

namespace {

using Vec2 = std::array<double, 2>;

// sum_j n_j log(1 - x_ij) for x_ij = p_ij * y_j; the log of the product term
// shared by F and the extinction map.
double log_product(const Mat2& p, const Count2& n, std::size_t i, const Vec2& y) {
  double s = 0.0;
  for (std::size_t j = 0; j < 2; ++j) {
    const double x = p[i][j] * y[j];
    if (x >= 1.0) return -INFINITY;
    s += static_cast<double>(n[j]) * std::log1p(-x);
  }
  return s;
}

double sup_abs(const Vec2& v) { return std::max(std::abs(v[0]), std::abs(v[1])); }

Mat2 mu_to_p(const ExpectationMatrix& m, const TypeCounts& n) {
  if (m.k() != 2 || n.k() != 2) throw Error(ErrorCode::UnsupportedK, "survival solver is two-type");
  Mat2 p{};
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      p[i][j] = m(i, j) / static_cast<double>(n[j]);
      if (p[i][j] > 1.0) throw Error(ErrorCode::ProbabilityOutOfRange, "mu_ij / n_j exceeds 1");
    }
  }
  return p;
}

// One Newton step on F from rho. Returns false when the Jacobian is singular.
bool newton_step(const Mat2& p, const Count2& n, const Vec2& rho, Vec2& out) {
  Vec2 f{};
  Mat2 jac{};
  for (std::size_t i = 0; i < 2; ++i) {
    const double s = log_product(p, n, i, rho);
    const double e = std::exp(s);
    f[i] = -std::expm1(s) - rho[i];
    for (std::size_t k = 0; k < 2; ++k) {
      const double x = p[i][k] * rho[k];
      jac[i][k] = (i == k ? -1.0 : 0.0) + e * static_cast<double>(n[k]) * p[i][k] / (1.0 - x);
    }
  }
  const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
  if (det == 0.0 || !std::isfinite(det)) return false;
  const double d0 = (f[0] * jac[1][1] - f[1] * jac[0][1]) / det;
  const double d1 = (jac[0][0] * f[1] - jac[1][0] * f[0]) / det;
  out = {rho[0] - d0, rho[1] - d1};
  return std::isfinite(out[0]) && std::isfinite(out[1]);
}

}  // namespace

Vec2 survival_residual(const Mat2& p, const Count2& n, const Vec2& rho) {
  Vec2 r{};
  for (std::size_t i = 0; i < 2; ++i) r[i] = -std::expm1(log_product(p, n, i, rho)) - rho[i];
  return r;
}

Vec2 extinction_step(const Mat2& p, const Count2& n, const Vec2& q) {
  const Vec2 survive{1.0 - q[0], 1.0 - q[1]};
  Vec2 out{};
  for (std::size_t i = 0; i < 2; ++i) out[i] = std::exp(log_product(p, n, i, survive));
  return out;
}

SurvivalPair solve_survival(const ProbMatrix& p, const TypeCounts& n, const SolverOptions& opts) {
  return solve_survival(validate(p, n), n, opts);
}

SurvivalPair solve_survival(const ExpectationMatrix& m, const TypeCounts& n, const SolverOptions& opts) {
  const Mat2 p = mu_to_p(m, n);
  const Count2 cnt{n[0], n[1]};
  SurvivalPair out;
  if (perron_frobenius(m) <= 1.0 + kCriticalityTol) return out;

  auto residual_norm = [&](const Vec2& rho) { return sup_abs(survival_residual(p, cnt, rho)); };

  // q climbs monotonically to the smallest fixed point; rho = 1 - q.
  Vec2 q{0.0, 0.0};
  std::int64_t it = 0;
  constexpr std::int64_t kNewtonEvery = 16;
  bool converged = false;
  while (it < opts.max_iterations) {
    const Vec2 next = extinction_step(p, cnt, q);
    ++it;
    const double step = std::max(std::abs(next[0] - q[0]), std::abs(next[1] - q[1]));
    q = next;
    Vec2 rho{1.0 - q[0], 1.0 - q[1]};
    double res = residual_norm(rho);
    if (step < opts.step_tol || res < opts.residual_tol) {
      converged = true;
      break;
    }
    if (it % kNewtonEvery != 0) continue;
    // From above, the Newton iterate stays above the positive root; reject
    // anything that moves up, leaves (0,1], or fails to reduce the residual.
    Vec2 trial{};
    if (!newton_step(p, cnt, rho, trial)) continue;
    if (trial[0] <= 0.0 || trial[1] <= 0.0 || trial[0] > rho[0] || trial[1] > rho[1]) continue;
    const double trial_res = residual_norm(trial);
    if (!(trial_res < res)) continue;
    q = {1.0 - trial[0], 1.0 - trial[1]};
    if (trial_res < opts.residual_tol) {
      converged = true;
      break;
    }
  }

  Vec2 rho{1.0 - q[0], 1.0 - q[1]};
  double res = residual_norm(rho);
  for (int polish = 0; polish < 8 && res > 0.0; ++polish) {
    Vec2 trial{};
    if (!newton_step(p, cnt, rho, trial)) break;
    if (trial[0] <= 0.0 || trial[1] <= 0.0 || trial[0] > 1.0 || trial[1] > 1.0) break;
    const double trial_res = residual_norm(trial);
    if (!(trial_res < res)) break;
    rho = trial;
    res = trial_res;
  }

  out.rho = rho;
  out.residual = survival_residual(p, cnt, rho);
  out.residual = {std::abs(out.residual[0]), std::abs(out.residual[1])};
  out.iterations = it;
  if (!converged && res > opts.residual_tol) {
    std::ostringstream os;
    os << "extinction iteration hit the cap of " << opts.max_iterations << " with residual " << res;
    throw Error(ErrorCode::NoConvergence, os.str());
  }
  return out;
}

DualSpec dual_matrix(const ProbMatrix& p, const SurvivalPair& rho, const TypeCounts& n) {
  if (p.k() != 2 || n.k() != 2) throw Error(ErrorCode::UnsupportedK, "dual process is two-type");
  DualSpec d;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const double pij = p(i, j);
      const double rj = rho.rho[j];
      d.pi[i][j] = pij * (1.0 - rj) / (1.0 - rj * pij);
      d.h[i][j] = d.pi[i][j] * static_cast<double>(n[j]);
    }
  }
  const Mat2& h = d.h;
  d.d = 1.0 - h[0][0] - h[1][1] + h[0][0] * h[1][1] - h[0][1] * h[1][0];
  return d;
}

namespace {

ProgenyExpectation closed_form_progeny(const Mat2& h) {
  const double d = 1.0 - h[0][0] - h[1][1] + h[0][0] * h[1][1] - h[0][1] * h[1][0];
  if (!(d > 0.0) || !(perron_frobenius(h) < 1.0)) {
    std::ostringstream os;
    os << "offspring matrix is not subcritical (d = " << d << ")";
    throw Error(ErrorCode::NonpositiveDenominator, os.str());
  }
  ProgenyExpectation pe;
  for (std::size_t i = 0; i < 2; ++i) {
    const std::size_t o = 1 - i;
    pe.e[i][i] = (1.0 - h[o][o]) / d;
    pe.e[i][o] = h[i][o] / d;
  }
  return pe;
}

}  // namespace

ProgenyExpectation expected_dual_sizes(const DualSpec& dual) { return closed_form_progeny(dual.h); }

ProgenyExpectation expected_primal_sizes(const ExpectationMatrix& m) {
  return closed_form_progeny(m.as_mat2());
}

double rho_epsilon(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw Error(ErrorCode::InvalidEpsilon, "rho_epsilon requires eps > 0");
  }
  const double c = 1.0 + eps;
  // 1 - rho - exp(-c rho), written to avoid cancellation for small rho.
  auto f = [c](double r) { return -std::expm1(-c * r) - r; };
  // f > 0 on (0, rho*) and < 0 on (rho*, 1]; f(r) ~ eps r - c^2 r^2 / 2 near 0.
  double lo = eps / (c * c);
  while (!(f(lo) > 0.0)) lo *= 0.5;
  double hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  double r = 0.5 * (lo + hi);
  for (int i = 0; i < 4; ++i) {
    const double fp = c * std::exp(-c * r) - 1.0;
    if (fp == 0.0) break;
    const double next = r - f(r) / fp;
    if (!(next > 0.0 && next < 1.0) || std::abs(f(next)) >= std::abs(f(r))) break;
    r = next;
  }
  return r;
}

}  // namespace bigraph::theory
