#pragma once
// Reference computations used only by the tests. None of them calls into the
// library's numerical code.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace oracles {

using M2 = std::array<std::array<double, 2>, 2>;

// Perron root by power iteration on a positive 2x2 matrix.
inline double power_iteration(const M2& m, int iters = 20000) {
  double x0 = 1.0, x1 = 1.0, lam = 0.0;
  for (int i = 0; i < iters; ++i) {
    const double y0 = m[0][0] * x0 + m[0][1] * x1;
    const double y1 = m[1][0] * x0 + m[1][1] * x1;
    const double norm = std::max(std::fabs(y0), std::fabs(y1));
    if (norm == 0.0) return 0.0;
    lam = norm / std::max(std::fabs(x0), std::fabs(x1));
    x0 = y0 / norm;
    x1 = y1 / norm;
  }
  return lam;
}

inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Positive root of 1 - r - exp(-c r), c > 1.
inline double poisson_root(double c) {
  return bisect([c](double r) { return 1.0 - r - std::exp(-c * r); }, 1e-12, 1.0);
}

// Survival probability for an instance with identical survival in both types
// (equal row sums, i.e. rho_1 = rho_2): root of the exact binomial form
// 1 - r - (1 - p11 r)^n1 (1 - p12 r)^n2 by bisection in long double.
inline double symmetric_survival(double p11, double p12, double n1, double n2) {
  auto f = [&](double r) {
    const long double lr = r;
    const long double q = std::pow(1.0L - p11 * lr, static_cast<long double>(n1)) *
                          std::pow(1.0L - p12 * lr, static_cast<long double>(n2));
    return static_cast<double>(1.0L - lr - q);
  };
  return bisect(f, 1e-6, 1.0);
}

// Extinction probabilities by plain fixed-point iteration from q = 0 in long
// double with std::pow. Slow near criticality; fine for eps >= 0.05.
inline std::array<double, 2> survival_fixed_point(const M2& p, const std::array<double, 2>& n,
                                                  long iters = 2000000) {
  long double q0 = 0.0L, q1 = 0.0L;
  for (long i = 0; i < iters; ++i) {
    const long double a = std::pow(1.0L - p[0][0] * (1.0L - q0), (long double)n[0]) *
                          std::pow(1.0L - p[0][1] * (1.0L - q1), (long double)n[1]);
    const long double b = std::pow(1.0L - p[1][0] * (1.0L - q0), (long double)n[0]) *
                          std::pow(1.0L - p[1][1] * (1.0L - q1), (long double)n[1]);
    const bool done = std::fabs(a - q0) < 1e-19L && std::fabs(b - q1) < 1e-19L;
    q0 = a;
    q1 = b;
    if (done) break;
  }
  return {static_cast<double>(1.0L - q0), static_cast<double>(1.0L - q1)};
}

// (I - H)^{-1} via the adjugate.
inline M2 inverse_i_minus(const M2& h) {
  const double a = 1.0 - h[0][0], b = -h[0][1], c = -h[1][0], d = 1.0 - h[1][1];
  const double det = a * d - b * c;
  return {{{d / det, -b / det}, {-c / det, a / det}}};
}

// Component sizes by breadth-first search on an adjacency list.
inline std::vector<std::int64_t> bfs_component_sizes(std::int64_t n,
                                                     const std::vector<std::pair<std::int64_t, std::int64_t>>& edges) {
  std::vector<std::vector<std::int64_t>> adj(static_cast<std::size_t>(n));
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<std::int64_t> sizes;
  for (std::int64_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::int64_t count = 0;
    std::queue<std::int64_t> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      ++count;
      for (auto w : adj[v]) {
        if (!seen[w]) {
          seen[w] = 1;
          q.push(w);
        }
      }
    }
    sizes.push_back(count);
  }
  std::sort(sizes.rbegin(), sizes.rend());
  return sizes;
}

inline double binomial_pmf(std::int64_t n, std::int64_t k, double p) {
  const double lg = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  return std::exp(lg + k * std::log(p) + (n - k) * std::log1p(-p));
}

// Chi-square goodness-of-fit p-value of observed counts against Binomial(n, p),
// pooling cells with expected count < 5 into their neighbours.
inline double binomial_chi_square_p(const std::vector<std::int64_t>& observed, std::int64_t n, double p) {
  const auto total = [&] {
    std::int64_t t = 0;
    for (auto c : observed) t += c;
    return static_cast<double>(t);
  }();
  std::vector<double> exp_cells, obs_cells;
  double eacc = 0.0, oacc = 0.0;
  for (std::int64_t k = 0; k <= n; ++k) {
    eacc += total * binomial_pmf(n, k, p);
    oacc += k < static_cast<std::int64_t>(observed.size()) ? static_cast<double>(observed[k]) : 0.0;
    if (eacc >= 5.0) {
      exp_cells.push_back(eacc);
      obs_cells.push_back(oacc);
      eacc = oacc = 0.0;
    }
  }
  if (!exp_cells.empty()) {
    exp_cells.back() += eacc;
    obs_cells.back() += oacc;
  }
  double chi = 0.0;
  for (std::size_t i = 0; i < exp_cells.size(); ++i) {
    chi += (obs_cells[i] - exp_cells[i]) * (obs_cells[i] - exp_cells[i]) / exp_cells[i];
  }
  const double dof = static_cast<double>(exp_cells.size()) - 1.0;
  if (dof < 1.0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, chi));
}

}  // namespace oracles
