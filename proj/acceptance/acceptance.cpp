#include "acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bigraph/branching.hpp"
#include "bigraph/error.hpp"
#include "bigraph/graphgen.hpp"
#include "bigraph/harness.hpp"
#include "bigraph/oracle.hpp"
#include "bigraph/params.hpp"
#include "bigraph/rng.hpp"
#include "bigraph/theory.hpp"
#include "oracles.hpp"

namespace bigraph::acceptance {

namespace {

std::string g6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// F_i recomputed in long double with std::pow, independently of the solver.
std::array<double, 2> residual_ld(const ProbMatrix& p, const TypeCounts& n, const std::array<double, 2>& rho) {
  std::array<double, 2> out{};
  for (std::size_t i = 0; i < 2; ++i) {
    long double prod = 1.0L;
    for (std::size_t j = 0; j < 2; ++j) {
      prod *= std::pow(1.0L - static_cast<long double>(p(i, j)) * rho[j], static_cast<long double>(n[j]));
    }
    out[i] = static_cast<double>(1.0L - rho[i] - prod);
  }
  return out;
}

// Random two-type instance whose expectation matrix has Perron root `lambda`.
std::pair<TypeCounts, ProbMatrix> random_instance(std::mt19937_64& gen, double lambda) {
  std::uniform_real_distribution<double> log_n(std::log(100.0), std::log(1e7));
  std::uniform_real_distribution<double> mu(0.0, 2.0);
  for (;;) {
    TypeCounts n{static_cast<std::int64_t>(std::exp(log_n(gen))), static_cast<std::int64_t>(std::exp(log_n(gen)))};
    const double n1 = static_cast<double>(n[0]), n2 = static_cast<double>(n[1]);
    const double m11 = mu(gen), m22 = mu(gen), m12 = mu(gen);
    const Mat2 pm{{{m11 / n1, m12 / n2}, {m12 / n2, m22 / n2}}};
    const double lam = oracles::power_iteration({{{m11, m12}, {m12 / n2 * n1, m22}}});
    if (!(lam > 1e-3)) continue;
    const double c = lambda / lam;
    Mat2 scaled = pm;
    bool ok = true;
    for (auto& row : scaled) {
      for (double& x : row) {
        x *= c;
        ok = ok && x <= 1.0;
      }
    }
    if (!ok) continue;
    scaled[1][0] = scaled[0][1];
    return {n, ProbMatrix::from_mat2(scaled)};
  }
}

Outcome criterion_solver(const Options& o) {
  const int count = o.quick ? 200 : 1000;
  std::mt19937_64 gen(rng::derive(o.master_seed, 1));
  std::uniform_real_distribution<double> sub_l(0.05, 0.99), sup_l(1.01, 3.0);
  int sub_bad = 0, sup_bad = 0;
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    auto [n, p] = random_instance(gen, sub_l(gen));
    const auto s = theory::solve_survival(p, n);
    if (s.rho[0] != 0.0 || s.rho[1] != 0.0) ++sub_bad;
  }
  for (int i = 0; i < count; ++i) {
    auto [n, p] = random_instance(gen, sup_l(gen));
    const auto s = theory::solve_survival(p, n);
    const auto r = residual_ld(p, n, s.rho);
    const double w = std::max(std::fabs(r[0]), std::fabs(r[1]));
    worst = std::max(worst, w);
    if (!(w <= limits::kSolverResidual) || !(s.rho[0] > 0.0)) ++sup_bad;
  }
  return {sub_bad == 0 && sup_bad == 0, std::to_string(count) + " subcritical with nonzero rho: " + std::to_string(sub_bad) +
                                            "; " + std::to_string(count) + " supercritical max |F| " + g6(worst) +
                                            " (limit 1e-10), failures " + std::to_string(sup_bad)};
}

Outcome criterion_asymptotic(const Options&) {
  TypeCounts n{100000000, 100000000};
  const std::vector<double> grid{0.1, 0.05, 0.02, 0.01};
  std::vector<double> ratios;
  for (double eps : grid) {
    const auto p = row_sum_instance(n, 1.0 + eps, 0.5 * (1.0 + eps));
    const auto s = theory::solve_survival(p, n);
    ratios.push_back(0.5 * (s.rho[0] + s.rho[1]) / (2.0 * eps));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) monotone = monotone && ratios[i] > ratios[i - 1];
  bool bounded = std::all_of(ratios.begin(), ratios.end(), [](double r) { return r <= 1.0; });
  const double at002 = ratios[2];
  std::string d = "rho/(2eps) at eps 0.1,0.05,0.02,0.01 = ";
  for (std::size_t i = 0; i < ratios.size(); ++i) d += (i ? ", " : "") + g6(ratios[i]);
  return {monotone && bounded && at002 >= limits::kAsymptoticRatioLo, d + "; eps=0.02 in [0.95,1]: " +
                                                                          (at002 >= limits::kAsymptoticRatioLo ? "yes" : "no") +
                                                                          ", increasing: " + (monotone ? "yes" : "no")};
}

Outcome criterion_dual(const Options& o) {
  std::string detail;
  bool pass = true;
  // (a) pi against the conditional Monte Carlo frequency.
  {
    TypeCounts n{1000, 800};
    const auto p = row_sum_instance(n, 1.2, 0.5);
    const auto rho = theory::solve_survival(p, n);
    const auto dual = theory::dual_matrix(p, rho, n);
    const std::int64_t runs = o.quick ? 25000 : 250000;
    double worst = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        const auto e = harness::dual_edge_frequency(i, j, n, p, runs, rng::derive(o.master_seed, 3, i, j), 10000);
        const double z = std::fabs(e.value - dual.pi[i][j]) / e.std_error;
        worst = std::max(worst, z);
      }
    }
    pass = pass && worst <= limits::kSigma;
    detail += "pi vs conditional MC (" + std::to_string(4 * runs) + " runs) max |z| " + g6(worst);
  }
  // (b) closed form against (I - H)^-1.
  {
    std::mt19937_64 gen(rng::derive(o.master_seed, 3, 9));
    std::uniform_real_distribution<double> sup_l(1.02, 3.0);
    const int count = o.quick ? 200 : 1000;
    double worst = 0.0;
    for (int k = 0; k < count; ++k) {
      auto [n, p] = random_instance(gen, sup_l(gen));
      const auto d = theory::dual_matrix(p, theory::solve_survival(p, n), n);
      const auto e = theory::expected_dual_sizes(d);
      const auto inv = oracles::inverse_i_minus(d.h);
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) worst = std::max(worst, std::fabs(e.e[a][b] - inv[a][b]));
      }
    }
    pass = pass && worst <= limits::kInverseAbs;
    detail += "; closed form vs inverse on " + std::to_string(count) + " instances max err " + g6(worst);
  }
  // (c) dual expectations bounded by 1/eps.
  {
    TypeCounts n{1000000, 1000000};
    bool ok = true;
    double worst_ratio = 0.0;
    for (double eps : {0.05, 0.1, 0.2}) {
      const auto p = row_sum_instance(n, 1.0 + eps, 0.5);
      const auto e = theory::expected_dual_sizes(theory::dual_matrix(p, theory::solve_survival(p, n), n));
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          worst_ratio = std::max(worst_ratio, e.e[a][b] * eps);
          ok = ok && e.e[a][b] <= 1.0 / eps;
        }
      }
    }
    pass = pass && ok;
    detail += "; max eps*E over grid " + g6(worst_ratio) + " (limit 1)";
  }
  return {pass, detail};
}

Outcome criterion_coupling(const Options& o) {
  const int runs = o.quick ? 2000 : 10000;
  TypeCounts n{600, 400};
  const auto p = row_sum_instance(n, 1.2, 0.4);
  branching::Coupler c(n, p);
  branching::StopConfig caps;
  caps.max_total = 100000;
  int upper_bad = 0, lower_bad = 0, overflow = 0;
  for (int r = 0; r < runs; ++r) {
    const auto u = c.upper(static_cast<std::size_t>(r % 2), caps, rng::derive(o.master_seed, 4, 1, r));
    if (u.graph_totals[0] > u.branching_totals[0] || u.graph_totals[1] > u.branching_totals[1]) ++upper_bad;
  }
  const Count2 m{60, 40};
  for (int r = 0; r < runs; ++r) {
    const auto l = c.lower(static_cast<std::size_t>(r % 2), m, caps, rng::derive(o.master_seed, 4, 2, r));
    if (l.overflow) {
      ++overflow;
      continue;
    }
    if (l.reduced_totals[0] > l.graph_totals[0] || l.reduced_totals[1] > l.graph_totals[1]) ++lower_bad;
  }
  const int free_runs = runs - overflow;
  return {upper_bad == 0 && lower_bad == 0 && free_runs > 0,
          "upper: " + std::to_string(runs - upper_bad) + "/" + std::to_string(runs) + " dominated; lower: " +
              std::to_string(free_runs - lower_bad) + "/" + std::to_string(free_runs) + " non-overflow runs dominated (" +
              std::to_string(overflow) + " overflow)"};
}

Outcome criterion_exact(const Options& o) {
  TypeCounts n{3, 2};
  const int seeds = o.quick ? 20000 : 100000;
  std::mt19937_64 gen(rng::derive(o.master_seed, 5));
  std::uniform_real_distribution<double> u(0.05, 0.95);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const double a = u(gen), b = u(gen), c = u(gen);
    ProbMatrix p{{a, b}, {b, c}};
    const auto l1 = oracle::enumerate_exact(n, p, oracle::Statistic::l1());
    const auto root = oracle::enumerate_exact(n, p, oracle::Statistic::root_component(0));
    double sum_l1 = 0.0, sum_root = 0.0;
    for (int s = 0; s < seeds; ++s) {
      const auto st = components(sample(n, p, rng::derive(o.master_seed, 5, k, s)));
      sum_l1 += static_cast<double>(st.L1);
      sum_root += static_cast<double>(st.comp_sizes[static_cast<std::size_t>(st.component_of[0])]);
    }
    const double z1 = std::fabs(sum_l1 / seeds - l1.mean) / std::sqrt(l1.variance / seeds);
    const double z2 = std::fabs(sum_root / seeds - root.mean) / std::sqrt(root.variance / seeds);
    worst = std::max({worst, z1, z2});
  }
  return {worst <= limits::kSigma, "5 matrices x " + std::to_string(seeds) + " seeds, max |z| over L1 and root component " +
                                       g6(worst) + " (limit 3)"};
}

std::string criteria_detail(const harness::ExperimentReport& r) {
  std::string d;
  for (const auto& c : r.criteria) {
    if (!d.empty()) d += "; ";
    d += c.name + " " + g6(c.value) + (c.pass ? " ok" : " FAILS") + " (limit " + g6(c.target) + ")";
  }
  return d;
}

Outcome criterion_weak_super(const Options& o) {
  TypeCounts n{200000, 200000};
  const auto p = row_sum_instance(n, 1.08, 0.3);
  const auto r = harness::run_regime(harness::Regime::WeakSuper, n, p, o.quick ? 10 : 30,
                                     rng::derive(o.master_seed, 6), {o.workers, {}});
  return {r.passed(), std::to_string(r.reps) + " seeds; " + criteria_detail(r)};
}

Outcome criterion_weak_sub(const Options& o) {
  TypeCounts n{200000, 200000};
  const auto p = row_sum_instance(n, 0.92, 0.3);
  const auto r = harness::run_regime(harness::Regime::WeakSub, n, p, o.quick ? 10 : 30,
                                     rng::derive(o.master_seed, 7), {o.workers, {}});
  return {r.passed(), std::to_string(r.reps) + " seeds; " + criteria_detail(r)};
}

Outcome criterion_const_super(const Options& o) {
  TypeCounts n{500000, 500000};
  const double q = 1.2 / 1e6;
  ProbMatrix p{{q, q}, {q, q}};
  const double rho_eps = theory::rho_epsilon(0.2);
  const bool frozen = std::fabs(rho_eps - limits::kRhoEps02) <= limits::kRhoEpsAbs &&
                      std::fabs(rho_eps - oracles::poisson_root(1.2)) <= limits::kRhoEpsAbs;
  const auto r = harness::run_regime(harness::Regime::ConstSuper, n, p, o.quick ? 6 : 20,
                                     rng::derive(o.master_seed, 8), {o.workers, {}});
  return {r.passed() && frozen, std::to_string(r.reps) + " seeds; rho_eps(0.2) " + g6(rho_eps) +
                                    (frozen ? " matches reference" : " DIFFERS from reference") + "; " + criteria_detail(r)};
}

Outcome criterion_const_sub(const Options& o) {
  TypeCounts n{500000, 500000};
  const double q = 0.7 / 1e6;
  ProbMatrix p{{q, q}, {q, q}};
  const auto r = harness::run_regime(harness::Regime::ConstSub, n, p, o.quick ? 10 : 30,
                                     rng::derive(o.master_seed, 9), {o.workers, {}});
  return {r.passed(), std::to_string(r.reps) + " seeds; " + criteria_detail(r)};
}

Outcome criterion_sprinkle(const Options& o) {
  TypeCounts n{200000, 200000};
  const auto p = row_sum_instance(n, 1.08, 0.3);
  const std::int64_t reps = o.quick ? 40 : 200;
  const auto r = harness::two_round_exposure(n, p, rng::derive(o.master_seed, 10), reps, o.workers);
  // Merge fraction over the first 50 replications.
  const std::size_t merge_reps = std::min<std::size_t>(50, r.records.size());
  double merged = 0.0;
  for (std::size_t i = 0; i < merge_reps; ++i) merged += static_cast<double>(r.records[i].merged);
  const double frac = merged / static_cast<double>(merge_reps);
  const bool merge_ok = frac >= harness::tolerance::kMergeFraction;
  bool ok = merge_ok;
  std::string d;
  for (const auto& c : r.criteria) {
    if (c.name == "merge_fraction") continue;
    ok = ok && c.pass;
    d += c.name + " " + g6(c.value) + (c.pass ? " ok" : " FAILS") + " (limit " + g6(c.target) + "); ";
  }
  double omega = 0.0;
  for (const auto& [k, v] : r.diagnostics) {
    if (k == "omega") omega = v;
  }
  d += "merge fraction over " + std::to_string(merge_reps) + " reps " + g6(frac) + (merge_ok ? " ok" : " FAILS") +
       " (limit 0.9); omega " + g6(omega) + "; rank test on " + std::to_string(reps) + " reps";
  return {ok, d};
}

Outcome criterion_width(const Options& o) {
  TypeCounts n{1000000, 1000000};
  const double eps = 0.1;
  const auto p = row_sum_instance(n, 1.0 + eps, 0.5 * (1.0 + eps));
  const std::int64_t reps = o.quick ? 20000 : 100000;
  const auto e = branching::width_conditional_extinction(0, n, p, 500, reps, rng::derive(o.master_seed, 11));
  const double limit = limits::kWidthFactor * eps;
  return {e.value <= limit, std::to_string(reps) + " reps, m=500: P(width>=m, extinct) " + g6(e.value) + " (se " +
                                g6(e.std_error) + ", limit " + g6(limit) + "; eps*m = 50)"};
}

Outcome criterion_determinism(const Options& o) {
  Options q = o;
  q.quick = true;
  q.only.clear();
  for (int id = 1; id <= 11; ++id) q.only.push_back(id);
  Options single = q;
  single.workers = 1;
  Options many = q;
  many.workers = std::max(2, harness::resolve_workers(o.workers));
  const std::string a = to_json(run(single));
  const std::string b = to_json(run(many));
  return {a == b, "quick suite run twice (workers 1 and " + std::to_string(many.workers) + "): reports " +
                      (a == b ? "byte-identical" : "DIFFER") + " (" + std::to_string(a.size()) + " bytes)"};
}

struct Spec {
  int id;
  const char* title;
  double budget;
  Outcome (*fn)(const Options&);
};

const Spec kSpecs[] = {
    {1, "solver correctness", 10, criterion_solver},
    {2, "asymptotic survival", 5, criterion_asymptotic},
    {3, "dual process", 60, criterion_dual},
    {4, "coupling domination", 60, criterion_coupling},
    {5, "exact-oracle equivalence", 120, criterion_exact},
    {6, "weakly supercritical", 120, criterion_weak_super},
    {7, "weakly subcritical", 60, criterion_weak_sub},
    {8, "constant supercritical", 120, criterion_const_super},
    {9, "constant subcritical", 60, criterion_const_sub},
    {10, "sprinkling", 180, criterion_sprinkle},
    {11, "width lemma", 60, criterion_width},
    {12, "determinism", 0, criterion_determinism},
};

}  // namespace

bool Report::passed() const {
  return std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.pass; });
}

Report run(const Options& opts, const std::function<void(const CriterionResult&)>& on_result) {
  Report rep;
  rep.master_seed = opts.master_seed;
  rep.quick = opts.quick;
  for (const Spec& s : kSpecs) {
    if (!opts.only.empty() && std::find(opts.only.begin(), opts.only.end(), s.id) == opts.only.end()) continue;
    CriterionResult r;
    r.id = s.id;
    r.title = s.title;
    r.budget_seconds = s.budget;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Outcome out = s.fn(opts);
      r.pass = out.pass;
      r.detail = out.detail;
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // Runtime budgets bind only in full mode, so quick reports stay timing-free.
    if (!opts.quick && s.budget > 0 && r.seconds >= s.budget) {
      r.pass = false;
      r.detail += "; runtime over budget";
    }
    rep.results.push_back(r);
    if (on_result) on_result(r);
  }
  return rep;
}

std::string format_line(const CriterionResult& r) {
  std::string line = "criterion " + std::to_string(r.id) + (r.pass ? " PASS " : " FAIL ") + r.title + ": " + r.detail;
  char buf[64];
  if (r.budget_seconds > 0) {
    std::snprintf(buf, sizeof buf, " (%.1f s, budget %.0f s)", r.seconds, r.budget_seconds);
  } else {
    std::snprintf(buf, sizeof buf, " (%.1f s)", r.seconds);
  }
  return line + buf;
}

std::string to_json(const Report& r, bool with_timing) {
  nlohmann::ordered_json j;
  j["schema_version"] = harness::kReportSchemaVersion;
  j["master_seed"] = r.master_seed;
  j["quick"] = r.quick;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : r.results) {
    nlohmann::ordered_json o;
    o["id"] = c.id;
    o["title"] = c.title;
    o["pass"] = c.pass;
    o["detail"] = c.detail;
    if (with_timing) {
      o["seconds"] = c.seconds;
      o["budget_seconds"] = c.budget_seconds;
    }
    arr.push_back(o);
  }
  j["criteria"] = arr;
  j["pass"] = r.passed();
  return j.dump(2);
}

}  // namespace bigraph::acceptance
