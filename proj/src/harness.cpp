#include "bigraph/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "bigraph/error.hpp"
#include "bigraph/graphgen.hpp"
#include "bigraph/rng.hpp"

namespace bigraph::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double ulp_of(double x) {
  const double ax = std::fabs(x);
  return std::nextafter(ax, std::numeric_limits<double>::infinity()) - ax;
}

double identity_ulps(double pa, double pb, double p) {
  if (p == 0.0) return std::fabs(pa + pb - pa * pb) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::fabs(pa + pb - pa * pb - p) / ulp_of(p);
}

ExperimentRecord record_from(std::int64_t rep, std::uint64_t seed, const ComponentStats& s) {
  ExperimentRecord r;
  r.rep = rep;
  r.seed = seed;
  r.L1 = s.L1;
  r.L2 = s.L2;
  r.components = static_cast<std::int64_t>(s.component_count());
  r.l1_per_type.assign(s.k, 0);
  if (s.component_count() > 0) {
    for (std::size_t t = 0; t < s.k; ++t) r.l1_per_type[t] = s.type_count(0, t);
  }
  r.s_L = s.s_L;
  return r;
}

std::vector<std::int64_t> counts_vec(const TypeCounts& n) { return n.data(); }

std::vector<double> default_thresholds(const TypeCounts& n, const ProbMatrix& p) {
  try {
    return make_sprinkle(n, p).l;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::OmegaTooSmall) return {};
    throw;
  }
}

Criterion make_criterion(std::string name, double value, double target, bool pass, std::string note = {}) {
  return Criterion{std::move(name), value, target, pass, std::move(note)};
}

const Summary* find_summary(const ExperimentReport& r, std::string_view key) {
  for (const auto& [k, s] : r.aggregates) {
    if (k == key) return &s;
  }
  return nullptr;
}

nlohmann::json summary_json(const Summary& s) {
  return {{"count", s.count}, {"mean", s.mean}, {"sd", s.sd}, {"ci_lo", s.ci_lo},
          {"ci_hi", s.ci_hi}, {"min", s.min},   {"max", s.max}};
}

}  // namespace

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BIGRAPH_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min<long>(v, 1024));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::int64_t count, int workers, const std::function<void(std::int64_t)>& body) {
  if (count <= 0) return;
  const int w = static_cast<int>(std::min<std::int64_t>(std::max(1, workers), count));
  if (w == 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const std::int64_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
        failed = true;
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(w));
  for (int t = 0; t < w; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.count = static_cast<std::int64_t>(xs.size());
  if (xs.empty()) return s;
  double sum = 0.0;
  s.min = xs.front();
  s.max = xs.front();
  for (double x : xs) {
    sum += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  const double half = 1.96 * s.sd / std::sqrt(static_cast<double>(xs.size()));
  s.ci_lo = s.mean - half;
  s.ci_hi = s.mean + half;
  return s;
}

RankTest mann_whitney(const std::vector<double>& a, const std::vector<double>& b) {
  RankTest out;
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  if (na == 0 || nb == 0) return out;
  std::vector<std::pair<double, int>> all;
  all.reserve(na + nb);
  for (double x : a) all.emplace_back(x, 0);
  for (double x : b) all.emplace_back(x, 1);
  std::sort(all.begin(), all.end());
  const double N = static_cast<double>(na + nb);
  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t q = i; q < j; ++q) {
      if (all[q].second == 0) rank_sum_a += mid;
    }
    i = j;
  }
  const double fa = static_cast<double>(na);
  const double fb = static_cast<double>(nb);
  out.u = rank_sum_a - fa * (fa + 1.0) / 2.0;
  const double mean = fa * fb / 2.0;
  const double var = fa * fb / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
  if (var <= 0.0) return out;  // all values tied
  out.z = (out.u - mean) / std::sqrt(var);
  out.p_value = std::erfc(std::fabs(out.z) / std::sqrt(2.0));
  return out;
}

SprinklePair make_sprinkle(const TypeCounts& n, const ProbMatrix& p) {
  const ExpectationMatrix m = validate(p, n);
  const RegimeReport diag = diagnose(m, n);
  const double eps = diag.epsilon;
  if (!(eps > 0.0)) throw Error(ErrorCode::OmegaTooSmall, "sprinkling needs a supercritical instance");
  const double alpha = std::min(1.0, m(1, 0) / eps);
  const double omega = alpha * eps * eps * eps * static_cast<double>(n[1]);
  if (!(omega > 1.0)) {
    throw Error(ErrorCode::OmegaTooSmall, "omega = " + fmt17(omega) + " must exceed 1");
  }
  const double log_omega = std::log(omega);
  const double p12 = p(0, 1);
  const double pb = std::min(eps / (static_cast<double>(n[0]) * log_omega), p12 / log_omega);
  double pa = pb < 1.0 ? (p12 - pb) / (1.0 - pb) : 0.0;
  pa = std::clamp(pa, 0.0, 1.0);
  // Walk pa by single ulps until the composition identity holds to 1 ulp.
  for (int step = 0; step < 64 && identity_ulps(pa, pb, p12) > tolerance::kIdentityUlps; ++step) {
    const double composed = pa + pb - pa * pb;
    pa = std::nextafter(pa, composed > p12 ? 0.0 : 1.0);
  }
  const Mat2 base = p.as_mat2();
  Mat2 a = base;
  a[0][1] = a[1][0] = pa;
  Mat2 b{};
  b[0][1] = b[1][0] = pb;
  SprinklePair out{ProbMatrix::from_mat2(a), ProbMatrix::from_mat2(b), eps, alpha, omega, {}, 0.0};
  out.l = {eps * static_cast<double>(n[0]) / log_omega, eps * static_cast<double>(n[1]) / log_omega};
  out.identity_residual_ulps = identity_ulps(pa, pb, p12);
  return out;
}

double merge_bound(double omega) {
  const double lw = std::log(omega);
  return 1.0 - 10.0 * lw * std::exp(-omega / (4.0 * lw * lw * lw));
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::WeakSuper: return "weak_super";
    case Regime::WeakSub: return "weak_sub";
    case Regime::ConstSuper: return "const_super";
    case Regime::ConstSub: return "const_sub";
  }
  return "unknown";
}

std::optional<Regime> parse_regime(std::string_view s) {
  for (Regime r : {Regime::WeakSuper, Regime::WeakSub, Regime::ConstSuper, Regime::ConstSub}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

TheoryTargets theory_targets(const TypeCounts& n, const ProbMatrix& p) {
  const ExpectationMatrix m = validate(p, n);
  const RegimeReport diag = diagnose(m, n);
  TheoryTargets t;
  t.lambda = diag.lambda;
  t.epsilon = diag.epsilon;
  const theory::SurvivalPair sp = theory::solve_survival(m, n);
  t.rho = {sp.rho[0], sp.rho[1]};
  t.rho_bar = (static_cast<double>(n[0]) * sp.rho[0] + static_cast<double>(n[1]) * sp.rho[1]) /
              static_cast<double>(n.total());
  t.two_eps = 2.0 * diag.epsilon;
  if (diag.epsilon > 0.0) t.rho_eps = theory::rho_epsilon(diag.epsilon);
  return t;
}

bool ExperimentReport::passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
}

std::vector<std::pair<std::string, Summary>> aggregate(const std::vector<ExperimentRecord>& records,
                                                        const std::vector<std::int64_t>& n) {
  std::int64_t total = 0;
  for (auto x : n) total += x;
  const double N = static_cast<double>(total);
  std::vector<double> l1, l2, ratio;
  std::vector<std::vector<double>> per_type(n.size()), sl(n.size());
  std::vector<double> direct, merged;
  bool have_sl = !records.empty();
  for (const auto& r : records) {
    l1.push_back(static_cast<double>(r.L1) / N);
    l2.push_back(static_cast<double>(r.L2) / N);
    ratio.push_back(r.L1 > 0 ? static_cast<double>(r.L2) / static_cast<double>(r.L1) : 0.0);
    for (std::size_t t = 0; t < n.size() && t < r.l1_per_type.size(); ++t) {
      per_type[t].push_back(static_cast<double>(r.l1_per_type[t]) / static_cast<double>(n[t]));
    }
    if (r.s_L.size() != n.size()) have_sl = false;
    for (std::size_t t = 0; t < n.size() && t < r.s_L.size(); ++t) {
      sl[t].push_back(static_cast<double>(r.s_L[t]) / static_cast<double>(n[t]));
    }
    if (r.direct_L1 >= 0) direct.push_back(static_cast<double>(r.direct_L1) / N);
    if (r.merged >= 0) merged.push_back(static_cast<double>(r.merged));
  }
  std::vector<std::pair<std::string, Summary>> out;
  out.emplace_back("L1_over_n", summarize(l1));
  out.emplace_back("L2_over_n", summarize(l2));
  out.emplace_back("L2_over_L1", summarize(ratio));
  for (std::size_t t = 0; t < n.size(); ++t) {
    out.emplace_back("L1_type" + std::to_string(t + 1) + "_share", summarize(per_type[t]));
  }
  if (have_sl) {
    for (std::size_t t = 0; t < n.size(); ++t) {
      out.emplace_back("sL_type" + std::to_string(t + 1) + "_share", summarize(sl[t]));
    }
  }
  if (!direct.empty()) out.emplace_back("direct_L1_over_n", summarize(direct));
  if (!merged.empty()) out.emplace_back("merged", summarize(merged));
  return out;
}

ExperimentReport run_regime(Regime regime, const TypeCounts& n, const ProbMatrix& p, std::int64_t reps,
                            std::uint64_t master_seed, const RunOptions& opts) {
  const auto t0 = Clock::now();
  const ExpectationMatrix m = validate(p, n);
  const RegimeReport diag = diagnose(m, n);
  const bool super = regime == Regime::WeakSuper || regime == Regime::ConstSuper;
  const Criticality want = super ? Criticality::Supercritical : Criticality::Subcritical;
  if (diag.classification != want) {
    throw Error(ErrorCode::RegimeMismatch, std::string(to_string(regime)) + " requested but instance is " +
                                               std::string(to_string(diag.classification)));
  }
  if (reps < 0) throw Error(ErrorCode::InvalidArgument, "reps must be nonnegative");

  ExperimentReport rep;
  rep.label = std::string(to_string(regime));
  rep.n = counts_vec(n);
  rep.p = p.data();
  rep.master_seed = master_seed;
  rep.reps = reps;
  rep.theory = theory_targets(n, p);
  if (opts.thresholds) {
    rep.thresholds = *opts.thresholds;
  } else if (super) {
    rep.thresholds = default_thresholds(n, p);
  }
  std::optional<std::vector<double>> th;
  if (!rep.thresholds.empty()) th = rep.thresholds;

  rep.records.resize(static_cast<std::size_t>(reps));
  parallel_for(reps, resolve_workers(opts.workers), [&](std::int64_t r) {
    const std::uint64_t seed = rng::derive(master_seed, static_cast<std::uint64_t>(r));
    const SampledGraph g = sample(n, p, seed);
    rep.records[static_cast<std::size_t>(r)] = record_from(r, seed, components(g, th));
  });
  rep.aggregates = aggregate(rep.records, rep.n);

  const double N = static_cast<double>(n.total());
  const double eps = std::fabs(diag.epsilon);
  double max_l1 = 0.0;
  for (const auto& r : rep.records) max_l1 = std::max(max_l1, static_cast<double>(r.L1));
  rep.diagnostics = {{"condition_super", diag.condition_super}, {"condition_sub", diag.condition_sub}};

  if (reps == 0) {
    rep.wall_seconds = seconds_since(t0);
    return rep;
  }
  const Summary& l1 = *find_summary(rep, "L1_over_n");
  switch (regime) {
    case Regime::WeakSuper: {
      const double target = rep.theory.rho_bar;
      const double rel = std::fabs(l1.mean - target) / target;
      rep.criteria.push_back(make_criterion("mean_L1_over_n_rel_error", rel, tolerance::kWeakSuperRelL1,
                                            rel <= tolerance::kWeakSuperRelL1, "target rho_bar"));
      for (std::size_t t = 0; t < 2; ++t) {
        const Summary& s = *find_summary(rep, "L1_type" + std::to_string(t + 1) + "_share");
        const double rho = rep.theory.rho[t];
        const double e = std::fabs(s.mean - rho) / rho;
        rep.criteria.push_back(make_criterion("type" + std::to_string(t + 1) + "_share_rel_error", e,
                                              tolerance::kWeakSuperRelType, e <= tolerance::kWeakSuperRelType));
      }
      const Summary& ratio = *find_summary(rep, "L2_over_L1");
      rep.criteria.push_back(make_criterion("max_L2_over_L1", ratio.max, tolerance::kWeakSuperMaxL2OverL1,
                                            ratio.max <= tolerance::kWeakSuperMaxL2OverL1));
      const double r2e = target / rep.theory.two_eps;
      rep.criteria.push_back(make_criterion("rho_over_two_eps", r2e, tolerance::kRhoOverTwoEpsLo,
                                            r2e >= tolerance::kRhoOverTwoEpsLo && r2e <= tolerance::kRhoOverTwoEpsHi,
                                            "band [0.85, 1.0]"));
      break;
    }
    case Regime::WeakSub: {
      const double bound = tolerance::kWeakSubFactor * std::pow(N, 2.0 / 3.0);
      rep.criteria.push_back(make_criterion("max_L1", max_l1, bound, max_l1 <= bound, "0.5 n^(2/3)"));
      break;
    }
    case Regime::ConstSuper: {
      const double target = *rep.theory.rho_eps;
      const double err = std::fabs(l1.mean - target);
      rep.criteria.push_back(make_criterion("mean_L1_over_n_abs_error", err, tolerance::kConstSuperAbs,
                                            err <= tolerance::kConstSuperAbs, "target rho_eps"));
      break;
    }
    case Regime::ConstSub: {
      const double bound = tolerance::kConstSubFactor * std::log(N) / (eps * eps);
      rep.criteria.push_back(make_criterion("max_L1", max_l1, bound, max_l1 <= bound, "5 eps^-2 log n"));
      break;
    }
  }
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

std::vector<SweepRow> sweep_epsilon(const std::vector<double>& eps_grid, const TypeCounts& n,
                                    const ProbMatrix& shape, std::int64_t reps, std::uint64_t master_seed,
                                    int workers) {
  std::vector<SweepRow> rows;
  rows.reserve(eps_grid.size());
  const double N = static_cast<double>(n.total());
  const int w = resolve_workers(workers);
  for (std::size_t g = 0; g < eps_grid.size(); ++g) {
    const double eps = eps_grid[g];
    const ProbMatrix p = shape.scaled(1.0 + eps);
    SweepRow row;
    row.eps = eps;
    const TheoryTargets t = theory_targets(n, p);
    row.lambda = t.lambda;
    row.rho_bar = t.rho_bar;
    row.rho_eps = t.rho_eps;
    std::vector<double> l1(static_cast<std::size_t>(reps)), l2(l1.size()), ratio(l1.size());
    parallel_for(reps, w, [&](std::int64_t r) {
      const std::uint64_t seed = rng::derive(master_seed, g, static_cast<std::uint64_t>(r));
      const ComponentStats s = components(sample(n, p, seed));
      const auto i = static_cast<std::size_t>(r);
      l1[i] = static_cast<double>(s.L1) / N;
      l2[i] = static_cast<double>(s.L2) / N;
      ratio[i] = s.L1 > 0 ? static_cast<double>(s.L2) / static_cast<double>(s.L1) : 0.0;
    });
    row.l1_over_n = summarize(l1);
    row.l2_over_n = summarize(l2);
    row.l2_over_l1 = summarize(ratio);
    rows.push_back(row);
  }
  return rows;
}

int sweep_inversions(const std::vector<SweepRow>& rows) {
  int inv = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].l1_over_n.mean < rows[i - 1].l1_over_n.mean) ++inv;
  }
  return inv;
}

ExperimentReport two_round_exposure(const TypeCounts& n, const ProbMatrix& p, std::uint64_t master_seed,
                                    std::int64_t reps, int workers) {
  const auto t0 = Clock::now();
  const SprinklePair sp = make_sprinkle(n, p);
  ExperimentReport rep;
  rep.label = "sprinkle";
  rep.n = counts_vec(n);
  rep.p = p.data();
  rep.master_seed = master_seed;
  rep.reps = reps;
  rep.theory = theory_targets(n, p);
  rep.thresholds = sp.l;
  const std::vector<double> witness{0.5 * sp.l[0], 0.5 * sp.l[1]};
  rep.records.resize(static_cast<std::size_t>(std::max<std::int64_t>(reps, 0)));

  parallel_for(reps, resolve_workers(workers), [&](std::int64_t r) {
    const auto ur = static_cast<std::uint64_t>(r);
    const SampledGraph ga = sample(n, sp.pa, rng::derive(master_seed, ur, 1));
    const SampledGraph gb = sample(n, sp.pb, rng::derive(master_seed, ur, 2));
    const std::uint64_t direct_seed = rng::derive(master_seed, ur, 3);
    const ComponentStats sa = components(ga);
    const SampledGraph gu = graph_union(ga, gb);
    const ComponentStats su = components(gu, sp.l);
    const ComponentStats sd = components(sample(n, p, direct_seed));

    // A representative vertex for each witnessed-large component of G(n, Pa).
    std::vector<std::int64_t> rep_vertex(sa.component_count(), -1);
    std::vector<char> large(sa.component_count(), 0);
    for (std::size_t c = 0; c < sa.component_count(); ++c) {
      for (std::size_t t = 0; t < sa.k; ++t) {
        if (static_cast<double>(sa.type_count(c, t)) >= witness[t]) large[c] = 1;
      }
    }
    for (std::int64_t v = 0; v < ga.vertex_count(); ++v) {
      const auto c = static_cast<std::size_t>(sa.component_of[static_cast<std::size_t>(v)]);
      if (large[c] && rep_vertex[c] < 0) rep_vertex[c] = v;
    }
    std::int64_t target = -1;
    bool merged = true;
    for (std::size_t c = 0; c < sa.component_count(); ++c) {
      if (!large[c]) continue;
      const std::int64_t uc = su.component_of[static_cast<std::size_t>(rep_vertex[c])];
      if (target < 0) target = uc;
      else if (uc != target) merged = false;
    }

    ExperimentRecord rec = record_from(r, rng::derive(master_seed, ur), su);
    rec.direct_L1 = sd.L1;
    rec.merged = merged ? 1 : 0;
    rep.records[static_cast<std::size_t>(r)] = std::move(rec);
  });
  rep.aggregates = aggregate(rep.records, rep.n);

  std::vector<double> union_l1, direct_l1;
  double merged_count = 0.0;
  for (const auto& r : rep.records) {
    union_l1.push_back(static_cast<double>(r.L1));
    direct_l1.push_back(static_cast<double>(r.direct_L1));
    merged_count += static_cast<double>(r.merged);
  }
  const RankTest rt = mann_whitney(union_l1, direct_l1);
  const double frac = reps > 0 ? merged_count / static_cast<double>(reps) : 0.0;
  const double bound = merge_bound(sp.omega);
  rep.diagnostics = {{"alpha", sp.alpha},
                     {"omega", sp.omega},
                     {"l1", sp.l[0]},
                     {"l2", sp.l[1]},
                     {"pa12", sp.pa(0, 1)},
                     {"pb12", sp.pb(0, 1)},
                     {"identity_residual_ulps", sp.identity_residual_ulps},
                     {"rank_test_u", rt.u},
                     {"rank_test_z", rt.z},
                     {"rank_test_p", rt.p_value},
                     {"merge_fraction", frac},
                     {"merge_bound", bound}};
  rep.criteria.push_back(make_criterion("identity_residual_ulps", sp.identity_residual_ulps,
                                        tolerance::kIdentityUlps,
                                        sp.identity_residual_ulps <= tolerance::kIdentityUlps));
  rep.criteria.push_back(make_criterion("rank_test_p", rt.p_value, tolerance::kRankTestP,
                                        rt.p_value > tolerance::kRankTestP, "union vs direct L1"));
  rep.criteria.push_back(make_criterion("merge_fraction", frac, tolerance::kMergeFraction,
                                        frac >= tolerance::kMergeFraction,
                                        sp.omega < tolerance::kOmegaFlag ? "flagged: omega < 50" : ""));
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

SLEstimate estimate_sL(const TypeCounts& n, const ProbMatrix& p, const std::vector<double>& l, std::int64_t reps,
                       std::uint64_t master_seed, int workers) {
  const ExpectationMatrix m = validate(p, n);
  const RegimeReport diag = diagnose(m, n);
  if (l.size() != n.k()) throw Error(ErrorCode::DimensionMismatch, "one threshold per type required");
  SLEstimate est;
  est.thresholds = l;
  est.epsilon = diag.epsilon;
  const std::size_t k = n.k();
  std::vector<std::vector<double>> counts(k, std::vector<double>(static_cast<std::size_t>(std::max<std::int64_t>(reps, 0))));
  parallel_for(reps, resolve_workers(workers), [&](std::int64_t r) {
    const std::uint64_t seed = rng::derive(master_seed, static_cast<std::uint64_t>(r));
    const ComponentStats s = components(sample(n, p, seed), l);
    for (std::size_t t = 0; t < k; ++t) counts[t][static_cast<std::size_t>(r)] = static_cast<double>(s.s_L[t]);
  });
  for (std::size_t t = 0; t < k; ++t) {
    const double nt = static_cast<double>(n[t]);
    est.count.push_back(summarize(counts[t]));
    std::vector<double> share(counts[t]);
    for (double& x : share) x /= nt;
    est.share.push_back(summarize(share));
    est.ratio_to_two_eps.push_back(est.count.back().mean / (2.0 * diag.epsilon * nt));
    est.eps2_l.push_back(diag.epsilon * diag.epsilon * l[t]);
    est.l_over_eps_n.push_back(l[t] / (diag.epsilon * nt));
  }
  return est;
}

branching::Estimate dual_edge_frequency(std::size_t root_type, std::size_t j, const TypeCounts& n,
                                        const ProbMatrix& p, std::int64_t runs, std::uint64_t seed,
                                        std::int64_t survive_threshold) {
  validate(p, n);
  if (root_type > 1 || j > 1) throw Error(ErrorCode::InvalidArgument, "type index out of range");
  double sum = 0.0;
  double sumsq = 0.0;
  std::int64_t extinct = 0;
  const double nj = static_cast<double>(n[j]);
  for (std::int64_t r = 0; r < runs; ++r) {
    rng::Engine eng = rng::make_engine(rng::derive(seed, static_cast<std::uint64_t>(r)));
    std::array<std::int64_t, 2> z{branching::binomial(eng, n[0], p(root_type, 0)),
                                  branching::binomial(eng, n[1], p(root_type, 1))};
    const double xj = static_cast<double>(z[j]);
    std::int64_t total = 1 + z[0] + z[1];
    while ((z[0] > 0 || z[1] > 0) && total < survive_threshold) {
      std::array<std::int64_t, 2> next{0, 0};
      for (std::size_t t = 0; t < 2; ++t) {
        for (std::size_t c = 0; c < 2; ++c) {
          if (z[t] > 0) next[c] += branching::binomial(eng, z[t] * n[c], p(t, c));
        }
      }
      z = next;
      total += z[0] + z[1];
    }
    if (z[0] == 0 && z[1] == 0) {
      ++extinct;
      sum += xj / nj;
      sumsq += (xj / nj) * (xj / nj);
    }
  }
  branching::Estimate e;
  e.successes = extinct;
  e.trials = runs;
  if (extinct > 0) {
    const double c = static_cast<double>(extinct);
    e.value = sum / c;
    const double var = extinct > 1 ? std::max(0.0, (sumsq - c * e.value * e.value) / (c - 1.0)) : 0.0;
    e.std_error = std::sqrt(var / c);
  }
  return e;
}

void write_csv(std::ostream& os, const ExperimentReport& report) {
  os << "rep,seed,L1,L2,L1_type1,L1_type2,sL_type1,sL_type2,components,direct_L1,merged\n";
  for (const auto& r : report.records) {
    auto at = [](const std::vector<std::int64_t>& v, std::size_t i) -> std::int64_t {
      return i < v.size() ? v[i] : -1;
    };
    os << r.rep << ',' << r.seed << ',' << r.L1 << ',' << r.L2 << ',' << at(r.l1_per_type, 0) << ','
       << at(r.l1_per_type, 1) << ',' << at(r.s_L, 0) << ',' << at(r.s_L, 1) << ',' << r.components << ','
       << r.direct_L1 << ',' << r.merged << '\n';
  }
}

std::string to_json(const ExperimentReport& report, bool with_timing) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["label"] = report.label;
  j["n"] = report.n;
  j["p"] = report.p;
  j["master_seed"] = report.master_seed;
  j["reps"] = report.reps;
  j["thresholds"] = report.thresholds;
  nlohmann::ordered_json th;
  th["lambda"] = report.theory.lambda;
  th["epsilon"] = report.theory.epsilon;
  th["rho"] = report.theory.rho;
  th["rho_bar"] = report.theory.rho_bar;
  th["two_eps"] = report.theory.two_eps;
  th["rho_eps"] = report.theory.rho_eps ? nlohmann::ordered_json(*report.theory.rho_eps) : nlohmann::ordered_json();
  j["theory"] = th;
  nlohmann::ordered_json agg = nlohmann::ordered_json::object();
  for (const auto& [k, s] : report.aggregates) agg[k] = summary_json(s);
  j["aggregates"] = agg;
  nlohmann::ordered_json diag = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.diagnostics) diag[k] = v;
  j["diagnostics"] = diag;
  nlohmann::ordered_json crit = nlohmann::ordered_json::array();
  for (const auto& c : report.criteria) {
    crit.push_back({{"name", c.name}, {"value", c.value}, {"target", c.target}, {"pass", c.pass}, {"note", c.note}});
  }
  j["criteria"] = crit;
  j["pass"] = report.passed();
  if (with_timing) j["wall_seconds"] = report.wall_seconds;
  return j.dump(2);
}

std::string sweep_to_json(const std::vector<SweepRow>& rows) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["eps"] = r.eps;
    o["lambda"] = r.lambda;
    o["L1_over_n"] = summary_json(r.l1_over_n);
    o["L2_over_n"] = summary_json(r.l2_over_n);
    o["L2_over_L1"] = summary_json(r.l2_over_l1);
    o["rho_bar"] = r.rho_bar;
    o["rho_eps"] = r.rho_eps ? nlohmann::ordered_json(*r.rho_eps) : nlohmann::ordered_json();
    arr.push_back(o);
  }
  j["rows"] = arr;
  j["inversions"] = sweep_inversions(rows);
  return j.dump(2);
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "eps,lambda,mean_L1_over_n,sd_L1_over_n,mean_L2_over_n,mean_L2_over_L1,rho_bar,rho_eps\n";
  for (const auto& r : rows) {
    os << fmt17(r.eps) << ',' << fmt17(r.lambda) << ',' << fmt17(r.l1_over_n.mean) << ','
       << fmt17(r.l1_over_n.sd) << ',' << fmt17(r.l2_over_n.mean) << ',' << fmt17(r.l2_over_l1.mean) << ','
       << fmt17(r.rho_bar) << ',' << (r.rho_eps ? fmt17(*r.rho_eps) : std::string()) << '\n';
  }
}

std::string sl_to_json(const SLEstimate& est) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["epsilon"] = est.epsilon;
  j["thresholds"] = est.thresholds;
  nlohmann::ordered_json types = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < est.count.size(); ++t) {
    types.push_back({{"type", t + 1},
                     {"s_L", summary_json(est.count[t])},
                     {"share", summary_json(est.share[t])},
                     {"ratio_to_two_eps", est.ratio_to_two_eps[t]},
                     {"eps2_l", est.eps2_l[t]},
                     {"l_over_eps_n", est.l_over_eps_n[t]}});
  }
  j["types"] = types;
  return j.dump(2);
}

}  // namespace bigraph::harness
