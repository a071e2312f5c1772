#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bigraph/branching.hpp"
#include "bigraph/params.hpp"
#include "bigraph/theory.hpp"

namespace bigraph::harness {

/// Every desk-scale slack factor used by the experiment checks.
namespace tolerance {
inline constexpr double kWeakSuperRelL1 = 0.10;
inline constexpr double kWeakSuperRelType = 0.12;
inline constexpr double kWeakSuperMaxL2OverL1 = 0.20;
inline constexpr double kRhoOverTwoEpsLo = 0.85;
inline constexpr double kRhoOverTwoEpsHi = 1.0;
inline constexpr double kWeakSubFactor = 0.5;       // max L1 <= c n^{2/3}
inline constexpr double kConstSuperAbs = 0.02;      // |mean L1/n - rho_eps|
inline constexpr double kConstSubFactor = 5.0;      // max L1 <= c eps^-2 log n
inline constexpr double kMergeFraction = 0.9;
inline constexpr double kRankTestP = 1e-3;
inline constexpr double kOmegaFlag = 50.0;
inline constexpr double kSweepSubL1 = 0.01;
inline constexpr double kSweepSuperRel = 0.10;
inline constexpr double kSweepL2OverL1 = 0.05;
inline constexpr double kSLRatioLo = 0.85;
inline constexpr double kSLRatioHi = 1.15;
inline constexpr double kSigma = 3.0;
inline constexpr double kIdentityUlps = 1.0;
inline constexpr int kSweepInversionsPer = 20;
}  // namespace tolerance

/// Worker count: `requested` if positive, else BIGRAPH_WORKERS, else the
/// hardware concurrency (at least 1).
int resolve_workers(int requested);

/// Runs body(i) for i in [0, count) on `workers` threads. The first exception
/// thrown by any body is rethrown after all threads join.
void parallel_for(std::int64_t count, int workers, const std::function<void(std::int64_t)>& body);

struct Summary {
  std::int64_t count = 0;
  double mean = 0.0;
  double sd = 0.0;
  double ci_lo = 0.0;  // mean -/+ 1.96 sd / sqrt(count)
  double ci_hi = 0.0;
  double min = 0.0;
  double max = 0.0;
};
Summary summarize(const std::vector<double>& xs);

struct RankTest {
  double u = 0.0;
  double z = 0.0;
  double p_value = 1.0;
};
/// Two-sided Mann-Whitney test, midranks for ties, tie-corrected normal
/// approximation.
RankTest mann_whitney(const std::vector<double>& a, const std::vector<double>& b);

/// Two-round decomposition of P for the sprinkling argument.
struct SprinklePair {
  ProbMatrix pa;
  ProbMatrix pb;
  double epsilon = 0.0;
  double alpha = 0.0;
  double omega = 0.0;
  std::vector<double> l;
  /// |pa + pb - pa pb - p| in units of ulp(p) for the cross entry.
  double identity_residual_ulps = 0.0;
};
/// Throws OmegaTooSmall unless eps > 0 and omega > 1.
SprinklePair make_sprinkle(const TypeCounts& n, const ProbMatrix& p);
/// 1 - 10 log(omega) exp(-omega / (4 log^3 omega)); may be negative.
double merge_bound(double omega);

enum class Regime { WeakSuper, WeakSub, ConstSuper, ConstSub };
std::string_view to_string(Regime r);
std::optional<Regime> parse_regime(std::string_view s);

/// One replication. Fields that do not apply are -1.
struct ExperimentRecord {
  std::int64_t rep = 0;
  std::uint64_t seed = 0;
  std::int64_t L1 = 0;
  std::int64_t L2 = 0;
  std::vector<std::int64_t> l1_per_type;
  std::vector<std::int64_t> s_L;
  std::int64_t components = 0;
  std::int64_t direct_L1 = -1;
  std::int64_t merged = -1;
};

struct TheoryTargets {
  double lambda = 0.0;
  double epsilon = 0.0;
  std::vector<double> rho;
  double rho_bar = 0.0;  // (sum_i n_i rho_i) / n
  double two_eps = 0.0;
  std::optional<double> rho_eps;
};
TheoryTargets theory_targets(const TypeCounts& n, const ProbMatrix& p);

struct Criterion {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  bool pass = false;
  std::string note;
};

struct ExperimentReport {
  std::string label;
  std::vector<std::int64_t> n;
  std::vector<double> p;
  std::uint64_t master_seed = 0;
  std::int64_t reps = 0;
  std::vector<ExperimentRecord> records;
  std::vector<std::pair<std::string, Summary>> aggregates;
  TheoryTargets theory;
  std::vector<double> thresholds;
  std::vector<std::pair<std::string, double>> diagnostics;
  std::vector<Criterion> criteria;
  double wall_seconds = 0.0;

  bool passed() const;
};

/// Recomputes the named aggregates from the records alone.
std::vector<std::pair<std::string, Summary>> aggregate(const std::vector<ExperimentRecord>& records,
                                                        const std::vector<std::int64_t>& n);

struct RunOptions {
  int workers = 0;
  /// Large-component thresholds for s_L; defaults to the sprinkling l_j in
  /// supercritical regimes when omega > 1.
  std::optional<std::vector<double>> thresholds;
};

/// Replication r samples G(n, P) with seed derive(master_seed, r).
/// Throws RegimeMismatch if `regime` disagrees with the classification.
ExperimentReport run_regime(Regime regime, const TypeCounts& n, const ProbMatrix& p, std::int64_t reps,
                            std::uint64_t master_seed, const RunOptions& opts = {});

struct SweepRow {
  double eps = 0.0;
  double lambda = 0.0;
  Summary l1_over_n;
  Summary l2_over_n;
  Summary l2_over_l1;
  double rho_bar = 0.0;
  std::optional<double> rho_eps;
};
/// P(eps) = (1 + eps) * shape, where `shape` has unit Perron root. Grid point
/// g, replication r uses seed derive(master_seed, g, r).
std::vector<SweepRow> sweep_epsilon(const std::vector<double>& eps_grid, const TypeCounts& n,
                                    const ProbMatrix& shape, std::int64_t reps, std::uint64_t master_seed,
                                    int workers = 0);
/// Number of adjacent decreases of mean L1/n along the grid.
int sweep_inversions(const std::vector<SweepRow>& rows);

/// Per replication: G(n, Pa) with derive(seed, r, 1), G(n, Pb) with
/// derive(seed, r, 2), their union, and G(n, P) directly with derive(seed, r, 3).
ExperimentReport two_round_exposure(const TypeCounts& n, const ProbMatrix& p, std::uint64_t master_seed,
                                    std::int64_t reps, int workers = 0);

struct SLEstimate {
  std::vector<double> thresholds;
  std::vector<Summary> count;   // s_{i,L}
  std::vector<Summary> share;   // s_{i,L} / n_i
  std::vector<double> ratio_to_two_eps;  // mean s_{i,L} / (2 eps n_i)
  std::vector<double> eps2_l;             // eps^2 l_j
  std::vector<double> l_over_eps_n;       // l_j / (eps n_j)
  double epsilon = 0.0;
};
SLEstimate estimate_sL(const TypeCounts& n, const ProbMatrix& p, const std::vector<double>& l, std::int64_t reps,
                       std::uint64_t master_seed, int workers = 0);

/// Conditional Monte Carlo estimate of the dual edge probability pi_{root,j}:
/// over runs whose process dies out (total below survive_threshold), the mean
/// of X_j / n_j where X_j counts type-j children of the root.
branching::Estimate dual_edge_frequency(std::size_t root_type, std::size_t j, const TypeCounts& n,
                                        const ProbMatrix& p, std::int64_t runs, std::uint64_t seed,
                                        std::int64_t survive_threshold);

inline constexpr int kReportSchemaVersion = 1;
/// Header: rep,seed,L1,L2,L1_type1,L1_type2,sL_type1,sL_type2,components,direct_L1,merged
void write_csv(std::ostream& os, const ExperimentReport& report);
/// JSON summary; wall time is included only when `with_timing` is set.
std::string to_json(const ExperimentReport& report, bool with_timing = false);
std::string sweep_to_json(const std::vector<SweepRow>& rows);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
std::string sl_to_json(const SLEstimate& est);

}  // namespace bigraph::harness
