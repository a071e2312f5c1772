#pragma once

#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

#include "bigraph/graphgen.hpp"
#include "bigraph/params.hpp"
#include "bigraph/rng.hpp"

namespace bigraph::branching {

inline constexpr std::int64_t kNoCap = std::numeric_limits<std::int64_t>::max();
inline constexpr double kNoThreshold = std::numeric_limits<double>::infinity();

/// Stopping rules shared by the simulators. `l` holds per-type total
/// thresholds, `width_cap` the boundary (reached but unexplored) cap of the
/// stopped exploration; for `simulate` it bounds the size of a generation.
struct StopConfig {
  std::array<double, 2> l{kNoThreshold, kNoThreshold};
  double width_cap = kNoThreshold;
  std::int64_t max_total = kNoCap;
  std::int64_t max_generations = 1'000'000;

  /// Throws InvalidStopConfig unless every cap is positive.
  void check() const;
};

enum class StopReason { Extinct, CapTotal, CapGenerations, CapWidth };
std::string_view to_string(StopReason r);

struct BranchingOutcome {
  Count2 totals{0, 0};
  std::int64_t width = 1;
  std::int64_t generations = 1;
  StopReason stop = StopReason::Extinct;
};

/// Exact Binomial(trials, p) draw.
std::int64_t binomial(rng::Engine& eng, std::int64_t trials, double p);

/// Generation-by-generation simulation of the two-type binomial process.
/// A generation holding z_t individuals of type t produces
/// Binomial(z_t n_j, p_tj) children of type j, which is the sum of the
/// individual Binomial(n_j, p_tj) draws. CapTotal fires when a per-type total
/// reaches l_j or the overall total reaches max_total; CapWidth when a new
/// generation would exceed width_cap (that generation is not recorded).
BranchingOutcome simulate(std::size_t root_type, const TypeCounts& n, const ProbMatrix& p,
                          const StopConfig& caps, std::uint64_t seed);
BranchingOutcome simulate(std::size_t root_type, const TypeCounts& n, const ProbMatrix& p,
                          const StopConfig& caps, rng::Engine& eng);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t successes = 0;
  std::int64_t trials = 0;
};

Estimate binomial_estimate(std::int64_t successes, std::int64_t trials);

/// Default survival proxy: max(1e4, ceil(100 / eps^2)).
std::int64_t default_survival_threshold(double eps);

/// Fraction of runs whose total population reaches `survive_threshold`
/// before dying out. Run r uses the seed derive(seed, r).
Estimate estimate_survival(std::size_t root_type, const TypeCounts& n, const ProbMatrix& p,
                           std::int64_t survive_threshold, std::int64_t reps, std::uint64_t seed,
                           std::int64_t max_generations = 1'000'000);

enum class ExploreStop { ReachedLj, BoundaryCap, Exhausted };
std::string_view to_string(ExploreStop r);

struct ExploreResult {
  Count2 tree_totals{0, 0};
  bool stopped = false;
  ExploreStop stop_reason = ExploreStop::Exhausted;
  std::int64_t boundary_count = 0;
};

/// Breadth-first exploration of a sampled graph that stops as soon as some
/// type reaches l_j reached vertices, or the number of boundary vertices
/// (reached, not yet fully explored, including the one being explored)
/// reaches width_cap. Adjacency is built once per Explorer.
class Explorer {
 public:
  explicit Explorer(const SampledGraph& g);
  ExploreResult explore(std::int64_t v, const StopConfig& cfg);

 private:
  const SampledGraph& g_;
  std::vector<std::int64_t> offsets_;
  std::vector<std::int64_t> adjacency_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  std::vector<std::int64_t> queue_;
};

ExploreResult explore_stopped(const SampledGraph& g, std::int64_t v, const StopConfig& cfg);

struct CoupledUpper {
  Count2 graph_totals{0, 0};
  Count2 branching_totals{0, 0};
  /// A cap stopped the fictional subtrees; branching totals are then a lower
  /// bound. Graph totals are always complete.
  bool capped = false;
};

struct CoupledLower {
  Count2 graph_totals{0, 0};
  Count2 reduced_totals{0, 0};
  /// A reduced individual found fewer than n_j - m_j unreached candidates;
  /// from that point the reduced tree no longer follows T_{n-m}.
  bool overflow = false;
  /// The reduced totals reached caps.l for some type.
  bool reduced_reached_l = false;
  bool capped = false;
};

/// Joint construction of the exploration of C_v in G(n, P) and branching
/// processes, driven by one random stream. Reuses its scratch buffers between
/// runs, so one Coupler serves many seeds.
class Coupler {
 public:
  Coupler(TypeCounts n, ProbMatrix p);

  /// Every labelled candidate of a real vertex is flipped; hits on already
  /// reached labels become fictional children whose subtrees only count in
  /// the branching totals. Per run, graph totals <= branching totals.
  CoupledUpper upper(std::size_t root_type, const StopConfig& caps, std::uint64_t seed);

  /// Reduced individuals are offered the first n_j - m_j unreached labels of
  /// type j (rank order); the rest of the pool is still examined for the
  /// graph. Reduced individuals are explored before graph-only ones. The
  /// reduced tree is always a subset of the explored component.
  CoupledLower lower(std::size_t root_type, const Count2& m, const StopConfig& caps, std::uint64_t seed);

 private:
  TypeCounts n_;
  ProbMatrix p_;
  Mat2 pm_;
  std::vector<std::vector<std::uint8_t>> reached_;
  std::vector<std::vector<std::int64_t>> touched_;
  // Per-type Fenwick trees over unreached labels (1 = unreached).
  std::vector<std::vector<std::int64_t>> fenwick_;
  std::array<std::int64_t, 2> unreached_{0, 0};
  void reset();
  void mark_reached(std::size_t type, std::int64_t label);
};

CoupledUpper coupled_upper(std::size_t root_type, const TypeCounts& n, const ProbMatrix& p,
                           const StopConfig& caps, std::uint64_t seed);
CoupledLower coupled_lower(std::size_t root_type, const TypeCounts& n, const ProbMatrix& p,
                           const Count2& m, const StopConfig& caps, std::uint64_t seed);

struct WidthOptions {
  /// A generation this large counts as survival.
  std::int64_t survive_generation_size = 1'000'000;
  std::int64_t max_generations = 1'000'000;
};

/// Frequency of runs that reach a generation of size >= m and then die out.
Estimate width_conditional_extinction(std::size_t root_type, const TypeCounts& n, const ProbMatrix& p,
                                      std::int64_t m, std::int64_t reps, std::uint64_t seed,
                                      const WidthOptions& opts = {});

}  // namespace bigraph::branching
