#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "bigraph/params.hpp"

namespace bigraph {

struct Edge {
  std::int64_t u = 0;
  std::int64_t v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Typed vertex set with contiguous type blocks: type-1 ids occupy [0, n1),
/// type-2 ids [n1, n1 + n2), and so on. Edges are unique, u < v, sorted.
class SampledGraph {
 public:
  SampledGraph(TypeCounts n, std::vector<Edge> edges, std::uint64_t seed);

  const TypeCounts& counts() const noexcept { return n_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::int64_t vertex_count() const noexcept { return n_.total(); }
  std::size_t type_of(std::int64_t v) const noexcept;

 private:
  TypeCounts n_;
  std::vector<Edge> edges_;
  std::uint64_t seed_;
};

struct SampleOptions {
  /// Upper bound on the expected number of edges.
  double max_expected_edges = 2.0e8;
};

/// Expected number of edges of G(n, P).
double expected_edge_count(const TypeCounts& n, const ProbMatrix& p);

/// Samples G(n, P). Each type block is sampled by geometric skipping over
/// the linearised pair index. A pair with probability p is present iff its
/// unit-rate arrival process has an arrival before -log(1-p); arrivals are
/// split into fixed dyadic rate bands, each skip-sampled from its own
/// counter-derived stream. Raising any p_ij only adds edges for a fixed seed.
SampledGraph sample(const TypeCounts& n, const ProbMatrix& p, std::uint64_t seed,
                    const SampleOptions& opts = {});

/// Union of two graphs on the same vertex set.
SampledGraph graph_union(const SampledGraph& a, const SampledGraph& b);

class UnionFind {
 public:
  explicit UnionFind(std::int64_t n);
  std::int64_t find(std::int64_t x) noexcept;
  bool unite(std::int64_t a, std::int64_t b) noexcept;
  std::int64_t size_of(std::int64_t x) noexcept { return size_[find(x)]; }

 private:
  std::vector<std::int64_t> parent_;
  std::vector<std::int64_t> size_;
};

/// Component structure, components listed by decreasing size (ties broken by
/// smallest member id).
struct ComponentStats {
  std::size_t k = 0;
  std::vector<std::int64_t> comp_sizes;
  /// Row-major (component, type) counts; row c sums to comp_sizes[c].
  std::vector<std::int64_t> per_type;
  /// Index into comp_sizes for every vertex.
  std::vector<std::int64_t> component_of;
  std::int64_t L1 = 0;
  std::int64_t L2 = 0;
  /// Per type: vertices lying in components with >= l_j vertices of type j for
  /// some j. Empty unless thresholds were supplied.
  std::vector<std::int64_t> s_L;

  std::int64_t type_count(std::size_t comp, std::size_t type) const noexcept {
    return per_type[comp * k + type];
  }
  std::size_t component_count() const noexcept { return comp_sizes.size(); }
};

ComponentStats components(const SampledGraph& g,
                          const std::optional<std::vector<double>>& thresholds = std::nullopt);

/// Per-type counts of vertices in components holding >= l_j vertices of some type j.
std::vector<std::int64_t> large_component_membership(const ComponentStats& stats,
                                                     const std::vector<double>& thresholds);

/// Text export: one "u v" line per edge, sorted by (u, v).
void write_edge_list(std::ostream& os, const SampledGraph& g);

}  // namespace bigraph
