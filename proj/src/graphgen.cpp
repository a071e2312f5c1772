#include "bigraph/graphgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "bigraph/error.hpp"
#include "bigraph/rng.hpp"

namespace bigraph {

SampledGraph::SampledGraph(TypeCounts n, std::vector<Edge> edges, std::uint64_t seed)
    : n_(std::move(n)), edges_(std::move(edges)), seed_(seed) {}

std::size_t SampledGraph::type_of(std::int64_t v) const noexcept {
  std::int64_t end = 0;
  for (std::size_t t = 0; t < n_.k(); ++t) {
    end += n_[t];
    if (v < end) return t;
  }
  return n_.k() - 1;
}

namespace {

constexpr double kSkipAll = 1e-12;
constexpr double kEmitAll = 1.0 - 1e-12;
// Band 0 covers arrival times [0, 2^-40); band b >= 1 covers [2^(b-41), 2^(b-40)).
constexpr int kBandOrigin = 40;
// Domain tag separating per-pair thinning uniforms from skip streams.
constexpr std::uint64_t kThinTag = 0x7468696eULL;

double band_lo(int b) { return b == 0 ? 0.0 : std::ldexp(1.0, b - 1 - kBandOrigin); }
double band_hi(int b) { return std::ldexp(1.0, b - kBandOrigin); }

std::int64_t block_pairs(const TypeCounts& n, std::size_t i, std::size_t j) {
  if (i == j) return n[i] * (n[i] - 1) / 2;
  return n[i] * n[j];
}

// Linear pair indices t in [0, pairs) present in one block.
std::vector<std::int64_t> sample_block_indices(std::int64_t pairs, double p, std::uint64_t seed,
                                               std::uint64_t block) {
  std::vector<std::int64_t> out;
  if (pairs == 0 || p < kSkipAll) return out;
  if (p > kEmitAll) {
    out.resize(static_cast<std::size_t>(pairs));
    std::iota(out.begin(), out.end(), std::int64_t{0});
    return out;
  }
  const double rate = -std::log1p(-p);
  const double dpairs = static_cast<double>(pairs);
  out.reserve(static_cast<std::size_t>(std::min(dpairs, dpairs * p * 1.2 + 16.0)));
  bool multiple_bands = false;
  for (int b = 0; band_lo(b) < rate; ++b) {
    if (b > 0) multiple_bands = true;
    const double lo = band_lo(b);
    const double hi = band_hi(b);
    const double width = hi - lo;
    const bool partial = hi > rate;
    // P(keep | at least one arrival in band) for the partial band.
    const double keep = partial ? std::expm1(-(rate - lo)) / std::expm1(-width) : 1.0;
    rng::SplitMix64 eng(rng::derive(seed, block, static_cast<std::uint64_t>(b)));
    double pos = -1.0;
    while (true) {
      // Gap to the next pair with an arrival in this band is geometric with
      // success probability 1 - exp(-width).
      const double gap = std::floor(-std::log(rng::to_open_unit(eng())) / width);
      pos += gap + 1.0;
      if (pos >= dpairs) break;
      const auto t = static_cast<std::int64_t>(pos);
      if (partial) {
        const double u = rng::to_unit(rng::derive(seed ^ kThinTag, block, static_cast<std::uint64_t>(b),
                                                  static_cast<std::uint64_t>(t)));
        if (!(u < keep)) continue;
      }
      out.push_back(t);
    }
  }
  if (multiple_bands) {
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return out;
}

}  // namespace

double expected_edge_count(const TypeCounts& n, const ProbMatrix& p) {
  double total = 0.0;
  for (std::size_t i = 0; i < n.k(); ++i) {
    for (std::size_t j = i; j < n.k(); ++j) total += static_cast<double>(block_pairs(n, i, j)) * p(i, j);
  }
  return total;
}

SampledGraph sample(const TypeCounts& n, const ProbMatrix& p, std::uint64_t seed, const SampleOptions& opts) {
  validate(p, n);
  const double expected = expected_edge_count(n, p);
  if (expected > opts.max_expected_edges) {
    std::ostringstream os;
    os << "expected edge count " << expected << " exceeds budget " << opts.max_expected_edges;
    throw Error(ErrorCode::CapacityExceeded, os.str());
  }
  const std::size_t k = n.k();
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(expected * 1.05 + 64.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      const std::int64_t pairs = block_pairs(n, i, j);
      const std::uint64_t block = i * k + j;
      const auto idx = sample_block_indices(pairs, p(i, j), seed, block);
      const std::int64_t oi = n.offset(i);
      const std::int64_t oj = n.offset(j);
      if (i == j) {
        // Row a holds pairs (a, a+1..n-1); row a starts at a*n - a(a+1)/2.
        const std::int64_t ni = n[i];
        std::int64_t a = 0;
        std::int64_t row_start = 0;
        std::int64_t row_len = ni - 1;
        for (std::int64_t t : idx) {
          while (t >= row_start + row_len) {
            row_start += row_len;
            ++a;
            --row_len;
          }
          edges.push_back({oi + a, oi + a + 1 + (t - row_start)});
        }
      } else {
        const std::int64_t nj = n[j];
        for (std::int64_t t : idx) edges.push_back({oi + t / nj, oj + t % nj});
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  return SampledGraph(n, std::move(edges), seed);
}

SampledGraph graph_union(const SampledGraph& a, const SampledGraph& b) {
  if (a.counts().data() != b.counts().data()) {
    throw Error(ErrorCode::DimensionMismatch, "union requires identical vertex sets");
  }
  std::vector<Edge> merged;
  merged.reserve(a.edges().size() + b.edges().size());
  std::set_union(a.edges().begin(), a.edges().end(), b.edges().begin(), b.edges().end(),
                 std::back_inserter(merged));
  return SampledGraph(a.counts(), std::move(merged), a.seed());
}

UnionFind::UnionFind(std::int64_t n) : parent_(static_cast<std::size_t>(n)), size_(static_cast<std::size_t>(n), 1) {
  std::iota(parent_.begin(), parent_.end(), std::int64_t{0});
}

std::int64_t UnionFind::find(std::int64_t x) noexcept {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool UnionFind::unite(std::int64_t a, std::int64_t b) noexcept {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  return true;
}

ComponentStats components(const SampledGraph& g, const std::optional<std::vector<double>>& thresholds) {
  const TypeCounts& n = g.counts();
  const std::int64_t nv = n.total();
  const std::size_t k = n.k();
  UnionFind uf(nv);
  for (const Edge& e : g.edges()) uf.unite(e.u, e.v);

  // Roots in order of first (smallest) member.
  std::vector<std::int64_t> root_index(static_cast<std::size_t>(nv), -1);
  std::vector<std::int64_t> roots;
  std::vector<std::int64_t> raw_of(static_cast<std::size_t>(nv));
  for (std::int64_t v = 0; v < nv; ++v) {
    const std::int64_t r = uf.find(v);
    if (root_index[r] < 0) {
      root_index[r] = static_cast<std::int64_t>(roots.size());
      roots.push_back(r);
    }
    raw_of[v] = root_index[r];
  }
  const std::size_t nc = roots.size();
  std::vector<std::int64_t> order(nc);
  std::iota(order.begin(), order.end(), std::int64_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return uf.size_of(roots[a]) > uf.size_of(roots[b]);
  });
  std::vector<std::int64_t> rank(nc);
  for (std::size_t c = 0; c < nc; ++c) rank[order[c]] = static_cast<std::int64_t>(c);

  ComponentStats s;
  s.k = k;
  s.comp_sizes.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) s.comp_sizes[c] = uf.size_of(roots[order[c]]);
  s.per_type.assign(nc * k, 0);
  s.component_of.resize(static_cast<std::size_t>(nv));
  std::int64_t v = 0;
  for (std::size_t t = 0; t < k; ++t) {
    for (std::int64_t e = v + n[t]; v < e; ++v) {
      const std::int64_t c = rank[raw_of[v]];
      s.component_of[v] = c;
      ++s.per_type[static_cast<std::size_t>(c) * k + t];
    }
  }
  s.L1 = nc > 0 ? s.comp_sizes[0] : 0;
  s.L2 = nc > 1 ? s.comp_sizes[1] : 0;
  if (thresholds) s.s_L = large_component_membership(s, *thresholds);
  return s;
}

std::vector<std::int64_t> large_component_membership(const ComponentStats& s,
                                                     const std::vector<double>& thresholds) {
  if (thresholds.size() != s.k) {
    throw Error(ErrorCode::DimensionMismatch, "one threshold per type is required");
  }
  std::vector<std::int64_t> out(s.k, 0);
  for (std::size_t c = 0; c < s.comp_sizes.size(); ++c) {
    bool large = false;
    for (std::size_t j = 0; j < s.k && !large; ++j) {
      large = static_cast<double>(s.type_count(c, j)) >= thresholds[j];
    }
    if (!large) continue;
    for (std::size_t i = 0; i < s.k; ++i) out[i] += s.type_count(c, i);
  }
  return out;
}

void write_edge_list(std::ostream& os, const SampledGraph& g) {
  for (const Edge& e : g.edges()) os << e.u << ' ' << e.v << '\n';
}

}  // namespace bigraph
