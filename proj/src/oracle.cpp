#include "bigraph/oracle.hpp"

#include <array>
#include <cmath>
#include <numeric>

#include "bigraph/error.hpp"

namespace bigraph::oracle {

double ExactDistribution::probability_of(std::int64_t value) const {
  for (const auto& [v, pr] : support) {
    if (v == value) return pr;
  }
  return 0.0;
}

namespace {

constexpr int kMaxVertices = 8;

struct SmallUnionFind {
  std::array<int, kMaxVertices> parent{};
  void reset(int n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[a < b ? b : a] = a < b ? a : b;
  }
};

}  // namespace

ExactDistribution enumerate_exact(const TypeCounts& n, const ProbMatrix& p, const Statistic& stat) {
  validate(p, n);
  const std::int64_t nv = n.total();
  const std::int64_t pairs = nv * (nv - 1) / 2;
  if (pairs > kMaxEnumeratedPairs || nv > kMaxVertices) {
    throw Error(ErrorCode::TooLarge, "exact enumeration is limited to 22 vertex pairs");
  }
  if (stat.kind == StatisticKind::SL && (stat.thresholds.size() != n.k() || stat.type >= n.k())) {
    throw Error(ErrorCode::DimensionMismatch, "s_L needs one threshold per type and a valid type");
  }
  if (stat.kind == StatisticKind::RootComponent && (stat.vertex < 0 || stat.vertex >= nv)) {
    throw Error(ErrorCode::InvalidArgument, "root vertex out of range");
  }

  std::array<int, kMaxVertices> type_of{};
  for (std::size_t t = 0, v = 0; t < n.k(); ++t) {
    for (std::int64_t c = 0; c < n[t]; ++c) type_of[v++] = static_cast<int>(t);
  }
  struct Pair {
    int a, b;
    double prob;
  };
  std::vector<Pair> pair_list;
  for (int a = 0; a < nv; ++a) {
    for (int b = a + 1; b < nv; ++b) pair_list.push_back({a, b, p(type_of[a], type_of[b])});
  }

  // Neumaier-compensated sums: 2^22 terms would otherwise lose ~1e-12.
  std::vector<double> mass(static_cast<std::size_t>(nv) + 1, 0.0);
  std::vector<double> carry(mass.size(), 0.0);
  const std::uint64_t subsets = std::uint64_t{1} << pairs;
  const int nvi = static_cast<int>(nv);
  const std::size_t k = n.k();
  SmallUnionFind uf;
  for (std::uint64_t mask = 0; mask < subsets; ++mask) {
    double w = 1.0;
    uf.reset(nvi);
    for (std::int64_t e = 0; e < pairs; ++e) {
      const Pair& pr = pair_list[e];
      if (mask >> e & 1U) {
        w *= pr.prob;
        uf.unite(pr.a, pr.b);
      } else {
        w *= 1.0 - pr.prob;
      }
    }
    if (w == 0.0) continue;
    std::array<int, kMaxVertices> size{};
    std::array<std::array<int, 4>, kMaxVertices> by_type{};
    for (int v = 0; v < nvi; ++v) {
      const int r = uf.find(v);
      ++size[r];
      if (k <= 4) ++by_type[r][type_of[v]];
    }
    std::int64_t value = 0;
    switch (stat.kind) {
      case StatisticKind::L1:
      case StatisticKind::L2: {
        int first = 0, second = 0;
        for (int v = 0; v < nvi; ++v) {
          if (size[v] > first) {
            second = first;
            first = size[v];
          } else if (size[v] > second) {
            second = size[v];
          }
        }
        value = stat.kind == StatisticKind::L1 ? first : second;
        break;
      }
      case StatisticKind::ComponentCount:
        for (int v = 0; v < nvi; ++v) value += size[v] > 0 ? 1 : 0;
        break;
      case StatisticKind::RootComponent:
        value = size[uf.find(static_cast<int>(stat.vertex))];
        break;
      case StatisticKind::SL:
        for (int v = 0; v < nvi; ++v) {
          if (size[v] == 0) continue;
          bool large = false;
          for (std::size_t j = 0; j < k; ++j) large = large || by_type[v][j] >= stat.thresholds[j];
          if (large) value += by_type[v][stat.type];
        }
        break;
    }
    {
      double& acc = mass[static_cast<std::size_t>(value)];
      const double t = acc + w;
      carry[static_cast<std::size_t>(value)] += std::fabs(acc) >= std::fabs(w) ? (acc - t) + w : (w - t) + acc;
      acc = t;
    }
  }

  ExactDistribution dist;
  for (std::size_t v = 0; v < mass.size(); ++v) mass[v] += carry[v];
  for (std::size_t v = 0; v < mass.size(); ++v) {
    if (mass[v] > 0.0) dist.support.emplace_back(static_cast<std::int64_t>(v), mass[v]);
  }
  for (const auto& [v, pr] : dist.support) dist.mean += pr * static_cast<double>(v);
  for (const auto& [v, pr] : dist.support) {
    const double d = static_cast<double>(v) - dist.mean;
    dist.variance += pr * d * d;
  }
  return dist;
}

double extinction_truncated(const TypeCounts& n, const ProbMatrix& p, std::size_t root_type,
                            std::int64_t generations) {
  validate(p, n);
  if (n.k() != 2) throw Error(ErrorCode::UnsupportedK, "extinction oracle is two-type");
  if (root_type > 1) throw Error(ErrorCode::InvalidArgument, "root type must be 0 or 1");
  std::array<double, 2> q{0.0, 0.0};
  for (std::int64_t g = 0; g < generations; ++g) {
    std::array<double, 2> next{};
    for (std::size_t i = 0; i < 2; ++i) {
      next[i] = std::pow(1.0 - p(i, 0) * (1.0 - q[0]), static_cast<double>(n[0])) *
                std::pow(1.0 - p(i, 1) * (1.0 - q[1]), static_cast<double>(n[1]));
    }
    if (next == q) break;
    q = next;
  }
  return q[root_type];
}

Mat2 progeny_series(const Mat2& h, std::int64_t terms) {
  Mat2 sum{{{1.0, 0.0}, {0.0, 1.0}}};
  Mat2 power = sum;
  for (std::int64_t t = 1; t <= terms; ++t) {
    Mat2 next{};
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) next[i][j] = power[i][0] * h[0][j] + power[i][1] * h[1][j];
    }
    power = next;
    bool negligible = true;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double before = sum[i][j];
        sum[i][j] += power[i][j];
        if (!std::isfinite(sum[i][j]) || sum[i][j] > 1e300) {
          throw Error(ErrorCode::Divergent, "matrix series diverges");
        }
        negligible = negligible && sum[i][j] == before;
      }
    }
    // Further terms cannot change a double sum once every addend vanishes
    // below half an ulp and powers keep shrinking.
    if (negligible && power[0][0] + power[0][1] + power[1][0] + power[1][1] == 0.0) break;
  }
  return sum;
}

}  // namespace bigraph::oracle
