#include "bigraph/branching.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bigraph/error.hpp"

namespace bigraph::branching {

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Extinct: return "Extinct";
    case StopReason::CapTotal: return "CapTotal";
    case StopReason::CapGenerations: return "CapGenerations";
    case StopReason::CapWidth: return "CapWidth";
  }
  return "Unknown";
}

std::string_view to_string(ExploreStop r) {
  switch (r) {
    case ExploreStop::ReachedLj: return "ReachedLj";
    case ExploreStop::BoundaryCap: return "BoundaryCap";
    case ExploreStop::Exhausted: return "Exhausted";
  }
  return "Unknown";
}

void StopConfig::check() const {
  if (!(l[0] > 0.0) || !(l[1] > 0.0) || !(width_cap > 0.0) || max_total <= 0 || max_generations <= 0) {
    throw Error(ErrorCode::InvalidStopConfig, "all stop caps must be positive");
  }
}

std::int64_t binomial(rng::Engine& eng, std::int64_t trials, double p) {
  if (trials <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  std::binomial_distribution<std::int64_t> dist(trials, p);
  return dist(eng);
}

namespace {

constexpr std::int64_t kTrialLimit = std::int64_t{1} << 62;

void check_two_type(const TypeCounts& n, const ProbMatrix& p) {
  validate(p, n);
  if (n.k() != 2) throw Error(ErrorCode::UnsupportedK, "branching simulation is two-type");
}

void check_root(std::size_t root_type) {
  if (root_type > 1) throw Error(ErrorCode::InvalidArgument, "root type must be 0 or 1");
}

bool reached_threshold(const Count2& totals, const StopConfig& caps) {
  return static_cast<double>(totals[0]) >= caps.l[0] || static_cast<double>(totals[1]) >= caps.l[1] ||
         totals[0] + totals[1] >= caps.max_total;
}

// Calls fn(index) for each success of `count` independent Bernoulli(p)
// trials, in increasing index order, via geometric gaps.
template <class Fn>
void for_each_hit(rng::Engine& eng, std::int64_t count, double p, Fn&& fn) {
  if (count <= 0 || p <= 0.0) return;
  if (p >= 1.0) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const double log_q = std::log1p(-p);
  const double dcount = static_cast<double>(count);
  double pos = -1.0;
  while (true) {
    pos += std::floor(std::log(rng::open_uniform(eng)) / log_q) + 1.0;
    if (pos >= dcount) return;
    fn(static_cast<std::int64_t>(pos));
  }
}

}  // namespace

BranchingOutcome simulate(std::size_t root_type, const TypeCounts& n, const ProbMatrix& p,
                          const StopConfig& caps, std::uint64_t seed) {
  rng::Engine eng = rng::make_engine(seed);
  return simulate(root_type, n, p, caps, eng);
}

BranchingOutcome simulate(std::size_t root_type, const TypeCounts& n, const ProbMatrix& p,
                          const StopConfig& caps, rng::Engine& eng) {
  check_two_type(n, p);
  check_root(root_type);
  caps.check();
  BranchingOutcome out;
  out.totals[root_type] = 1;
  Count2 gen{0, 0};
  gen[root_type] = 1;
  if (reached_threshold(out.totals, caps)) {
    out.stop = StopReason::CapTotal;
    return out;
  }
  while (true) {
    if (gen[0] + gen[1] == 0) {
      out.stop = StopReason::Extinct;
      return out;
    }
    if (out.generations >= caps.max_generations) {
      out.stop = StopReason::CapGenerations;
      return out;
    }
    Count2 next{0, 0};
    for (std::size_t t = 0; t < 2; ++t) {
      if (gen[t] == 0) continue;
      for (std::size_t j = 0; j < 2; ++j) {
        if (gen[t] > kTrialLimit / n[j]) {
          out.stop = StopReason::CapTotal;
          return out;
        }
        next[j] += binomial(eng, gen[t] * n[j], p(t, j));
      }
    }
    const std::int64_t size = next[0] + next[1];
    if (size == 0) {
      gen = next;
      continue;
    }
    if (static_cast<double>(size) > caps.width_cap) {
      out.stop = StopReason::CapWidth;
      return out;
    }
    out.totals[0] += next[0];
    out.totals[1] += next[1];
    out.width = std::max(out.width, size);
    ++out.generations;
    gen = next;
    if (reached_threshold(out.totals, caps)) {
      out.stop = StopReason::CapTotal;
      return out;
    }
  }
}

Estimate binomial_estimate(std::int64_t successes, std::int64_t trials) {
  Estimate e;
  e.successes = successes;
  e.trials = trials;
  if (trials <= 0) return e;
  e.value = static_cast<double>(successes) / static_cast<double>(trials);
  e.std_error = std::sqrt(e.value * (1.0 - e.value) / static_cast<double>(trials));
  return e;
}

std::int64_t default_survival_threshold(double eps) {
  const double a = std::abs(eps);
  if (!(a > 0.0)) return 10'000;
  const double t = std::ceil(100.0 / (a * a));
  return std::max<std::int64_t>(10'000, t > 1e15 ? std::int64_t{1'000'000'000'000'000} : static_cast<std::int64_t>(t));
}

Estimate estimate_survival(std::size_t root_type, const TypeCounts& n, const ProbMatrix& p,
                           std::int64_t survive_threshold, std::int64_t reps, std::uint64_t seed,
                           std::int64_t max_generations) {
  if (survive_threshold <= 0 || reps < 0) {
    throw Error(ErrorCode::InvalidArgument, "threshold must be positive and reps nonnegative");
  }
  StopConfig caps;
  caps.max_total = survive_threshold;
  caps.max_generations = max_generations;
  std::int64_t hits = 0;
  for (std::int64_t r = 0; r < reps; ++r) {
    const auto out = simulate(root_type, n, p, caps, rng::derive(seed, static_cast<std::uint64_t>(r)));
    if (out.stop == StopReason::CapTotal) ++hits;
  }
  return binomial_estimate(hits, reps);
}

Explorer::Explorer(const SampledGraph& g) : g_(g) {
  const std::int64_t nv = g.vertex_count();
  offsets_.assign(static_cast<std::size_t>(nv) + 1, 0);
  for (const Edge& e : g.edges()) {
    ++offsets_[e.u + 1];
    ++offsets_[e.v + 1];
  }
  for (std::int64_t v = 0; v < nv; ++v) offsets_[v + 1] += offsets_[v];
  adjacency_.resize(static_cast<std::size_t>(offsets_.back()));
  std::vector<std::int64_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const Edge& e : g.edges()) {
    adjacency_[fill[e.u]++] = e.v;
    adjacency_[fill[e.v]++] = e.u;
  }
  for (std::int64_t v = 0; v < nv; ++v) std::sort(adjacency_.begin() + offsets_[v], adjacency_.begin() + offsets_[v + 1]);
  stamp_.assign(static_cast<std::size_t>(nv), 0);
}

ExploreResult Explorer::explore(std::int64_t v, const StopConfig& cfg) {
  if (v < 0 || v >= g_.vertex_count()) throw Error(ErrorCode::InvalidArgument, "vertex id out of range");
  if (g_.counts().k() != 2) throw Error(ErrorCode::UnsupportedK, "stopped exploration is two-type");
  cfg.check();
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
  ExploreResult res;
  queue_.clear();
  stamp_[v] = epoch_;
  queue_.push_back(v);
  ++res.tree_totals[g_.type_of(v)];

  auto stop_check = [&](std::size_t head) {
    res.boundary_count = static_cast<std::int64_t>(queue_.size() - head);
    if (static_cast<double>(res.tree_totals[0]) >= cfg.l[0] || static_cast<double>(res.tree_totals[1]) >= cfg.l[1]) {
      res.stopped = true;
      res.stop_reason = ExploreStop::ReachedLj;
    } else if (static_cast<double>(res.boundary_count) >= cfg.width_cap) {
      res.stopped = true;
      res.stop_reason = ExploreStop::BoundaryCap;
    }
    return res.stopped;
  };

  if (stop_check(0)) return res;
  for (std::size_t head = 0; head < queue_.size(); ++head) {
    const std::int64_t u = queue_[head];
    for (std::int64_t a = offsets_[u]; a < offsets_[u + 1]; ++a) {
      const std::int64_t w = adjacency_[a];
      if (stamp_[w] == epoch_) continue;
      stamp_[w] = epoch_;
      queue_.push_back(w);
      ++res.tree_totals[g_.type_of(w)];
      if (stop_check(head)) return res;
    }
  }
  res.boundary_count = 0;
  res.stop_reason = ExploreStop::Exhausted;
  return res;
}

ExploreResult explore_stopped(const SampledGraph& g, std::int64_t v, const StopConfig& cfg) {
  Explorer ex(g);
  return ex.explore(v, cfg);
}

namespace {

void fenwick_add(std::vector<std::int64_t>& tree, std::int64_t label, std::int64_t delta) {
  const auto size = static_cast<std::int64_t>(tree.size()) - 1;
  for (std::int64_t i = label + 1; i <= size; i += i & -i) tree[i] += delta;
}

// Label (0-based) of the unreached vertex with the given 0-based rank.
std::int64_t fenwick_kth(const std::vector<std::int64_t>& tree, std::int64_t rank) {
  const auto size = static_cast<std::int64_t>(tree.size()) - 1;
  std::int64_t pos = 0;
  std::int64_t remaining = rank + 1;
  std::int64_t step = 1;
  while (step * 2 <= size) step *= 2;
  for (; step > 0; step /= 2) {
    if (pos + step <= size && tree[pos + step] < remaining) {
      pos += step;
      remaining -= tree[pos];
    }
  }
  return pos;
}

}  // namespace

Coupler::Coupler(TypeCounts n, ProbMatrix p) : n_(std::move(n)), p_(std::move(p)) {
  check_two_type(n_, p_);
  pm_ = p_.as_mat2();
  reached_.resize(2);
  touched_.resize(2);
  fenwick_.resize(2);
  for (std::size_t t = 0; t < 2; ++t) {
    const std::int64_t nt = n_[t];
    reached_[t].assign(static_cast<std::size_t>(nt), 0);
    auto& tree = fenwick_[t];
    tree.assign(static_cast<std::size_t>(nt) + 1, 0);
    for (std::int64_t i = 1; i <= nt; ++i) tree[i] = i & -i;
    unreached_[t] = nt;
  }
}

void Coupler::mark_reached(std::size_t type, std::int64_t label) {
  reached_[type][label] = 1;
  touched_[type].push_back(label);
  fenwick_add(fenwick_[type], label, -1);
  --unreached_[type];
}

void Coupler::reset() {
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::int64_t label : touched_[t]) {
      reached_[t][label] = 0;
      fenwick_add(fenwick_[t], label, 1);
    }
    unreached_[t] = n_[t];
    touched_[t].clear();
  }
}

CoupledUpper Coupler::upper(std::size_t root_type, const StopConfig& caps, std::uint64_t seed) {
  check_root(root_type);
  caps.check();
  reset();
  rng::Engine eng = rng::make_engine(seed);
  CoupledUpper out;
  struct Vertex {
    std::size_t type;
    std::int64_t label;
  };
  std::vector<Vertex> queue;
  mark_reached(root_type, 0);
  queue.push_back({root_type, 0});
  out.graph_totals[root_type] = 1;
  out.branching_totals[root_type] = 1;
  auto branching_sum = [&] { return out.branching_totals[0] + out.branching_totals[1]; };
  if (branching_sum() >= caps.max_total) out.capped = true;

  // The graph exploration always runs to completion; a cap only stops the
  // simulation of fictional subtrees, leaving branching totals partial.
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Vertex cur = queue[head];
    for (std::size_t j = 0; j < 2; ++j) {
      for_each_hit(eng, n_[j], pm_[cur.type][j], [&](std::int64_t label) {
        ++out.branching_totals[j];
        if (!reached_[j][label]) {
          mark_reached(j, label);
          ++out.graph_totals[j];
          queue.push_back({j, label});
        } else if (!out.capped) {
          // Fictional child: its whole subtree is fictional, so only the
          // aggregate law matters. Its root is already counted above.
          StopConfig sub;
          sub.max_generations = caps.max_generations;
          sub.max_total = caps.max_total - branching_sum() + 1;
          if (sub.max_total > 1) {
            const auto o = simulate(j, n_, p_, sub, eng);
            out.branching_totals[0] += o.totals[0];
            out.branching_totals[1] += o.totals[1];
            --out.branching_totals[j];
            if (o.stop != StopReason::Extinct) out.capped = true;
          }
        }
        if (branching_sum() >= caps.max_total) out.capped = true;
      });
    }
  }
  return out;
}

CoupledLower Coupler::lower(std::size_t root_type, const Count2& m, const StopConfig& caps, std::uint64_t seed) {
  check_root(root_type);
  caps.check();
  for (std::size_t j = 0; j < 2; ++j) {
    if (m[j] < 0 || m[j] > n_[j]) throw Error(ErrorCode::InvalidReduction, "reduction must satisfy 0 <= m <= n");
  }
  reset();
  rng::Engine eng = rng::make_engine(seed);
  CoupledLower out;
  struct Vertex {
    std::size_t type;
    std::int64_t label;
  };
  std::vector<Vertex> reduced_q;
  std::vector<Vertex> graph_q;
  std::size_t reduced_head = 0;
  std::size_t graph_head = 0;
  mark_reached(root_type, 0);
  reduced_q.push_back({root_type, 0});
  out.graph_totals[root_type] = 1;
  out.reduced_totals[root_type] = 1;

  auto check_caps = [&] {
    if (static_cast<double>(out.reduced_totals[0]) >= caps.l[0] ||
        static_cast<double>(out.reduced_totals[1]) >= caps.l[1]) {
      out.reduced_reached_l = true;
    }
    if (out.graph_totals[0] + out.graph_totals[1] >= caps.max_total) out.capped = true;
    return out.reduced_reached_l || out.capped;
  };
  if (check_caps()) return out;

  std::vector<std::int64_t> ranks;
  std::vector<Vertex> children;
  while (reduced_head < reduced_q.size() || graph_head < graph_q.size()) {
    const bool is_reduced = reduced_head < reduced_q.size();
    const Vertex cur = is_reduced ? reduced_q[reduced_head++] : graph_q[graph_head++];
    for (std::size_t j = 0; j < 2; ++j) {
      const std::int64_t pool = unreached_[j];
      std::int64_t offered = is_reduced ? n_[j] - m[j] : 0;
      if (offered > pool) {
        out.overflow = true;
        offered = pool;
      }
      ranks.clear();
      for_each_hit(eng, pool, pm_[cur.type][j], [&](std::int64_t r) { ranks.push_back(r); });
      // Highest rank first, so removals never shift the ranks still pending.
      children.clear();
      for (auto it = ranks.rbegin(); it != ranks.rend(); ++it) {
        const std::int64_t label = fenwick_kth(fenwick_[j], *it);
        mark_reached(j, label);
        ++out.graph_totals[j];
        children.push_back({j, label});
        if (*it < offered) ++out.reduced_totals[j];
      }
      for (std::size_t c = children.size(); c-- > 0;) {
        const bool reduced_child = ranks[ranks.size() - 1 - c] < offered;
        (reduced_child ? reduced_q : graph_q).push_back(children[c]);
      }
      if (check_caps()) return out;
    }
  }
  return out;
}

CoupledUpper coupled_upper(std::size_t root_type, const TypeCounts& n, const ProbMatrix& p,
                           const StopConfig& caps, std::uint64_t seed) {
  Coupler c(n, p);
  return c.upper(root_type, caps, seed);
}

CoupledLower coupled_lower(std::size_t root_type, const TypeCounts& n, const ProbMatrix& p,
                           const Count2& m, const StopConfig& caps, std::uint64_t seed) {
  Coupler c(n, p);
  return c.lower(root_type, m, caps, seed);
}

Estimate width_conditional_extinction(std::size_t root_type, const TypeCounts& n, const ProbMatrix& p,
                                      std::int64_t m, std::int64_t reps, std::uint64_t seed,
                                      const WidthOptions& opts) {
  check_two_type(n, p);
  check_root(root_type);
  if (m < 1 || reps < 0 || opts.survive_generation_size < 1) {
    throw Error(ErrorCode::InvalidArgument, "width threshold must be >= 1");
  }
  std::int64_t hits = 0;
  for (std::int64_t r = 0; r < reps; ++r) {
    rng::Engine eng = rng::make_engine(rng::derive(seed, static_cast<std::uint64_t>(r)));
    Count2 gen{0, 0};
    gen[root_type] = 1;
    bool wide = 1 >= m;
    for (std::int64_t g = 1; g < opts.max_generations; ++g) {
      const std::int64_t size = gen[0] + gen[1];
      if (size == 0) {
        if (wide) ++hits;
        break;
      }
      if (size >= opts.survive_generation_size) break;
      Count2 next{0, 0};
      for (std::size_t t = 0; t < 2; ++t) {
        for (std::size_t j = 0; j < 2; ++j) next[j] += binomial(eng, gen[t] * n[j], p(t, j));
      }
      gen = next;
      if (gen[0] + gen[1] >= m) wide = true;
    }
  }
  return binomial_estimate(hits, reps);
}

}  // namespace bigraph::branching
