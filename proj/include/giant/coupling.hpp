#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "giant/bp.hpp"
#include "giant/errors.hpp"
#include "giant/gnp.hpp"
#include "giant/rng.hpp"
#include "giant/stats.hpp"

namespace giant {

enum class CouplingRelation { TreeSubsetBp, GraphAtLeastBp, BothAtLeastK };

inline std::string_view to_string(CouplingRelation r) noexcept {
  switch (r) {
    case CouplingRelation::TreeSubsetBp: return "tree_subset_bp";
    case CouplingRelation::GraphAtLeastBp: return "graph_at_least_bp";
    case CouplingRelation::BothAtLeastK: return "both_at_least_k";
  }
  return "?";
}

struct JointSample {
  ExplorationTree graph_tree;
  BpOutcome bp_outcome;
  std::vector<std::uint64_t> bp_generation_sizes;
  CouplingRelation relation = CouplingRelation::TreeSubsetBp;
  std::uint32_t k = 0;
  // |C_v| when the full component was revealed, otherwise 0.
  std::uint64_t component_size = 0;

  // The invariant promised by `relation`.
  [[nodiscard]] bool relation_holds() const {
    switch (relation) {
      case CouplingRelation::TreeSubsetBp: {
        if (graph_tree.size() > bp_outcome.total_size) return false;
        if (graph_tree.generation_sizes.size() > bp_generation_sizes.size()) return false;
        for (std::size_t g = 0; g < graph_tree.generation_sizes.size(); ++g)
          if (graph_tree.generation_sizes[g] > bp_generation_sizes[g]) return false;
        return true;
      }
      case CouplingRelation::GraphAtLeastBp:
        return component_size >= bp_outcome.total_size;
      case CouplingRelation::BothAtLeastK:
        return graph_tree.size() >= k && bp_outcome.total_size >= k;
    }
    return false;
  }

  // Either |C_v| >= |X_{n-k,p}| or both are at least k.
  [[nodiscard]] bool dichotomy_holds() const {
    const std::uint64_t graph_side = std::max<std::uint64_t>(component_size, graph_tree.size());
    return graph_side >= bp_outcome.total_size || (graph_side >= k && bp_outcome.total_size >= k);
  }
};

// T_v inside X_{n,p}: every explored real vertex tests n candidates, the u
// unvisited real vertices plus n - u fictitious ones. Real hits extend the
// tree; all hits extend the branching process. Fictitious vertices are kept
// only as per-generation counts; each has Bi(n,p) fictitious children.
// Caps apply to the branching-process side and are checked per generation.
inline JointSample coupled_explore(const GnpParams& params, Vertex v, const BpCaps& caps, Stream& rng) {
  if (v < 1 || v > params.n) throw DomainError("root vertex out of range");
  JointSample js;
  js.relation = CouplingRelation::TreeSubsetBp;
  js.bp_outcome.caps = caps;
  LazyGnpOracle oracle(params, rng);
  VisitedSet visited(params.n);
  oracle.claim(v, visited);
  js.graph_tree.add_root(v);
  js.bp_generation_sizes.push_back(1);

  const std::uint64_t n = params.n;
  std::size_t gen_begin = 0;
  std::size_t gen_end = 1;
  std::uint64_t fictitious = 0;
  std::uint64_t total = 1;
  std::uint64_t width = 1;
  std::uint64_t depth = 0;
  for (;;) {
    std::uint64_t next_fict = 0;
    for (std::size_t idx = gen_begin; idx < gen_end; ++idx) {
      const std::uint64_t u = oracle.unvisited();
      oracle.reveal(js.graph_tree.order[idx], visited, [&](Vertex w) {
        js.graph_tree.add_child(idx, w);
        return true;
      });
      next_fict += sample_binomial(n - u, params.p, rng);
    }
    if (fictitious > 0) next_fict += sample_binomial(n * fictitious, params.p, rng);
    const std::uint64_t next_real = js.graph_tree.size() - gen_end;
    const std::uint64_t next = next_real + next_fict;
    if (next == 0) {
      js.bp_outcome.status = BpStatus::Extinct;
      break;
    }
    ++depth;
    total += next;
    width = std::max(width, next);
    js.bp_generation_sizes.push_back(next);
    if (total >= caps.size_cap) {
      js.bp_outcome.status = BpStatus::CensoredSize;
      break;
    }
    if (next >= caps.width_cap) {
      js.bp_outcome.status = BpStatus::CensoredWidth;
      break;
    }
    gen_begin = gen_end;
    gen_end = js.graph_tree.size();
    fictitious = next_fict;
  }
  js.bp_outcome.total_size = total;
  js.bp_outcome.width = width;
  js.bp_outcome.generations = depth;
  return js;
}

inline JointSample coupled_explore(const GnpParams& params, Vertex v, Stream& rng) {
  const auto sol = solve_survival(BpParams(params.n, params.p));
  return coupled_explore(params, v, BpCaps::defaults_for(sol), rng);
}

// |C_v| against X_{n-k,p}.
//
// While at most k vertices have been reached, an explored vertex x tests
// exactly n - k of its u = n - r unvisited candidates (the remaining k - r,
// highest labels first, stay untested) and the hits are shared verbatim with
// one Bi(n-k,p) step. The joint run stops as soon as more than k vertices are
// reached (both sides then exceed k) or the tree dies out (tree and process
// coincide). With `complete_component`, the untested pairs are then revealed
// to obtain |C_v| exactly.
inline JointSample coupled_explore_lower(const GnpParams& params, Vertex v, std::uint32_t k, Stream& rng,
                                         bool complete_component = true) {
  if (k < 1 || k >= params.n) throw DomainError("coupling parameter k must satisfy 1 <= k < n");
  if (v < 1 || v > params.n) throw DomainError("root vertex out of range");
  JointSample js;
  js.k = k;
  const std::uint32_t n = params.n;
  const BinomialSampler shared_step(n - k, params.p);

  UnvisitedPool pool(n);
  VisitedSet visited(n);
  pool.remove(v);
  visited.set(v);
  js.graph_tree.add_root(v);

  std::unordered_map<Vertex, std::vector<Vertex>> untested;  // explored vertex -> untested candidates
  std::size_t head = 0;
  bool exceeded = false;
  while (head < js.graph_tree.size()) {
    const auto reached = static_cast<std::uint32_t>(js.graph_tree.size());
    if (reached > k) {
      exceeded = true;
      break;
    }
    const Vertex x = js.graph_tree.order[head];
    auto& skip = untested[x];
    for (Vertex y = n; y >= 1 && skip.size() < k - reached; --y)
      if (!visited.test(y)) skip.push_back(y);
    const std::uint64_t hits = shared_step(rng);
    for (std::uint64_t t = 0; t < hits; ++t) {
      Vertex w = 0;
      do {
        w = pool.at(static_cast<std::uint32_t>(rng.uniform_below(pool.size())));
      } while (std::find(skip.begin(), skip.end(), w) != skip.end());
      pool.remove(w);
      visited.set(w);
      js.graph_tree.add_child(head, w);
    }
    ++head;
  }

  auto& bp = js.bp_outcome;
  bp.total_size = js.graph_tree.size();
  bp.width = js.graph_tree.width();
  bp.generations = js.graph_tree.generation_sizes.size() - 1;
  for (auto g : js.graph_tree.generation_sizes) js.bp_generation_sizes.push_back(g);
  if (exceeded) {
    js.relation = CouplingRelation::BothAtLeastK;
    bp.status = BpStatus::CensoredSize;
    bp.caps = BpCaps{static_cast<std::uint64_t>(k) + 1, kNoCap};
  } else {
    js.relation = CouplingRelation::GraphAtLeastBp;
    bp.status = BpStatus::Extinct;
  }

  if (!complete_component) {
    js.component_size = js.graph_tree.size();
    return js;
  }
  // Reveal the rest of C_v. Pairs between tree vertices and outside vertices
  // that were tested came back empty; only the recorded untested ones remain,
  // and every pair with an endpoint never explored is still fresh.
  std::vector<Vertex> queue;
  const std::size_t explored = head;
  for (std::size_t i = 0; i < explored; ++i) {
    const Vertex x = js.graph_tree.order[i];
    for (Vertex y : untested[x]) {
      if (visited.test(y)) continue;
      if (rng.bernoulli(params.p)) {
        pool.remove(y);
        visited.set(y);
        queue.push_back(y);
      }
    }
  }
  for (std::size_t i = explored; i < js.graph_tree.size(); ++i) queue.push_back(js.graph_tree.order[i]);
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const std::uint64_t hits = sample_binomial(pool.size(), params.p, rng);
    for (std::uint64_t t = 0; t < hits; ++t) {
      const Vertex w = pool.take_random(rng);
      visited.set(w);
      queue.push_back(w);
    }
  }
  js.component_size = visited.count();
  return js;
}

// ---------------------------------------------------------------------------
// Truncated exploration

enum class StopReason { SizeCap, BoundaryCap, Exhausted };

inline std::string_view to_string(StopReason r) noexcept {
  switch (r) {
    case StopReason::SizeCap: return "size_cap";
    case StopReason::BoundaryCap: return "boundary_cap";
    case StopReason::Exhausted: return "exhausted";
  }
  return "?";
}

struct TruncatedExploration {
  ExplorationTree tree;          // T'_v; tree.order is the reached set C'_v
  std::vector<Vertex> boundary;  // reached but not fully explored
  StopReason stopped_by = StopReason::Exhausted;
  std::uint64_t size_cap = 0;
  std::uint64_t boundary_cap = 0;

  [[nodiscard]] const std::vector<Vertex>& reached() const noexcept { return tree.order; }
  [[nodiscard]] bool event_a() const noexcept { return stopped_by != StopReason::Exhausted; }
};

inline std::uint64_t boundary_cap_for(double eps, std::uint64_t L) {
  return static_cast<std::uint64_t>(std::ceil(eps * static_cast<double>(L)));
}

// Breadth-first exploration that halts when L vertices are reached or when
// boundary_cap vertices are waiting to be explored. Caps are checked after
// every single new vertex, so a halt can fall inside one vertex's reveal;
// that vertex is then itself a boundary vertex, giving at most
// boundary_cap + 1 boundary vertices.
template <class Oracle>
TruncatedExploration truncated_explore(Oracle& oracle, VisitedSet& visited, Vertex v, std::uint64_t L,
                                       std::uint64_t boundary_cap) {
  if (L < 1 || boundary_cap < 1) throw DomainError("truncation caps must be at least 1");
  if (visited.test(v)) throw PreconditionError("truncated_explore: root already visited");
  TruncatedExploration te;
  te.size_cap = L;
  te.boundary_cap = boundary_cap;
  oracle.claim(v, visited);
  te.tree.add_root(v);
  std::size_t head = 0;
  bool halted = false;
  while (head < te.tree.size()) {
    const std::size_t current = head;
    const RevealStatus status = oracle.reveal(te.tree.order[current], visited, [&](Vertex w) {
      te.tree.add_child(current, w);
      const std::uint64_t waiting = te.tree.size() - current - 1;
      if (te.tree.size() >= L) {
        te.stopped_by = StopReason::SizeCap;
        halted = true;
      } else if (waiting >= boundary_cap) {
        te.stopped_by = StopReason::BoundaryCap;
        halted = true;
      }
      return !halted;
    });
    if (halted) {
      const std::size_t first_waiting = status == RevealStatus::Interrupted ? current : current + 1;
      te.boundary.assign(te.tree.order.begin() + static_cast<std::ptrdiff_t>(first_waiting), te.tree.order.end());
      return te;
    }
    ++head;
  }
  te.stopped_by = StopReason::Exhausted;
  return te;
}

inline TruncatedExploration truncated_explore(const GnpParams& params, Vertex v, std::uint64_t L, Stream& rng) {
  if (!(params.eps > 0.0)) throw DomainError("truncated exploration requires eps > 0");
  if (static_cast<double>(L) * params.eps < 1.0) {
    throw DomainError("truncated exploration requires L >= 1/eps (got L = " + std::to_string(L) + ")");
  }
  if (v < 1 || v > params.n) throw DomainError("root vertex out of range");
  LazyGnpOracle oracle(params, rng);
  VisitedSet visited(params.n);
  return truncated_explore(oracle, visited, v, L, boundary_cap_for(params.eps, L));
}

struct SecondExploration {
  std::uint64_t component_size = 0;  // |C'_w| in G minus V(C'_v)
  std::uint64_t boundary_edges = 0;  // edges from C'_w to the boundary
  [[nodiscard]] bool hits_boundary() const noexcept { return boundary_edges > 0; }
};

// Explores C'_w in the graph with the reached set of `state` removed, then
// tests every (C'_w, boundary) pair for an edge. Pairs touching boundary
// vertices are all treated as untested.
inline SecondExploration conditional_second_explore(const TruncatedExploration& state, Vertex w,
                                                    const GnpParams& params, Stream& rng) {
  if (w < 1 || w > params.n) throw DomainError("vertex w out of range");
  if (std::find(state.reached().begin(), state.reached().end(), w) != state.reached().end()) {
    throw DomainError("vertex w lies inside the reached set");
  }
  LazyGnpOracle oracle(params, rng);
  VisitedSet visited(params.n);
  for (Vertex r : state.reached()) oracle.claim(r, visited);
  SecondExploration out;
  out.component_size = explore_component(w, oracle, visited).size();
  if (!state.boundary.empty()) {
    out.boundary_edges = sample_binomial(out.component_size * state.boundary.size(), params.p, rng);
  }
  return out;
}

}  // namespace giant
