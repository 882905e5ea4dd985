#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "giant/errors.hpp"
#include "giant/rng.hpp"
#include "giant/stats.hpp"

namespace giant {

// Vertices are labelled 1..n throughout.
using Vertex = std::uint32_t;

struct Edge {
  Vertex i = 0;
  Vertex j = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct GnpParams {
  std::uint32_t n = 1;
  double p = 0.0;
  double eps = 0.0;          // n p - 1
  double criticality = 0.0;  // eps^3 n

  GnpParams() = default;
  GnpParams(std::uint32_t vertices, double prob) : n(vertices), p(prob) {
    if (vertices == 0) throw DomainError("vertex count n must be positive");
    detail::require_probability(prob, "edge probability p");
    eps = static_cast<double>(n) * p - 1.0;
    criticality = eps * eps * eps * static_cast<double>(n);
  }

  // p = (1 + eps) / n.
  static GnpParams from_eps(std::uint32_t vertices, double eps) {
    if (vertices == 0) throw DomainError("vertex count n must be positive");
    return GnpParams(vertices, (1.0 + eps) / static_cast<double>(vertices));
  }
};

// ---------------------------------------------------------------------------
// Edge stream

// Emits every pair {i<j} independently with probability p, in lexicographic
// order, by geometric skipping over the pair sequence. Returns the edge count.
template <class Sink>
std::uint64_t sample_gnp_edges(const GnpParams& params, Stream& rng, Sink&& sink) {
  const std::uint64_t n = params.n;
  if (n < 2 || params.p == 0.0) return 0;
  const GeometricSkipSampler skip(params.p);
  std::uint64_t count = 0;
  std::uint64_t i = 1;
  std::uint64_t j = 1;  // position before the first pair (1,2)
  for (;;) {
    j += skip(rng);
    while (j > n) {
      const std::uint64_t overflow = j - n;
      ++i;
      if (i >= n) return count;
      j = i + overflow;
    }
    sink(static_cast<Vertex>(i), static_cast<Vertex>(j));
    ++count;
  }
}

inline std::vector<Edge> sample_gnp_edge_list(const GnpParams& params, Stream& rng) {
  std::vector<Edge> edges;
  sample_gnp_edges(params, rng, [&](Vertex i, Vertex j) { edges.push_back({i, j}); });
  return edges;
}

// "i j" per line, 1-based, i < j, lexicographic.
inline void write_edge_list(std::ostream& os, std::span<const Edge> edges) {
  std::vector<Edge> sorted;
  sorted.reserve(edges.size());
  for (auto e : edges) sorted.push_back(e.i < e.j ? e : Edge{e.j, e.i});
  std::sort(sorted.begin(), sorted.end(),
            [](const Edge& a, const Edge& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  for (const auto& e : sorted) os << e.i << ' ' << e.j << '\n';
}

// ---------------------------------------------------------------------------
// Union-find census

// Union by size with path halving; 0-based indices.
class UnionFind {
 public:
  explicit UnionFind(std::uint32_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  std::uint32_t find(std::uint32_t x) noexcept {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::uint32_t a, std::uint32_t b) noexcept {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

  [[nodiscard]] std::uint32_t size_of_root(std::uint32_t root) const noexcept { return size_[root]; }
  [[nodiscard]] std::uint32_t element_count() const noexcept { return static_cast<std::uint32_t>(parent_.size()); }

  // Sizes of all components, unordered.
  std::vector<std::uint32_t> component_sizes() {
    std::vector<std::uint32_t> out;
    for (std::uint32_t v = 0; v < parent_.size(); ++v)
      if (parent_[v] == v) out.push_back(size_[v]);
    return out;
  }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
};

struct Census {
  std::vector<std::uint32_t> sizes;  // non-increasing, sums to n
  std::uint32_t l1 = 0;
  std::uint32_t l2 = 0;

  [[nodiscard]] std::uint64_t vertex_count() const noexcept {
    return std::accumulate(sizes.begin(), sizes.end(), std::uint64_t{0});
  }
};

inline Census make_census(std::vector<std::uint32_t> sizes) {
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  Census c;
  c.sizes = std::move(sizes);
  c.l1 = c.sizes.empty() ? 0 : c.sizes[0];
  c.l2 = c.sizes.size() > 1 ? c.sizes[1] : 0;
  return c;
}

class CensusBuilder {
 public:
  explicit CensusBuilder(std::uint32_t n) : uf_(n) {
    if (n == 0) throw DomainError("census needs at least one vertex");
  }

  void add_edge(Vertex i, Vertex j) {
    const auto n = uf_.element_count();
    if (i < 1 || i > n || j < 1 || j > n) {
      throw InputError("edge endpoint out of range [1, " + std::to_string(n) + "]: (" +
                       std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    uf_.unite(i - 1, j - 1);
  }

  Census finish() { return make_census(uf_.component_sizes()); }

 private:
  UnionFind uf_;
};

inline Census component_census(std::uint32_t n, std::span<const Edge> edges) {
  CensusBuilder b(n);
  for (const auto& e : edges) b.add_edge(e.i, e.j);
  return b.finish();
}

// Edge stream piped straight into the union-find.
inline Census sample_census(const GnpParams& params, Stream& rng) {
  CensusBuilder b(params.n);
  sample_gnp_edges(params, rng, [&](Vertex i, Vertex j) { b.add_edge(i, j); });
  return b.finish();
}

// N_[L,n]: vertices in components of size >= L.
inline std::uint64_t count_large(const Census& census, std::uint64_t L) {
  std::uint64_t total = 0;
  for (auto s : census.sizes) {
    if (s < L) break;
    total += s;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Lazy exploration

// n-bit visited flags, indexed by vertex label.
class VisitedSet {
 public:
  explicit VisitedSet(std::uint32_t n) : n_(n), bits_((static_cast<std::size_t>(n) + 64) / 64, 0) {}

  [[nodiscard]] bool test(Vertex v) const noexcept { return (bits_[v >> 6] >> (v & 63)) & 1u; }
  void set(Vertex v) noexcept {
    auto& w = bits_[v >> 6];
    const std::uint64_t bit = std::uint64_t{1} << (v & 63);
    count_ += (w & bit) ? 0 : 1;
    w |= bit;
  }
  [[nodiscard]] std::uint32_t vertex_count() const noexcept { return n_; }
  [[nodiscard]] std::uint64_t count() const noexcept { return count_; }

 private:
  std::uint32_t n_;
  std::uint64_t count_ = 0;
  std::vector<std::uint64_t> bits_;
};

// Unvisited vertices as the live prefix of an implicit permutation of 1..n.
//
// Only displaced slots are stored (sparse Fisher-Yates), so building a pool
// for n = 10^8 and exploring a few thousand vertices costs O(thousands).
// Small n uses flat arrays instead.
class UnvisitedPool {
 public:
  static constexpr std::uint32_t kDenseLimit = 1u << 16;

  explicit UnvisitedPool(std::uint32_t n) : remaining_(n), dense_(n <= kDenseLimit) {
    if (dense_) {
      slot_.resize(n);
      pos_.resize(static_cast<std::size_t>(n) + 1);
      std::iota(slot_.begin(), slot_.end(), 1u);
      for (std::uint32_t i = 0; i < n; ++i) pos_[i + 1] = i;
    }
  }

  [[nodiscard]] std::uint32_t size() const noexcept { return remaining_; }

  [[nodiscard]] Vertex at(std::uint32_t index) const {
    if (dense_) return slot_[index];
    auto it = sparse_slot_.find(index);
    return it == sparse_slot_.end() ? index + 1 : it->second;
  }

  // v must still be in the pool.
  void remove(Vertex v) {
    const std::uint32_t i = position(v);
    const std::uint32_t last = remaining_ - 1;
    const Vertex w = at(last);
    set_slot(i, w);
    set_position(w, i);
    --remaining_;
  }

  Vertex take_random(Stream& rng) {
    const auto i = static_cast<std::uint32_t>(rng.uniform_below(remaining_));
    const Vertex v = at(i);
    remove(v);
    return v;
  }

 private:
  [[nodiscard]] std::uint32_t position(Vertex v) const {
    if (dense_) return pos_[v];
    auto it = sparse_pos_.find(v);
    return it == sparse_pos_.end() ? v - 1 : it->second;
  }
  void set_slot(std::uint32_t i, Vertex v) {
    if (dense_) {
      slot_[i] = v;
    } else {
      sparse_slot_[i] = v;
    }
  }
  void set_position(Vertex v, std::uint32_t i) {
    if (dense_) {
      pos_[v] = i;
    } else {
      sparse_pos_[v] = i;
    }
  }

  std::uint32_t remaining_;
  bool dense_;
  std::vector<Vertex> slot_;
  std::vector<std::uint32_t> pos_;
  std::unordered_map<std::uint32_t, Vertex> sparse_slot_;
  std::unordered_map<Vertex, std::uint32_t> sparse_pos_;
};

enum class RevealStatus { Complete, Interrupted };

// Adjacency oracle that samples G(n,p) on demand.
//
// reveal(x) draws the number of new neighbours of x as Bi(u, p), u the current
// number of unvisited vertices, then takes that many uniformly from the pool.
// Each pair is therefore tested at most once, from whichever endpoint is
// explored first.
class LazyGnpOracle {
 public:
  LazyGnpOracle(const GnpParams& params, Stream& rng) : params_(params), rng_(&rng), pool_(params.n) {}

  [[nodiscard]] const GnpParams& params() const noexcept { return params_; }
  [[nodiscard]] std::uint32_t unvisited() const noexcept { return pool_.size(); }
  UnvisitedPool& pool() noexcept { return pool_; }
  Stream& rng() noexcept { return *rng_; }

  void claim(Vertex v, VisitedSet& visited) {
    if (visited.test(v)) return;
    pool_.remove(v);
    visited.set(v);
  }

  // sink(w) -> bool; returning false stops the reveal.
  template <class Sink>
  RevealStatus reveal(Vertex /*x*/, VisitedSet& visited, Sink&& sink) {
    const std::uint64_t k = sample_binomial(pool_.size(), params_.p, *rng_);
    for (std::uint64_t t = 0; t < k; ++t) {
      const Vertex w = pool_.take_random(*rng_);
      visited.set(w);
      if (!sink(w)) return t + 1 == k ? RevealStatus::Complete : RevealStatus::Interrupted;
    }
    return RevealStatus::Complete;
  }

 private:
  GnpParams params_;
  Stream* rng_;
  UnvisitedPool pool_;
};

// Fixed graph given by adjacency lists (index 0 unused); neighbours are
// revealed in ascending label order.
class AdjacencyListOracle {
 public:
  explicit AdjacencyListOracle(std::uint32_t n) : adj_(static_cast<std::size_t>(n) + 1) {}

  AdjacencyListOracle(std::uint32_t n, std::span<const Edge> edges) : AdjacencyListOracle(n) {
    for (const auto& e : edges) add_edge(e.i, e.j);
  }

  void add_edge(Vertex a, Vertex b) {
    if (a < 1 || b < 1 || a >= adj_.size() || b >= adj_.size()) throw InputError("edge endpoint out of range");
    insert_sorted(adj_[a], b);
    insert_sorted(adj_[b], a);
  }

  [[nodiscard]] std::uint32_t vertex_count() const noexcept { return static_cast<std::uint32_t>(adj_.size() - 1); }

  void claim(Vertex v, VisitedSet& visited) { visited.set(v); }

  template <class Sink>
  RevealStatus reveal(Vertex x, VisitedSet& visited, Sink&& sink) {
    const auto& nb = adj_[x];
    for (std::size_t i = 0; i < nb.size(); ++i) {
      const Vertex w = nb[i];
      if (visited.test(w)) continue;
      visited.set(w);
      if (!sink(w)) {
        for (std::size_t r = i + 1; r < nb.size(); ++r)
          if (!visited.test(nb[r])) return RevealStatus::Interrupted;
        return RevealStatus::Complete;
      }
    }
    return RevealStatus::Complete;
  }

 private:
  static void insert_sorted(std::vector<Vertex>& v, Vertex x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
  }

  std::vector<std::vector<Vertex>> adj_;
};

// Breadth-first spanning tree of a component. parents[i] is the parent of
// order[i] (0 for the root).
struct ExplorationTree {
  Vertex root = 0;
  std::vector<Vertex> order;
  std::vector<Vertex> parents;
  std::vector<std::uint32_t> generation_sizes;

  [[nodiscard]] std::size_t size() const noexcept { return order.size(); }
  [[nodiscard]] std::uint32_t width() const noexcept {
    return generation_sizes.empty() ? 0 : *std::max_element(generation_sizes.begin(), generation_sizes.end());
  }

  void add_root(Vertex v) {
    root = v;
    order.push_back(v);
    parents.push_back(0);
    depth_.push_back(0);
    generation_sizes.push_back(1);
  }

  // Appends child w of the vertex at order position parent_index.
  void add_child(std::size_t parent_index, Vertex w) {
    const std::uint32_t d = depth_[parent_index] + 1;
    order.push_back(w);
    parents.push_back(order[parent_index]);
    depth_.push_back(d);
    if (generation_sizes.size() <= d) generation_sizes.push_back(0);
    ++generation_sizes[d];
  }

  [[nodiscard]] std::uint32_t depth_at(std::size_t index) const { return depth_[index]; }

 private:
  std::vector<std::uint32_t> depth_;
};

// Explores C_v breadth first through `oracle`, marking every discovered vertex
// in `visited`.
template <class Oracle>
ExplorationTree explore_component(Vertex v, Oracle& oracle, VisitedSet& visited) {
  if (visited.test(v)) throw PreconditionError("explore_component: root already visited");
  ExplorationTree tree;
  oracle.claim(v, visited);
  tree.add_root(v);
  for (std::size_t head = 0; head < tree.order.size(); ++head) {
    oracle.reveal(tree.order[head], visited, [&](Vertex w) {
      tree.add_child(head, w);
      return true;
    });
  }
  return tree;
}

// Census of one lazily sampled graph: explores from every unvisited vertex in
// ascending label order.
inline Census lazy_census(const GnpParams& params, Stream& rng) {
  LazyGnpOracle oracle(params, rng);
  VisitedSet visited(params.n);
  std::vector<std::uint32_t> sizes;
  for (Vertex v = 1; v <= params.n; ++v) {
    if (visited.test(v)) continue;
    sizes.push_back(static_cast<std::uint32_t>(explore_component(v, oracle, visited).size()));
  }
  return make_census(std::move(sizes));
}

}  // namespace giant
