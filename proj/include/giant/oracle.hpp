#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "giant/errors.hpp"

// Brute-force reference distributions for tiny instances. Nothing here uses
// the samplers or the union-find, so the results can serve as independent
// oracles for them.
namespace giant::oracle {

inline constexpr std::uint32_t kMaxGraphVertices = 5;
inline constexpr std::uint32_t kMaxFanout = 3;
inline constexpr std::uint32_t kMaxTreeSize = 12;

namespace detail {

inline long double binom_coeff(unsigned n, unsigned k) {
  long double c = 1.0L;
  for (unsigned i = 1; i <= k; ++i) c = c * static_cast<long double>(n - k + i) / static_cast<long double>(i);
  return c;
}

inline long double ipow(long double x, unsigned e) {
  long double r = 1.0L;
  while (e-- > 0) r *= x;
  return r;
}

struct TreeWalk {
  unsigned fanout;
  unsigned max_size;
  std::vector<long double> child_weight;  // P(c children)
  std::vector<long double>* out;

  // One explored vertex per call; `pending` vertices still need their
  // children decided. Each call path is one breadth-first child-count word,
  // i.e. one finite tree.
  void walk(unsigned size, unsigned pending, long double weight) const {
    if (pending == 0) {
      (*out)[size] += weight;
      return;
    }
    for (unsigned c = 0; c <= fanout; ++c) {
      if (size + c > max_size) break;
      walk(size + c, pending - 1 + c, weight * child_weight[c]);
    }
  }
};

}  // namespace detail

// P(|X| = s) for the Bi(fanout, p) process, s = 0..max_size (entry 0 unused),
// by enumerating every tree with at most max_size vertices.
inline std::vector<long double> bp_size_distribution(std::uint32_t fanout, double p, std::uint32_t max_size) {
  if (fanout == 0 || fanout > kMaxFanout) {
    throw DomainError("tree enumeration supports fan-out 1.." + std::to_string(kMaxFanout));
  }
  if (max_size == 0 || max_size > kMaxTreeSize) {
    throw DomainError("tree enumeration supports sizes up to " + std::to_string(kMaxTreeSize));
  }
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0,1]");
  std::vector<long double> dist(max_size + 1, 0.0L);
  std::vector<long double> weights(fanout + 1);
  const long double pl = p;
  for (unsigned c = 0; c <= fanout; ++c) {
    weights[c] = detail::binom_coeff(fanout, c) * detail::ipow(pl, c) * detail::ipow(1.0L - pl, fanout - c);
  }
  detail::TreeWalk w{fanout, max_size, weights, &dist};
  w.walk(1, 1, 1.0L);
  return dist;
}

// P(L1 = s) for G(n,p), s = 0..n (entry 0 unused), over all 2^C(n,2) graphs.
inline std::vector<long double> l1_distribution(std::uint32_t n, double p) {
  if (n == 0 || n > kMaxGraphVertices) {
    throw DomainError("graph enumeration supports n = 1.." + std::to_string(kMaxGraphVertices));
  }
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0,1]");
  std::vector<std::pair<unsigned, unsigned>> pairs;
  for (unsigned i = 0; i < n; ++i)
    for (unsigned j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  const auto m = static_cast<unsigned>(pairs.size());
  std::vector<long double> dist(n + 1, 0.0L);
  const long double pl = p;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<unsigned> adj(n, 0);
    unsigned edges = 0;
    for (unsigned e = 0; e < m; ++e) {
      if (mask & (1u << e)) {
        adj[pairs[e].first] |= 1u << pairs[e].second;
        adj[pairs[e].second] |= 1u << pairs[e].first;
        ++edges;
      }
    }
    unsigned seen = 0;
    unsigned largest = 0;
    for (unsigned v = 0; v < n; ++v) {
      if (seen & (1u << v)) continue;
      unsigned comp = 1u << v;
      unsigned grown = 0;
      while (grown != comp) {
        grown = comp;
        for (unsigned u = 0; u < n; ++u)
          if (comp & (1u << u)) comp |= adj[u];
      }
      seen |= comp;
      largest = std::max(largest, static_cast<unsigned>(__builtin_popcount(comp)));
    }
    dist[largest] += detail::ipow(pl, edges) * detail::ipow(1.0L - pl, m - edges);
  }
  return dist;
}

}  // namespace giant::oracle
