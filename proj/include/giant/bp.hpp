#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "giant/errors.hpp"
#include "giant/rng.hpp"
#include "giant/stats.hpp"

namespace giant {

inline constexpr double kDefaultSolverTol = 1e-12;
inline constexpr std::uint64_t kNoCap = std::numeric_limits<std::uint64_t>::max();

// Binomial Galton-Watson process: every vertex has Bi(n, p) children.
struct BpParams {
  std::uint64_t n = 1;
  double p = 0.0;
  double mean = 0.0;

  BpParams() = default;
  BpParams(std::uint64_t fanout, double prob) : n(fanout), p(prob), mean(static_cast<double>(fanout) * prob) {
    if (fanout == 0) throw DomainError("branching fan-out n must be positive");
    detail::require_probability(prob, "offspring probability p");
  }

  [[nodiscard]] bool supercritical() const noexcept { return mean > 1.0; }
};

struct SurvivalSolution {
  double rho = 0.0;                 // survival probability
  double pi = 0.0;                  // parameter of the dual Bi(n, pi) process
  double dual_mean = 0.0;           // n * pi
  double dual_expected_size = 0.0;  // 1 / (1 - n pi), +inf when n pi >= 1
};

// 1 - rho - (1 - p rho)^n, evaluated without cancellation.
inline double survival_residual(const BpParams& params, double rho) {
  const double log_term = static_cast<double>(params.n) * std::log1p(-params.p * rho);
  return -std::expm1(log_term) - rho;
}

inline double expected_total_size_subcritical(double mean) {
  if (!(mean >= 0.0)) throw DomainError("offspring mean must be non-negative");
  if (mean >= 1.0) {
    throw DomainError("expected total size diverges for offspring mean >= 1 (got " + std::to_string(mean) + ")");
  }
  return 1.0 / (1.0 - mean);
}

// Survival probability of Bi(n,p) by bisection on (0,1].
//
// g(r) = 1 - r - (1 - p r)^n is positive on (0, rho) and non-positive on
// [rho, 1] when np > 1, so the bracket [0, 1] with g(0+) > 0 never needs a
// search. The bracket is halved until its width is below tol / max(1, np),
// which bounds both |rho - rho*| and the residual |g(rho)| by tol.
inline SurvivalSolution solve_survival(const BpParams& params, double tol = kDefaultSolverTol) {
  detail::require_probability(params.p, "offspring probability p");
  if (!(tol > 0.0)) throw DomainError("solver tolerance must be positive");
  SurvivalSolution s;
  if (!params.supercritical()) {
    s.rho = 0.0;
    s.pi = params.p;
  } else {
    const double width_target = tol / std::max(1.0, params.mean);
    double lo = 0.0;
    double hi = 1.0;
    if (survival_residual(params, 1.0) >= 0.0) {
      lo = 1.0;  // p == 1: extinction impossible
    } else {
      const auto iterations = static_cast<int>(std::ceil(std::log2(1.0 / width_target))) + 1;
      for (int i = 0; i < iterations && hi - lo > width_target; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (survival_residual(params, mid) > 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
    }
    s.rho = lo == 1.0 ? 1.0 : 0.5 * (lo + hi);
    if (std::fabs(survival_residual(params, s.rho)) > tol) {
      throw PreconditionError("survival solver failed to reach the requested residual");
    }
    s.pi = s.rho == 1.0 ? 0.0 : params.p * (1.0 - s.rho) / (1.0 - params.p * s.rho);
  }
  s.dual_mean = static_cast<double>(params.n) * s.pi;
  s.dual_expected_size =
      s.dual_mean < 1.0 ? 1.0 / (1.0 - s.dual_mean) : std::numeric_limits<double>::infinity();
  return s;
}

// Censoring caps for one simulated tree.
struct BpCaps {
  std::uint64_t size_cap = kNoCap;
  std::uint64_t width_cap = kNoCap;

  static BpCaps unbounded() noexcept { return {}; }

  // width_cap = ceil(20/rho) gives misclassification <= e^-20 for width
  // censoring. size_cap = ceil(400/rho^2) sits well above the size a
  // surviving tree has when its width reaches 20/rho, so surviving paths are
  // normally width-censored.
  static BpCaps defaults_for(const SurvivalSolution& s) noexcept {
    if (s.rho <= 0.0) return unbounded();
    BpCaps c;
    c.width_cap = static_cast<std::uint64_t>(std::ceil(20.0 / s.rho));
    c.size_cap = static_cast<std::uint64_t>(std::ceil(400.0 / (s.rho * s.rho)));
    return c;
  }
};

enum class BpStatus { Extinct, CensoredSize, CensoredWidth };

inline std::string_view to_string(BpStatus s) noexcept {
  switch (s) {
    case BpStatus::Extinct: return "extinct";
    case BpStatus::CensoredSize: return "censored_size";
    case BpStatus::CensoredWidth: return "censored_width";
  }
  return "?";
}

struct BpOutcome {
  BpStatus status = BpStatus::Extinct;
  std::uint64_t total_size = 1;   // counts the root
  std::uint64_t width = 1;        // largest generation seen so far
  std::uint64_t generations = 0;  // depth of the deepest vertex
  BpCaps caps{};
};

// Grows Bi(n,p) breadth first, one offspring draw per explored vertex, keeping
// only the frontier count. Caps are tested whenever vertices are added.
inline BpOutcome simulate_bp(const BinomialSampler& offspring, const BpCaps& caps, Stream& rng) {
  if (caps.size_cap == 0 || caps.width_cap == 0) throw DomainError("censoring caps must be at least 1");
  BpOutcome out;
  out.caps = caps;
  std::uint64_t frontier = 1;
  std::uint64_t depth = 0;
  while (frontier > 0) {
    std::uint64_t next = 0;
    for (std::uint64_t i = 0; i < frontier; ++i) {
      const std::uint64_t c = offspring(rng);
      if (c == 0) continue;
      if (next == 0) out.generations = depth + 1;
      next += c;
      out.total_size += c;
      if (next > out.width) out.width = next;
      if (out.total_size >= caps.size_cap) {
        out.status = BpStatus::CensoredSize;
        return out;
      }
      if (next >= caps.width_cap) {
        out.status = BpStatus::CensoredWidth;
        return out;
      }
    }
    frontier = next;
    ++depth;
  }
  out.status = BpStatus::Extinct;
  return out;
}

inline BpOutcome simulate_bp(const BpParams& params, const BpCaps& caps, Stream& rng) {
  return simulate_bp(BinomialSampler(params.n, params.p), caps, rng);
}

enum class BpFate { Survived, Died };

struct SurvivalVerdict {
  BpFate fate = BpFate::Died;
  // Upper bound on P(extinct | outcome observed); 0 for observed extinction.
  double misclassification_bound = 0.0;
};

inline constexpr double kClassifyExponent = 20.0;

// Maps a censored run to "survived", with the bound implied by its caps.
//
// Width censoring at W: each of the >= W vertices of that generation starts an
// independent copy, so P(dies | width >= W) <= (1 - rho)^W.
// Size censoring at S: P(D and |X| >= S) <= (1 - rho) E|X_dual| / S (Markov on
// the dual) and P(|X| >= S) >= rho.
inline SurvivalVerdict classify_survival(const BpOutcome& outcome, const SurvivalSolution& solution) {
  if (outcome.status == BpStatus::Extinct) return {BpFate::Died, 0.0};
  const double rho = solution.rho;
  if (rho <= 0.0) {
    throw PreconditionError("censored outcome cannot be classified: survival probability is 0, no finite cap suffices");
  }
  const double width_bound = outcome.caps.width_cap == kNoCap
                                 ? 0.0
                                 : std::pow(1.0 - rho, static_cast<double>(outcome.caps.width_cap));
  const double size_bound =
      outcome.caps.size_cap == kNoCap
          ? 0.0
          : std::min(1.0, (1.0 - rho) * solution.dual_expected_size /
                              (static_cast<double>(outcome.caps.size_cap) * rho));
  const bool width_ok = outcome.caps.width_cap != kNoCap &&
                        rho * static_cast<double>(outcome.caps.width_cap) >= kClassifyExponent;
  const bool size_ok = outcome.caps.size_cap != kNoCap && size_bound <= std::exp(-kClassifyExponent);
  if (!width_ok && !size_ok) {
    const auto min_width = static_cast<std::uint64_t>(std::ceil(kClassifyExponent / rho));
    throw PreconditionError("caps too small to classify survival: width_cap must be >= " +
                            std::to_string(min_width) + " (20/rho)");
  }
  const double bound = outcome.status == BpStatus::CensoredWidth ? width_bound : size_bound;
  return {BpFate::Survived, bound};
}

// Simulates the dual process Bi(n, pi), distributed as Bi(n,p) conditioned on
// extinction.
inline BpOutcome sample_dual_direct(const BpParams& params, const SurvivalSolution& solution,
                                    const BpCaps& caps, Stream& rng) {
  if (!params.supercritical()) throw DomainError("dual process requires n*p > 1");
  return simulate_bp(BpParams(params.n, solution.pi), caps, rng);
}

}  // namespace giant
