#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "giant/errors.hpp"
#include "giant/rng.hpp"

namespace giant {

// ---------------------------------------------------------------------------
// log k!

namespace detail {

inline double log_factorial(std::uint64_t k) noexcept {
  static const auto table = [] {
    std::array<double, 128> t{};
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  if (k < table.size()) return table[k];
  // Stirling series; error below 1e-17 for k >= 128.
  const double x = static_cast<double>(k);
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return (x + 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) +
         inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Binomial(trials, prob)

// Exact Binomial sampler with its setup cached.
//
// Means up to 30 use sequential inversion; larger means use Hormann's BTRS
// transformed rejection with the exact log-pmf ratio as acceptance test, so
// both branches are exact in distribution. prob > 1/2 is handled by symmetry.
class BinomialSampler {
 public:
  static constexpr double kInversionMeanLimit = 30.0;

  BinomialSampler(std::uint64_t trials, double prob) : trials_(trials) {
    detail::require_probability(prob, "binomial probability");
    flip_ = prob > 0.5;
    p_ = flip_ ? 1.0 - prob : prob;
    degenerate_ = (trials_ == 0 || p_ == 0.0);
    if (degenerate_) return;
    const double n = static_cast<double>(trials_);
    const double q = 1.0 - p_;
    mean_ = n * p_;
    odds_ = p_ / q;
    if (mean_ <= kInversionMeanLimit) {
      p0_ = std::exp(n * std::log1p(-p_));
      return;
    }
    const double spq = std::sqrt(mean_ * q);
    b_ = 1.15 + 2.53 * spq;
    a_ = -0.0873 + 0.0248 * b_ + 0.01 * p_;
    c_ = mean_ + 0.5;
    v_r_ = 0.92 - 4.2 / b_;
    alpha_ = (2.83 + 5.1 / b_) * spq;
    log_odds_ = std::log(odds_);
    mode_ = static_cast<std::uint64_t>(std::floor((n + 1.0) * p_));
    if (mode_ > trials_) mode_ = trials_;
    h_ = detail::log_factorial(mode_) + detail::log_factorial(trials_ - mode_);
  }

  [[nodiscard]] std::uint64_t trials() const noexcept { return trials_; }

  std::uint64_t operator()(Stream& rng) const {
    if (degenerate_) return flip_ ? trials_ : 0;
    const std::uint64_t k = mean_ <= kInversionMeanLimit ? inversion(rng) : btrs(rng);
    return flip_ ? trials_ - k : k;
  }

 private:
  std::uint64_t inversion(Stream& rng) const {
    for (;;) {
      double u = rng.uniform01();
      double pk = p0_;
      std::uint64_t k = 0;
      while (u > pk) {
        u -= pk;
        ++k;
        if (k > trials_) break;
        pk *= odds_ * static_cast<double>(trials_ - k + 1) / static_cast<double>(k);
        if (pk == 0.0 && static_cast<double>(k) > mean_) {
          k = trials_ + 1;  // rounding residue in the far tail; redraw
          break;
        }
      }
      if (k <= trials_) return k;
    }
  }

  std::uint64_t btrs(Stream& rng) const {
    const double n = static_cast<double>(trials_);
    for (;;) {
      const double u = rng.uniform01() - 0.5;
      double v = rng.uniform01();
      const double us = 0.5 - std::fabs(u);
      const double kf = std::floor((2.0 * a_ / us + b_) * u + c_);
      if (kf < 0.0 || kf > n) continue;
      const auto k = static_cast<std::uint64_t>(kf);
      if (us >= 0.07 && v <= v_r_) return k;
      v = std::log(v * alpha_ / (a_ / (us * us) + b_));
      const double bound = h_ - detail::log_factorial(k) - detail::log_factorial(trials_ - k) +
                           (kf - static_cast<double>(mode_)) * log_odds_;
      if (v <= bound) return k;
    }
  }

  std::uint64_t trials_;
  bool flip_ = false;
  bool degenerate_ = false;
  double p_ = 0.0;
  double mean_ = 0.0;
  double odds_ = 0.0;
  double p0_ = 0.0;
  double a_ = 0.0, b_ = 0.0, c_ = 0.0, v_r_ = 0.0, alpha_ = 0.0, log_odds_ = 0.0, h_ = 0.0;
  std::uint64_t mode_ = 0;
};

inline std::uint64_t sample_binomial(std::uint64_t trials, double prob, Stream& rng) {
  return BinomialSampler(trials, prob)(rng);
}

// ---------------------------------------------------------------------------
// Geometric skip: index of the first success in Bernoulli(prob) trials.

class GeometricSkipSampler {
 public:
  explicit GeometricSkipSampler(double prob) : prob_(prob) {
    if (!(prob > 0.0 && prob <= 1.0)) {
      throw DomainError("geometric skip probability must lie in (0,1], got " + std::to_string(prob));
    }
    log_q_ = std::log1p(-prob);
  }

  std::uint64_t operator()(Stream& rng) const {
    if (prob_ == 1.0) return 1;
    const double k = std::floor(std::log(rng.uniform01()) / log_q_) + 1.0;
    constexpr auto kMax = static_cast<double>(std::numeric_limits<std::uint64_t>::max() / 2);
    return k >= kMax ? static_cast<std::uint64_t>(kMax) : static_cast<std::uint64_t>(k);
  }

 private:
  double prob_;
  double log_q_ = 0.0;
};

inline std::uint64_t sample_geometric_skip(double prob, Stream& rng) {
  return GeometricSkipSampler(prob)(rng);
}

// ---------------------------------------------------------------------------
// Interval estimates

struct CiEstimate {
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  std::uint64_t n_samples = 0;

  [[nodiscard]] double half_width() const noexcept { return 0.5 * (hi - lo); }
  [[nodiscard]] bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

// Two-sided standard normal critical value for confidence `level`.
inline double normal_critical(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw DomainError("confidence level must lie in (0,1), got " + std::to_string(level));
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

// Wilson score interval for a binomial proportion.
inline CiEstimate proportion_ci(std::uint64_t successes, std::uint64_t trials, double level) {
  if (trials == 0) throw DomainError("proportion_ci needs at least one trial");
  if (successes > trials) throw DomainError("proportion_ci: successes exceed trials");
  const double z = normal_critical(level);
  const double n = static_cast<double>(trials);
  const double x = static_cast<double>(successes);
  const double z2 = z * z;
  const double denom = n + z2;
  const double centre = (x + 0.5 * z2) / denom;
  const double half = z / denom * std::sqrt(x * (n - x) / n + 0.25 * z2);
  CiEstimate ci;
  ci.point = x / n;
  ci.lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  ci.hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
  ci.lo = std::min(ci.lo, ci.point);
  ci.hi = std::max(ci.hi, ci.point);
  ci.level = level;
  ci.n_samples = trials;
  return ci;
}

// Welford accumulator.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStats& other) noexcept {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double total = static_cast<double>(count_ + other.count_);
    const double d = other.mean_ - mean_;
    mean_ += d * static_cast<double>(other.count_) / total;
    m2_ += other.m2_ + d * d * static_cast<double>(count_) * static_cast<double>(other.count_) / total;
    count_ += other.count_;
  }

  [[nodiscard]] std::uint64_t count() const noexcept { return count_; }
  [[nodiscard]] double mean() const noexcept { return mean_; }
  [[nodiscard]] double variance() const noexcept {
    return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0;
  }
  [[nodiscard]] double stddev() const noexcept { return std::sqrt(variance()); }

  // Normal-approximation interval for the mean.
  [[nodiscard]] CiEstimate mean_ci(double level) const {
    if (count_ == 0) throw DomainError("mean_ci of an empty sample");
    const double half = normal_critical(level) * stddev() / std::sqrt(static_cast<double>(count_));
    return {mean_, mean_ - half, mean_ + half, level, count_};
  }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// ---------------------------------------------------------------------------
// Chi-square tests

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
  std::size_t bins = 0;  // after merging
};

inline double chi_square_sf(double statistic, std::size_t dof) {
  if (dof == 0) return 1.0;
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * static_cast<double>(dof), 0.5 * statistic);
}

// Goodness of fit of observed counts against category probabilities.
// Adjacent categories are pooled left to right until each expected count is
// at least `min_expected`; the probabilities need not sum to one (the
// complement is treated as an implicit final category).
inline ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed,
                                      std::span<const double> probs, double min_expected = 5.0) {
  if (observed.size() != probs.size()) throw DomainError("chi_square_gof: size mismatch");
  std::uint64_t total = 0;
  for (auto o : observed) total += o;
  if (total == 0) throw DomainError("chi_square_gof: no observations");
  const double n = static_cast<double>(total);

  std::vector<double> obs;
  std::vector<double> exp;
  double prob_sum = 0.0;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o_acc += static_cast<double>(observed[i]);
    e_acc += n * probs[i];
    prob_sum += probs[i];
    if (e_acc >= min_expected) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  // Remaining mass (including the implicit complement category).
  const double rest_e = e_acc + std::max(0.0, 1.0 - prob_sum) * n;
  const double rest_o = o_acc;
  if (rest_e > 0.0 || rest_o > 0.0) {
    if (rest_e >= min_expected || exp.empty()) {
      obs.push_back(rest_o);
      exp.push_back(rest_e);
    } else {
      obs.back() += rest_o;
      exp.back() += rest_e;
    }
  }
  ChiSquareResult r;
  r.bins = obs.size();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (exp[i] <= 0.0) {
      if (obs[i] > 0.0) r.statistic = std::numeric_limits<double>::infinity();
      continue;
    }
    const double d = obs[i] - exp[i];
    r.statistic += d * d / exp[i];
  }
  r.dof = r.bins > 0 ? r.bins - 1 : 0;
  r.p_value = std::isinf(r.statistic) ? 0.0 : chi_square_sf(r.statistic, r.dof);
  return r;
}

// Two-sample homogeneity test on aligned histograms. Adjacent bins are pooled
// until the combined count reaches `min_count`.
inline ChiSquareResult chi_square_two_sample(std::span<const std::uint64_t> a,
                                             std::span<const std::uint64_t> b,
                                             double min_count = 10.0) {
  if (a.size() != b.size()) throw DomainError("chi_square_two_sample: size mismatch");
  std::vector<double> ra, rb;
  double acc_a = 0.0, acc_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc_a += static_cast<double>(a[i]);
    acc_b += static_cast<double>(b[i]);
    if (acc_a + acc_b >= min_count) {
      ra.push_back(acc_a);
      rb.push_back(acc_b);
      acc_a = acc_b = 0.0;
    }
  }
  if (acc_a + acc_b > 0.0) {
    if (ra.empty()) {
      ra.push_back(acc_a);
      rb.push_back(acc_b);
    } else {
      ra.back() += acc_a;
      rb.back() += acc_b;
    }
  }
  double sa = 0.0, sb = 0.0;
  for (auto x : ra) sa += x;
  for (auto x : rb) sb += x;
  if (sa == 0.0 || sb == 0.0) throw DomainError("chi_square_two_sample: empty sample");
  const double ka = std::sqrt(sb / sa);
  const double kb = std::sqrt(sa / sb);
  ChiSquareResult r;
  r.bins = ra.size();
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double d = ka * ra[i] - kb * rb[i];
    r.statistic += d * d / (ra[i] + rb[i]);
  }
  r.dof = r.bins > 0 ? r.bins - 1 : 0;
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

}  // namespace giant
