#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "giant/bp.hpp"
#include "giant/config.hpp"
#include "giant/coupling.hpp"
#include "giant/errors.hpp"
#include "giant/gnp.hpp"
#include "giant/oracle.hpp"
#include "giant/parallel.hpp"
#include "giant/report.hpp"
#include "giant/rng.hpp"
#include "giant/stats.hpp"

namespace giant {

// Execution knobs shared by all experiments. `parallelism` only changes
// wall-clock time and is never echoed into reports.
struct RunOptions {
  std::uint64_t master_seed = 1;
  unsigned parallelism = 1;
  bool record_timing = false;
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline Json ci_json(const CiEstimate& ci) {
  Json j;
  j["point"] = ci.point;
  j["lo"] = ci.lo;
  j["hi"] = ci.hi;
  j["level"] = ci.level;
  j["n_samples"] = ci.n_samples;
  return j;
}

// Splits `total` units into `batches` near-equal parts.
inline std::uint64_t batch_share(std::uint64_t total, std::uint64_t batches, std::uint64_t index) {
  return total / batches + (index < total % batches ? 1 : 0);
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t replicate, std::string label) {
  return SeedSpec{seed, replicate, std::move(label)}.key();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// eps(n) = n^-a schedules and the size threshold L

struct EpsSchedule {
  double exponent = 0.2;
  std::vector<std::uint64_t> n_values;
  double criticality_floor = 30.0;

  [[nodiscard]] double eps(std::uint64_t n) const { return std::pow(static_cast<double>(n), -exponent); }
  [[nodiscard]] double criticality(std::uint64_t n) const {
    const double e = eps(n);
    return e * e * e * static_cast<double>(n);
  }
  // omega = eps n^{1/3}
  [[nodiscard]] double omega(std::uint64_t n) const { return eps(n) * std::cbrt(static_cast<double>(n)); }

  void validate() const {
    if (!(exponent > 0.0 && exponent < 1.0 / 3.0)) {
      throw ConfigError("schedule exponent a must lie in (0, 1/3), got " + std::to_string(exponent));
    }
    if (n_values.empty()) throw ConfigError("schedule needs at least one n");
    for (std::size_t i = 0; i < n_values.size(); ++i) {
      if (n_values[i] < 2 || n_values[i] > std::numeric_limits<std::uint32_t>::max()) {
        throw ConfigError("schedule n out of range: " + std::to_string(n_values[i]));
      }
      if (i > 0 && n_values[i] <= n_values[i - 1]) throw ConfigError("schedule n values must be ascending");
      if (!(criticality(n_values[i]) > criticality_floor)) {
        std::ostringstream os;
        os << "eps^3 n = " << criticality(n_values[i]) << " at n = " << n_values[i] << " does not exceed the floor "
           << criticality_floor;
        throw ConfigError(os.str());
      }
    }
  }
};

struct LRule {
  enum class Kind { EpsNOver, InvEps2Times, Fixed };
  Kind kind = Kind::EpsNOver;
  double value = 3.0;

  // "eps_n_over:<d>" -> ceil(eps n / d); "inv_eps2:<c>" -> ceil(c / eps^2);
  // "fixed:<L>".
  static LRule parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("L rule must look like kind:value, got '" + text + "'");
    const std::string kind = text.substr(0, colon);
    const double v = KeyValueConfig::to_double("L_rule", text.substr(colon + 1));
    if (!(v > 0.0)) throw ConfigError("L rule value must be positive");
    if (kind == "eps_n_over") return {Kind::EpsNOver, v};
    if (kind == "inv_eps2") return {Kind::InvEps2Times, v};
    if (kind == "fixed") return {Kind::Fixed, v};
    throw ConfigError("unknown L rule kind '" + kind + "'");
  }

  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::EpsNOver: os << "eps_n_over:"; break;
      case Kind::InvEps2Times: os << "inv_eps2:"; break;
      case Kind::Fixed: os << "fixed:"; break;
    }
    os << value;
    return os.str();
  }

  [[nodiscard]] std::uint64_t resolve(std::uint64_t n, double eps) const {
    switch (kind) {
      case Kind::EpsNOver: return static_cast<std::uint64_t>(std::ceil(eps * static_cast<double>(n) / value));
      case Kind::InvEps2Times: return static_cast<std::uint64_t>(std::ceil(value / (eps * eps)));
      case Kind::Fixed: return static_cast<std::uint64_t>(value);
    }
    return 0;
  }
};

// Quantitative stand-in for "eps^2 L -> infinity and L = o(eps n)".
struct LWindow {
  double min_eps2_L = 30.0;
  double max_fraction_of_eps_n = 1.0 / 3.0;

  // Empty when L is inside the window, otherwise the violated inequality.
  [[nodiscard]] std::optional<std::string> violation(std::uint64_t n, double eps, std::uint64_t L) const {
    std::ostringstream os;
    const double Ld = static_cast<double>(L);
    if (eps * eps * Ld < min_eps2_L) {
      os << "eps^2 L >= " << min_eps2_L << " violated (eps^2 L = " << eps * eps * Ld << ", L = " << L << ")";
      return os.str();
    }
    if (Ld > std::ceil(max_fraction_of_eps_n * eps * static_cast<double>(n))) {
      os << "L <= " << max_fraction_of_eps_n << " eps n violated (L = " << L
         << ", eps n = " << eps * static_cast<double>(n) << ")";
      return os.str();
    }
    return std::nullopt;
  }
};

// ---------------------------------------------------------------------------
// Largest component along a schedule

struct L1Config {
  EpsSchedule schedule;
  LRule l_rule;
  LWindow window;
  std::uint32_t replicates = 20;
  // Allowed |mean L1/(2 eps n) - 1|; the second band applies from n >= 10^7.
  double band = 0.15;
  double band_large_n = 0.10;
  std::uint64_t large_n = 10'000'000;
  double level = 0.95;
};

inline Json to_json(const L1Config& c) {
  Json j;
  j["experiment"] = "l1";
  j["exponent"] = c.schedule.exponent;
  j["n"] = c.schedule.n_values;
  j["criticality_floor"] = c.schedule.criticality_floor;
  j["L_rule"] = c.l_rule.describe();
  j["window_min_eps2_L"] = c.window.min_eps2_L;
  j["window_max_fraction_of_eps_n"] = c.window.max_fraction_of_eps_n;
  j["replicates"] = c.replicates;
  j["band"] = c.band;
  j["band_large_n"] = c.band_large_n;
  j["large_n"] = c.large_n;
  j["level"] = c.level;
  return j;
}

struct L1Row {
  std::uint64_t n = 0;
  double eps = 0.0;
  std::uint64_t L = 0;
  RunningStats l1_ratio;
  RunningStats n_large_ratio;
  RunningStats l2_over_l1;
  RunningStats abs_deviation;
  std::uint32_t degenerate = 0;
};

inline ExperimentReport run_l1_experiment(const L1Config& cfg, const RunOptions& run) {
  cfg.schedule.validate();
  if (cfg.replicates == 0) throw ConfigError("replicates must be positive");
  ExperimentReport report;
  report.experiment = "l1";
  report.config = to_json(cfg);
  report.config["master_seed"] = run.master_seed;

  std::vector<L1Row> rows;
  for (std::size_t row = 0; row < cfg.schedule.n_values.size(); ++row) {
    const std::uint64_t n = cfg.schedule.n_values[row];
    const double eps = cfg.schedule.eps(n);
    const std::uint64_t L = cfg.l_rule.resolve(n, eps);
    if (auto why = cfg.window.violation(n, eps, L)) throw ConfigError("L rule at n = " + std::to_string(n) + ": " + *why);
    const GnpParams params = GnpParams::from_eps(static_cast<std::uint32_t>(n), eps);

    struct Rec {
      std::uint64_t key;
      std::uint32_t l1, l2;
      std::uint64_t n_large;
      double ms;
    };
    const auto recs = run_indexed(cfg.replicates, run.parallelism, [&](std::size_t r) {
      // Keyed by n so a single row reproduces the same row of a longer sweep.
      const std::uint64_t key = detail::stream_key(run.master_seed, r, "gnp/n=" + std::to_string(n));
      detail::Stopwatch sw;
      Stream rng(key);
      const Census census = sample_census(params, rng);
      return Rec{key, census.l1, census.l2, count_large(census, L), sw.elapsed_ms()};
    });

    L1Row agg{n, eps, L, {}, {}, {}, {}, 0};
    const double scale = 2.0 * eps * static_cast<double>(n);
    for (std::size_t r = 0; r < recs.size(); ++r) {
      const auto& x = recs[r];
      Json j;
      j["replicate"] = r;
      j["seed"] = x.key;
      j["n"] = n;
      j["eps"] = eps;
      j["L"] = L;
      j["l1"] = x.l1;
      j["l2"] = x.l2;
      j["n_large"] = x.n_large;
      if (run.record_timing) j["runtime_ms"] = x.ms;
      report.records.push_back(std::move(j));
      agg.l1_ratio.add(x.l1 / scale);
      agg.n_large_ratio.add(static_cast<double>(x.n_large) / scale);
      agg.l2_over_l1.add(static_cast<double>(x.l2) / x.l1);
      agg.abs_deviation.add(std::fabs(x.l1 / scale - 1.0));
      if (x.n_large == 0) ++agg.degenerate;
    }
    rows.push_back(agg);
  }

  Json per_n = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["n"] = r.n;
    j["eps"] = r.eps;
    j["criticality"] = r.eps * r.eps * r.eps * static_cast<double>(r.n);
    j["L"] = r.L;
    j["l1_over_2epsn"] = detail::ci_json(r.l1_ratio.mean_ci(cfg.level));
    j["l1_over_2epsn_sd"] = r.l1_ratio.stddev();
    j["n_large_over_2epsn"] = detail::ci_json(r.n_large_ratio.mean_ci(cfg.level));
    j["n_large_over_2epsn_sd"] = r.n_large_ratio.stddev();
    j["l2_over_l1"] = detail::ci_json(r.l2_over_l1.mean_ci(cfg.level));
    j["mean_abs_deviation"] = r.abs_deviation.mean();
    j["degenerate_replicates"] = r.degenerate;
    per_n.push_back(std::move(j));

    const double band = r.n >= cfg.large_n ? cfg.band_large_n : cfg.band;
    report.verdicts.push_back(
        verdict_within("l1_band[n=" + std::to_string(r.n) + "]", r.l1_ratio.mean(), 1.0, band, "mean L1/(2 eps n)"));
  }
  report.aggregates["per_n"] = std::move(per_n);

  if (rows.size() >= 2) {
    bool l2_decreasing = true;
    bool dev_decreasing = true;
    double worst_l2_step = -std::numeric_limits<double>::infinity();
    double worst_dev_step = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double l2_step = rows[i].l2_over_l1.mean() - rows[i - 1].l2_over_l1.mean();
      const double dev_step = rows[i].abs_deviation.mean() - rows[i - 1].abs_deviation.mean();
      l2_decreasing = l2_decreasing && l2_step < 0.0;
      dev_decreasing = dev_decreasing && dev_step < 0.0;
      worst_l2_step = std::max(worst_l2_step, l2_step);
      worst_dev_step = std::max(worst_dev_step, dev_step);
    }
    report.verdicts.push_back({"l2_over_l1_decreasing", l2_decreasing, worst_l2_step, 0.0, -worst_l2_step,
                               "largest step of mean L2/L1 along the sweep"});
    report.verdicts.push_back({"l1_deviation_decreasing", dev_decreasing, worst_dev_step, 0.0, -worst_dev_step,
                               "largest step of mean |L1/(2 eps n) - 1| along the sweep"});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Pr(|C_v| >= L) by capped lazy exploration

struct LowerBoundConfig {
  std::uint32_t n = 1'000'000;
  double eps = 0.05;
  std::uint64_t L = 10'000;
  std::uint64_t roots = 10'000;
  std::uint32_t batches = 100;
  double level = 0.95;
  double band_lo = 1.7;  // in units of eps
  double band_hi = 2.3;
  LWindow window;
};

inline Json to_json(const LowerBoundConfig& c) {
  Json j;
  j["experiment"] = "lower";
  j["n"] = c.n;
  j["eps"] = c.eps;
  j["L"] = c.L;
  j["roots"] = c.roots;
  j["batches"] = c.batches;
  j["level"] = c.level;
  j["band_lo"] = c.band_lo;
  j["band_hi"] = c.band_hi;
  return j;
}

// Size of C_v explored breadth first, stopping once `cap` vertices are reached.
inline std::uint64_t capped_component_size(const GnpParams& params, Vertex v, std::uint64_t cap, Stream& rng) {
  LazyGnpOracle oracle(params, rng);
  VisitedSet visited(params.n);
  oracle.claim(v, visited);
  std::vector<Vertex> queue{v};
  for (std::size_t head = 0; head < queue.size() && queue.size() < cap; ++head) {
    oracle.reveal(queue[head], visited, [&](Vertex w) {
      queue.push_back(w);
      return queue.size() < cap;
    });
  }
  return queue.size();
}

inline ExperimentReport run_lower_bound_check(const LowerBoundConfig& cfg, const RunOptions& run) {
  if (cfg.roots == 0 || cfg.batches == 0) throw ConfigError("roots and batches must be positive");
  if (cfg.L < 1 || cfg.L > cfg.n) throw ConfigError("L must satisfy 1 <= L <= n");
  const GnpParams params = GnpParams::from_eps(cfg.n, cfg.eps);
  ExperimentReport report;
  report.experiment = "lower";
  report.config = to_json(cfg);
  report.config["master_seed"] = run.master_seed;

  const std::uint64_t L2 = 2 * cfg.L;
  const bool flat_check = !cfg.window.violation(cfg.n, cfg.eps, L2).has_value() && cfg.eps > 0.0;
  const std::uint64_t cap = flat_check ? L2 : cfg.L;
  const std::uint64_t batches = std::min<std::uint64_t>(cfg.batches, cfg.roots);

  struct Rec {
    std::uint64_t key, roots, hits_L, hits_2L;
    double ms;
  };
  const auto recs = run_indexed(batches, run.parallelism, [&](std::size_t b) {
    const std::uint64_t key = detail::stream_key(run.master_seed, b, "explore");
    Stream rng(key);
    detail::Stopwatch sw;
    Rec r{key, detail::batch_share(cfg.roots, batches, b), 0, 0, 0.0};
    for (std::uint64_t i = 0; i < r.roots; ++i) {
      const auto v = static_cast<Vertex>(1 + rng.uniform_below(cfg.n));
      const std::uint64_t size = capped_component_size(params, v, cap, rng);
      r.hits_L += size >= cfg.L;
      r.hits_2L += size >= L2;
    }
    r.ms = sw.elapsed_ms();
    return r;
  });
  std::uint64_t hits = 0, hits2 = 0;
  for (std::size_t b = 0; b < recs.size(); ++b) {
    Json j;
    j["replicate"] = b;
    j["seed"] = recs[b].key;
    j["n"] = cfg.n;
    j["eps"] = cfg.eps;
    j["roots"] = recs[b].roots;
    j["hits_L"] = recs[b].hits_L;
    if (flat_check) j["hits_2L"] = recs[b].hits_2L;
    if (run.record_timing) j["runtime_ms"] = recs[b].ms;
    report.records.push_back(std::move(j));
    hits += recs[b].hits_L;
    hits2 += recs[b].hits_2L;
  }
  const CiEstimate ci = proportion_ci(hits, cfg.roots, cfg.level);
  report.aggregates["pr_size_at_least_L"] = detail::ci_json(ci);
  report.aggregates["estimate_over_eps"] = cfg.eps > 0.0 ? ci.point / cfg.eps : 0.0;
  const auto window_issue = cfg.window.violation(cfg.n, cfg.eps, cfg.L);
  report.aggregates["in_window"] = !window_issue.has_value();
  if (window_issue) report.aggregates["window_note"] = *window_issue;

  if (!(cfg.eps > 0.0)) {
    report.verdicts.push_back({"lower_ci_floor", false, ci.lo, 0.0, 0.0, "out of regime: eps <= 0"});
    return report;
  }
  report.verdicts.push_back(verdict_at_least("lower_ci_floor", ci.lo, cfg.band_lo * cfg.eps, "Wilson lower bound"));
  report.verdicts.push_back(verdict_at_least("lower_band_lo", ci.point, cfg.band_lo * cfg.eps, "point estimate"));
  report.verdicts.push_back(verdict_at_most("lower_band_hi", ci.point, cfg.band_hi * cfg.eps, "point estimate"));
  if (flat_check) {
    const CiEstimate ci2 = proportion_ci(hits2, cfg.roots, cfg.level);
    report.aggregates["pr_size_at_least_2L"] = detail::ci_json(ci2);
    report.verdicts.push_back(verdict_at_most("lower_flat_tail", std::fabs(ci.point - ci2.point),
                                              ci.hi - ci.lo + ci2.hi - ci2.lo, "|p(L) - p(2L)| vs CI widths"));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Duality

struct DualityConfig {
  std::uint32_t n = 2;
  double p = 0.75;
  std::uint32_t truncation = 10;
  std::uint64_t samples = 1'000'000;  // per side
  std::uint32_t batches = 64;
  double min_p_value = 0.01;
  double level = 0.99;
};

inline Json to_json(const DualityConfig& c) {
  Json j;
  j["experiment"] = "duality";
  j["n"] = c.n;
  j["p"] = c.p;
  j["truncation"] = c.truncation;
  j["samples"] = c.samples;
  j["batches"] = c.batches;
  j["min_p_value"] = c.min_p_value;
  j["level"] = c.level;
  return j;
}

inline ExperimentReport run_duality_check(const DualityConfig& cfg, const RunOptions& run) {
  const BpParams params(cfg.n, cfg.p);
  if (!params.supercritical()) throw DomainError("duality check requires n*p > 1");
  if (cfg.truncation < 1) throw ConfigError("truncation must be at least 1");
  if (cfg.samples == 0 || cfg.batches == 0) throw ConfigError("samples and batches must be positive");
  const SurvivalSolution sol = solve_survival(params);
  const BpCaps caps = BpCaps::defaults_for(sol);
  const BinomialSampler original(params.n, params.p);
  const BinomialSampler dual(params.n, sol.pi);
  const std::size_t bins = cfg.truncation + 1;  // sizes 1..T, then > T
  const std::uint64_t batches = std::min<std::uint64_t>(cfg.batches, cfg.samples);

  ExperimentReport report;
  report.experiment = "duality";
  report.config = to_json(cfg);
  report.config["master_seed"] = run.master_seed;

  struct Rec {
    std::uint64_t key_a, key_b, target;
    std::vector<std::uint64_t> hist_a, hist_b;
    std::uint64_t attempts = 0;
    RunningStats dual_size;
    double ms = 0.0;
  };
  auto bin_of = [&](std::uint64_t size) { return size <= cfg.truncation ? size - 1 : cfg.truncation; };
  const auto recs = run_indexed(batches, run.parallelism, [&](std::size_t b) {
    Rec r;
    r.key_a = detail::stream_key(run.master_seed, b, "bp-conditioned");
    r.key_b = detail::stream_key(run.master_seed, b, "bp-dual");
    r.target = detail::batch_share(cfg.samples, batches, b);
    r.hist_a.assign(bins, 0);
    r.hist_b.assign(bins, 0);
    detail::Stopwatch sw;
    Stream ra(r.key_a);
    for (std::uint64_t got = 0; got < r.target;) {
      const BpOutcome o = simulate_bp(original, caps, ra);
      ++r.attempts;
      if (classify_survival(o, sol).fate == BpFate::Died) {
        ++r.hist_a[bin_of(o.total_size)];
        ++got;
      }
    }
    Stream rb(r.key_b);
    for (std::uint64_t i = 0; i < r.target; ++i) {
      const BpOutcome o = simulate_bp(dual, BpCaps::unbounded(), rb);
      ++r.hist_b[bin_of(o.total_size)];
      r.dual_size.add(static_cast<double>(o.total_size));
    }
    r.ms = sw.elapsed_ms();
    return r;
  });

  std::vector<std::uint64_t> hist_a(bins, 0), hist_b(bins, 0);
  RunningStats dual_size;
  std::uint64_t attempts = 0;
  for (std::size_t b = 0; b < recs.size(); ++b) {
    const auto& r = recs[b];
    Json j;
    j["replicate"] = b;
    j["seed"] = r.key_a;
    j["seed_dual"] = r.key_b;
    j["samples"] = r.target;
    j["attempts"] = r.attempts;
    j["hist_conditioned"] = r.hist_a;
    j["hist_dual"] = r.hist_b;
    if (run.record_timing) j["runtime_ms"] = r.ms;
    report.records.push_back(std::move(j));
    for (std::size_t i = 0; i < bins; ++i) {
      hist_a[i] += r.hist_a[i];
      hist_b[i] += r.hist_b[i];
    }
    dual_size.merge(r.dual_size);
    attempts += r.attempts;
  }

  report.aggregates["rho"] = sol.rho;
  report.aggregates["pi"] = sol.pi;
  report.aggregates["dual_mean"] = sol.dual_mean;
  report.aggregates["dual_expected_size"] = sol.dual_expected_size;
  report.aggregates["acceptance_rate"] = static_cast<double>(cfg.samples) / static_cast<double>(attempts);
  report.aggregates["hist_conditioned"] = hist_a;
  report.aggregates["hist_dual"] = hist_b;

  const ChiSquareResult two = chi_square_two_sample(hist_a, hist_b);
  report.aggregates["two_sample_chi2"] = two.statistic;
  report.aggregates["two_sample_dof"] = two.dof;
  report.verdicts.push_back(verdict_at_least("duality_two_sample", two.p_value, cfg.min_p_value, "chi-square p-value"));

  if (cfg.n <= oracle::kMaxFanout && cfg.truncation < oracle::kMaxTreeSize) {
    // Conditioned law: P(|X_{n,p}| = s) / (1 - rho); dual law: P(|X_{n,pi}| = s).
    const auto exact_orig = oracle::bp_size_distribution(cfg.n, cfg.p, cfg.truncation);
    const auto exact_dual = oracle::bp_size_distribution(cfg.n, sol.pi, cfg.truncation);
    std::vector<double> pa(bins - 1), pb(bins - 1);
    for (std::size_t s = 1; s < bins; ++s) {
      pa[s - 1] = static_cast<double>(exact_orig[s] / (1.0L - static_cast<long double>(sol.rho)));
      pb[s - 1] = static_cast<double>(exact_dual[s]);
    }
    // The last histogram bin (> T) is compared with the leftover mass.
    auto gof_with_tail = [](const std::vector<std::uint64_t>& hist, std::vector<double> probs) {
      double mass = 0.0;
      for (double q : probs) mass += q;
      probs.push_back(std::max(0.0, 1.0 - mass));
      return chi_square_gof(hist, probs);
    };
    const auto ga = gof_with_tail(hist_a, pa);
    const auto gb = gof_with_tail(hist_b, pb);
    report.aggregates["exact_p_size1"] = pb.front();
    report.verdicts.push_back(
        verdict_at_least("duality_exact_conditioned", ga.p_value, cfg.min_p_value, "GOF vs enumerated conditioned law"));
    report.verdicts.push_back(
        verdict_at_least("duality_exact_dual", gb.p_value, cfg.min_p_value, "GOF vs enumerated dual law"));
  }

  const CiEstimate mean_ci = dual_size.mean_ci(cfg.level);
  report.aggregates["dual_mean_size"] = detail::ci_json(mean_ci);
  report.verdicts.push_back({"dual_mean_size", mean_ci.contains(sol.dual_expected_size), sol.dual_expected_size,
                             mean_ci.half_width(), mean_ci.half_width() - std::fabs(mean_ci.point - sol.dual_expected_size),
                             "1/(1 - n pi) inside the CI of the mean dual size"});
  return report;
}

// ---------------------------------------------------------------------------
// Mean total size of a subcritical process

struct TotalSizeConfig {
  std::uint32_t n = 50;
  double p = 0.01;
  std::uint64_t samples = 1'000'000;
  std::uint32_t batches = 64;
  double level = 0.99;
};

inline ExperimentReport run_total_size_check(const TotalSizeConfig& cfg, const RunOptions& run) {
  const BpParams params(cfg.n, cfg.p);
  const double expected = expected_total_size_subcritical(params.mean);
  const BinomialSampler offspring(params.n, params.p);
  const std::uint64_t batches = std::min<std::uint64_t>(cfg.batches, cfg.samples);
  ExperimentReport report;
  report.experiment = "total_size";
  report.config = Json{{"experiment", "total_size"}, {"n", cfg.n}, {"p", cfg.p}, {"samples", cfg.samples},
                       {"batches", cfg.batches}, {"level", cfg.level}, {"master_seed", run.master_seed}};
  struct Rec {
    std::uint64_t key;
    RunningStats sizes;
  };
  const auto recs = run_indexed(batches, run.parallelism, [&](std::size_t b) {
    Rec r{detail::stream_key(run.master_seed, b, "bp"), {}};
    Stream rng(r.key);
    const std::uint64_t count = detail::batch_share(cfg.samples, batches, b);
    for (std::uint64_t i = 0; i < count; ++i)
      r.sizes.add(static_cast<double>(simulate_bp(offspring, BpCaps::unbounded(), rng).total_size));
    return r;
  });
  RunningStats all;
  for (std::size_t b = 0; b < recs.size(); ++b) {
    report.records.push_back(Json{{"replicate", b}, {"seed", recs[b].key}, {"samples", recs[b].sizes.count()},
                                  {"mean_size", recs[b].sizes.mean()}});
    all.merge(recs[b].sizes);
  }
  const CiEstimate ci = all.mean_ci(cfg.level);
  report.aggregates["mean_size"] = detail::ci_json(ci);
  report.aggregates["expected"] = expected;
  report.verdicts.push_back({"total_size_mean", ci.contains(expected), expected, ci.half_width(),
                             ci.half_width() - std::fabs(ci.point - expected), "1/(1 - np) inside the CI"});
  return report;
}

// ---------------------------------------------------------------------------
// Tail and width bounds

struct TailWidthConfig {
  std::uint32_t n = 100'000;
  double eps = 0.05;  // p = (1 + eps)/n
  std::uint64_t L = 40'000;
  std::uint64_t M = 0;  // 0: ceil(50/eps)
  std::uint64_t tail_samples = 100'000;
  std::uint64_t width_samples = 1'000'000;
  std::uint32_t batches = 64;
  double tail_factor = 1.2;
  double width_joint_factor = 0.2;
  double ci_halfwidths = 3.0;
  double level = 0.95;
};

inline Json to_json(const TailWidthConfig& c) {
  Json j;
  j["experiment"] = "tail";
  j["n"] = c.n;
  j["eps"] = c.eps;
  j["L"] = c.L;
  j["M"] = c.M;
  j["tail_samples"] = c.tail_samples;
  j["width_samples"] = c.width_samples;
  j["batches"] = c.batches;
  j["tail_factor"] = c.tail_factor;
  j["width_joint_factor"] = c.width_joint_factor;
  j["ci_halfwidths"] = c.ci_halfwidths;
  j["level"] = c.level;
  return j;
}

inline ExperimentReport run_tail_and_width_checks(TailWidthConfig cfg, const RunOptions& run) {
  const double p = (1.0 + cfg.eps) / static_cast<double>(cfg.n);
  const BpParams params(cfg.n, p);
  const double eps = cfg.eps;
  const bool super = params.supercritical();
  if (cfg.batches == 0) throw ConfigError("batches must be positive");
  if (super) {
    if (cfg.M == 0) cfg.M = static_cast<std::uint64_t>(std::ceil(50.0 / eps));
    if (eps * eps * static_cast<double>(cfg.L) < 30.0) throw ConfigError("tail check requires eps^2 L >= 30");
    if (eps * static_cast<double>(cfg.M) < 50.0 - 1e-9) throw ConfigError("width check requires eps M >= 50");
  }
  const SurvivalSolution sol = solve_survival(params);
  const BinomialSampler offspring(params.n, params.p);

  ExperimentReport report;
  report.experiment = "tail";
  report.config = to_json(cfg);
  report.config["master_seed"] = run.master_seed;

  const std::uint64_t tail_batches = std::min<std::uint64_t>(cfg.batches, cfg.tail_samples);
  const std::uint64_t width_batches = super ? std::min<std::uint64_t>(cfg.batches, cfg.width_samples) : 0;
  struct Rec {
    std::uint64_t key = 0;
    std::uint64_t runs = 0;
    std::uint64_t tail_hits = 0;
    std::uint64_t wide = 0;
    std::uint64_t wide_and_extinct = 0;
    double ms = 0.0;
  };
  // Tail: size cap L, so censoring is exactly {|X| >= L}.
  const auto tail = run_indexed(tail_batches, run.parallelism, [&](std::size_t b) {
    Rec r;
    r.key = detail::stream_key(run.master_seed, b, "bp-tail");
    r.runs = detail::batch_share(cfg.tail_samples, tail_batches, b);
    Stream rng(r.key);
    detail::Stopwatch sw;
    for (std::uint64_t i = 0; i < r.runs; ++i)
      r.tail_hits += simulate_bp(offspring, BpCaps{cfg.L, kNoCap}, rng).status == BpStatus::CensoredSize;
    r.ms = sw.elapsed_ms();
    return r;
  });
  // Width: run on to width 2M so extinction after reaching width M is seen;
  // dying after width 2M has probability below (1 - rho)^{2M}.
  const auto width = run_indexed(width_batches, run.parallelism, [&](std::size_t b) {
    Rec r;
    r.key = detail::stream_key(run.master_seed, b, "bp-width");
    r.runs = detail::batch_share(cfg.width_samples, width_batches, b);
    Stream rng(r.key);
    detail::Stopwatch sw;
    for (std::uint64_t i = 0; i < r.runs; ++i) {
      const BpOutcome o = simulate_bp(offspring, BpCaps{kNoCap, 2 * cfg.M}, rng);
      if (o.width >= cfg.M) {
        ++r.wide;
        r.wide_and_extinct += o.status == BpStatus::Extinct;
      }
    }
    r.ms = sw.elapsed_ms();
    return r;
  });

  std::uint64_t tail_hits = 0, wide = 0, wide_ext = 0;
  for (std::size_t b = 0; b < tail.size(); ++b) {
    Json j{{"replicate", b}, {"seed", tail[b].key}, {"kind", "tail"}, {"runs", tail[b].runs}, {"tail_hits", tail[b].tail_hits}};
    if (run.record_timing) j["runtime_ms"] = tail[b].ms;
    report.records.push_back(std::move(j));
    tail_hits += tail[b].tail_hits;
  }
  for (std::size_t b = 0; b < width.size(); ++b) {
    Json j{{"replicate", tail.size() + b}, {"seed", width[b].key}, {"kind", "width"}, {"runs", width[b].runs},
           {"wide", width[b].wide}, {"wide_and_extinct", width[b].wide_and_extinct}};
    if (run.record_timing) j["runtime_ms"] = width[b].ms;
    report.records.push_back(std::move(j));
    wide += width[b].wide;
    wide_ext += width[b].wide_and_extinct;
  }

  report.aggregates["rho"] = sol.rho;
  if (cfg.tail_samples > 0) {
    const CiEstimate tail_ci = proportion_ci(tail_hits, cfg.tail_samples, cfg.level);
    report.aggregates["pr_size_at_least_L"] = detail::ci_json(tail_ci);
    if (!super) {
      const double markov = 1.0 / ((1.0 - params.mean) * static_cast<double>(cfg.L));
      report.aggregates["markov_bound"] = markov;
      report.verdicts.push_back(verdict_at_most("tail_markov", tail_ci.point, markov, "subcritical Markov bound"));
    } else {
      const double tail_bound = cfg.tail_factor * (2.0 * eps + 1.0 / (eps * static_cast<double>(cfg.L)));
      report.aggregates["tail_bound"] = tail_bound;
      report.verdicts.push_back(verdict_at_most("tail_bound", tail_ci.point, tail_bound, "Pr(|X| >= L)"));
    }
  }
  if (!super || cfg.width_samples == 0) return report;

  const CiEstimate joint = proportion_ci(wide_ext, cfg.width_samples, cfg.level);
  report.aggregates["M"] = cfg.M;
  report.aggregates["pr_wide_and_extinct"] = detail::ci_json(joint);
  report.verdicts.push_back(
      verdict_at_most("width_joint", joint.point, cfg.width_joint_factor * eps, "Pr(width >= M and extinct)"));

  const double die_bound = std::pow(1.0 - sol.rho, static_cast<double>(cfg.M));
  report.aggregates["die_bound"] = die_bound;
  report.aggregates["wide_runs"] = wide;
  if (wide == 0) {
    report.verdicts.push_back({"width_conditional", true, 0.0, die_bound, die_bound, "no run reached width M"});
  } else {
    const CiEstimate cond = proportion_ci(wide_ext, wide, cfg.level);
    report.aggregates["pr_extinct_given_wide"] = detail::ci_json(cond);
    report.verdicts.push_back(verdict_at_most("width_conditional", cond.point,
                                              die_bound + cfg.ci_halfwidths * cond.half_width(),
                                              "Pr(extinct | width >= M)"));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Sprinkling

struct SprinklePlan {
  std::uint32_t n = 0;
  double eps = 0.0;
  double p = 0.0;
  double p1 = 0.0;
  double p0 = 0.0;
  double omega_prime = 3.0;
  double delta = 0.1;
  std::uint64_t L = 0;

  // p1 = n^{-4/3}, p0 from p0 + p1 - p0 p1 = p, L = ceil(eps n / omega').
  static SprinklePlan make(std::uint32_t n, double eps, double omega_prime = 3.0, double delta = 0.1) {
    if (n < 2) throw ConfigError("sprinkling needs n >= 2");
    if (!(omega_prime > 0.0)) throw ConfigError("omega' must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    SprinklePlan s;
    s.n = n;
    s.eps = eps;
    s.p = (1.0 + eps) / n;
    s.p1 = std::pow(static_cast<double>(n), -4.0 / 3.0);
    s.p0 = (s.p - s.p1) / (1.0 - s.p1);
    s.omega_prime = omega_prime;
    s.delta = delta;
    const double Lf = eps * n / omega_prime;
    if (Lf < 1.0) throw ConfigError("eps n / omega' must be at least 1");
    s.L = static_cast<std::uint64_t>(std::ceil(Lf));
    if (!(s.p0 >= 0.0 && s.p0 <= s.p)) throw ConfigError("sprinkling needs p >= p1");
    return s;
  }

  // |(1-p0)(1-p1) - (1-p)| / (1-p)
  [[nodiscard]] double algebra_error() const {
    return std::fabs((1.0 - p0) * (1.0 - p1) - (1.0 - p)) / (1.0 - p);
  }
};

struct SprinkleConfig {
  std::uint32_t n = 1'000'000;
  double exponent = 0.2;  // eps = n^-a
  double omega_prime = 3.0;
  double delta = 0.1;
  std::uint32_t replicates = 20;
  double merged_fraction_floor = 0.95;
  double final_l1_floor = 0.81;  // in units of 2 eps n
};

struct SprinkleOutcome {
  std::uint32_t components = 0;      // number of U_j
  std::uint64_t union_size = 0;      // |U_1 ∪ ... ∪ U_l|
  std::uint64_t largest_merged = 0;  // largest union after sprinkling
  std::uint32_t g0_l1 = 0;
};

// Merges the components of size >= L with sprinkled edges. Only pairs
// straddling two different U's matter for the merge, and U_i, U_j stay apart
// with probability (1 - p1)^{|U_i||U_j|}.
inline SprinkleOutcome sprinkle_components(const std::vector<std::uint32_t>& large_sizes, double p1, Stream& rng) {
  SprinkleOutcome out;
  out.components = static_cast<std::uint32_t>(large_sizes.size());
  if (large_sizes.empty()) return out;
  UnionFind uf(static_cast<std::uint32_t>(large_sizes.size()));
  const double log_q = std::log1p(-p1);
  for (std::size_t i = 0; i < large_sizes.size(); ++i) {
    out.union_size += large_sizes[i];
    for (std::size_t j = i + 1; j < large_sizes.size(); ++j) {
      const double pairs = static_cast<double>(large_sizes[i]) * large_sizes[j];
      const double p_join = -std::expm1(pairs * log_q);
      if (rng.bernoulli(p_join)) uf.unite(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    }
  }
  std::vector<std::uint64_t> merged(large_sizes.size(), 0);
  for (std::uint32_t i = 0; i < large_sizes.size(); ++i) merged[uf.find(i)] += large_sizes[i];
  out.largest_merged = *std::max_element(merged.begin(), merged.end());
  return out;
}

inline ExperimentReport run_sprinkle(const SprinkleConfig& cfg, const RunOptions& run) {
  if (cfg.replicates == 0) throw ConfigError("replicates must be positive");
  const double eps = std::pow(static_cast<double>(cfg.n), -cfg.exponent);
  const SprinklePlan plan = SprinklePlan::make(cfg.n, eps, cfg.omega_prime, cfg.delta);
  const GnpParams g0(cfg.n, plan.p0);
  const GnpParams g1(cfg.n, plan.p1);

  ExperimentReport report;
  report.experiment = "sprinkle";
  report.config = Json{{"experiment", "sprinkle"},
                       {"n", cfg.n},
                       {"exponent", cfg.exponent},
                       {"omega_prime", cfg.omega_prime},
                       {"delta", cfg.delta},
                       {"replicates", cfg.replicates},
                       {"merged_fraction_floor", cfg.merged_fraction_floor},
                       {"final_l1_floor", cfg.final_l1_floor},
                       {"master_seed", run.master_seed}};

  struct Rec {
    std::uint64_t key;
    SprinkleOutcome out;
    std::uint32_t graph_l1;  // L1 of G0 ∪ G1
    double ms;
  };
  // G1 is sampled over all pairs (about n^{2/3}/2 edges); the merge of the U's
  // only sees the straddling ones, so it has the same law as sampling those alone.
  const auto recs = run_indexed(cfg.replicates, run.parallelism, [&](std::size_t r) {
    const std::uint64_t key = detail::stream_key(run.master_seed, r, "gnp");
    detail::Stopwatch sw;
    Stream rng(key);
    UnionFind uf(cfg.n);
    sample_gnp_edges(g0, rng, [&](Vertex i, Vertex j) { uf.unite(i - 1, j - 1); });
    SprinkleOutcome out;
    std::vector<std::uint32_t> large_roots;
    for (std::uint32_t v = 0; v < cfg.n; ++v) {
      if (uf.find(v) != v) continue;
      const std::uint32_t s = uf.size_of_root(v);
      out.g0_l1 = std::max(out.g0_l1, s);
      if (s >= plan.L) {
        large_roots.push_back(v);
        out.union_size += s;
      }
    }
    out.components = static_cast<std::uint32_t>(large_roots.size());
    std::vector<std::uint32_t> g0_sizes;
    for (auto root : large_roots) g0_sizes.push_back(uf.size_of_root(root));

    Stream sprinkle_rng(detail::stream_key(run.master_seed, r, "sprinkle"));
    sample_gnp_edges(g1, sprinkle_rng, [&](Vertex i, Vertex j) { uf.unite(i - 1, j - 1); });
    std::map<std::uint32_t, std::uint64_t> merged;
    for (std::size_t k = 0; k < large_roots.size(); ++k) merged[uf.find(large_roots[k])] += g0_sizes[k];
    for (const auto& [root, size] : merged) out.largest_merged = std::max(out.largest_merged, size);
    std::uint32_t graph_l1 = 0;
    for (std::uint32_t v = 0; v < cfg.n; ++v)
      if (uf.find(v) == v) graph_l1 = std::max(graph_l1, uf.size_of_root(v));
    return Rec{key, out, graph_l1, sw.elapsed_ms()};
  });

  const double scale = 2.0 * eps * cfg.n;
  RunningStats merged_fraction, final_ratio, graph_ratio;
  double min_final = std::numeric_limits<double>::infinity();
  std::uint32_t degenerate = 0;
  for (std::size_t r = 0; r < recs.size(); ++r) {
    const auto& o = recs[r].out;
    Json j{{"replicate", r}, {"seed", recs[r].key}, {"n", cfg.n}, {"eps", eps}, {"L", plan.L},
           {"l1_g0", o.g0_l1}, {"components", o.components}, {"union_size", o.union_size},
           {"final_l1", o.largest_merged}, {"graph_l1", recs[r].graph_l1}};
    if (run.record_timing) j["runtime_ms"] = recs[r].ms;
    report.records.push_back(std::move(j));
    graph_ratio.add(recs[r].graph_l1 / scale);
    if (o.components == 0) {
      ++degenerate;
      min_final = 0.0;
      continue;
    }
    merged_fraction.add(static_cast<double>(o.largest_merged) / static_cast<double>(o.union_size));
    final_ratio.add(static_cast<double>(o.largest_merged) / scale);
    min_final = std::min(min_final, static_cast<double>(o.largest_merged) / scale);
  }
  report.aggregates["eps"] = eps;
  report.aggregates["eps_g0"] = static_cast<double>(cfg.n) * plan.p0 - 1.0;
  report.aggregates["p"] = plan.p;
  report.aggregates["p0"] = plan.p0;
  report.aggregates["p1"] = plan.p1;
  report.aggregates["L"] = plan.L;
  report.aggregates["omega"] = eps * std::cbrt(static_cast<double>(cfg.n));
  report.aggregates["pair_merge_failure_bound"] = std::exp(-plan.p1 * static_cast<double>(plan.L) * plan.L);
  report.aggregates["degenerate_replicates"] = degenerate;
  report.aggregates["mean_merged_fraction"] = merged_fraction.count() ? merged_fraction.mean() : 0.0;
  report.aggregates["mean_final_l1_over_2epsn"] = final_ratio.count() ? final_ratio.mean() : 0.0;
  report.aggregates["min_final_l1_over_2epsn"] = min_final;
  report.aggregates["mean_graph_l1_over_2epsn"] = graph_ratio.mean();
  report.aggregates["target_floor_over_2epsn"] = (1.0 - cfg.delta) * (2.0 - cfg.delta) / 2.0;

  report.verdicts.push_back(verdict_at_most("sprinkle_algebra", plan.algebra_error(), 1e-15, "(1-p0)(1-p1) = 1-p"));
  report.verdicts.push_back(verdict_at_least("sprinkle_merged_fraction",
                                             merged_fraction.count() ? merged_fraction.mean() : 0.0,
                                             cfg.merged_fraction_floor, "mean |largest union| / |U|"));
  report.verdicts.push_back(
      verdict_at_least("sprinkle_final_l1", min_final, cfg.final_l1_floor, "min over replicates of final L1/(2 eps n)"));
  return report;
}

// ---------------------------------------------------------------------------
// Coupling invariants over many joint samples

struct CouplingCheckConfig {
  std::uint32_t n = 1000;
  double p = 1.2 / 1000;
  std::uint32_t k = 50;
  std::uint64_t samples = 100'000;
  std::uint32_t batches = 64;
};

inline ExperimentReport run_coupling_check(const CouplingCheckConfig& cfg, const RunOptions& run) {
  const GnpParams params(cfg.n, cfg.p);
  const BpCaps caps = BpCaps::defaults_for(solve_survival(BpParams(cfg.n, cfg.p)));
  const std::uint64_t batches = std::min<std::uint64_t>(cfg.batches, std::max<std::uint64_t>(1, cfg.samples));
  ExperimentReport report;
  report.experiment = "couple";
  report.config = Json{{"experiment", "couple"}, {"n", cfg.n}, {"p", cfg.p}, {"k", cfg.k},
                       {"samples", cfg.samples}, {"batches", cfg.batches}, {"master_seed", run.master_seed}};
  struct Rec {
    std::uint64_t key = 0, runs = 0, subset_violations = 0, dichotomy_violations = 0, both_k = 0;
    RunningStats tree_size, bp_size;
  };
  const auto recs = run_indexed(batches, run.parallelism, [&](std::size_t b) {
    Rec r;
    r.key = detail::stream_key(run.master_seed, b, "couple");
    r.runs = detail::batch_share(cfg.samples, batches, b);
    Stream rng(r.key);
    for (std::uint64_t i = 0; i < r.runs; ++i) {
      const auto v = static_cast<Vertex>(1 + rng.uniform_below(cfg.n));
      const JointSample upper = coupled_explore(params, v, caps, rng);
      r.subset_violations += !upper.relation_holds();
      r.tree_size.add(static_cast<double>(upper.graph_tree.size()));
      r.bp_size.add(static_cast<double>(upper.bp_outcome.total_size));
      const JointSample lower = coupled_explore_lower(params, v, cfg.k, rng);
      r.dichotomy_violations += !(lower.relation_holds() && lower.dichotomy_holds());
      r.both_k += lower.relation == CouplingRelation::BothAtLeastK;
    }
    return r;
  });
  std::uint64_t subset = 0, dich = 0, both = 0;
  RunningStats tree_size, bp_size;
  for (std::size_t b = 0; b < recs.size(); ++b) {
    report.records.push_back(Json{{"replicate", b},
                                  {"seed", recs[b].key},
                                  {"samples", recs[b].runs},
                                  {"subset_violations", recs[b].subset_violations},
                                  {"dichotomy_violations", recs[b].dichotomy_violations},
                                  {"both_at_least_k", recs[b].both_k}});
    subset += recs[b].subset_violations;
    dich += recs[b].dichotomy_violations;
    both += recs[b].both_k;
    tree_size.merge(recs[b].tree_size);
    bp_size.merge(recs[b].bp_size);
  }
  report.aggregates["mean_tree_size"] = tree_size.mean();
  report.aggregates["mean_bp_size_capped"] = bp_size.mean();
  report.aggregates["both_at_least_k"] = both;
  report.verdicts.push_back(verdict_at_most("coupling_subset_violations", static_cast<double>(subset), 0.0));
  report.verdicts.push_back(verdict_at_most("coupling_dichotomy_violations", static_cast<double>(dich), 0.0));
  return report;
}

// ---------------------------------------------------------------------------
// Truncated exploration: event A and the boundary

struct TruncationCheckConfig {
  std::uint32_t n = 1'000'000;
  double eps = 0.0631;
  std::uint64_t L = 100'000;
  std::uint64_t roots = 10'000;
  std::uint64_t second_samples = 0;  // conditional second explorations (under A)
  std::uint32_t batches = 100;
  double event_a_factor = 1.3;  // Pr(A) <= factor * 2 eps
};

inline ExperimentReport run_truncation_check(const TruncationCheckConfig& cfg, const RunOptions& run) {
  const GnpParams params = GnpParams::from_eps(cfg.n, cfg.eps);
  if (!(params.eps > 0.0) || static_cast<double>(cfg.L) * params.eps < 1.0) {
    throw ConfigError("truncation check requires eps > 0 and L >= 1/eps");
  }
  const std::uint64_t cap = boundary_cap_for(params.eps, cfg.L);
  const std::uint64_t batches = std::min<std::uint64_t>(cfg.batches, std::max<std::uint64_t>(1, cfg.roots));
  ExperimentReport report;
  report.experiment = "truncation";
  report.config = Json{{"experiment", "truncation"}, {"n", cfg.n}, {"eps", cfg.eps}, {"L", cfg.L},
                       {"roots", cfg.roots}, {"second_samples", cfg.second_samples}, {"batches", cfg.batches},
                       {"event_a_factor", cfg.event_a_factor}, {"master_seed", run.master_seed}};
  struct Rec {
    std::uint64_t key = 0, roots = 0, event_a = 0, size_stops = 0, boundary_stops = 0, max_boundary = 0;
    std::uint64_t seconds = 0, flags = 0;
    RunningStats second_size;
  };
  const auto recs = run_indexed(batches, run.parallelism, [&](std::size_t b) {
    Rec r;
    r.key = detail::stream_key(run.master_seed, b, "explore");
    r.roots = detail::batch_share(cfg.roots, batches, b);
    Stream rng(r.key);
    for (std::uint64_t i = 0; i < r.roots; ++i) {
      const auto v = static_cast<Vertex>(1 + rng.uniform_below(cfg.n));
      const auto te = truncated_explore(params, v, cfg.L, rng);
      r.max_boundary = std::max<std::uint64_t>(r.max_boundary, te.boundary.size());
      r.event_a += te.event_a();
      r.size_stops += te.stopped_by == StopReason::SizeCap;
      r.boundary_stops += te.stopped_by == StopReason::BoundaryCap;
    }
    const std::uint64_t second = detail::batch_share(cfg.second_samples, batches, b);
    Stream rng2(detail::stream_key(run.master_seed, b, "explore-second"));
    for (std::uint64_t i = 0; i < second; ++i) {
      TruncatedExploration te;
      do {
        te = truncated_explore(params, static_cast<Vertex>(1 + rng2.uniform_below(cfg.n)), cfg.L, rng2);
      } while (!te.event_a());
      Vertex w = 0;
      do {
        w = static_cast<Vertex>(1 + rng2.uniform_below(cfg.n));
      } while (std::find(te.reached().begin(), te.reached().end(), w) != te.reached().end());
      const auto se = conditional_second_explore(te, w, params, rng2);
      ++r.seconds;
      r.flags += se.hits_boundary();
      r.second_size.add(static_cast<double>(se.component_size));
    }
    return r;
  });
  std::uint64_t a = 0, max_b = 0, seconds = 0, flags = 0, size_stops = 0, boundary_stops = 0;
  RunningStats second_size;
  for (std::size_t b = 0; b < recs.size(); ++b) {
    const auto& r = recs[b];
    report.records.push_back(Json{{"replicate", b}, {"seed", r.key}, {"roots", r.roots}, {"event_a", r.event_a},
                                  {"size_stops", r.size_stops}, {"boundary_stops", r.boundary_stops},
                                  {"max_boundary", r.max_boundary}, {"second_samples", r.seconds},
                                  {"boundary_flags", r.flags}});
    a += r.event_a;
    max_b = std::max(max_b, r.max_boundary);
    seconds += r.seconds;
    flags += r.flags;
    size_stops += r.size_stops;
    boundary_stops += r.boundary_stops;
    second_size.merge(r.second_size);
  }
  const CiEstimate a_ci = proportion_ci(a, cfg.roots, 0.95);
  report.aggregates["boundary_cap"] = cap;
  report.aggregates["max_boundary"] = max_b;
  report.aggregates["pr_event_a"] = detail::ci_json(a_ci);
  report.aggregates["size_stops"] = size_stops;
  report.aggregates["boundary_stops"] = boundary_stops;
  report.verdicts.push_back(
      verdict_at_most("boundary_max", static_cast<double>(max_b), static_cast<double>(cap + 1), "max |boundary|"));
  report.verdicts.push_back(
      verdict_at_most("event_a_bound", a_ci.point, cfg.event_a_factor * 2.0 * params.eps, "Pr(A)"));
  if (seconds > 0) {
    const double bound = 3.0 * params.eps * static_cast<double>(cfg.L) * second_size.mean() / cfg.n;
    const double freq = static_cast<double>(flags) / static_cast<double>(seconds);
    report.aggregates["mean_second_component"] = second_size.mean();
    report.aggregates["pr_boundary_edge"] = freq;
    report.aggregates["boundary_edge_bound"] = bound;
    report.verdicts.push_back(verdict_at_most("second_boundary_flag", freq, bound, "Pr(edge from C'_w to boundary)"));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Config files

struct ExperimentSetup {
  std::string kind;
  RunOptions run;
};

// Reads the keys shared by every experiment file. `expected_kind` must match
// the `experiment` key when that key is present.
inline ExperimentSetup read_setup(const KeyValueConfig& kv, const std::string& expected_kind) {
  ExperimentSetup s;
  s.kind = kv.get_string("experiment", expected_kind);
  if (s.kind != expected_kind) {
    throw ConfigError("config describes experiment '" + s.kind + "', expected '" + expected_kind + "'");
  }
  s.run.master_seed = kv.get_uint("master_seed", 1);
  s.run.parallelism = static_cast<unsigned>(kv.get_uint("parallelism", 1));
  if (s.run.parallelism == 0) throw ConfigError("parallelism must be a positive integer");
  s.run.record_timing = kv.get_bool("record_timing", false);
  return s;
}

namespace detail {

inline std::uint32_t get_u32(const KeyValueConfig& kv, const std::string& key, std::uint32_t fallback) {
  const std::uint64_t v = kv.get_uint(key, fallback);
  if (v > std::numeric_limits<std::uint32_t>::max()) throw ConfigError("key '" + key + "' is too large");
  return static_cast<std::uint32_t>(v);
}

inline void read_window(const KeyValueConfig& kv, LWindow& w) {
  w.min_eps2_L = kv.get_double("window_min_eps2_L", w.min_eps2_L);
  w.max_fraction_of_eps_n = kv.get_double("window_max_fraction_of_eps_n", w.max_fraction_of_eps_n);
}

}  // namespace detail

inline L1Config read_l1_config(const KeyValueConfig& kv) {
  L1Config c;
  c.schedule.exponent = kv.get_double("exponent", c.schedule.exponent);
  c.schedule.n_values = kv.get_uint_list("n", {100'000, 1'000'000, 10'000'000});
  c.schedule.criticality_floor = kv.get_double("criticality_floor", c.schedule.criticality_floor);
  if (kv.has("L_rule")) c.l_rule = LRule::parse(kv.get_string("L_rule", {}));
  detail::read_window(kv, c.window);
  c.replicates = detail::get_u32(kv, "replicates", c.replicates);
  c.band = kv.get_double("band", c.band);
  c.band_large_n = kv.get_double("band_large_n", c.band_large_n);
  c.large_n = kv.get_uint("large_n", c.large_n);
  c.level = kv.get_double("level", c.level);
  return c;
}

inline LowerBoundConfig read_lower_config(const KeyValueConfig& kv) {
  LowerBoundConfig c;
  c.n = detail::get_u32(kv, "n", c.n);
  c.eps = kv.get_double("eps", c.eps);
  c.L = kv.get_uint("L", c.L);
  c.roots = kv.get_uint("roots", c.roots);
  c.batches = detail::get_u32(kv, "batches", c.batches);
  c.level = kv.get_double("level", c.level);
  c.band_lo = kv.get_double("band_lo", c.band_lo);
  c.band_hi = kv.get_double("band_hi", c.band_hi);
  detail::read_window(kv, c.window);
  return c;
}

inline DualityConfig read_duality_config(const KeyValueConfig& kv) {
  DualityConfig c;
  c.n = detail::get_u32(kv, "n", c.n);
  c.p = kv.get_double("p", c.p);
  c.truncation = detail::get_u32(kv, "truncation", c.truncation);
  c.samples = kv.get_uint("samples", c.samples);
  c.batches = detail::get_u32(kv, "batches", c.batches);
  c.min_p_value = kv.get_double("min_p_value", c.min_p_value);
  c.level = kv.get_double("level", c.level);
  return c;
}

inline TailWidthConfig read_tail_config(const KeyValueConfig& kv) {
  TailWidthConfig c;
  c.n = detail::get_u32(kv, "n", c.n);
  c.eps = kv.get_double("eps", c.eps);
  c.L = kv.get_uint("L", c.L);
  c.M = kv.get_uint("M", c.M);
  c.tail_samples = kv.get_uint("tail_samples", c.tail_samples);
  c.width_samples = kv.get_uint("width_samples", c.width_samples);
  c.batches = detail::get_u32(kv, "batches", c.batches);
  c.tail_factor = kv.get_double("tail_factor", c.tail_factor);
  c.width_joint_factor = kv.get_double("width_joint_factor", c.width_joint_factor);
  c.ci_halfwidths = kv.get_double("ci_halfwidths", c.ci_halfwidths);
  c.level = kv.get_double("level", c.level);
  return c;
}

inline SprinkleConfig read_sprinkle_config(const KeyValueConfig& kv) {
  SprinkleConfig c;
  c.n = detail::get_u32(kv, "n", c.n);
  c.exponent = kv.get_double("exponent", c.exponent);
  c.omega_prime = kv.get_double("omega_prime", c.omega_prime);
  c.delta = kv.get_double("delta", c.delta);
  c.replicates = detail::get_u32(kv, "replicates", c.replicates);
  c.merged_fraction_floor = kv.get_double("merged_fraction_floor", c.merged_fraction_floor);
  c.final_l1_floor = kv.get_double("final_l1_floor", c.final_l1_floor);
  return c;
}

}  // namespace giant
