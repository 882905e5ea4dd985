// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "giant/giant.hpp"

using namespace giant;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << x;
  return os.str();
}

// Every verdict of the report must pass; lists the failing ones.
Outcome verdicts_pass(const ExperimentReport& r, const std::vector<std::string>& ids) {
  Outcome o{true, {}};
  for (const auto& id : ids) {
    const Verdict* v = r.find(id);
    if (!v) {
      o.pass = false;
      o.detail += id + "=missing ";
      continue;
    }
    o.pass = o.pass && v->pass;
    o.detail += id + (v->pass ? "=ok" : "=FAIL") + "(" + fmt(v->value) + " vs " + fmt(v->threshold) + ") ";
  }
  return o;
}

Outcome with_budget(Outcome o, double elapsed, double budget) {
  const bool in_time = elapsed < budget;
  o.pass = o.pass && in_time;
  o.detail += "time=" + fmt(elapsed, 4) + "s/" + fmt(budget, 4) + "s" + (in_time ? "" : " OVER BUDGET");
  return o;
}

const RunOptions kRun{20261015, 1, false};

// Criterion 9's records, kept so criterion 13 can compare against them.
std::optional<std::vector<Json>> g_sweep_records;

Outcome c1_solver() {
  const auto t0 = Clock::now();
  const SurvivalSolution s = solve_survival(BpParams(2, 0.75));
  const double elapsed = seconds_since(t0);
  const double drho = std::fabs(s.rho - 8.0 / 9.0), dpi = std::fabs(s.pi - 0.25);
  Outcome o{drho <= 1e-10 && dpi <= 1e-10,
            "rho=" + fmt(s.rho, 15) + " pi=" + fmt(s.pi, 15) + " |drho|=" + fmt(drho) + " |dpi|=" + fmt(dpi) + " "};
  return with_budget(o, elapsed, 1e-3);
}

Outcome c2_rho_asymptotics() {
  const auto t0 = Clock::now();
  const std::uint32_t n = 1'000'000;
  Outcome o{true, {}};
  std::vector<double> dev;
  // Ascending 1/eps.
  for (double eps : {0.05, 0.01, 0.001}) {
    const double rho = solve_survival(BpParams(n, (1.0 + eps) / n)).rho;
    const double d = std::fabs(rho / (2.0 * eps) - 1.0);
    dev.push_back(d);
    o.pass = o.pass && d <= 0.1;
    o.detail += "eps=" + fmt(eps) + ":dev=" + fmt(d) + " ";
  }
  for (std::size_t i = 1; i < dev.size(); ++i) o.pass = o.pass && dev[i] < dev[i - 1];
  return with_budget(o, seconds_since(t0), 1.0);
}

Outcome c3_duality() {
  const auto t0 = Clock::now();
  const auto r = run_duality_check(DualityConfig{}, kRun);
  return with_budget(verdicts_pass(r, {"duality_two_sample", "duality_exact_conditioned", "duality_exact_dual"}),
                     seconds_since(t0), 60.0);
}

Outcome c4_total_size() {
  const auto t0 = Clock::now();
  const auto r = run_total_size_check(TotalSizeConfig{}, kRun);
  return with_budget(verdicts_pass(r, {"total_size_mean"}), seconds_since(t0), 60.0);
}

Outcome c5_tail() {
  const auto t0 = Clock::now();
  TailWidthConfig cfg;
  cfg.width_samples = 0;
  const auto r = run_tail_and_width_checks(cfg, kRun);
  return with_budget(verdicts_pass(r, {"tail_bound"}), seconds_since(t0), 300.0);
}

Outcome c6_width() {
  const auto t0 = Clock::now();
  TailWidthConfig cfg;
  cfg.tail_samples = 0;
  const auto r = run_tail_and_width_checks(cfg, kRun);
  Outcome o = verdicts_pass(r, {"width_joint", "width_conditional"});
  o.detail += "M=" + r.aggregates["M"].dump() + " ";
  return with_budget(o, seconds_since(t0), 600.0);
}

Outcome c7_coupling() {
  const auto t0 = Clock::now();
  const auto r = run_coupling_check(CouplingCheckConfig{}, kRun);
  return with_budget(verdicts_pass(r, {"coupling_subset_violations", "coupling_dichotomy_violations"}),
                     seconds_since(t0), 60.0);
}

Outcome c8_truncation() {
  const auto t0 = Clock::now();
  const auto r = run_truncation_check(TruncationCheckConfig{}, kRun);
  return with_budget(verdicts_pass(r, {"boundary_max", "event_a_bound"}), seconds_since(t0), 600.0);
}

L1Config sweep_config(std::vector<std::uint64_t> ns) {
  L1Config cfg;
  cfg.schedule.exponent = 0.2;
  cfg.schedule.n_values = std::move(ns);
  cfg.replicates = 20;
  return cfg;
}

Outcome c9_headline() {
  const auto t0 = Clock::now();
  RunOptions run = kRun;
  run.record_timing = true;
  const auto r = run_l1_experiment(sweep_config({100'000, 1'000'000, 10'000'000}), run);
  const double elapsed = seconds_since(t0);
  Outcome o = verdicts_pass(r, {"l1_band[n=1000000]", "l1_band[n=10000000]", "l2_over_l1_decreasing"});
  double worst = 0.0;
  std::vector<Json> stripped;
  for (const auto& rec : r.records) {
    if (rec["n"].get<std::uint64_t>() == 10'000'000) worst = std::max(worst, rec["runtime_ms"].get<double>() / 1000.0);
    Json copy = rec;
    copy.erase("runtime_ms");
    stripped.push_back(std::move(copy));
  }
  g_sweep_records = std::move(stripped);
  const bool rep_ok = worst <= 30.0;
  o.pass = o.pass && rep_ok;
  o.detail += "slowest_n=1e7_replicate=" + fmt(worst, 4) + "s/30s" + (rep_ok ? " " : " OVER BUDGET ");
  for (const auto& row : r.aggregates["per_n"]) {
    o.detail += "[n=" + row["n"].dump() + " L1/2epsn=" + fmt(row["l1_over_2epsn"]["point"].get<double>()) +
                " L2/L1=" + fmt(row["l2_over_l1"]["point"].get<double>()) + "] ";
  }
  return with_budget(o, elapsed, 1800.0);
}

Outcome c10_sandwich() {
  const auto t0 = Clock::now();
  LowerBoundConfig cfg;
  cfg.n = 1'000'000;
  cfg.eps = 0.0631;
  cfg.L = 100'000;
  cfg.roots = 10'000;
  const auto r = run_lower_bound_check(cfg, kRun);
  Outcome o = verdicts_pass(r, {"lower_ci_floor", "lower_band_lo", "lower_band_hi"});
  o.detail += "estimate/eps=" + fmt(r.aggregates["estimate_over_eps"].get<double>()) + " ";
  return with_budget(o, seconds_since(t0), 600.0);
}

Outcome c11_sprinkle() {
  const auto t0 = Clock::now();
  const auto r = run_sprinkle(SprinkleConfig{}, kRun);
  Outcome o = verdicts_pass(r, {"sprinkle_algebra", "sprinkle_merged_fraction", "sprinkle_final_l1"});
  const auto& a = r.aggregates;
  o.detail += "mean_final_l1/2epsn=" + fmt(a["mean_final_l1_over_2epsn"].get<double>()) +
              " eps_g0/eps=" + fmt(a["eps_g0"].get<double>() / a["eps"].get<double>()) +
              " mean_graph_l1/2epsn=" + fmt(a["mean_graph_l1_over_2epsn"].get<double>()) + " ";
  return with_budget(o, seconds_since(t0), 900.0);
}

Outcome c12_exact_oracles() {
  const auto t0 = Clock::now();
  Outcome o{true, {}};
  const std::uint64_t samples = 1'000'000;
  double min_pv = 1.0;
  for (std::uint32_t n = 1; n <= 5; ++n) {
    for (double p : {0.1, 0.5, 0.9}) {
      const auto exact = oracle::l1_distribution(n, p);
      std::vector<std::uint64_t> counts(n, 0);
      Stream rng(SeedSpec{kRun.master_seed, n * 10 + static_cast<std::uint64_t>(p * 10), "oracle"}.key());
      for (std::uint64_t i = 0; i < samples; ++i) ++counts[sample_census(GnpParams(n, p), rng).l1 - 1];
      if (n == 1) {
        const bool ok = counts[0] == samples;
        o.pass = o.pass && ok;
        if (!ok) o.detail += "n=1,p=" + fmt(p) + ":L1!=1 ";
        continue;
      }
      std::vector<double> probs;
      for (std::uint32_t s = 1; s <= n; ++s) probs.push_back(static_cast<double>(exact[s]));
      const double pv = chi_square_gof(counts, probs).p_value;
      o.pass = o.pass && pv > 0.01;
      min_pv = std::min(min_pv, pv);
      if (pv <= 0.01) o.detail += "n=" + std::to_string(n) + ",p=" + fmt(p) + ":p-value=" + fmt(pv) + " ";
    }
  }
  o.detail += "min_p-value=" + fmt(min_pv) + " ";
  const long double half = oracle::l1_distribution(3, 0.5)[3];
  const bool exact_half = half == 0.5L;
  o.pass = o.pass && exact_half;
  o.detail += "P(L1=3|n=3,p=.5)=" + fmt(static_cast<double>(half), 17) + " ";
  return with_budget(o, seconds_since(t0), 300.0);
}

Outcome c13_determinism() {
  const auto cfg = sweep_config({1'000'000});
  RunOptions one = kRun, eight = kRun;
  one.parallelism = 1;
  eight.parallelism = 8;
  const std::string a = run_l1_experiment(cfg, one).records_jsonl();
  const std::string b = run_l1_experiment(cfg, eight).records_jsonl();
  Outcome o{a == b, a == b ? "parallelism 1 vs 8 identical " : "parallelism 1 vs 8 DIFFER "};
  if (g_sweep_records) {
    std::string c;
    for (const auto& rec : *g_sweep_records) {
      if (rec["n"].get<std::uint64_t>() == 1'000'000) c += rec.dump() + '\n';
    }
    o.pass = o.pass && c == a;
    o.detail += c == a ? "matches sweep row" : "DIFFERS from sweep row";
  } else {
    o.detail += "sweep row not run";
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"fixed-point solver", c1_solver},
      {"rho ~ 2 eps", c2_rho_asymptotics},
      {"duality", c3_duality},
      {"subcritical total size", c4_total_size},
      {"tail bound", c5_tail},
      {"width bounds", c6_width},
      {"coupling invariants", c7_coupling},
      {"truncated exploration", c8_truncation},
      {"largest component sweep", c9_headline},
      {"lower/upper sandwich", c10_sandwich},
      {"sprinkling", c11_sprinkle},
      {"exact oracles", c12_exact_oracles},
      {"determinism", c13_determinism},
  };
  std::set<std::size_t> wanted;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::cerr << "unknown criterion: " << argv[i] << '\n';
      return 2;
    }
    wanted.insert(static_cast<std::size_t>(k));
  }
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!wanted.empty() && !wanted.count(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << std::setw(2) << i + 1 << ' ' << (o.pass ? "PASS" : "FAIL") << "  "
              << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << failed << " failing" << std::endl;
  return failed ? 1 : 0;
}
