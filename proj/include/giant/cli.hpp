#pragma once

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "giant/bp.hpp"
#include "giant/config.hpp"
#include "giant/coupling.hpp"
#include "giant/errors.hpp"
#include "giant/experiments.hpp"
#include "giant/gnp.hpp"
#include "giant/oracle.hpp"
#include "giant/report.hpp"

namespace giant::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerdictFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr const char* kOutDirEnv = "GIANTLAB_OUT_DIR";

enum class Format { Text, Json, Csv };

namespace detail {

inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string scalar_text(const Json& v) {
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// key=value lines; nested objects use dotted keys, flat numeric arrays are
// comma-joined.
inline void flatten(std::ostream& os, const std::string& prefix, const Json& v) {
  if (v.is_object()) {
    for (const auto& [k, x] : v.items()) flatten(os, prefix.empty() ? k : prefix + "." + k, x);
    return;
  }
  if (v.is_array()) {
    bool flat = true;
    for (const auto& x : v) flat = flat && x.is_primitive();
    if (flat) {
      os << prefix << '=';
      for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << scalar_text(v[i]);
      os << '\n';
    } else {
      for (std::size_t i = 0; i < v.size(); ++i) flatten(os, prefix + "." + std::to_string(i), v[i]);
    }
    return;
  }
  os << prefix << '=' << scalar_text(v) << '\n';
}

inline void csv_rows(std::ostream& os, const std::string& prefix, const Json& v) {
  std::ostringstream flat;
  flatten(flat, prefix, v);
  std::istringstream in(flat.str());
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    std::string value = line.substr(eq + 1);
    if (value.find(',') != std::string::npos) value = '"' + value + '"';
    os << line.substr(0, eq) << ',' << value << '\n';
  }
}

}  // namespace detail

// Prints a report to `out`: header with version and config hash, the echoed
// config, the results and any verdicts.
inline void print_report(std::ostream& out, const ExperimentReport& report, Format format) {
  switch (format) {
    case Format::Json:
      out << report.summary_json().dump(2) << '\n';
      return;
    case Format::Csv:
      out << "# " << kArtifactName << ' ' << kArtifactVersion << " config_hash=" << config_hash(report.config)
          << '\n';
      out << "key,value\n";
      detail::csv_rows(out, "config", report.config);
      detail::csv_rows(out, "", report.aggregates);
      for (const auto& v : report.verdicts)
        out << "verdict." << v.criterion << ',' << (v.pass ? "pass" : "fail") << '\n';
      return;
    case Format::Text:
      out << "# " << kArtifactName << ' ' << kArtifactVersion << " config_hash=" << config_hash(report.config)
          << '\n';
      out << "# config " << report.config.dump() << '\n';
      detail::flatten(out, "", report.aggregates);
      for (const auto& v : report.verdicts) {
        out << "verdict " << v.criterion << ' ' << (v.pass ? "PASS" : "FAIL") << " value=" << detail::format_double(v.value)
            << " threshold=" << detail::format_double(v.threshold) << '\n';
      }
      return;
  }
}

namespace detail {

struct Common {
  std::uint64_t seed = 1;
  unsigned parallelism = 1;
  std::string format = "text";
  std::string out_dir;
  bool timing = false;
};

struct ExpArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

inline void add_common(CLI::App* sub, Common& c, bool with_output) {
  sub->add_option("--seed", c.seed, "master seed");
  sub->add_option("--parallelism", c.parallelism, "worker threads")->check(CLI::Range(1u, 4096u));
  sub->add_option("--format", c.format, "output format")->check(CLI::IsMember({"text", "json", "csv"}));
  if (with_output) {
    sub->add_option("--out", c.out_dir, std::string("output directory (default: $") + kOutDirEnv + " or .)");
    sub->add_flag("--timing", c.timing, "record per-replicate runtime_ms");
  }
}

inline Format parse_format(const std::string& f) {
  if (f == "json") return Format::Json;
  if (f == "csv") return Format::Csv;
  return Format::Text;
}

inline std::filesystem::path resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return ".";
}

}  // namespace detail

// Entry point behind the giantlab executable. Returns the process exit code:
// 0 all verdicts pass, 1 some verdict failed, 2 usage or configuration error.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo laboratory for the giant component of G(n,p)", "giantlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kArtifactName) + " " + kArtifactVersion);

  detail::Common common;
  std::function<ExperimentReport()> action;
  std::optional<std::string> write_stem;

  // solve-rho
  std::uint64_t n_bp = 2;
  double p = 0.5;
  double tol = kDefaultSolverTol;
  auto* solve = app.add_subcommand("solve-rho", "survival probability of the Bi(n,p) branching process");
  solve->add_option("--n", n_bp, "offspring trials")->required()->check(CLI::PositiveNumber);
  solve->add_option("--p", p, "offspring probability")->required()->check(CLI::Range(0.0, 1.0));
  solve->add_option("--tol", tol, "solver tolerance")->check(CLI::Range(1e-300, 1e-1));
  detail::add_common(solve, common, false);
  solve->callback([&] {
    action = [&] {
      const BpParams params(n_bp, p);
      const SurvivalSolution s = solve_survival(params, tol);
      ExperimentReport r;
      r.experiment = "solve-rho";
      r.config = Json{{"command", "solve-rho"}, {"n", n_bp}, {"p", p}, {"tol", tol}};
      r.aggregates["rho"] = s.rho;
      r.aggregates["pi"] = s.pi;
      r.aggregates["mean"] = params.mean;
      r.aggregates["dual_mean"] = s.dual_mean;
      r.aggregates["dual_expected_size"] = s.dual_expected_size;
      r.aggregates["residual"] = survival_residual(params, s.rho);
      return r;
    };
  });

  // simulate-bp
  std::uint64_t runs = 1;
  std::uint64_t size_cap = 0, width_cap = 0;
  auto* sim = app.add_subcommand("simulate-bp", "simulate Bi(n,p) branching processes");
  sim->add_option("--n", n_bp, "offspring trials")->required()->check(CLI::PositiveNumber);
  sim->add_option("--p", p, "offspring probability")->required()->check(CLI::Range(0.0, 1.0));
  sim->add_option("--runs", runs, "number of independent runs")->check(CLI::PositiveNumber);
  sim->add_option("--size-cap", size_cap, "censor at this total size (0: default)");
  sim->add_option("--width-cap", width_cap, "censor at this generation size (0: default)");
  detail::add_common(sim, common, false);
  sim->callback([&] {
    action = [&] {
      const BpParams params(n_bp, p);
      const SurvivalSolution sol = solve_survival(params);
      BpCaps caps = params.supercritical() ? BpCaps::defaults_for(sol) : BpCaps::unbounded();
      if (size_cap) caps.size_cap = size_cap;
      if (width_cap) caps.width_cap = width_cap;
      ExperimentReport r;
      r.experiment = "simulate-bp";
      r.config = Json{{"command", "simulate-bp"}, {"n", n_bp},           {"p", p}, {"runs", runs},
                      {"size_cap", caps.size_cap}, {"width_cap", caps.width_cap}, {"master_seed", common.seed}};
      Stream rng(SeedSpec{common.seed, 0, "bp"}.key());
      const BinomialSampler offspring(params.n, params.p);
      std::uint64_t extinct = 0, by_size = 0, by_width = 0;
      RunningStats sizes;
      BpOutcome last;
      for (std::uint64_t i = 0; i < runs; ++i) {
        last = simulate_bp(offspring, caps, rng);
        extinct += last.status == BpStatus::Extinct;
        by_size += last.status == BpStatus::CensoredSize;
        by_width += last.status == BpStatus::CensoredWidth;
        sizes.add(static_cast<double>(last.total_size));
      }
      r.aggregates["rho"] = sol.rho;
      if (runs == 1) {
        r.aggregates["status"] = std::string(to_string(last.status));
        r.aggregates["total_size"] = last.total_size;
        r.aggregates["width"] = last.width;
        r.aggregates["generations"] = last.generations;
        if (params.supercritical() && caps.width_cap != kNoCap && caps.size_cap != kNoCap) {
          r.aggregates["fate"] = classify_survival(last, sol).fate == BpFate::Died ? "died" : "survived";
        }
      } else {
        r.aggregates["extinct"] = extinct;
        r.aggregates["censored_size"] = by_size;
        r.aggregates["censored_width"] = by_width;
        r.aggregates["mean_size"] = sizes.mean();
        if (!params.supercritical() && params.mean < 1.0 && extinct == runs) {
          const CiEstimate ci = sizes.mean_ci(0.99);
          const double expected = expected_total_size_subcritical(params.mean);
          r.aggregates["mean_size_ci99"] = Json{{"lo", ci.lo}, {"hi", ci.hi}};
          r.aggregates["expected_size"] = expected;
          r.verdicts.push_back({"total_size_mean", ci.contains(expected), expected, ci.half_width(),
                                ci.half_width() - std::fabs(ci.point - expected), "1/(1 - np) inside the CI"});
        }
      }
      return r;
    };
  });

  // census
  std::uint64_t n_graph = 5;
  std::string edges_out;
  bool lazy = false;
  auto* census = app.add_subcommand("census", "sample G(n,p) and list component sizes");
  census->add_option("--n", n_graph, "vertices")->required()->check(CLI::Range(1ull, 4294967295ull));
  census->add_option("--p", p, "edge probability")->required()->check(CLI::Range(0.0, 1.0));
  census->add_option("--edges-out", edges_out, "write the sampled edge list to this file");
  census->add_flag("--lazy", lazy, "census by lazy exploration instead of the edge stream");
  detail::add_common(census, common, false);
  census->callback([&] {
    action = [&] {
      const GnpParams params(static_cast<std::uint32_t>(n_graph), p);
      Stream rng(SeedSpec{common.seed, 0, "gnp"}.key());
      Census c;
      if (lazy) {
        c = lazy_census(params, rng);
      } else {
        const auto edges = sample_gnp_edge_list(params, rng);
        if (!edges_out.empty()) {
          std::ostringstream os;
          write_edge_list(os, edges);
          write_file_atomic(edges_out, os.str());
        }
        c = component_census(params.n, edges);
      }
      ExperimentReport r;
      r.experiment = "census";
      r.config = Json{{"command", "census"}, {"n", n_graph}, {"p", p}, {"lazy", lazy}, {"master_seed", common.seed}};
      r.aggregates["components"] = c.sizes.size();
      r.aggregates["l1"] = c.l1;
      r.aggregates["l2"] = c.l2;
      r.aggregates["sizes"] = c.sizes;
      return r;
    };
  });

  // couple
  std::uint64_t k = 50;
  std::uint64_t samples = 1;
  std::uint64_t batches = 64;
  auto* couple = app.add_subcommand("couple", "joint graph/branching-process explorations");
  couple->add_option("--n", n_graph, "vertices")->required()->check(CLI::Range(2ull, 4294967295ull));
  couple->add_option("--p", p, "edge probability")->required()->check(CLI::Range(0.0, 1.0));
  couple->add_option("--k", k, "size threshold of the lower coupling")->check(CLI::PositiveNumber);
  couple->add_option("--samples", samples, "number of joint samples")->check(CLI::PositiveNumber);
  couple->add_option("--batches", batches, "work units")->check(CLI::PositiveNumber);
  detail::add_common(couple, common, true);
  couple->callback([&] {
    write_stem = "couple";
    action = [&] {
      CouplingCheckConfig cfg;
      cfg.n = static_cast<std::uint32_t>(n_graph);
      cfg.p = p;
      cfg.k = static_cast<std::uint32_t>(k);
      cfg.samples = samples;
      cfg.batches = static_cast<std::uint32_t>(batches);
      return run_coupling_check(cfg, {common.seed, common.parallelism, common.timing});
    };
  });

  // explore-trunc
  double eps = 0.05;
  std::uint64_t L = 0, roots = 1000, second = 0;
  auto* trunc = app.add_subcommand("explore-trunc", "truncated lazy explorations from random roots");
  trunc->add_option("--n", n_graph, "vertices")->required()->check(CLI::Range(2ull, 4294967295ull));
  trunc->add_option("--eps", eps, "p = (1 + eps)/n")->required()->check(CLI::Range(1e-12, 1.0));
  trunc->add_option("--L", L, "size cap")->required()->check(CLI::PositiveNumber);
  trunc->add_option("--roots", roots, "number of roots")->check(CLI::PositiveNumber);
  trunc->add_option("--second", second, "conditional second explorations");
  trunc->add_option("--batches", batches, "work units")->check(CLI::PositiveNumber);
  detail::add_common(trunc, common, true);
  trunc->callback([&] {
    write_stem = "explore-trunc";
    action = [&] {
      TruncationCheckConfig cfg;
      cfg.n = static_cast<std::uint32_t>(n_graph);
      cfg.eps = eps;
      cfg.L = L;
      cfg.roots = roots;
      cfg.second_samples = second;
      cfg.batches = static_cast<std::uint32_t>(batches);
      return run_truncation_check(cfg, {common.seed, common.parallelism, common.timing});
    };
  });

  // experiments driven by config files
  detail::ExpArgs exp_args;
  auto add_experiment = [&](const char* name, const char* kind, const char* help,
                            std::function<ExperimentReport(const KeyValueConfig&, const RunOptions&)> runner) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", exp_args.config_path, "key = value config file");
    sub->add_option("--set", exp_args.overrides, "override a config key (key=value)");
    detail::add_common(sub, common, true);
    sub->callback([&, sub, name, kind, runner] {
      write_stem = name;
      action = [&, sub, kind, runner] {
        KeyValueConfig kv = exp_args.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(exp_args.config_path);
        for (const auto& o : exp_args.overrides) {
          const auto eq = o.find('=');
          if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
          kv.set(giant::detail::trim(o.substr(0, eq)), giant::detail::trim(o.substr(eq + 1)));
        }
        ExperimentSetup setup = read_setup(kv, kind);
        if (sub->count("--seed")) setup.run.master_seed = common.seed;
        if (sub->count("--parallelism")) setup.run.parallelism = common.parallelism;
        if (sub->count("--timing")) setup.run.record_timing = common.timing;
        ExperimentReport report = runner(kv, setup.run);
        return report;
      };
    });
  };
  add_experiment("exp-l1", "l1", "largest component along an eps(n) = n^-a schedule",
                 [](const KeyValueConfig& kv, const RunOptions& run) {
                   const auto cfg = read_l1_config(kv);
                   kv.check_all_used();
                   return run_l1_experiment(cfg, run);
                 });
  add_experiment("exp-lower", "lower", "Pr(|C_v| >= L) by capped exploration",
                 [](const KeyValueConfig& kv, const RunOptions& run) {
                   const auto cfg = read_lower_config(kv);
                   kv.check_all_used();
                   return run_lower_bound_check(cfg, run);
                 });
  add_experiment("exp-duality", "duality", "extinction-conditioned process vs its dual",
                 [](const KeyValueConfig& kv, const RunOptions& run) {
                   const auto cfg = read_duality_config(kv);
                   kv.check_all_used();
                   return run_duality_check(cfg, run);
                 });
  add_experiment("exp-sprinkle", "sprinkle", "two-round exposure merging the large components",
                 [](const KeyValueConfig& kv, const RunOptions& run) {
                   const auto cfg = read_sprinkle_config(kv);
                   kv.check_all_used();
                   return run_sprinkle(cfg, run);
                 });
  add_experiment("exp-tail", "tail", "size tail and width bounds of the branching process",
                 [](const KeyValueConfig& kv, const RunOptions& run) {
                   const auto cfg = read_tail_config(kv);
                   kv.check_all_used();
                   return run_tail_and_width_checks(cfg, run);
                 });

  // oracle-enum
  std::string oracle_kind = "graph";
  std::uint64_t max_size = oracle::kMaxTreeSize;
  auto* oracle_cmd = app.add_subcommand("oracle-enum", "exact distributions by exhaustive enumeration");
  oracle_cmd->add_option("--kind", oracle_kind, "graph: L1 of G(n,p); bp: total size of Bi(n,p) trees")
      ->check(CLI::IsMember({"graph", "bp"}));
  oracle_cmd->add_option("--n", n_bp, "vertices (graph) or fanout (bp)")->required()->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--p", p, "probability")->required()->check(CLI::Range(0.0, 1.0));
  oracle_cmd->add_option("--max-size", max_size, "largest tree size listed (bp)")->check(CLI::PositiveNumber);
  detail::add_common(oracle_cmd, common, false);
  oracle_cmd->callback([&] {
    action = [&] {
      ExperimentReport r;
      r.experiment = "oracle-enum";
      std::vector<long double> dist;
      if (oracle_kind == "graph") {
        r.config = Json{{"command", "oracle-enum"}, {"kind", oracle_kind}, {"n", n_bp}, {"p", p}};
        if (n_bp > oracle::kMaxGraphVertices) throw ConfigError("--n: graph enumeration is limited to n <= 5");
        dist = oracle::l1_distribution(static_cast<std::uint32_t>(n_bp), p);
      } else {
        r.config = Json{{"command", "oracle-enum"}, {"kind", oracle_kind}, {"n", n_bp}, {"p", p}, {"max_size", max_size}};
        if (n_bp > oracle::kMaxFanout) throw ConfigError("--n: tree enumeration is limited to fanout <= 3");
        if (max_size > oracle::kMaxTreeSize) throw ConfigError("--max-size: tree enumeration is limited to 12");
        dist = oracle::bp_size_distribution(static_cast<std::uint32_t>(n_bp), p, static_cast<std::uint32_t>(max_size));
      }
      Json probs = Json::object();
      for (std::size_t s = 1; s < dist.size(); ++s) probs[std::to_string(s)] = static_cast<double>(dist[s]);
      r.aggregates["P"] = std::move(probs);
      return r;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kArtifactName << ' ' << kArtifactVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    ExperimentReport report = action();
    if (write_stem) {
      const auto dir = detail::resolve_out_dir(common.out_dir);
      const auto paths = write_report(report, dir, *write_stem);
      err << "wrote " << paths.records.string() << ", " << paths.summary_json.string() << ", "
          << paths.summary_csv.string() << '\n';
    }
    print_report(out, report, detail::parse_format(common.format));
    return report.all_passed() ? kExitOk : kExitVerdictFailed;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << '\n';
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
  }
  return kExitUsage;
}

}  // namespace giant::cli
