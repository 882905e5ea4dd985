#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "giant/experiments.hpp"

using namespace giant;

TEST(EpsSchedule, EpsAndCriticality) {
  EpsSchedule s;
  s.exponent = 0.2;
  s.n_values = {1'000'000};
  EXPECT_NEAR(s.eps(1'000'000), 0.0630957, 1e-6);
  EXPECT_NEAR(s.criticality(1'000'000), 251.19, 0.01);
  EXPECT_NO_THROW(s.validate());
}

TEST(EpsSchedule, LowCriticalityIsConfigError) {
  EpsSchedule s;
  s.exponent = 0.3;  // eps^3 n = n^0.1
  s.n_values = {1'000'000};
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(EpsSchedule, ExponentAndOrderingChecked) {
  EpsSchedule s;
  s.exponent = 0.4;
  s.n_values = {1000};
  EXPECT_THROW(s.validate(), ConfigError);
  s.exponent = 0.2;
  s.n_values = {1'000'000, 100'000};
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(LRule, ParseAndResolve) {
  EXPECT_EQ(LRule::parse("eps_n_over:3").resolve(1'000'000, 0.06), 20000u);
  EXPECT_EQ(LRule::parse("inv_eps2:40").resolve(1'000'000, 0.1), 4000u);
  EXPECT_EQ(LRule::parse("fixed:1234").resolve(10, 0.1), 1234u);
  EXPECT_EQ(LRule::parse("eps_n_over:3").describe(), "eps_n_over:3");
  EXPECT_THROW(LRule::parse("nonsense"), ConfigError);
  EXPECT_THROW(LRule::parse("other:3"), ConfigError);
  EXPECT_THROW(LRule::parse("fixed:-1"), ConfigError);
}

TEST(LWindow, NamesTheViolatedInequality) {
  LWindow w;
  const auto low = w.violation(1'000'000, 0.05, 100);
  ASSERT_TRUE(low.has_value());
  EXPECT_NE(low->find("eps^2 L"), std::string::npos);
  const auto high = w.violation(1'000'000, 0.05, 40'000);
  ASSERT_TRUE(high.has_value());
  EXPECT_NE(high->find("eps n"), std::string::npos);
  EXPECT_FALSE(w.violation(1'000'000, 0.05, 15'000).has_value());
}

TEST(L1Experiment, RuleOutsideWindowIsConfigError) {
  L1Config cfg;
  cfg.schedule.n_values = {100'000};
  cfg.l_rule = LRule::parse("fixed:10");
  cfg.replicates = 2;
  EXPECT_THROW(run_l1_experiment(cfg, {}), ConfigError);
}

TEST(L1Experiment, SmallSweepProducesRecordsAndVerdicts) {
  L1Config cfg;
  cfg.schedule.exponent = 0.2;
  cfg.schedule.n_values = {100'000, 200'000};
  cfg.replicates = 4;
  const auto r = run_l1_experiment(cfg, {7, 1, false});
  ASSERT_EQ(r.records.size(), 8u);
  for (const auto& rec : r.records) {
    EXPECT_GE(rec["l1"].get<std::uint64_t>(), rec["l2"].get<std::uint64_t>());
    EXPECT_GE(rec["n_large"].get<std::uint64_t>(), rec["l1"].get<std::uint64_t>());
    EXPECT_FALSE(rec.contains("runtime_ms"));
  }
  EXPECT_NE(r.find("l1_band[n=100000]"), nullptr);
  EXPECT_NE(r.find("l2_over_l1_decreasing"), nullptr);
  // Aggregates are recomputable from the records.
  double sum = 0;
  for (int i = 0; i < 4; ++i) {
    const auto& rec = r.records[i];
    sum += rec["l1"].get<double>() / (2 * rec["eps"].get<double>() * rec["n"].get<double>());
  }
  EXPECT_NEAR(r.aggregates["per_n"][0]["l1_over_2epsn"]["point"].get<double>(), sum / 4, 1e-12);
}

TEST(L1Experiment, RecordsIndependentOfParallelism) {
  L1Config cfg;
  cfg.schedule.n_values = {100'000};
  cfg.replicates = 6;
  const auto a = run_l1_experiment(cfg, {11, 1, false});
  const auto b = run_l1_experiment(cfg, {11, 4, false});
  EXPECT_EQ(a.records_jsonl(), b.records_jsonl());
  EXPECT_EQ(a.summary_json().dump(), b.summary_json().dump());
}

TEST(L1Experiment, TimingOnlyWhenRequested) {
  L1Config cfg;
  cfg.schedule.n_values = {100'000};
  cfg.replicates = 1;
  const auto r = run_l1_experiment(cfg, {1, 1, true});
  EXPECT_TRUE(r.records[0].contains("runtime_ms"));
}

TEST(LowerBound, ZeroProbabilityIsOutOfRegime) {
  LowerBoundConfig cfg;
  cfg.n = 1000;
  cfg.eps = -1.0;  // p = 0
  cfg.L = 10;
  cfg.roots = 100;
  cfg.batches = 4;
  const auto r = run_lower_bound_check(cfg, {});
  EXPECT_EQ(r.aggregates["pr_size_at_least_L"]["point"].get<double>(), 0.0);
  EXPECT_FALSE(r.all_passed());
}

TEST(LowerBound, DeterministicAcrossParallelism) {
  LowerBoundConfig cfg;
  cfg.n = 200'000;
  cfg.eps = 0.1;
  cfg.L = 3000;
  cfg.roots = 400;
  cfg.batches = 8;
  const auto a = run_lower_bound_check(cfg, {3, 1, false});
  const auto b = run_lower_bound_check(cfg, {3, 3, false});
  EXPECT_EQ(a.records_jsonl(), b.records_jsonl());
  EXPECT_TRUE(a.aggregates["in_window"].get<bool>());
  EXPECT_NE(a.find("lower_flat_tail"), nullptr);
}

TEST(Duality, SubcriticalIsDomainError) {
  DualityConfig cfg;
  cfg.n = 5;
  cfg.p = 0.1;
  EXPECT_THROW(run_duality_check(cfg, {}), DomainError);
}

TEST(Duality, SmallRunMatchesExactLaws) {
  DualityConfig cfg;
  cfg.samples = 100'000;
  cfg.batches = 8;
  const auto r = run_duality_check(cfg, {5, 1, false});
  EXPECT_NEAR(r.aggregates["exact_p_size1"].get<double>(), 9.0 / 16.0, 1e-9);
  EXPECT_TRUE(r.all_passed()) << r.summary_json().dump(2);
}

TEST(Duality, LargeFanoutSkipsEnumerationButChecksDualMean) {
  DualityConfig cfg;
  cfg.n = 50;
  cfg.p = 0.03;
  cfg.samples = 50'000;
  cfg.batches = 4;
  const auto r = run_duality_check(cfg, {6, 1, false});
  EXPECT_EQ(r.find("duality_exact_dual"), nullptr);
  ASSERT_NE(r.find("dual_mean_size"), nullptr);
  EXPECT_TRUE(r.find("dual_mean_size")->pass);
}

TEST(TotalSize, SubcriticalMean) {
  TotalSizeConfig cfg;
  cfg.samples = 200'000;
  const auto r = run_total_size_check(cfg, {1, 1, false});
  EXPECT_TRUE(r.all_passed());
  EXPECT_DOUBLE_EQ(r.aggregates["expected"].get<double>(), 2.0);
}

TEST(TailWidth, SubcriticalUsesMarkov) {
  TailWidthConfig cfg;
  cfg.n = 1000;
  cfg.eps = -0.5;
  cfg.L = 20;
  cfg.tail_samples = 20'000;
  const auto r = run_tail_and_width_checks(cfg, {});
  ASSERT_NE(r.find("tail_markov"), nullptr);
  EXPECT_NEAR(r.aggregates["markov_bound"].get<double>(), 1.0 / (0.5 * 20), 1e-12);
  EXPECT_TRUE(r.all_passed());
}

TEST(TailWidth, PreconditionsAreConfigErrors) {
  TailWidthConfig cfg;
  cfg.L = 100;  // eps^2 L = 0.25
  EXPECT_THROW(run_tail_and_width_checks(cfg, {}), ConfigError);
  cfg.L = 40'000;
  cfg.M = 10;  // eps M = 0.5
  EXPECT_THROW(run_tail_and_width_checks(cfg, {}), ConfigError);
}

TEST(SprinklePlan, Algebra) {
  for (std::uint32_t n : {1000u, 100'000u, 1'000'000u, 10'000'000u}) {
    const double eps = std::pow(static_cast<double>(n), -0.2);
    const auto plan = SprinklePlan::make(n, eps);
    EXPECT_NEAR(plan.p1, std::pow(static_cast<double>(n), -4.0 / 3.0), 1e-25);
    EXPECT_NEAR(plan.p0, (plan.p - plan.p1) / (1 - plan.p1), 1e-25);
    EXPECT_GE(plan.p0, 0.0);
    EXPECT_LE(plan.p0, plan.p);
    EXPECT_LE(plan.algebra_error(), 1e-15);
    EXPECT_EQ(plan.L, static_cast<std::uint64_t>(std::ceil(eps * n / 3.0)));
  }
}

TEST(SprinklePlan, Errors) {
  EXPECT_THROW(SprinklePlan::make(1000, 0.001), ConfigError);  // eps n / 3 < 1
  EXPECT_THROW(SprinklePlan::make(1000, 0.1, 3.0, 1.5), ConfigError);
  EXPECT_THROW(SprinklePlan::make(1000, 0.1, 0.0), ConfigError);
}

TEST(Sprinkle, SingleComponentMergesFully) {
  Stream rng(1);
  const auto out = sprinkle_components({500}, 1e-6, rng);
  EXPECT_EQ(out.components, 1u);
  EXPECT_EQ(out.largest_merged, 500u);
  EXPECT_EQ(out.union_size, 500u);
}

TEST(Sprinkle, NoComponentsIsDegenerate) {
  Stream rng(1);
  const auto out = sprinkle_components({}, 1e-6, rng);
  EXPECT_EQ(out.components, 0u);
  EXPECT_EQ(out.largest_merged, 0u);
}

TEST(Sprinkle, TwoComponentsMergeWithExactProbability) {
  // Two parts of size L stay apart with probability (1 - p1)^{L^2} <= e^{-p1 L^2}.
  const double p1 = 1e-4;
  const std::uint32_t L = 100;
  const double apart = std::pow(1 - p1, static_cast<double>(L) * L);
  EXPECT_LE(apart, std::exp(-p1 * L * L));
  Stream rng(2);
  std::uint64_t separate = 0;
  const std::uint64_t N = 200'000;
  for (std::uint64_t i = 0; i < N; ++i) separate += sprinkle_components({L, L}, p1, rng).largest_merged == L;
  EXPECT_TRUE(proportion_ci(separate, N, 0.999).contains(apart));
}

TEST(Sprinkle, SmallRunReportsDegeneratesAndVerdicts) {
  SprinkleConfig cfg;
  cfg.n = 100'000;
  cfg.replicates = 3;
  const auto r = run_sprinkle(cfg, {1, 1, false});
  EXPECT_EQ(r.records.size(), 3u);
  EXPECT_NE(r.find("sprinkle_algebra"), nullptr);
  EXPECT_TRUE(r.find("sprinkle_algebra")->pass);
  EXPECT_NE(r.find("sprinkle_merged_fraction"), nullptr);
}

TEST(Sprinkle, RecordOrdering) {
  SprinkleConfig cfg;
  cfg.n = 100'000;
  cfg.replicates = 10;
  const auto r = run_sprinkle(cfg, {2, 1, false});
  for (const auto& rec : r.records) {
    const auto final_l1 = rec["final_l1"].get<std::uint64_t>();
    const auto graph_l1 = rec["graph_l1"].get<std::uint64_t>();
    EXPECT_LE(final_l1, rec["union_size"].get<std::uint64_t>());
    EXPECT_GE(graph_l1, final_l1);
    EXPECT_GE(graph_l1, rec["l1_g0"].get<std::uint64_t>());
  }
}

TEST(Sprinkle, FinalGraphHasGnpLaw) {
  // G0 ∪ G1 is G(n, p): compare its L1 with a direct sample at the same p.
  const std::uint32_t n = 100'000;
  SprinkleConfig scfg;
  scfg.n = n;
  scfg.replicates = 200;
  const auto s = run_sprinkle(scfg, {3, 1, false});
  L1Config lcfg;
  lcfg.schedule.n_values = {n};
  lcfg.replicates = 200;
  const auto d = run_l1_experiment(lcfg, {4, 1, false});
  RunningStats a, b;
  for (const auto& rec : s.records) a.add(rec["graph_l1"].get<double>());
  for (const auto& rec : d.records) b.add(rec["l1"].get<double>());
  const double se = std::sqrt(a.variance() / a.count() + b.variance() / b.count());
  EXPECT_LT(std::fabs(a.mean() - b.mean()), 4 * se) << a.mean() << " vs " << b.mean();
}

TEST(CouplingCheck, NoViolations) {
  CouplingCheckConfig cfg;
  cfg.samples = 2000;
  cfg.batches = 4;
  const auto r = run_coupling_check(cfg, {1, 2, false});
  EXPECT_TRUE(r.all_passed());
}

TEST(TruncationCheck, BoundaryNeverExceedsCapPlusOne) {
  TruncationCheckConfig cfg;
  cfg.n = 200'000;
  cfg.eps = 0.1;
  cfg.L = 5000;
  cfg.roots = 500;
  cfg.second_samples = 50;
  cfg.batches = 5;
  const auto r = run_truncation_check(cfg, {2, 1, false});
  ASSERT_NE(r.find("boundary_max"), nullptr);
  EXPECT_TRUE(r.find("boundary_max")->pass);
  EXPECT_NE(r.find("second_boundary_flag"), nullptr);
}

TEST(ConfigLoaders, L1FromText) {
  const auto kv = KeyValueConfig::parse_string(
      "experiment = l1\nn = 1e5, 1e6\nexponent = 0.2\nL_rule = eps_n_over:4\nreplicates = 3\nmaster_seed = 9\n"
      "parallelism = 2\n");
  const auto setup = read_setup(kv, "l1");
  const auto cfg = read_l1_config(kv);
  EXPECT_NO_THROW(kv.check_all_used());
  EXPECT_EQ(setup.run.master_seed, 9u);
  EXPECT_EQ(setup.run.parallelism, 2u);
  EXPECT_EQ(cfg.schedule.n_values, (std::vector<std::uint64_t>{100'000, 1'000'000}));
  EXPECT_EQ(cfg.replicates, 3u);
  EXPECT_EQ(cfg.l_rule.value, 4.0);
}

TEST(ConfigLoaders, UnknownKeyAndWrongKind) {
  const auto kv = KeyValueConfig::parse_string("experiment = l1\nreplicatez = 3\n");
  read_setup(kv, "l1");
  read_l1_config(kv);
  EXPECT_THROW(kv.check_all_used(), ConfigError);
  EXPECT_THROW(read_setup(kv, "tail"), ConfigError);
}

TEST(ConfigLoaders, SyntaxErrors) {
  EXPECT_THROW(KeyValueConfig::parse_string("no equals sign\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::parse_string("a = 1\na = 2\n"), ConfigError);
  const auto kv = KeyValueConfig::parse_string("n = abc\nparallelism = 0\n");
  EXPECT_THROW(read_lower_config(kv), ConfigError);
  EXPECT_THROW(read_setup(KeyValueConfig::parse_string("parallelism = 0\n"), "lower"), ConfigError);
  EXPECT_THROW(KeyValueConfig::load("/nonexistent/file.cfg"), ConfigError);
}

TEST(Report, HeaderAndCsv) {
  ExperimentReport r;
  r.experiment = "x";
  r.config = Json{{"a", 1}};
  r.verdicts.push_back(verdict_at_most("c", 1.0, 2.0));
  const auto s = r.summary_json();
  EXPECT_EQ(s["header"]["artifact"], "giantlab");
  EXPECT_EQ(s["header"]["config_hash"], config_hash(r.config));
  EXPECT_TRUE(s["all_passed"].get<bool>());
  EXPECT_NE(r.summary_csv().find("c,true,1,2,1"), std::string::npos);
}

TEST(Report, VerdictHelpers) {
  EXPECT_TRUE(verdict_at_most("a", 1, 1).pass);
  EXPECT_FALSE(verdict_at_most("a", 1.1, 1).pass);
  EXPECT_TRUE(verdict_at_least("a", 1, 1).pass);
  EXPECT_TRUE(verdict_within("a", 1.05, 1.0, 0.1).pass);
  EXPECT_FALSE(verdict_within("a", 0.85, 1.0, 0.1).pass);
  EXPECT_NEAR(verdict_within("a", 0.95, 1.0, 0.1).margin, 0.05, 1e-12);
}

TEST(RunIndexed, OrderAndExceptions) {
  const auto v = run_indexed(100, 4, [](std::size_t i) { return i * i; });
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(v[i], i * i);
  EXPECT_THROW(run_indexed(10, 3,
                           [](std::size_t i) -> int {
                             if (i == 7) throw ConfigError("boom");
                             return 0;
                           }),
               ConfigError);
}
