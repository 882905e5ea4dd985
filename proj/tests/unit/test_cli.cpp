#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "giant/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"giantlab"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::ostringstream out, err;
  const int code = giant::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("giantlab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, SolveRho) {
  const auto r = run({"solve-rho", "--n", "2", "--p", "0.75"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("rho=0.88888888888"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("pi=0.2499999999"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("config_hash="), std::string::npos);
  EXPECT_NE(r.out.find("# config {"), std::string::npos);
}

TEST(Cli, CensusWithoutEdges) {
  const auto r = run({"census", "--n", "5", "--p", "0", "--seed", "1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("sizes=1,1,1,1,1\n"), std::string::npos) << r.out;
}

TEST(Cli, MissingConfigFile) {
  const auto r = run({"exp-l1", "--config", "missing.cfg"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("missing.cfg"), std::string::npos);
}

TEST(Cli, UnknownSubcommandAndFlag) {
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  const auto r = run({"solve-rho", "--n", "2", "--p", "0.5", "--bogus", "1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({}).code, 2);
}

TEST(Cli, OutOfDomainFlagsNameTheFlag) {
  const auto r = run({"solve-rho", "--n", "2", "--p", "1.5"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--p"), std::string::npos);
  const auto q = run({"census", "--n", "0", "--p", "0.5"});
  EXPECT_EQ(q.code, 2);
  EXPECT_NE(q.err.find("--n"), std::string::npos);
  const auto s = run({"simulate-bp", "--n", "3", "--p", "0.2", "--parallelism", "0"});
  EXPECT_EQ(s.code, 2);
  EXPECT_NE(s.err.find("--parallelism"), std::string::npos);
}

TEST(Cli, OracleEnum) {
  const auto g = run({"oracle-enum", "--n", "3", "--p", "0.5"});
  EXPECT_EQ(g.code, 0);
  EXPECT_NE(g.out.find("P.3=0.5\n"), std::string::npos) << g.out;
  const auto two = run({"oracle-enum", "--n", "2", "--p", "0.25"});
  EXPECT_NE(two.out.find("P.1=0.75\n"), std::string::npos) << two.out;
  EXPECT_NE(two.out.find("P.2=0.25\n"), std::string::npos) << two.out;
  const auto b = run({"oracle-enum", "--kind", "bp", "--n", "2", "--p", "0.25", "--max-size", "3"});
  EXPECT_NE(b.out.find("P.1=0.5625\n"), std::string::npos) << b.out;
  EXPECT_EQ(run({"oracle-enum", "--n", "6", "--p", "0.5"}).code, 2);
  EXPECT_EQ(run({"oracle-enum", "--kind", "bp", "--n", "4", "--p", "0.5"}).code, 2);
  EXPECT_EQ(run({"oracle-enum", "--kind", "bp", "--n", "2", "--p", "0.5", "--max-size", "13"}).code, 2);
}

TEST(Cli, JsonAndCsvFormats) {
  const auto j = run({"solve-rho", "--n", "2", "--p", "0.75", "--format", "json"});
  ASSERT_EQ(j.code, 0);
  const auto parsed = giant::Json::parse(j.out);
  EXPECT_EQ(parsed["header"]["version"], giant::kArtifactVersion);
  EXPECT_NEAR(parsed["aggregates"]["rho"].get<double>(), 8.0 / 9.0, 1e-10);
  const auto c = run({"solve-rho", "--n", "2", "--p", "0.75", "--format", "csv"});
  EXPECT_NE(c.out.find("key,value\n"), std::string::npos);
  EXPECT_NE(c.out.find("config.n,2\n"), std::string::npos) << c.out;
}

TEST(Cli, SimulateBpSubcriticalVerdict) {
  const auto r = run({"simulate-bp", "--n", "50", "--p", "0.01", "--runs", "100000", "--seed", "4"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("verdict total_size_mean PASS"), std::string::npos) << r.out;
}

TEST(Cli, SimulateBpSingleRun) {
  const auto r = run({"simulate-bp", "--n", "1", "--p", "1", "--size-cap", "100"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("status=censored_size"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("total_size=100"), std::string::npos);
}

TEST(Cli, CensusEdgeOutput) {
  const auto dir = temp_dir("edges");
  const std::string path = (dir / "edges.txt").string();
  const auto r = run({"census", "--n", "4", "--p", "1", "--edges-out", path.c_str()});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(slurp(path), "1 2\n1 3\n1 4\n2 3\n2 4\n3 4\n");
}

TEST(Cli, ExperimentWritesFilesAndIsDeterministic) {
  const auto dir1 = temp_dir("exp1");
  const auto dir2 = temp_dir("exp2");
  const auto cfg = dir1 / "l1.cfg";
  {
    std::ofstream out(cfg);
    out << "experiment = l1\nn = 100000\nreplicates = 4\nmaster_seed = 3\n";
  }
  const std::string c = cfg.string(), o1 = dir1.string(), o2 = dir2.string();
  const auto a = run({"exp-l1", "--config", c.c_str(), "--out", o1.c_str(), "--parallelism", "1"});
  const auto b = run({"exp-l1", "--config", c.c_str(), "--out", o2.c_str(), "--parallelism", "4"});
  ASSERT_NE(a.code, 2) << a.err;
  EXPECT_EQ(a.code, b.code);
  EXPECT_EQ(a.out, b.out);
  for (const char* f : {"exp-l1.records.jsonl", "exp-l1.summary.json", "exp-l1.summary.csv"}) {
    ASSERT_TRUE(fs::exists(dir1 / f)) << f;
    EXPECT_EQ(slurp(dir1 / f), slurp(dir2 / f)) << f;
  }
  EXPECT_FALSE(fs::exists(dir1 / "exp-l1.records.jsonl.tmp"));
}

TEST(Cli, ExperimentOverridesAndUnknownKeys) {
  const auto dir = temp_dir("exp3");
  const std::string o = dir.string();
  const auto bad = run({"exp-tail", "--set", "nonsense=1", "--out", o.c_str()});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("nonsense"), std::string::npos);
  const auto window = run({"exp-l1", "--set", "n=100000", "--set", "L_rule=fixed:5", "--out", o.c_str()});
  EXPECT_EQ(window.code, 2);
  EXPECT_NE(window.err.find("eps^2 L"), std::string::npos) << window.err;
  const auto low = run({"exp-l1", "--set", "n=1000", "--out", o.c_str()});
  EXPECT_EQ(low.code, 2);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const auto dir = temp_dir("env");
  ::setenv(giant::cli::kOutDirEnv, dir.string().c_str(), 1);
  const auto r = run({"couple", "--n", "100", "--p", "0.012", "--k", "10", "--samples", "50"});
  ::unsetenv(giant::cli::kOutDirEnv);
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_TRUE(fs::exists(dir / "couple.summary.json"));
}

TEST(Cli, FailingVerdictExitsOne) {
  const auto dir = temp_dir("fail");
  const std::string o = dir.string();
  // An absurd band makes the verdict fail while the run itself is valid.
  const auto r = run({"exp-lower", "--set", "n=100000", "--set", "eps=0.1", "--set", "L=3000", "--set", "roots=200",
                      "--set", "band_lo=50", "--out", o.c_str()});
  EXPECT_EQ(r.code, 1) << r.err;
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}
