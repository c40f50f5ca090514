#include "bench/experiments.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace bench;
namespace fs = std::filesystem;

namespace {

const char* kSmallCustom = R"(
[experiment]
kind = custom
name = small

[instance]
family = ncqp
q = 6
n = 30
seed = 2

[solver]
mode = serial
beta = 1.4
epochs = 20
trace_every = 5
seeds = 1, 2
)";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pdbcu_bench_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string field_of(const std::string& text) {
  try {
    parse_plan_text(text);
  } catch (const PlanError& e) {
    return e.field();
  }
  return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(PDBCU_BENCH_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(PlanFile, ParsesSections) {
  const auto p = parse_plan_text(kSmallCustom);
  EXPECT_EQ(p.kind, ExperimentKind::Custom);
  EXPECT_EQ(p.name, "small");
  EXPECT_EQ(p.instance.family, "ncqp");
  EXPECT_EQ(p.instance.get("q", 0), 6);
  EXPECT_EQ(p.instance.seed, 2u);
  EXPECT_EQ(p.betas, std::vector<double>{1.4});
  EXPECT_EQ(p.seeds, (std::vector<std::uint64_t>{1, 2}));
  EXPECT_EQ(p.epochs, 20);
  EXPECT_TRUE(p.timing);
}

TEST(PlanFile, ErrorsCarryFieldPath) {
  EXPECT_EQ(field_of(replace(kSmallCustom, "seeds = 1, 2", "seeds =")), "solver.seeds");
  EXPECT_EQ(field_of(replace(kSmallCustom, "seeds = 1, 2", "seeds = 1,,2")), "solver.seeds");
  EXPECT_EQ(field_of(replace(kSmallCustom, "epochs = 20", "epochs = many")), "solver.epochs");
  EXPECT_EQ(field_of(replace(kSmallCustom, "epochs = 20", "epoch = 20")), "solver.epoch");
  EXPECT_EQ(field_of(replace(kSmallCustom, "mode = serial", "mode = magic")), "solver.mode");
  EXPECT_EQ(field_of(replace(kSmallCustom, "kind = custom", "kind = portfolio")), "experiment.kind");
  EXPECT_EQ(field_of(replace(kSmallCustom, "beta = 1.4", "beta = -1")), "solver.betas");
  EXPECT_EQ(field_of(std::string(kSmallCustom) + "[extra]\nfoo = 1\n"), "extra");
  EXPECT_EQ(field_of(replace(kSmallCustom, "family = ncqp", "family = ncqp\ndataset = /nonexistent.svm")),
            "instance.dataset");
}

TEST(PlanFile, MissingFileIsIoError) { EXPECT_THROW(load_plan("/nonexistent/plan.ini"), pdbcu::IoError); }

TEST(PlanFile, ShippedPlansParse) {
  for (const auto& e : fs::directory_iterator(PDBCU_PLANS_DIR)) {
    if (e.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(load_plan(e.path().string())) << e.path();
  }
}

TEST(Expand, CellCounts) {
  auto p = parse_plan_text(R"(
[experiment]
kind = bp_beta_sweep
[instance]
family = basis_pursuit
[solver]
betas = 1, 10, 100
seeds = 1, 2
)");
  EXPECT_EQ(expand(p).size(), 12u);
  p.lalm = false;
  EXPECT_EQ(expand(p).size(), 6u);

  p = parse_plan_text(R"(
[experiment]
kind = ncqp_delay
variant = indep
[instance]
family = ncqp
[solver]
taus = 0, 5, 10
seeds = 4
)");
  const auto cells = expand(p);
  ASSERT_EQ(cells.size(), 3u);
  EXPECT_EQ(cells[2].label, "tau10");
  EXPECT_FALSE(cells[2].dependent);
  EXPECT_DOUBLE_EQ(cells[0].beta, std::sqrt(2.0));

  p = parse_plan_text(R"(
[experiment]
kind = svm_parallel
[instance]
family = dual_svm
[solver]
workers_list = 1, 4
seeds = 1, 2, 3
)");
  EXPECT_EQ(expand(p).size(), 12u);
  EXPECT_EQ(expand(p)[1].label, "sync_p1");
}

TEST(RunPlan, SummaryEchoesConfigAndCellsAreWritten) {
  auto p = parse_plan_text(kSmallCustom);
  const auto dir = scratch("summary");
  std::ostringstream log;
  const auto summary = run_plan(p, dir, log);
  EXPECT_EQ(summary["plan"]["solver"]["epochs"], 20);
  EXPECT_EQ(summary["plan"]["instance"]["params"]["q"], 6.0);
  EXPECT_EQ(summary["plan"]["solver"]["seeds"].size(), 2u);
  ASSERT_EQ(summary["runs"].size(), 2u);
  const auto& run = summary["runs"][0];
  EXPECT_EQ(run["mode"], "serial");
  EXPECT_EQ(run["beta"], 1.4);
  EXPECT_DOUBLE_EQ(run["rho"].get<double>(), 1.4 / 30);
  EXPECT_EQ(run["fingerprint"].get<std::string>().size(), 16u);
  EXPECT_TRUE(fs::exists(dir / "small" / "serial_seed1.csv"));
  EXPECT_TRUE(fs::exists(dir / "small" / "summary.json"));
  const auto trace = pdbcu::read_trace_csv((dir / "small" / "serial_seed2.csv").string());
  EXPECT_EQ(trace.rows.size(), 4u);
  EXPECT_TRUE(pdbcu::validate_trace(trace).empty());
  EXPECT_FALSE(std::isnan(trace.rows.back().obj_err));
}

TEST(RunPlan, OutputDirectoryPrecedence) {
  auto p = parse_plan_text(kSmallCustom);
  ::setenv("PDBCU_OUTPUT_DIR", "/tmp/from_env", 1);
  EXPECT_EQ(resolve_output_dir("", p), fs::path("/tmp/from_env"));
  p.output_dir = "/tmp/from_plan";
  EXPECT_EQ(resolve_output_dir("", p), fs::path("/tmp/from_plan"));
  EXPECT_EQ(resolve_output_dir("/tmp/from_cli", p), fs::path("/tmp/from_cli"));
  ::unsetenv("PDBCU_OUTPUT_DIR");
  p.output_dir.clear();
  EXPECT_EQ(resolve_output_dir("", p), fs::path("pdbcu_out"));
}

TEST(RunPlan, SpeedupNormalizesToOneThread) {
  auto p = parse_plan_text(R"(
[experiment]
kind = svm_parallel
[instance]
family = dual_svm
samples = 200
features = 20
density = 0.2
block_width = 10
[solver]
workers_list = 2
epochs = 3
seeds = 1
reference = false
)");
  std::ostringstream log;
  const auto rows = run_speedup(p, log);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].threads, 1);
  EXPECT_DOUBLE_EQ(rows[0].async_speedup, 1.0);
  EXPECT_DOUBLE_EQ(rows[0].sync_speedup, 1.0);
  EXPECT_GT(rows[1].async_ips, 0.0);
}

TEST(Cli, RunIsByteIdenticalWithoutTiming) {
  const auto dir = scratch("cli_determinism");
  write(dir / "plan.ini", kSmallCustom);
  ASSERT_EQ(cli("run " + (dir / "plan.ini").string() + " --no-timing -o " + (dir / "a").string()), 0);
  ASSERT_EQ(cli("run " + (dir / "plan.ini").string() + " --no-timing -o " + (dir / "b").string()), 0);
  for (const char* f : {"serial_seed1.csv", "serial_seed2.csv", "summary.json"})
    EXPECT_EQ(slurp(dir / "a" / "small" / f), slurp(dir / "b" / "small" / f)) << f;
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli_codes");
  EXPECT_EQ(cli(""), 1);
  EXPECT_EQ(cli("frobnicate"), 1);
  write(dir / "bad.ini", replace(kSmallCustom, "seeds = 1, 2", "seeds ="));
  EXPECT_EQ(cli("run " + (dir / "bad.ini").string()), 1);
  EXPECT_EQ(cli("run " + (dir / "missing.ini").string()), 3);
  EXPECT_EQ(cli("verify -f ncqp -p q=5 -p n=20"), 0);
  EXPECT_EQ(cli("verify -f basis_pursuit -p q=10 -p n=30 -p nnz=3 -p blocks=3 --scale-sq-norms 0.5 --no-reference"), 2);
  EXPECT_EQ(cli("verify -f ncqp -p q=oops"), 1);
  EXPECT_EQ(cli("verify -i " + (dir / "none.json").string()), 3);
  write(dir / "trace.csv", "epoch,feas\n2,1\n1,1\n");
  EXPECT_NE(cli("verify -f ncqp -p q=5 -p n=20 --no-reference -t " + (dir / "trace.csv").string()), 0);
}

TEST(Cli, GenThenVerifyInstanceFile) {
  const auto dir = scratch("cli_gen");
  const auto file = (dir / "bp.json").string();
  ASSERT_EQ(cli("gen -f basis_pursuit -p q=20 -p n=60 -p nnz=4 -p blocks=6 -s 3 -o " + file), 0);
  EXPECT_EQ(cli("verify -i " + file), 0);
}
