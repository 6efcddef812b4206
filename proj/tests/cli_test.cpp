#include "lr/cli.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lr::cli {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Captured {
  int code;
  std::string out;
  std::string diag;
};

Captured run_job(const JobConfig& cfg) {
  std::ostringstream out, diag;
  const int code = run(cfg, out, diag);
  return {code, out.str(), diag.str()};
}

JobConfig job(const std::string& command, std::uint64_t limit) {
  JobConfig cfg;
  cfg.command = command;
  cfg.limit = limit;
  cfg.threads = 1;
  return cfg;
}

// Runs the real binary; returns its exit status and stdout.
std::pair<int, std::string> run_tool(const std::string& args) {
  const std::string cmd = std::string(LRTOOL_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

class CliFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("lr_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST(Cli, ShiftedRow) {
  auto cfg = job("shifted", 100);
  cfg.a = -1;
  cfg.theta = Theta::parse("0.5");
  const auto r = run_job(cfg);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "x,a,theta,residue,count_p,delta_hat,count_q,violations\n100,-1,0.5,1,8,0.368414,5,0\n");
}

TEST(Cli, ScanEqualTotientTriple) {
  auto cfg = job("scan-equal", 5188);
  cfg.function = FunctionId::phi();
  const auto r = run_job(cfg);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out,
            "function,kind,n,k,value\nphi,equal,5185,3,2592\n\n"
            "function,kind,x,longest_k\nphi,equal,10,2\nphi,equal,100,2\nphi,equal,1000,2\nphi,equal,5188,3\n");
  EXPECT_NE(r.diag.find("F_phi(5188) = 3"), std::string::npos);
}

TEST(Cli, MonotoneValueColumn) {
  auto cfg = job("scan-monotone", 10);
  const auto r = run_job(cfg);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("lambda,nonincreasing,4,2,4:2\n"), std::string::npos);
}

TEST(Cli, TheoremMertensEstimate) {
  auto cfg = job("theorem-table", 10);
  cfg.xs = {4, 10};
  EXPECT_EQ(run_job(cfg).out, "x,F_lambda,bound\n4,2,1.62008\n10,2,3.42792\n");

  EXPECT_EQ(run_job(job("mertens", 12)).out, "limit,max_ratio,argmax,lambda_le_n\n12,2.56344,12,true\n");

  auto est = job("estimate-c", 100);
  est.xs = {100};
  est.theta = Theta::parse("0.5");
  EXPECT_EQ(run_job(est).out, "x,theta,residue,count_q,C\n100,0.5,1,5,2.30259\nmin,0.5,1,,2.30259\n");
}

TEST(Cli, Lemma2BothResidues) {
  const auto r = run_job(job("verify-lemma2", 100000));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out,
            "x,theta,residue,count_p,count_q,partition_sum,violations,identity_holds\n"
            "100000,0.677,1,2171,1504,2171,0,true\n"
            "100000,0.677,-1,2202,1523,2202,0,true\n");
}

TEST(Cli, Lemma2SmallThetaReportsViolationsWithoutFailing) {
  auto cfg = job("verify-lemma2", 100);
  cfg.theta = Theta::parse("0.3");
  cfg.residue = 1;
  const auto r = run_job(cfg);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.diag.find("first p = 71"), std::string::npos);
}

TEST(Cli, Lemma3ExitCodes) {
  auto ok = job("verify-lemma3", 20000);
  ok.C = 1.0;
  const auto good = run_job(ok);
  EXPECT_EQ(good.code, 0) << good.diag;
  EXPECT_NE(good.out.find("\"function\":\"lambda\""), std::string::npos);
  const auto first = nlohmann::json::parse(good.out.substr(0, good.out.find('\n')));
  EXPECT_EQ(first["n"], 0);
  EXPECT_EQ(first["k"], 2);
  EXPECT_EQ(first["T"], "1");

  auto even = job("verify-lemma3", 1000);
  even.function = FunctionId::sigma(2);
  even.C = 1.0;
  const auto bad = run_job(even);
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.diag.find("counterexample m = 2, p = 2"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_job(job("nope", 100)).code, 2);
  EXPECT_EQ(run_job(job("scan-equal", 1)).code, 2);
  auto cfg = job("scan-equal", 100);
  cfg.segment_size = 1;
  EXPECT_EQ(run_job(cfg).code, 2);
  auto res = job("verify-lemma2", 100);
  res.residue = 3;
  EXPECT_EQ(run_job(res).code, 2);
}

TEST(Cli, ThreadResolution) {
  EXPECT_EQ(resolve_threads(3), 3u);
  setenv("LR_THREADS", "5", 1);
  EXPECT_EQ(resolve_threads(0), 5u);
  EXPECT_EQ(resolve_threads(2), 2u);
  unsetenv("LR_THREADS");
  EXPECT_GE(resolve_threads(0), 1u);
}

TEST_F(CliFiles, OutputFilesAndDefaultTablePath) {
  auto cfg = job("scan-equal", 100000);
  cfg.out = (dir_ / "runs.csv").string();
  const auto r = run_job(cfg);
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(slurp(dir_ / "runs.csv").rfind("function,kind,n,k,value\nlambda,equal,0,2,1\n", 0), 0u);
  EXPECT_EQ(slurp(dir_ / "runs.table.csv"),
            "function,kind,x,longest_k\nlambda,equal,10,2\nlambda,equal,100,2\nlambda,equal,1000,2\n"
            "lambda,equal,10000,2\nlambda,equal,100000,2\n");
}

TEST_F(CliFiles, InterruptAndResumeGiveSameFiles) {
  auto full = job("scan-monotone", 200000);
  full.function = FunctionId::phi();
  full.segment_size = 4096;
  full.out = (dir_ / "full.csv").string();
  ASSERT_EQ(run_job(full).code, 0);

  auto part = full;
  part.out = (dir_ / "resumed.csv").string();
  part.checkpoint = (dir_ / "scan.ckpt").string();
  part.stop_after = 10;
  const auto stopped = run_job(part);
  ASSERT_EQ(stopped.code, 0);
  EXPECT_FALSE(fs::exists(dir_ / "resumed.csv"));
  EXPECT_EQ(slurp(dir_ / "scan.ckpt").substr(0, 4), "LRSV");
  part.stop_after = 0;
  ASSERT_EQ(run_job(part).code, 0);
  EXPECT_EQ(slurp(dir_ / "resumed.csv"), slurp(dir_ / "full.csv"));
  EXPECT_EQ(slurp(dir_ / "resumed.table.csv"), slurp(dir_ / "full.table.csv"));
}

TEST_F(CliFiles, RepeatedRunsAreByteIdentical) {
  for (const char* cmd : {"scan-equal", "shifted", "verify-lemma2"}) {
    auto cfg = job(cmd, 50000);
    cfg.out = (dir_ / "a.csv").string();
    ASSERT_EQ(run_job(cfg).code, 0);
    cfg.out = (dir_ / "b.csv").string();
    cfg.threads = 3;
    ASSERT_EQ(run_job(cfg).code, 0);
    EXPECT_EQ(slurp(dir_ / "a.csv"), slurp(dir_ / "b.csv")) << cmd;
  }
}

TEST(CliBinary, ParsesFlagsAndExitCodes) {
  auto [code, out] = run_tool("shifted --limit 100 --a -1 --theta 0.5");
  EXPECT_EQ(code, 0);
  EXPECT_NE(out.find("100,-1,0.5,1,8,"), std::string::npos);

  std::tie(code, out) = run_tool("scan-equal --function phi --limit 5188");
  EXPECT_EQ(code, 0);
  EXPECT_NE(out.find("phi,equal,5185,3,2592"), std::string::npos);

  std::tie(code, out) = run_tool("scan-equal --function lambda --limit 1e4 --x-values 100,1000");
  EXPECT_EQ(code, 0);
  EXPECT_NE(out.find("lambda,equal,1000,2"), std::string::npos);

  EXPECT_EQ(run_tool("").first, 2);
  EXPECT_EQ(run_tool("scan-equal --function mu --limit 100").first, 2);
  EXPECT_EQ(run_tool("shifted --limit 100 --theta 1.5").first, 2);
  EXPECT_EQ(run_tool("verify-lemma3 --function sigma-d --d 2 --limit 100 --C 1").first, 1);
  EXPECT_EQ(run_tool("--help").first, 0);
}

}  // namespace
}  // namespace lr::cli
