#include <cmath>

#include <gtest/gtest.h>

#include <json.hpp>

#include "cli_runner.hpp"

using nlohmann::json;

TEST(Cli, GkListsAtomSums) {
  auto r = run_cli("gk --model " + sample("delta1.json") + " --k 3 --xmax 10");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out,
            "value,exact,min_jumps,representations\n"
            "1.000000000000e+00,1,1,1.000000000000e+00\n"
            "2.000000000000e+00,2,2,1.000000000000e+00\n"
            "3.000000000000e+00,3,3,1.000000000000e+00\n");
}

TEST(Cli, EvalColumnsAndRoutes) {
  auto r = run_cli("eval --model " + sample("delta1.json") + " --x 0.25,1,3.5");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,u,du_left,du_right,err_est,method");
  std::getline(in, line);
  EXPECT_NE(line.find(",series"), std::string::npos);
  std::getline(in, line);
  EXPECT_NE(line.find(",volterra"), std::string::npos);
  // u'(1-) = -1/e, u'(1+) = 1 - 1/e
  std::vector<double> v;
  std::istringstream row(line);
  for (std::string cell; std::getline(row, cell, ',') && v.size() < 5;) v.push_back(std::stod(cell));
  EXPECT_NEAR(v[2], -std::exp(-1.0), 1e-8);
  EXPECT_NEAR(v[3], 1.0 - std::exp(-1.0), 1e-8);
  EXPECT_LE(std::fabs(v[3] - 1.0 + std::exp(-1.0)), v[4]);
}

TEST(Cli, JsonMirrorsCsv) {
  auto r = run_cli("eval --model " + sample("delta1.json") + " --x 0.4 --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_NEAR(j[0]["u"].get<double>(), 0.6703200460, 1e-9);
  EXPECT_EQ(j[0]["method"], "series");
}

TEST(Cli, ValidationErrorsExitTwo) {
  auto bad = std::filesystem::temp_directory_path() / "subpot_cli_bad.json";
  std::ofstream(bad) << R"({"drift": 0, "ac": {"kind": "stable", "C": 1, "alpha": 1.2}})";
  auto r = run_cli("validate --model " + bad.string());
  EXPECT_EQ(r.code, 2);
  auto j = json::parse(r.err);
  EXPECT_EQ(j["kind"], "validation");
  ASSERT_EQ(j["violations"].size(), 2u);
  EXPECT_EQ(j["violations"][0]["invariant"], "drift > 0");
  EXPECT_EQ(j["violations"][1]["invariant"], "alpha in (0,1)");
  EXPECT_EQ(run_cli("validate --model " + sample("delta1.json")).code, 0);
  EXPECT_EQ(run_cli("eval --model " + sample("delta1.json") + " --x 2:1:5").code, 2);
  EXPECT_EQ(run_cli("eval --model " + sample("delta1.json")).code, 2);
}

TEST(Cli, PreconditionErrorsExitFour) {
  auto r = run_cli("asymptotics --model " + sample("stable.json") + " --law du-infinity");
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(json::parse(r.err)["error"], "infinite-mean");
}

TEST(Cli, AccuracyErrorsExitThree) {
  auto r = run_cli("invert --model " + sample("delta1.json") + " --x 1.5 --theta-cut 3");
  EXPECT_EQ(r.code, 3) << r.out << r.err;
  auto j = json::parse(r.err);
  EXPECT_EQ(j["kind"], "accuracy");
  EXPECT_TRUE(j.contains("achieved"));
}

TEST(Cli, CrosscheckStable) {
  auto r = run_cli("crosscheck --model " + sample("stable.json") + " --lambda 3 --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_LT(j[0]["diff"].get<double>(), 1e-6);
}

TEST(Cli, SimulateIsDeterministicAcrossThreads) {
  std::string args = "simulate --model " + sample("delta1.json") + " --x 0.5,1.5 --paths 20000 --seed 4";
  auto a = run_cli(args + " --threads 1");
  auto b = run_cli(args + " --threads 8");
  auto c = run_cli(args, "SUBPOT_THREADS=2");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  EXPECT_EQ(a.out.substr(0, a.out.find('\n')), "x,q,p_hat,ci95,n_paths,eps,seed");
}

TEST(Cli, OutputFileIsWritten) {
  auto p = std::filesystem::temp_directory_path() / "subpot_cli_grid.csv";
  std::filesystem::remove(p);
  auto r = run_cli("conv --model " + sample("delta1.json") + " --n 2 --xmax 2 --degree 4 --out " + p.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(p).rfind("x,n,value_left,value_right\n", 0), 0u);
}

TEST(Cli, SmoothnessReportsJump) {
  auto r = run_cli("smoothness --model " + sample("delta1.json") + " --x 2 --kmax 2 --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[1]["present"], "true");
  EXPECT_NEAR(j[1]["measured"].get<double>(), 1.0, 1e-4);
  EXPECT_EQ(j[0]["present"], "false");
}
