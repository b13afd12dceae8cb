#include "exhaust_tools/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "exhaust_tools/output.hpp"

namespace exhaust::tools {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "exhaust");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("exhaust_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    write_file(p, text);
    return p.string();
  }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

const std::string kStrictConfig =
    R"({"workers": [{"lambda": 3, "mu": 1}, {"lambda": 5, "mu": 1}, {"lambda": 1.05, "mu": 1}], "budget": 2})";

TEST(Fmt, NineSignificantDigits) {
  EXPECT_EQ(fmt(40.0 / 23.0), "1.73913043");
  EXPECT_EQ(fmt(0.0), "0");
  EXPECT_EQ(fmt(1.0), "1");
}

TEST(CsvTable, WritesHeaderAndRows) {
  CsvTable t({"a", "b"});
  t.add_row({"1", "2"});
  EXPECT_EQ(t.str(), "a,b\n1,2\n");
}

TEST(RenderSvg, Deterministic) {
  Chart c{"t", "x", "y", ChartKind::kLine, {{"s", {0, 1, 2}, {1, 3, 2}}}};
  const auto a = render_svg(c);
  EXPECT_EQ(a, render_svg(c));
  EXPECT_NE(a.find("<svg"), std::string::npos);
}

TEST_F(CliTest, SteadyStrict) {
  const auto r = cli({"steady", "--lambda", "2", "--mu", "1", "--alpha", "1"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("utility 0.173913043"), std::string::npos) << r.out;
}

TEST_F(CliTest, SteadyModerateJson) {
  const auto r = cli({"steady", "--lambda", "2", "--mu", "1", "--alpha", "1", "--ps", "0.5", "--p", "1",
                      "--mode", "moderate", "--json"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["utility"].get<double>(), 11.0 / 49, 1e-14);
}

TEST_F(CliTest, SteadyRejectsUnstableUnlessAllowed) {
  EXPECT_EQ(cli({"steady", "--lambda", "1", "--mu", "2", "--alpha", "1"}).code, kExitInvalid);
  const auto r = cli({"steady", "--lambda", "1", "--mu", "2", "--alpha", "1", "--allow-unstable"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("warning"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(cli({}).code, kExitInvalid);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitInvalid);
  const auto r = cli({"steady", "--lambda", "2", "--mu", "1", "--alpha", "1", "--bogus"});
  EXPECT_EQ(r.code, kExitInvalid);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
  EXPECT_EQ(cli({"reproduce", "fig7"}).code, kExitInvalid);
}

TEST_F(CliTest, SolveThenVerifyRoundTrips) {
  const auto config = write("c.json", kStrictConfig);
  const auto solution = (dir_ / "s.json").string();
  const auto solved = cli({"solve", "--config", config, "--output", solution});
  ASSERT_EQ(solved.code, kExitOk) << solved.err;
  const auto s = json::parse(slurp(solution));
  EXPECT_EQ(s["kind"], "solution");
  EXPECT_EQ(s["policy"]["alpha"].size(), 3u);

  const auto verified = cli({"verify", solution});
  EXPECT_EQ(verified.code, kExitOk) << verified.out;
  EXPECT_NE(verified.out.find("certificate valid"), std::string::npos);
}

TEST_F(CliTest, VerifyCatchesTampering) {
  const auto config = write("c.json", kStrictConfig);
  const auto solution = (dir_ / "s.json").string();
  ASSERT_EQ(cli({"solve", "--config", config, "--output", solution}).code, kExitOk);
  auto s = json::parse(slurp(solution));
  s["utility"] = s["utility"].get<double>() + 1e-3;
  const auto bad_utility = write("u.json", s.dump());
  EXPECT_EQ(cli({"verify", bad_utility}).code, kExitInvalid);

  s = json::parse(slurp(solution));
  auto alpha = s["policy"]["alpha"].get<std::vector<double>>();
  alpha[0] += 0.05;
  alpha[1] -= 0.05;
  s["policy"]["alpha"] = alpha;
  const auto bad_alpha = write("a.json", s.dump());
  const auto r = cli({"verify", bad_alpha});
  EXPECT_EQ(r.code, kExitInvalid);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

TEST_F(CliTest, ModerateSolveAndVerify) {
  const auto solution = (dir_ / "m.json").string();
  const auto r = cli({"solve", "--config", std::string(EXHAUST_CONFIG_DIR) + "/fig6_c10.json", "--output",
                      solution});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("converged yes"), std::string::npos);
  EXPECT_EQ(cli({"verify", solution}).code, kExitOk);
}

TEST_F(CliTest, NonConvergenceExitsTwo) {
  const auto config = write("m.json", R"({"workers": [{"lambda": 2.5, "mu": 1, "ps": 0.7},
      {"lambda": 3.5, "mu": 1, "ps": 0.7}], "budget": 10, "mode": "moderate",
      "solver": {"rho": 1e-12, "node_cap": 2}})");
  const auto r = cli({"solve", "--config", config, "--output", (dir_ / "s.json").string()});
  EXPECT_EQ(r.code, kExitNotConverged) << r.out << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "s.json"));
}

TEST_F(CliTest, BadConfigIsRejected) {
  const auto config = write("bad.json", "{\n  \"budget\": -1,\n  \"workers\": [{\"lambda\": 2, \"mu\": 1}]\n}");
  const auto r = cli({"solve", "--config", config, "--output", (dir_ / "s.json").string()});
  EXPECT_EQ(r.code, kExitInvalid);
  EXPECT_NE(r.err.find("budget"), std::string::npos);
  const auto broken = write("broken.json", "{\n  \"budget\": 1,,\n}");
  const auto r2 = cli({"solve", "--config", broken});
  EXPECT_EQ(r2.code, kExitInvalid);
  EXPECT_NE(r2.err.find("line 2"), std::string::npos) << r2.err;
}

TEST_F(CliTest, OracleAndSimulate) {
  const auto config = write("c.json", kStrictConfig);
  const auto o = cli({"oracle", "--config", config, "--alpha-steps", "41"});
  EXPECT_EQ(o.code, kExitOk) << o.err;
  EXPECT_NE(o.out.find("grid_error"), std::string::npos);

  const auto stats = (dir_ / "sim.json").string();
  const auto s = cli({"simulate", "--config", config, "--horizon", "2000", "--seed", "5", "--threads", "2",
                      "--output", stats});
  ASSERT_EQ(s.code, kExitOk) << s.err;
  const auto j = json::parse(slurp(stats));
  EXPECT_EQ(j["seed"], 5);
  EXPECT_EQ(j["workers"].size(), 3u);
  const auto again = cli({"simulate", "--config", config, "--horizon", "2000", "--seed", "5", "--threads", "1"});
  EXPECT_EQ(again.out.substr(0, again.out.find("wrote")), s.out.substr(0, s.out.find("wrote")));
}

TEST_F(CliTest, ReproduceFig4WritesArtifacts) {
  const auto r = cli({"reproduce", "fig4", "--out", dir_.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* ext : {".csv", ".json", ".svg"}) EXPECT_TRUE(fs::exists(dir_ / (std::string("fig4") + ext)));
  const auto first = slurp(dir_ / "fig4.csv");
  ASSERT_EQ(cli({"reproduce", "fig4", "--out", dir_.string()}).code, kExitOk);
  EXPECT_EQ(first, slurp(dir_ / "fig4.csv"));
  EXPECT_EQ(first.substr(0, first.find('\n')), "worker_index,q,lambda,mu,alpha");
}

}  // namespace
}  // namespace exhaust::tools
