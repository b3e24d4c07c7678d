// Runs the magstep binary as a subprocess.
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  std::string cmd = std::string(MAGSTEP_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string tmp(const std::string& name) { return ::testing::TempDir() + "magstep_" + name; }

}  // namespace

TEST(Cli, MinimizeSymmetricTrapping) {
  Result r = run("minimize --b1 -1 --b2 1");
  ASSERT_EQ(r.code, 0) << r.out;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["results"]["xi_b"].get<double>(), -0.7682, 1e-4);
  EXPECT_NEAR(j["results"]["beta"].get<double>(), 0.5901, 1e-4);
  EXPECT_EQ(j["config"]["b1"], "-1");
  EXPECT_TRUE(j.contains("checks"));
}

TEST(Cli, MinimizeOtherOrientationFlipsXi) {
  Result r = run("minimize --b1 1 --b2 -1");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["results"]["xi_b"].get<double>(), 0.7682, 1e-4);
  EXPECT_NEAR(j["results"]["beta"].get<double>(), 0.5901, 1e-4);
}

TEST(Cli, MomentsReportFirstMomentPass) {
  Result r = run("moments --b1 -0.5 --b2 1");
  ASSERT_EQ(r.code, 0) << r.out;
  auto j = nlohmann::json::parse(r.out);
  bool found = false;
  for (auto& c : j["checks"])
    if (c["name"] == "M1") {
      found = true;
      EXPECT_EQ(c["status"], "PASS");
      EXPECT_LT(c["value"].get<double>(), 1e-7);
    }
  EXPECT_TRUE(found);
  EXPECT_EQ(j["results"]["table"].size(), 4u);
}

TEST(Cli, CsvCarriesConfigHeaderAndVersion) {
  Result r = run("band --b1 1 --b2 -0.5 --xi-count 5 --grid-n 1001 --format csv");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("# magstep ", 0), 0u);
  EXPECT_NE(r.out.find("# command = band\n"), std::string::npos);
  EXPECT_NE(r.out.find("# grid-n = 1001\n"), std::string::npos);
  EXPECT_NE(r.out.find("\nxi,mu,residual\n"), std::string::npos);
  int rows = 0;
  std::istringstream in(r.out);
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#' && line[0] != 'x') ++rows;
  EXPECT_EQ(rows, 5);
}

TEST(Cli, IdenticalConfigGivesIdenticalBytes) {
  std::string a = tmp("a.json"), b = tmp("b.json");
  ASSERT_EQ(run("trial --b1 1 --b2 -0.5 --delta 0.04 --seed 3 --out " + a).code, 0);
  ASSERT_EQ(run("trial --b1 1 --b2 -0.5 --delta 0.04 --seed 3 --out " + b).code, 0);
  std::string sa = slurp(a);
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, slurp(b));
}

TEST(Cli, ConfigFileWithOverride) {
  std::string cfg = tmp("run.ini");
  {
    std::ofstream f(cfg);
    f << "b1 = 1\nb2 = -0.5\ngrid-n = 1001\nxi-count = 3\nformat = csv\n";
  }
  Result r = run("band --config " + cfg + " --xi-count 4");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("# xi-count = 4\n"), std::string::npos);
  EXPECT_NE(r.out.find("# b2 = -0.5\n"), std::string::npos);
}

TEST(Cli, ValidationFailureExitsWithOne) {
  EXPECT_EQ(run("minimize --b1 0 --b2 0").code, 1);
  EXPECT_EQ(run("minimize --b1 1 --b2 1").code, 1);
  EXPECT_EQ(run("band --grid-n 1000").code, 1);
  EXPECT_EQ(run("band --format xml").code, 1);
  EXPECT_EQ(run("nonsense").code, 1);
}

TEST(Cli, SolverFailureExitsWithTwo) {
  // non-trapping: the band infimum is not attained
  EXPECT_EQ(run("minimize --b1 1 --b2 0.5").code, 2);
}

TEST(Cli, ErrorRecordIsMachineReadable) {
  std::string cmd = std::string(MAGSTEP_CLI_PATH) + " minimize --b1 0 --b2 0 2>&1 >/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  ASSERT_TRUE(p);
  std::string err;
  char buf[1024];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) err.append(buf, n);
  pclose(p);
  auto pos = err.find("{\"error\"");
  ASSERT_NE(pos, std::string::npos) << err;
  auto j = nlohmann::json::parse(err.substr(pos, err.find('\n', pos) - pos));
  EXPECT_EQ(j["error"]["kind"], "ZeroField");
  EXPECT_EQ(j["error"]["exit_code"], 1);
}

TEST(Cli, VerifySingleCriterion) {
  Result r = run("verify --only 3");
  EXPECT_EQ(r.code, 0) << r.out;
  auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j["results"]["criteria"].size(), 1u);
  EXPECT_EQ(j["results"]["criteria"][0]["status"], "PASS");
}
