#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + HOLDPP_CLI_PATH + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) r.out += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("holdpp_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string at(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST(Cli, ParamsSecondOrder) {
  const auto r = run("params --n 2");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("lambda*      -1.000000000000000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("xi           2.000000000000000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("gamma_1      1.000000000000000"), std::string::npos) << r.out;
}

TEST(Cli, ParamsThirdOrder) {
  const auto r = run("params --n 3");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("-1.732050807568877"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("5.196152422706632"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("2.828427124746190"), std::string::npos) << r.out;
}

TEST(Cli, ParamsRejectsFirstOrder) {
  const auto r = run("params --n 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("--n >= 2"), std::string::npos) << r.out;
}

TEST(Cli, UnknownSubcommandIsUsageError) { EXPECT_EQ(run("frobnicate").code, 2); }

TEST(Cli, VerifyAllPasses) {
  const auto r = run("verify --all --n-max 6 --trials 200");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("all checks passed"), std::string::npos);
}

TEST(Cli, VerifySpectralToTwelve) {
  const auto r = run("verify --spectral --n-max 12");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("n=2..12"), std::string::npos) << r.out;
}

TEST(Cli, MutationIsDetected) {
  for (const char* m : {"flip-gamma2", "perturb-gamma2"}) {
    const auto r = run(std::string("verify --all --n-max 6 --trials 50 --mutate ") + m);
    EXPECT_EQ(r.code, 1) << m << "\n" << r.out;
    EXPECT_NE(r.out.find("FAIL"), std::string::npos) << r.out;
  }
}

TEST_F(CliTest, VerifyManifest) {
  const auto r = run("verify --spectral --n-max 5 --manifest " + at("v.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(slurp(at("v.json")));
  EXPECT_EQ(j["subcommand"], "verify");
  EXPECT_EQ(j["config"]["n_max"], 5);
  EXPECT_TRUE(j.contains("start") && j.contains("end") && j.contains("version"));
}

TEST_F(CliTest, PlotEmptyCsvFailsWithoutOutput) {
  std::ofstream(at("empty.csv")).close();
  const auto r = run("plot --samples " + at("empty.csv") + " --out " + at("fig.svg"));
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_FALSE(fs::exists(at("fig.svg")));
  EXPECT_FALSE(fs::exists(at("fig.svg.manifest.json")));

  std::ofstream(at("header.csv")) << "dim_0,dim_1\n";
  EXPECT_EQ(run("plot --samples " + at("header.csv") + " --out " + at("fig.svg")).code, 3);
  EXPECT_FALSE(fs::exists(at("fig.svg")));
}

TEST_F(CliTest, MissingCheckpointIsIoError) {
  EXPECT_EQ(run("sample --ckpt " + at("nope.hpp1") + " --out " + at("s.csv")).code, 3);
}

TEST_F(CliTest, TrainSamplePlotPipeline) {
  const std::string ck = at("ck.hpp1");
  auto r = run("train --dataset eight_gaussians --n 3 --iters 60 --batch 32 --hidden 16,16 --count 500 --quiet --seed 4 --out " +
               ck + " --data-out " + at("data.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  ASSERT_TRUE(fs::exists(ck));
  const auto tm = nlohmann::json::parse(slurp(ck + ".manifest.json"));
  EXPECT_EQ(tm["subcommand"], "train");
  EXPECT_EQ(tm["seed"], 4);
  EXPECT_EQ(tm["config"]["iters"], 60);
  EXPECT_FALSE(tm["results"]["loss_trace"].empty());

  r = run("sample --ckpt " + ck + " --count 200 --steps 50 --n 3 --seed 5 --out " + at("s.csv") + " --reference " +
          at("data.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto sm = nlohmann::json::parse(slurp(at("s.csv") + ".manifest.json"));
  EXPECT_GT(sm["results"]["energy_distance"].get<double>(), 0.0);
  std::ifstream in(at("s.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 201u);

  EXPECT_EQ(run("sample --ckpt " + ck + " --n 2 --out " + at("x.csv")).code, 2);

  r = run("plot --data " + at("data.csv") + " --samples " + at("s.csv") + " --out " + at("fig.svg"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto svg = slurp(at("fig.svg"));
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_TRUE(fs::exists(at("fig.svg.manifest.json")));

  r = run("plot --trajectory --ckpt " + ck + " --chains 3 --steps 20 --out " + at("traj.svg"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(slurp(at("traj.svg")).find("<polyline"), std::string::npos);
}

TEST_F(CliTest, SeedReproducibility) {
  const std::string common = " --dataset two_moons --n 2 --iters 20 --batch 16 --hidden 8 --count 200 --quiet";
  ASSERT_EQ(run("train" + common + " --seed 9 --out " + at("a.hpp1")).code, 0);
  ASSERT_EQ(run("train" + common + " --out " + at("b.hpp1"), "HOLDPP_SEED=9").code, 0);
  ASSERT_EQ(run("train" + common + " --seed 10 --out " + at("c.hpp1")).code, 0);
  EXPECT_EQ(slurp(at("a.hpp1")), slurp(at("b.hpp1")));
  EXPECT_NE(slurp(at("a.hpp1")), slurp(at("c.hpp1")));

  ASSERT_EQ(run("sample --ckpt " + at("a.hpp1") + " --count 50 --steps 10 --seed 3 --out " + at("s1.csv")).code, 0);
  ASSERT_EQ(run("sample --ckpt " + at("a.hpp1") + " --count 50 --steps 10 --seed 3 --out " + at("s2.csv")).code, 0);
  EXPECT_EQ(slurp(at("s1.csv")), slurp(at("s2.csv")));
}

TEST_F(CliTest, ConfigFilePrecedence) {
  std::ofstream(at("cfg.ini")) << "# small run\niters = 7\nbatch=8\nhidden = 8\ncount = 100\nt_eps = 0.01\n";
  ASSERT_EQ(run("train --config " + at("cfg.ini") + " --iters 5 --quiet --out " + at("k.hpp1")).code, 0);
  const auto j = nlohmann::json::parse(slurp(at("k.hpp1") + ".manifest.json"));
  EXPECT_EQ(j["config"]["iters"], 5);
  EXPECT_EQ(j["config"]["batch"], 8);
  EXPECT_DOUBLE_EQ(j["config"]["t_eps"].get<double>(), 0.01);
  EXPECT_DOUBLE_EQ(j["config"]["lr"].get<double>(), 1e-3);

  std::ofstream(at("bad.ini")) << "iterations = 7\n";
  EXPECT_EQ(run("train --config " + at("bad.ini") + " --out " + at("z.hpp1")).code, 2);
  EXPECT_EQ(run("train --config " + at("missing.ini") + " --out " + at("z.hpp1")).code, 3);
}

TEST(Cli, InvalidHiddenWidths) {
  EXPECT_EQ(run("train --hidden 8,x --iters 1 --out /tmp/holdpp_never.hpp1").code, 2);
  EXPECT_FALSE(fs::exists("/tmp/holdpp_never.hpp1"));
}
