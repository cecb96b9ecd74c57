#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ivqr/data.hpp"
#include "ivqr/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("ivqr_cli_" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  // Runs the CLI with `args`, capturing stderr; returns the exit status.
  int Run(const std::string& args, std::string* err = nullptr) const {
    const std::string errfile = Path("stderr.txt");
    const std::string cmd = std::string("cd '") + dir_.string() + "' && '" IVQR_CLI_PATH "' " +
                            args + " > '" + Path("stdout.txt") + "' 2> '" + errfile + "'";
    const int raw = std::system(cmd.c_str());
    if (err) *err = Read(errfile);
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  }

  static std::string Read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  void Write(const std::string& name, const std::string& content) const {
    std::ofstream(Path(name), std::ios::binary) << content;
  }

  // Small simulated dataset plus schema on disk.
  void WriteDataset(Eigen::Index n) const {
    ivqr::sim::DgpConfig cfg;
    cfg.n = n;
    cfg.seed = 3;
    ivqr::WriteCsv(ivqr::sim::Generate(cfg), Path("data.csv"));
    Write("schema.json",
          R"({"outcome": "y", "endogenous": ["D1", "D2", "D3"], "exogenous": [],)"
          R"( "instruments": ["Z1", "Z2", "Z3"], "intercept": true})");
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, FitWritesReportAndSidecar) {
  WriteDataset(40);
  ASSERT_EQ(Run("fit --data data.csv --schema schema.json --taus 0.5 -o fit.md"), 0);
  const std::string md = Read(Path("fit.md"));
  EXPECT_NE(md.find("tau = 0.5"), std::string::npos);
  EXPECT_NE(md.find("ProvedOptimal"), std::string::npos);
  const json side = json::parse(Read(Path("fit.md.json")));
  EXPECT_EQ(side["tool"], "ivqr");
  EXPECT_EQ(side["command"], "fit");
  EXPECT_TRUE(side.contains("version"));
  EXPECT_EQ(side["config"]["taus"], json::array({0.5}));
  ASSERT_EQ(side["results"].size(), 1u);
  EXPECT_EQ(side["results"][0]["fit"]["theta_hat"].size(), 4u);
  EXPECT_EQ(side["results"][0]["fit"]["sign_vector"].get<std::string>().size(), 40u);
  // No temporaries left behind.
  for (const auto& entry : fs::directory_iterator(dir_)) {
    EXPECT_EQ(entry.path().string().find(".tmp."), std::string::npos);
  }
}

TEST_F(CliTest, FitJsonFormatAndNodeLog) {
  WriteDataset(30);
  ASSERT_EQ(Run("fit --data data.csv --schema schema.json --taus 0.25,0.75 --format json "
                "--node-log nodes.jsonl -o fit.json"),
            0);
  const json rep = json::parse(Read(Path("fit.json")));
  EXPECT_EQ(rep["results"].size(), 2u);
  EXPECT_FALSE(fs::exists(Path("fit.json.json")));
  EXPECT_FALSE(Read(Path("nodes.jsonl")).empty());
}

TEST_F(CliTest, MissingFileIsIoError) {
  WriteDataset(20);
  std::string err;
  EXPECT_EQ(Run("fit --data nope.csv --schema schema.json", &err), 2);
  EXPECT_NE(err.find("nope.csv"), std::string::npos) << err;
}

TEST_F(CliTest, InvalidQuantileIsInputError) {
  WriteDataset(20);
  std::string err;
  EXPECT_EQ(Run("fit --data data.csv --schema schema.json --taus 1.5", &err), 3);
  EXPECT_NE(err.find("tau"), std::string::npos) << err;
}

TEST_F(CliTest, SchemaErrorsAreInputErrors) {
  WriteDataset(20);
  Write("bad.json", R"({"outcome": "y", "endogenous": ["nope"], "instruments": ["Z1"]})");
  EXPECT_EQ(Run("fit --data data.csv --schema bad.json"), 3);
  EXPECT_EQ(Run("fit --data data.csv"), 3);
  EXPECT_EQ(Run("fit --data data.csv --schema schema.json --format xml"), 3);
}

TEST_F(CliTest, SimulateIsDeterministicAcrossRunsAndThreads) {
  const std::string base = "simulate --n 30 --reps 6 --seed 9 --no-population-se --format csv ";
  ASSERT_EQ(Run(base + "--threads 1 -o a.csv"), 0);
  ASSERT_EQ(Run(base + "--threads 1 -o b.csv"), 0);
  ASSERT_EQ(Run(base + "--threads 3 -o c.csv"), 0);
  const std::string a = Read(Path("a.csv"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, Read(Path("b.csv")));
  EXPECT_EQ(a, Read(Path("c.csv")));
  EXPECT_TRUE(fs::exists(Path("a.csv.json")));
}

TEST_F(CliTest, SimulateSingleRepIsWellFormed) {
  ASSERT_EQ(Run("simulate --n 30 --reps 1 --no-population-se --format json -o s.json"), 0);
  const json rep = json::parse(Read(Path("s.json")));
  const json& rows = rep["summary"]["rows"];
  ASSERT_EQ(rows.size(), 12u);
  for (const auto& r : rows) {
    EXPECT_EQ(r["used"], 1);
    EXPECT_EQ(r["sd"], 0.0);
    EXPECT_EQ(r["coverage"].size(), 3u);
  }
}

TEST_F(CliTest, ThreadsFromEnvironment) {
  EXPECT_EQ(Run("simulate --n 20 --reps 2 --no-population-se --format json -o s.json"), 0);
  std::string err;
  const int code = std::system(("cd '" + dir_.string() + "' && IVQR_THREADS=abc '" IVQR_CLI_PATH
                                "' simulate --n 20 --reps 1 > /dev/null 2>&1")
                                   .c_str());
  EXPECT_EQ(WEXITSTATUS(code), 3);
}

TEST_F(CliTest, OracleAgreesOnSmallInstances) {
  ASSERT_EQ(Run("oracle --instances 20 --n 8 --p 2 --format json -o o.json"), 0);
  const json rep = json::parse(Read(Path("o.json")));
  EXPECT_EQ(rep["checked"], 20);
  EXPECT_EQ(rep["disagreements"], 0);
}

TEST_F(CliTest, OracleDetectsHalvedBigM) {
  std::string err;
  EXPECT_EQ(Run("oracle --instances 20 --n 8 --p 2 --inject-halved-big-m --log bad.json", &err), 5);
  const json log = json::parse(Read(Path("bad.json")));
  ASSERT_GT(log["discrepancies"].size(), 0u);
  const json& first = log["discrepancies"][0];
  EXPECT_TRUE(first["instance"].contains("y"));
  EXPECT_TRUE(first["instance"].contains("big_m_used"));
  EXPECT_EQ(first["instance"]["y"].size(), 8u);
}

TEST_F(CliTest, OracleRefusesLargeN) {
  std::string err;
  EXPECT_EQ(Run("oracle --n 30", &err), 3);
  EXPECT_NE(err.find("TooLarge"), std::string::npos) << err;
}
