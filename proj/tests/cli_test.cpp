// Copyright 2026 The dyngrow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dyngrow/cli.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "dot_checker.hpp"
#include "dyngrow/model_io.hpp"
#include "test_util.hpp"

namespace dyngrow {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int status;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = run_cli(args, out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dyngrow_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::vector<std::string> train_args(const fs::path& out, const std::string& policy) const {
    return {"train",
            "--images", (testing::data_dir() / "mnist5k-images-idx3-ubyte.gz").string(),
            "--labels", (testing::data_dir() / "mnist5k-labels-idx1-ubyte.gz").string(),
            "--limit", "300",
            "--generations", "3",
            "--epochs", "1",
            "--orchestrator", "constant",
            "--policy", policy,
            "--sim-epochs", "1",
            "--max-iterations", "3",
            "--time-limit", "30",
            "--seed", "0",
            "--out", out.string()};
  }

  fs::path dir_;
};

TEST_F(Cli, RandomPolicyReplaysIdentically) {
  const CliResult a = cli(train_args(dir_ / "a", "random"));
  ASSERT_EQ(a.status, 0) << a.err;
  const CliResult b = cli(train_args(dir_ / "b", "random"));
  ASSERT_EQ(b.status, 0) << b.err;
  EXPECT_EQ(slurp(dir_ / "a" / "history.csv"), slurp(dir_ / "b" / "history.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "model.bin"), slurp(dir_ / "b" / "model.bin"));
  EXPECT_NE(a.out.find("final test accuracy"), std::string::npos);
}

TEST_F(Cli, TrainWritesArtifacts) {
  const CliResult r = cli(train_args(dir_ / "run", "mcts"));
  ASSERT_EQ(r.status, 0) << r.err;
  const fs::path run = dir_ / "run";
  for (const char* f : {"model.bin", "history.csv", "manifest.json", "search.csv"})
    EXPECT_TRUE(fs::exists(run / f)) << f;
  for (int g = 0; g < 3; ++g) {
    char name[32];
    std::snprintf(name, sizeof name, "gen_%03d.dot", g);
    const auto dot = testing::parse_dot(slurp(run / "generations" / name));
    EXPECT_TRUE(dot.has_value()) << name;
  }
  EXPECT_FALSE(fs::exists(run / "generations" / "gen_003.dot"));

  const auto manifest = nlohmann::json::parse(slurp(run / "manifest.json"));
  EXPECT_EQ(manifest.at("seed"), 0);
  EXPECT_EQ(manifest.at("actions").size(), 2u);
  EXPECT_EQ(manifest.at("artifacts").at("model_fnv1a64"), hex64(fnv1a64(read_file(run / "model.bin"))));
  EXPECT_EQ(manifest.at("datasets").at("images"),
            hex64(fnv1a64(read_file(testing::data_dir() / "mnist5k-images-idx3-ubyte.gz"))));
  EXPECT_EQ(manifest.at("config").at("policy"), "mcts");

  const CliResult e = cli({"eval", "--model", (run / "model.bin").string(), "--images",
                     (testing::data_dir() / "mnist5k-images-idx3-ubyte.gz").string(), "--labels",
                     (testing::data_dir() / "mnist5k-labels-idx1-ubyte.gz").string()});
  ASSERT_EQ(e.status, 0) << e.err;
  EXPECT_EQ(e.out.rfind("accuracy ", 0), 0u);

  const CliResult d = cli({"export-dot", "--model", (run / "model.bin").string(), "--out",
                     (dir_ / "m.dot").string()});
  ASSERT_EQ(d.status, 0) << d.err;
  EXPECT_TRUE(testing::parse_dot(slurp(dir_ / "m.dot")).has_value());
  EXPECT_EQ(slurp(dir_ / "m.dot"), slurp(run / "generations" / "gen_002.dot"));
}

TEST_F(Cli, ManifestReproducesModelHash) {
  ASSERT_EQ(cli(train_args(dir_ / "first", "mcts")).status, 0);
  const CliResult again = cli({"train", "--manifest", (dir_ / "first" / "manifest.json").string(), "--out",
                         (dir_ / "second").string()});
  ASSERT_EQ(again.status, 0) << again.err;
  const auto m1 = nlohmann::json::parse(slurp(dir_ / "first" / "manifest.json"));
  const auto m2 = nlohmann::json::parse(slurp(dir_ / "second" / "manifest.json"));
  EXPECT_EQ(m1.at("artifacts").at("model_fnv1a64"), m2.at("artifacts").at("model_fnv1a64"));
  EXPECT_EQ(m1.at("actions"), m2.at("actions"));
  EXPECT_EQ(slurp(dir_ / "first" / "history.csv"), slurp(dir_ / "second" / "history.csv"));
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  {
    std::ofstream cfg(dir_ / "run.cfg");
    cfg << "# quick run\n"
        << "images = " << (testing::data_dir() / "mnist5k-images-idx3-ubyte.gz").string() << "\n"
        << "labels = " << (testing::data_dir() / "mnist5k-labels-idx1-ubyte.gz").string() << "\n"
        << "limit = 200\ngenerations = 5\nepochs = 1\npolicy = random\nseed = 3\n";
  }
  const CliResult r = cli({"train", "--config", (dir_ / "run.cfg").string(), "--generations", "2", "--out",
                     (dir_ / "out").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto manifest = nlohmann::json::parse(slurp(dir_ / "out" / "manifest.json"));
  EXPECT_EQ(manifest.at("config").at("generations"), "2");
  EXPECT_EQ(manifest.at("config").at("limit"), "200");
  EXPECT_EQ(manifest.at("seed"), 3);

  const auto kv = read_config_file(dir_ / "run.cfg");
  EXPECT_EQ(kv.at("policy"), "random");
  std::ofstream(dir_ / "bad.cfg") << "no equals sign here\n";
  EXPECT_THROW(read_config_file((dir_ / "bad.cfg").string()), std::runtime_error);
}

TEST_F(Cli, Errors) {
  const CliResult unknown = cli({"train", "--bogus"});
  EXPECT_EQ(unknown.status, 2);
  EXPECT_EQ(cli({}).status, 2);
  EXPECT_EQ(cli({"train", "--policy", "sideways"}).status, 2);

  const std::string missing = (dir_ / "nowhere-images.gz").string();
  const CliResult r = cli({"train", "--images", missing, "--labels", missing, "--out", (dir_ / "x").string()});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;

  EXPECT_EQ(cli({"eval", "--model", (dir_ / "none.bin").string(), "--images", missing, "--labels", missing})
                .status,
            1);
}

TEST_F(Cli, TransformTimeseries) {
  {
    std::ofstream csv(dir_ / "ts.csv");
    csv << "dims=2,length=5,classes=2\n";
    csv << "0,1,2,3,4,5,5,4,3,2,1\n";
    csv << "1,0,1,0,1,0,2,2,2,2,2\n";
    csv << "0,2,3,4,5,6,6,5,4,3,2\n";
    csv << "1,1,0,1,0,1,3,2,3,2,3\n";
  }
  const CliResult r = cli({"transform-ts", "--timeseries", (dir_ / "ts.csv").string(), "--out",
                     (dir_ / "rp").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  for (int d = 0; d < 2; ++d) {
    const std::string stem = "dim" + std::to_string(d);
    EXPECT_TRUE(fs::exists(dir_ / "rp" / (stem + "-images-idx3-ubyte")));
    EXPECT_TRUE(fs::exists(dir_ / "rp" / (stem + "-labels-idx1-ubyte")));
  }
  const CliResult t = cli({"train", "--timeseries", (dir_ / "ts.csv").string(), "--separate-inputs", "true",
                     "--test-fraction", "0.5", "--per-class", "1", "--generations", "2", "--epochs", "1",
                     "--policy", "random", "--out", (dir_ / "tsrun").string()});
  EXPECT_EQ(t.status, 0) << t.err;
}

}  // namespace
}  // namespace dyngrow
