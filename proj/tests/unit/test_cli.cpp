#include "ecrl/errors.hpp"
#include "ecrl_cli/commands.hpp"
#include "ecrl_cli/config.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ecrl;
using namespace ecrl::cli;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "ecrl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const std::vector<std::string> kTiny = {
    "--set", "train.total_env_steps=600", "--set", "train.warmup_steps=200", "--set", "train.eval_interval=200",
    "--set", "train.eval_goals=4",         "--set", "train.batch_size=16",    "--set", "agent.repr_k=2",
    "--set", "agent.hidden_blocks=2",      "--quiet"};

std::vector<std::string> with_tiny(std::vector<std::string> args) {
  args.insert(args.end(), kTiny.begin(), kTiny.end());
  return args;
}

class CliDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ecrl_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string dir() const { return dir_.string(); }

  fs::path dir_;
};

}  // namespace

TEST(Config, DefaultsAndNormalisation) {
  Config c;
  EXPECT_EQ(c.get("agent.group"), "c8");
  c.set("train.lr", "3.0e-4");
  EXPECT_EQ(c.get("train.lr"), "0.0003");
  c.set("entropy.auto_tune", "FALSE");
  EXPECT_EQ(c.get("entropy.auto_tune"), "false");
  EXPECT_THROW(c.set("train.bogus", "1"), ConfigError);
  EXPECT_THROW(c.set("train.batch_size", "-3"), ConfigError);
  EXPECT_THROW(c.set("train.gamma", "abc"), ConfigError);
  EXPECT_THROW(c.set("agent.variant", "sac"), ConfigError);
  EXPECT_THROW(c.set("agent.group", "q3"), ConfigError);
  EXPECT_THROW(c.apply_override("no_equals"), ConfigError);
}

TEST(Config, TextRoundTripAndHash) {
  Config a = Config::preset("push2d_crl");
  a.set("train.seed", "7");
  Config b;
  b.merge_text(a.text());
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.text(), b.text());
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.run_id().rfind("push2d_crl_s7_", 0), 0u);
  b.set("train.lr", "0.001");
  EXPECT_NE(a.hash(), b.hash());
}

TEST(Config, MergeTextReportsLine) {
  Config c;
  try {
    c.merge_text("# comment\ntrain.seed = 3\n\nwhat = 1\n", "f.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("f.cfg:4"), std::string::npos) << e.what();
  }
}

TEST(Config, PresetsAndTypedConfig) {
  for (const auto& name : preset_names()) EXPECT_NO_THROW(Config::preset(name).train_config()) << name;
  const TrainConfig t = Config::preset("reach2d_pooled").train_config();
  EXPECT_EQ(t.net.variant, Variant::pooled);
  EXPECT_EQ(t.total_env_steps, 50000u);
  EXPECT_EQ(t.net.repr_k, 16u);
  EXPECT_EQ(t.net.hidden_blocks, 32u);
  EXPECT_THROW(Config::load("no_such_preset_or_file"), ConfigError);
  Config bad;
  bad.set("train.batch_size", "1");
  EXPECT_THROW(bad.train_config(), ConfigError);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"fly"}).code, 2);
  EXPECT_EQ(run({"train", "--seed", "x"}).code, 2);
  const auto r = run({"train", "--set", "train.bogus=1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("unknown config key 'train.bogus'"), std::string::npos);
  EXPECT_EQ(run({"verify", "--group", "z9"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, Oracle) {
  const auto ok = run({"oracle", "--n", "5", "--gamma", "0.9", "--tol", "1e-10"});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_NE(ok.out.find("greedy_sets_equivariant=true"), std::string::npos);
  EXPECT_EQ(run({"oracle", "--n", "4"}).code, 1);
  EXPECT_EQ(run({"oracle", "--group", "c8"}).code, 1);
}

TEST(Cli, VerifyAndNegativeControl) {
  const auto ok = run({"verify", "--k", "4", "--hidden", "4", "--samples", "10"});
  EXPECT_EQ(ok.code, 0) << ok.out << ok.err;
  EXPECT_NE(ok.out.find("all checks passed"), std::string::npos);
  const auto bad = run({"verify", "--k", "4", "--hidden", "4", "--samples", "10", "--skip-projection"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("violated: critic invariance (dot)"), std::string::npos);
}

TEST_F(CliDir, TrainWritesArtifactsAndIsReproducible) {
  const auto r1 = run(with_tiny({"train", "--config", "reach2d_ecrl", "--seed", "3", "--out", dir()}));
  ASSERT_EQ(r1.code, 0) << r1.err;
  std::vector<fs::path> runs(fs::directory_iterator(dir()), fs::directory_iterator{});
  ASSERT_EQ(runs.size(), 1u);
  const std::string csv1 = slurp(runs[0] / "metrics.csv");
  const auto summary = nlohmann::json::parse(slurp(runs[0] / "summary.json"));
  EXPECT_EQ(summary["seed"], 3);
  EXPECT_EQ(summary["config"]["train.total_env_steps"], "600");
  EXPECT_EQ(summary["run_id"], runs[0].filename().string());
  EXPECT_TRUE(fs::exists(runs[0] / "checkpoint.json"));

  const auto r2 = run(with_tiny({"train", "--config", "reach2d_ecrl", "--seed", "3", "--out", dir()}));
  ASSERT_EQ(r2.code, 0);
  EXPECT_EQ(slurp(runs[0] / "metrics.csv"), csv1);

  const auto ev = run({"eval", "--checkpoint", (runs[0] / "checkpoint.json").string(), "--goals", "3"});
  EXPECT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(nlohmann::json::parse(ev.out)["episodes"], 3);
  EXPECT_EQ(run({"eval", "--checkpoint", (fs::path(dir()) / "missing.json").string()}).code, 1);
}

TEST_F(CliDir, ExportAndTrainOffline) {
  const std::string data = (fs::path(dir()) / "demo.jsonl").string();
  const auto ex = run({"export-dataset", "--policy", "scripted", "--episodes", "3", "--output", data});
  ASSERT_EQ(ex.code, 0) << ex.err;
  EXPECT_NE(ex.out.find("150 transitions"), std::string::npos) << ex.out;
  EXPECT_EQ(run({"export-dataset", "--policy", "oracle", "--output", data}).code, 2);

  EXPECT_EQ(run(with_tiny({"train-offline", "--out", dir()})).code, 2);
  const auto tr = run(with_tiny({"train-offline", "--dataset", data, "--out", dir(), "--set",
                                 "offline.gradient_steps=20", "--set", "offline.eval_interval=10", "--set",
                                 "offline.eval_goals=3"}));
  ASSERT_EQ(tr.code, 0) << tr.err;
  bool found = false;
  for (const auto& e : fs::directory_iterator(dir()))
    if (e.path().filename().string().rfind("offline_", 0) == 0) {
      found = true;
      const std::string csv = slurp(e.path() / "metrics.csv");
      EXPECT_NE(csv.find("\n20,"), std::string::npos) << csv;
    }
  EXPECT_TRUE(found);

  std::ofstream(data, std::ios::app) << "{broken\n";
  const auto broken = run(with_tiny({"train-offline", "--dataset", data, "--out", dir()}));
  EXPECT_EQ(broken.code, 1);
  EXPECT_NE(broken.err.find("line 151"), std::string::npos) << broken.err;
}
