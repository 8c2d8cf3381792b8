#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "fcp/config.hpp"
#include "fcp/errors.hpp"
#include "fcp/pipeline.hpp"

namespace fcp {
namespace {

namespace fs = std::filesystem;

TEST(Config, DefaultsLoadAndDigestIgnoresOutputDir) {
  auto a = load_config(nlohmann::ordered_json::object(), {"output_dir=/tmp/a"});
  auto b = load_config(nlohmann::ordered_json::object(), {"output_dir=/tmp/b"});
  EXPECT_EQ(a.digest(), b.digest());
  auto c = load_config(nlohmann::ordered_json::object(), {"online.T=3"});
  EXPECT_NE(a.digest(), c.digest());
  EXPECT_EQ(c.online.schedule.rounds, 3);
}

TEST(Config, UnknownKeysSuggestTheClosestName) {
  try {
    load_config(nlohmann::ordered_json::object(), {"online.rounds_per=3"});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("online"), std::string::npos);
  }
  auto keys = config_keys(default_config_json());
  EXPECT_EQ(suggest_key("online.temprature", keys), "online.temperature");
  EXPECT_EQ(suggest_key("zzzzzzzzzzzzzzzzzzzz", keys), "");
}

TEST(Config, TypeMismatchesAndBadValuesAreRejected) {
  EXPECT_THROW(load_config(nlohmann::ordered_json::object(), {"online.T=many"}), ConfigError);
  EXPECT_THROW(load_config(nlohmann::ordered_json::object(), {"env.noise_rate=1.5"}), ConfigError);
  EXPECT_THROW(load_config(nlohmann::ordered_json::object(), {"online.S=0"}), ConfigError);
  EXPECT_THROW(load_config(nlohmann::ordered_json::parse(R"({"env": {"difficulty": "hard"}})"), {}), ConfigError);
  EXPECT_THROW(load_config(nlohmann::ordered_json::object(), {"nonsense"}), ConfigError);
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("fcp_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    opts_.overrides = {"output_dir=" + dir_.string(), "env.train_prompts=8", "env.eval_prompts=6", "online.T=3",
                       "online.prompt_batch=8", "online.B=16", "offline.epochs=2", "eval.seeds=[1]"};
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run_stage(const std::string& name) {
    out_.str("");
    err_.str("");
    return run(name, opts_, out_, err_);
  }

  fs::path dir_;
  RunOptions opts_;
  std::ostringstream out_, err_;
};

TEST_F(PipelineTest, StagesRunInOrderAndWriteManifests) {
  for (const char* stage : {"gen-tasks", "collect", "train-offline", "build-pool", "bootstrap", "eval", "report"}) {
    ASSERT_EQ(run_stage(stage), kExitOk) << stage << ": " << err_.str();
  }
  EXPECT_TRUE(fs::exists(dir_ / "config.resolved.json"));
  EXPECT_TRUE(fs::exists(dir_ / "bootstrap" / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "bootstrap" / "buffers" / "round_003.jsonl"));
  std::ifstream m(dir_ / "collect" / "manifest.json");
  auto manifest = nlohmann::json::parse(m);
  EXPECT_EQ(manifest["config_digest"], load_config(nlohmann::ordered_json::object(), opts_.overrides).digest());
}

TEST_F(PipelineTest, MissingUpstreamArtifactExitsWithConfigCode) {
  EXPECT_EQ(run_stage("train-offline"), kExitConfig);
  EXPECT_NE(err_.str().find("collect"), std::string::npos);
}

TEST_F(PipelineTest, UnknownSubcommandAndBadOverride) {
  EXPECT_EQ(run_stage("launch"), kExitConfig);
  opts_.overrides.push_back("online.tempreature=2");
  EXPECT_EQ(run_stage("gen-tasks"), kExitConfig);
  EXPECT_NE(err_.str().find("online.temperature"), std::string::npos);
}

TEST_F(PipelineTest, VerifyPassesAndEmitsJson) {
  opts_.json = true;
  ASSERT_EQ(run_stage("verify"), kExitOk) << err_.str();
  auto j = nlohmann::json::parse(out_.str());
  EXPECT_LT(j["aggregate"]["max_identity_residual"].get<double>(), 1e-9);
  EXPECT_TRUE(j["aggregate"]["pass"].get<bool>());
}

TEST_F(PipelineTest, BaselinesTrain) {
  for (const char* stage : {"gen-tasks", "collect"}) ASSERT_EQ(run_stage(stage), kExitOk) << err_.str();
  for (const char* m : {"sft", "rft", "cft", "grpo"}) {
    opts_.method = m;
    ASSERT_EQ(run_stage("train-baseline"), kExitOk) << m << ": " << err_.str();
  }
  opts_.method = "ppo";
  EXPECT_EQ(run_stage("train-baseline"), kExitConfig);
}

}  // namespace
}  // namespace fcp
