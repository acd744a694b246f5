#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "edfa/cli.hpp"
#include "edfa/io.hpp"

namespace fs = std::filesystem;
using edfa::Json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = edfa::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("edfa_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir / "models");
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  std::string write_config(Json patch = Json::object()) const {
    Json c;
    c["global_seed"] = 11;
    c["devices"] = Json::array({"A1", "A2"});
    c["calibration"] = nullptr;
    c["make"] = Json{{"sigma_dev", 0.1}};
    c["walk"] = Json{{"n_profiles_per_pair", 4}};
    c["power_grid"] = Json::array({Json{{"p_in_dbm", 5.0}, {"p_out_dbm", 15.0}},
                                   Json{{"p_in_dbm", 0.4}, {"p_out_dbm", 18.0}}});
    c["train"] = Json{{"epochs", 3}, {"batch_size", 8}};
    c.update(patch);
    edfa::write_text_file(path("config.json"), c.dump());
    return path("config.json");
  }

  void gen_train_all() {
    ASSERT_EQ(run({"gen-data", "--config", write_config(), "--out", path("ds.jsonl")}).code, 0);
    for (const char* id : {"A1", "A2", "joint"}) {
      const auto r = run({"train", "--data", path("ds.jsonl"), "--device", id, "--out",
                          path(std::string("models/") + id + ".json")});
      ASSERT_EQ(r.code, 0) << r.err;
    }
  }

  fs::path dir;
};

}  // namespace

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"train", "--data", path("nope.jsonl")}).code, 2);
  EXPECT_EQ(run({"gen-data", "--config", path("missing.json"), "--out", path("x")}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, GenDataWritesDatasetAndTable) {
  const auto r = run({"gen-data", "--config", write_config(), "--out", path("ds.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("A2"), std::string::npos);
  EXPECT_NE(r.out.find("total 16 samples"), std::string::npos) << r.out;
  const auto file = edfa::load_dataset(path("ds.jsonl"));
  EXPECT_EQ(file.dataset.samples.size(), 16u);
  EXPECT_EQ(file.config["global_seed"], 11);
}

TEST_F(CliTest, GenDataRejectsOutOfRangeGain) {
  Json patch;
  patch["power_grid"] = Json::array({Json{{"p_in_dbm", -10.0}, {"p_out_dbm", 15.0}}});
  const auto r = run({"gen-data", "--config", write_config(patch), "--out", path("ds.jsonl")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("power_grid"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("25"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("ds.jsonl")));
}

TEST_F(CliTest, GenDataRejectsUnknownConfigField) {
  const auto r = run({"gen-data", "--config", write_config(Json{{"sedd", 1}}), "--out", path("ds.jsonl")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("sedd"), std::string::npos) << r.err;
}

TEST_F(CliTest, TrainRejectsUnknownDevice) {
  ASSERT_EQ(run({"gen-data", "--config", write_config(), "--out", path("ds.jsonl")}).code, 0);
  const auto r = run({"train", "--data", path("ds.jsonl"), "--device", "B7", "--out", path("m.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("B7"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("m.json")));
}

TEST_F(CliTest, TrainWritesCheckpointAndLossTrace) {
  ASSERT_EQ(run({"gen-data", "--config", write_config(), "--out", path("ds.jsonl")}).code, 0);
  const auto r = run({"train", "--data", path("ds.jsonl"), "--device", "A1", "--out", path("m.json"),
                      "--epochs", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ckpt = edfa::load_checkpoint(path("m.json"));
  EXPECT_EQ(ckpt.trained_on, std::vector<std::string>{"A1"});
  EXPECT_EQ(ckpt.train.epochs, 4u);
  const std::string csv = edfa::read_text_file(path("m.loss.csv"));
  EXPECT_EQ(csv.substr(0, 20), "epoch,train_mse_db2\n");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST_F(CliTest, PipelineIsByteIdenticalAcrossRuns) {
  gen_train_all();
  ASSERT_EQ(run({"eval", "--scenario", "all", "--data", path("ds.jsonl"), "--models", path("models"),
                 "--out", path("r1.json")})
                .code,
            0);
  const std::string ds1 = edfa::read_text_file(path("ds.jsonl"));
  const std::string m1 = edfa::read_text_file(path("models/joint.json"));
  const std::string r1 = edfa::read_text_file(path("r1.json"));
  const std::string c1 = edfa::read_text_file(path("r1.csv"));

  gen_train_all();
  ASSERT_EQ(run({"eval", "--scenario", "all", "--data", path("ds.jsonl"), "--models", path("models"),
                 "--out", path("r2.json")})
                .code,
            0);
  EXPECT_EQ(edfa::read_text_file(path("ds.jsonl")), ds1);
  EXPECT_EQ(edfa::read_text_file(path("models/joint.json")), m1);
  EXPECT_EQ(edfa::read_text_file(path("r2.json")), r1);
  EXPECT_EQ(edfa::read_text_file(path("r2.csv")), c1);

  const Json report = edfa::parse_json(r1, "r1");
  EXPECT_EQ(report["reports"].size(), 2u + 2u + 2u);
  EXPECT_TRUE(report["summary_mean_mse_db2"].contains("joint"));
}

TEST_F(CliTest, EvalListsMissingModels) {
  ASSERT_EQ(run({"gen-data", "--config", write_config(), "--out", path("ds.jsonl")}).code, 0);
  ASSERT_EQ(run({"train", "--data", path("ds.jsonl"), "--device", "A1", "--out", path("models/A1.json")}).code,
            0);
  const auto r = run({"eval", "--scenario", "all", "--data", path("ds.jsonl"), "--models",
                      path("models"), "--out", path("r.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("A2.json"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("joint.json"), std::string::npos) << r.err;
  EXPECT_EQ(r.err.find("A1.json"), std::string::npos) << r.err;
  EXPECT_EQ(run({"eval", "--scenario", "sideways", "--data", path("ds.jsonl"), "--models",
                 path("models"), "--out", path("r.json")})
                .code,
            2);
}

TEST_F(CliTest, GradcheckPassesAndRejectsZeroTrials) {
  const auto ok = run({"gradcheck", "--trials", "10", "--seed", "3"});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_NE(ok.out.find("max relative error"), std::string::npos);
  EXPECT_EQ(run({"gradcheck", "--trials", "0"}).code, 2);
}

TEST_F(CliTest, PredictAcceptsArraysAndRejectsBadInput) {
  ASSERT_EQ(run({"gen-data", "--config", write_config(), "--out", path("ds.jsonl")}).code, 0);
  ASSERT_EQ(run({"train", "--data", path("ds.jsonl"), "--device", "A1", "--out", path("m.json")}).code, 0);
  const auto file = edfa::load_dataset(path("ds.jsonl"));
  const auto& s = file.dataset.samples.front();

  edfa::write_text_file(path("in.json"), Json(s.psd_in_norm_db).dump());
  const auto r = run({"predict", "--model", path("m.json"), "--input", path("in.json"), "--p-in",
                      "5", "--p-out", "15"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = edfa::parse_json(r.out, "stdout");
  ASSERT_EQ(j["psd_out_norm_db"].size(), 83u);
  EXPECT_DOUBLE_EQ(j["psd_out_dbm"][10].get<double>(), j["psd_out_norm_db"][10].get<double>() + 15.0);

  edfa::write_text_file(path("obj.json"), Json{{"psd_in_norm_db", s.psd_in_norm_db}}.dump());
  const auto r2 = run({"predict", "--model", path("m.json"), "--input", path("obj.json"), "--p-in",
                       "5", "--p-out", "15"});
  EXPECT_EQ(r2.out, r.out);

  edfa::write_text_file(path("short.json"), Json(std::vector<double>(40, -19.0)).dump());
  const auto bad = run({"predict", "--model", path("m.json"), "--input", path("short.json"),
                        "--p-in", "5", "--p-out", "15"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("83"), std::string::npos) << bad.err;

  edfa::write_text_file(path("broken.json"), "[1, 2,");
  EXPECT_EQ(run({"predict", "--model", path("m.json"), "--input", path("broken.json"), "--p-in",
                 "5", "--p-out", "15"})
                .code,
            2);
  edfa::write_text_file(path("strings.json"), Json(std::vector<std::string>(83, "x")).dump());
  EXPECT_EQ(run({"predict", "--model", path("m.json"), "--input", path("strings.json"), "--p-in",
                 "5", "--p-out", "15"})
                .code,
            2);
}
