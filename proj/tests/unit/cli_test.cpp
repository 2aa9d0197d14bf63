#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "ppgbp/cli/cli.hpp"
#include "ppgbp/common/bytes.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using ppgbp::read_file;
using ppgbp::read_text_file;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = ppgbp::cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = ppgbp::test::temp_dir("cli").string();
    ASSERT_EQ(run({"synth", "--seed", "3", "--subjects", "6", "--scheme", "even4", "--target-windows", "8",
                   "--out", dir_ + "/raw", "--jobs", "2"})
                  .code,
              0);
    ASSERT_EQ(run({"preprocess", "--in", dir_ + "/raw", "--out", dir_ + "/win"}).code, 0);
    const auto b = run({"build-dataset", "--in", dir_ + "/win", "--scheme", "even4", "--quota", "5",
                        "--min-windows", "20", "--seed", "1", "--out", dir_ + "/ds"});
    ASSERT_EQ(b.code, 0) << b.err;
    const auto t = run({"train", "--dataset", dir_ + "/ds", "--arch", "resnet18", "--task", "classification",
                        "--profile", "desk", "--batch-size", "16", "--max-epochs", "2", "--seed", "1", "--out",
                        dir_ + "/runs/r18"});
    ASSERT_EQ(t.code, 0) << t.err;
  }
  static std::string dir_;
};

std::string CliPipeline::dir_;

}  // namespace

TEST_F(CliPipeline, HappyPathProducesSummary) {
  const auto e = run({"evaluate", "--checkpoint", dir_ + "/runs/r18/checkpoint.ppgm", "--dataset", dir_ + "/ds",
                      "--split", "test", "--report", dir_ + "/runs/r18/eval_test.csv"});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto p = run({"personalize", "--checkpoint", dir_ + "/runs/r18/checkpoint.ppgm", "--dataset", dir_ + "/ds",
                      "--subjects", "1", "--epochs", "2", "--out", dir_ + "/runs/pers"});
  ASSERT_EQ(p.code, 0) << p.err;
  const auto r = run({"report", "--runs", dir_ + "/runs", "--out", dir_ + "/summary.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = read_text_file(dir_ + "/summary.csv");
  EXPECT_NE(summary.find("even4,resnet18,classification,test,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ + "/summary.json"));
  EXPECT_TRUE(fs::exists(dir_ + "/summary_plots.json"));
  EXPECT_TRUE(fs::exists(dir_ + "/runs/r18/eval_test_confusion.csv"));
}

TEST_F(CliPipeline, SplitNeedsThreeFractions) {
  const auto r = run({"build-dataset", "--in", dir_ + "/win", "--scheme", "even4", "--quota", "5", "--min-windows",
                      "20", "--split", "0.5:0.5", "--out", dir_ + "/bad"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("configuration error"), std::string::npos);
}

TEST_F(CliPipeline, MismatchedSchemeIsDataFormatError) {
  ASSERT_EQ(run({"build-dataset", "--in", dir_ + "/win", "--scheme", "hph", "--quota", "5", "--min-windows", "15",
                 "--out", dir_ + "/ds_hph"})
                .code,
            0);
  const auto r = run({"evaluate", "--checkpoint", dir_ + "/runs/r18/checkpoint.ppgm", "--dataset",
                      dir_ + "/ds_hph", "--report", dir_ + "/bad.csv"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("classes"), std::string::npos);
}

TEST_F(CliPipeline, MissingInputIsIoError) {
  EXPECT_EQ(run({"preprocess", "--in", dir_ + "/does_not_exist", "--out", dir_ + "/x"}).code, 4);
  EXPECT_EQ(run({"train", "--dataset", dir_ + "/does_not_exist", "--out", dir_ + "/x"}).code, 4);
}

TEST_F(CliPipeline, CorruptStoreIsDataFormatError) {
  ppgbp::write_text_file(dir_ + "/corrupt/windows.ppgw", "garbage");
  EXPECT_EQ(run({"build-dataset", "--in", dir_ + "/corrupt", "--scheme", "hph", "--out", dir_ + "/y"}).code, 2);
}

TEST_F(CliPipeline, UnknownConfigKeyRejected) {
  ppgbp::write_text_file(dir_ + "/cfg.json", R"({"quota": 5, "colour": "blue"})");
  const auto r = run({"build-dataset", "--config", dir_ + "/cfg.json", "--in", dir_ + "/win", "--out", dir_ + "/z"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST_F(CliPipeline, ResolvedConfigReproducesOutputs) {
  const auto again = run({"build-dataset", "--config", dir_ + "/ds/resolved_config.json", "--out", dir_ + "/ds2"});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(read_file(dir_ + "/ds/samples.ppgw"), read_file(dir_ + "/ds2/samples.ppgw"));
  EXPECT_EQ(read_file(dir_ + "/ds/manifest.json"), read_file(dir_ + "/ds2/manifest.json"));
}

TEST_F(CliPipeline, ConfigValuesAreOverriddenByFlags) {
  ppgbp::write_text_file(dir_ + "/cfg2.json", R"({"quota": 999, "min-windows": 20, "scheme": "even4"})");
  const auto r = run({"build-dataset", "--config", dir_ + "/cfg2.json", "--quota", "5", "--in", dir_ + "/win",
                      "--out", dir_ + "/ds3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(read_text_file(dir_ + "/ds3/resolved_config.json").find("\"quota\": \"5\""), std::string::npos);
}

TEST(Cli, SeedFallsBackToEnvironment) {
  const auto dir = ppgbp::test::temp_dir("cli_env").string();
  ::setenv("PPGBP_SEED", "17", 1);
  const auto a = run({"synth", "--subjects", "5", "--duration", "30", "--out", dir + "/a"});
  ::unsetenv("PPGBP_SEED");
  const auto b = run({"synth", "--seed", "17", "--subjects", "5", "--duration", "30", "--out", dir + "/b"});
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(read_file(dir + "/a/subject_00001.ppgr"), read_file(dir + "/b/subject_00001.ppgr"));
  ::setenv("PPGBP_SEED", "abc", 1);
  EXPECT_EQ(run({"synth", "--out", dir + "/c"}).code, 1);
  ::unsetenv("PPGBP_SEED");
}

TEST(Cli, ParseErrorsAreConfiguration) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"train", "--no-such-flag"}).code, 1);
  EXPECT_EQ(run({"train", "--arch", "vgg", "--dataset", "x", "--out", "y"}).code, 4);
  EXPECT_EQ(run({"--help"}).code, 0);
}
