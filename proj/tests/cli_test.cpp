// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "seqlayers/io.hpp"
#include "seqlayers/pipeline.hpp"

namespace seqlayers {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string output;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("seqlayers_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::string spec(const std::string& name) { return std::string(SEQLAYERS_SPECS_DIR) + "/" + name; }
  std::string tmp(const std::string& name) const { return (dir_ / name).string(); }

  CliResult run(const std::string& args) const {
    const std::string log = tmp("log.txt");
    const std::string cmd = std::string("\"") + SEQLAYERS_CLI + "\" " + args + " > \"" + log + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text_file(log)};
  }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(tmp(name)) << text;
    return tmp(name);
  }

  fs::path dir_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST_F(Cli, DescribeCausalConv) {
  const CliResult r = run("describe --spec " + spec("conv_causal.yaml"));
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("receptive_field: (-4, 0)"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("output_ratio: 1/1"), std::string::npos) << r.output;
}

TEST_F(Cli, DescribeIdentityAndInputOverride) {
  const CliResult r = run("describe --spec " + spec("identity.yaml") + " --input-spec \"i32[5]\"");
  EXPECT_EQ(r.code, 0) << r.output;
  for (const char* want : {"input_spec: i32[5]", "output_ratio: 1/1", "block_size: 1", "input_latency: 0",
                           "output_latency: 0", "receptive_field: (0, 0)"})
    EXPECT_NE(r.output.find(want), std::string::npos) << want << "\n" << r.output;
}

TEST_F(Cli, DescribeMixedPerStepMap) {
  const CliResult r = run("describe --spec " + spec("conv_transpose_mix.yaml"));
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("receptive_field_per_step: {0: (-4, 2), 1: (-2, 2), 2: (-2, 2), 3: (-2, 4)}"),
            std::string::npos)
      << r.output;
  EXPECT_NE(r.output.find("receptive_field: (-4, 3)"), std::string::npos) << r.output;
}

TEST_F(Cli, DescribeJson) {
  const CliResult r = run("describe --json --spec " + spec("strided_convs.yaml"));
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("\"output_ratio\": \"1/6\""), std::string::npos) << r.output;
}

TEST_F(Cli, DiffTransformerBlockPasses) {
  const CliResult r = run("diff --spec " + spec("transformer_block.yaml") + " --manifest " +
                    spec("manifests/transformer_block_random.yaml"));
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("result: PASS"), std::string::npos) << r.output;
}

TEST_F(Cli, DiffIdentityIsExact) {
  const CliResult r = run("diff --spec " + spec("identity.yaml") + " --manifest " + spec("manifests/identity_random.yaml") +
                    " --tolerance 0");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("max_diff: 0\n"), std::string::npos) << r.output;
}

TEST_F(Cli, StreamRejectsMisalignedBlock) {
  const CliResult r = run("stream --spec " + spec("strided_convs.yaml") + " --manifest " +
                    spec("manifests/identity_random.yaml") + " --block 4 --output " + tmp("y.sls"));
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("block 4"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("6"), std::string::npos) << r.output;
}

TEST_F(Cli, VerifySabotageNamesFailedCheck) {
  const CliResult r = run("verify --spec " + spec("sabotage_misdeclared_rf.yaml") + " --report " + tmp("report.json"));
  EXPECT_EQ(r.code, 1) << r.output;
  EXPECT_NE(r.output.find("failed check: receptive_field_empirical"), std::string::npos) << r.output;
  const auto report = nlohmann::json::parse(slurp(tmp("report.json")));
  EXPECT_FALSE(report["passed"].get<bool>());
}

TEST_F(Cli, VerifyBidirectionalSkipsStepChecks) {
  const CliResult r = run("verify --spec " + spec("bidirectional_lstm.yaml"));
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("SKIPPED"), std::string::npos) << r.output;
}

TEST_F(Cli, RunAndStreamAgreeForCausalLayer) {
  const std::string m = write("m.yaml", "random_input: {batch: 2, time: 10, seed: 4}\ntraining: false\n");
  const std::string base = " --spec " + spec("conv_causal.yaml") + " --manifest " + m;
  ASSERT_EQ(run("run" + base + " --output " + tmp("a.sls") + " --save-params " + tmp("p.slp")).code, 0);
  ASSERT_EQ(run("stream" + base + " --output " + tmp("b.sls")).code, 0);
  EXPECT_EQ(slurp(tmp("a.sls")), slurp(tmp("b.sls")));
  EXPECT_TRUE(fs::exists(tmp("a.sls.json")));
  const auto side = nlohmann::json::parse(slurp(tmp("b.sls.json")));
  EXPECT_EQ(side["mode"], "step");
  EXPECT_FALSE(load_archive(tmp("p.slp")).empty());
}

TEST_F(Cli, SavedParamsAndInputRoundTrip) {
  const std::string m1 = write("m1.yaml", "random_input: {batch: 2, time: 8, seed: 1}\ntraining: false\n");
  const std::string base = " --spec " + spec("conv_causal.yaml");
  ASSERT_EQ(run("run" + base + " --manifest " + m1 + " --output " + tmp("y1.sls") + " --save-params " + tmp("p.slp"))
                .code,
            0);
  // Feed the SLS1 output back in as input to an identity pipeline.
  const std::string m2 = write("m2.yaml", "input: y1.sls\ntraining: false\n");
  ASSERT_EQ(run("run --spec " + spec("identity.yaml") + " --input-spec \"f32[2]\" --manifest " + m2 + " --output " +
                tmp("y2.sls"))
                .code,
            0);
  EXPECT_EQ(slurp(tmp("y1.sls")), slurp(tmp("y2.sls")));
  const std::string m3 = write("m3.yaml", "random_input: {batch: 2, time: 8, seed: 1}\nparams: p.slp\ntraining: false\n");
  ASSERT_EQ(run("run" + base + " --seed 99 --manifest " + m3 + " --output " + tmp("y3.sls")).code, 0);
  EXPECT_EQ(slurp(tmp("y1.sls")), slurp(tmp("y3.sls")));
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("describe").code, 2);
  EXPECT_EQ(run("describe --spec " + write("bad.yaml", "layer: {type: nope}\n")).code, 2);
  EXPECT_EQ(run("run --spec " + spec("identity.yaml") + " --manifest " + write("m.yaml", "input: x.sls\n")).code, 2);
}

}  // namespace
}  // namespace seqlayers
