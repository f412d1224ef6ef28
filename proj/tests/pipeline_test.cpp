// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "seqlayers/pipeline.hpp"
#include "test_util.hpp"

namespace seqlayers {
namespace {

namespace fs = std::filesystem;

std::string spec_path(const std::string& name) { return std::string(SEQLAYERS_SPECS_DIR) + "/" + name; }

std::string error_of(const std::string& yaml) {
  try {
    const PipelineFile f = parse_pipeline(yaml);
    build(to_config(f.layer), f.input.value_or(testing::kF3), 0);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(Pipeline, RenderParseRoundTrip) {
  const PipelineFile f = load_pipeline(spec_path("conditioned_stack.yaml"));
  const std::string text = render_pipeline(f);
  EXPECT_EQ(parse_pipeline(text), f);
  EXPECT_EQ(render_pipeline(parse_pipeline(text)), text);
}

TEST(Pipeline, StridedConvsHaveRatioOneSixth) {
  const PipelineFile f = load_pipeline(spec_path("strided_convs.yaml"));
  RandomParameters params(f.seed);
  auto l = build_pipeline(f, *f.input, params);
  EXPECT_EQ(l->output_ratio(), Fraction(1, 6));
  EXPECT_EQ(l->block_size(), 6);
  EXPECT_EQ(l->output_spec().shape, (Shape{8}));
}

TEST(Pipeline, ErrorsNameTheNodePath) {
  const std::string e = error_of(
      "layer:\n  type: serial\n  layers:\n    - {type: conv1d, filters: 2, kernel_size: zero}\n");
  EXPECT_NE(e.find("layer.layers[0].kernel_size"), std::string::npos) << e;
  const std::string u = error_of("layer: {type: serial, layers: [{type: identity}, {type: warp}]}\n");
  EXPECT_NE(u.find("layer.layers[1]"), std::string::npos) << u;
  EXPECT_NE(u.find("warp"), std::string::npos) << u;
  const std::string extra = error_of("layer: {type: dense, units: 2, colour: red}\n");
  EXPECT_NE(extra.find("colour"), std::string::npos) << extra;
  EXPECT_THROW(parse_pipeline("layer: [1, 2]\n"), ParseError);
  EXPECT_THROW(parse_pipeline("input: f32[3]\n"), ParseError);
  EXPECT_THROW(parse_pipeline("layer: {type: identity}\nbogus: 1\n"), ParseError);
}

TEST(Pipeline, EmptySerialIsIdentity) {
  const PipelineFile f = load_pipeline(spec_path("identity.yaml"));
  RandomParameters params(0);
  auto l = build_pipeline(f, *f.input, params);
  std::mt19937_64 gen(1);
  const Sequence x = testing::random_sequence(gen, 2, 7, f.input->shape);
  EXPECT_TRUE(compare_sequences(l->layer(x, false), x, 0.0).equal);
}

TEST(Pipeline, BuildIsPure) {
  const PipelineFile f = load_pipeline(spec_path("transformer_block.yaml"));
  RandomParameters a(f.seed), b(f.seed);
  const auto pa = build_pipeline(f, *f.input, a)->parameters();
  const auto pb = build_pipeline(f, *f.input, b)->parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (const auto& [k, v] : pa) EXPECT_TRUE(v.identical(pb.at(k))) << k;
  EXPECT_EQ(a.drawn().size(), pa.size());
}

TEST(Pipeline, ArchiveParametersRebuildTheSameLayer) {
  const PipelineFile f = load_pipeline(spec_path("conditioned_stack.yaml"));
  RandomParameters random(f.seed);
  auto a = build_pipeline(f, *f.input, random);
  ArchiveParameters archive(random.drawn());
  auto b = build_pipeline(f, *f.input, archive);
  EXPECT_TRUE(archive.unused().empty());
  std::mt19937_64 gen(2);
  HarnessConfig cfg;
  cfg.constants = harness_constants(f);
  const Sequence x = detail::random_input(gen, 2, 12, *f.input);
  const Constants c = detail::random_constants(gen, cfg, 2, x.time());
  EXPECT_TRUE(compare_sequences(a->layer(x, false, c), b->layer(x, false, c), 0.0).equal);
}

TEST(Manifest, TrainingIsMandatory) {
  EXPECT_THROW(parse_manifest("random_input: {batch: 1, time: 4, seed: 0}\n"), ParseError);
  EXPECT_THROW(parse_manifest("training: maybe\nrandom_input: {batch: 1, time: 4}\n"), ParseError);
  EXPECT_THROW(parse_manifest("training: false\n"), ParseError);
  const RunManifest m = parse_manifest("training: true\ninput: x.sls\nblock_size: 4\n", "/data");
  EXPECT_TRUE(m.training);
  EXPECT_EQ(*m.input, "/data/x.sls");
  EXPECT_EQ(*m.block_size, 4);
  EXPECT_FALSE(m.seed.has_value());
}

class SpecFiles : public ::testing::TestWithParam<std::string> {};

TEST_P(SpecFiles, BuildsAndVerifies) {
  const PipelineFile f = load_pipeline(GetParam());
  ASSERT_TRUE(f.input.has_value());
  RandomParameters params(f.seed);
  auto l = build_pipeline(f, *f.input, params);
  HarnessConfig cfg;
  cfg.seed = f.seed;
  cfg.constants = harness_constants(f);
  if (l->name() == "transformer_block") {
    cfg.tolerance = 1e-5;
    cfg.time = 32;
  }
  const ContractReport report = verify_contract(*l, cfg);
  const bool sabotage = fs::path(GetParam()).filename().string().starts_with("sabotage");
  EXPECT_EQ(report.passed(), !sabotage) << report.text();
}

std::vector<std::string> spec_files() {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(SEQLAYERS_SPECS_DIR))
    if (e.path().extension() == ".yaml") out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

INSTANTIATE_TEST_SUITE_P(Specs, SpecFiles, ::testing::ValuesIn(spec_files()),
                         [](const ::testing::TestParamInfo<std::string>& info) {
                           return fs::path(info.param).stem().string();
                         });

}  // namespace
}  // namespace seqlayers
