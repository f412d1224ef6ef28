// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "catalog.hpp"
#include "seqlayers/seqlayers.hpp"
#include "test_util.hpp"

namespace seqlayers {
namespace {

using testing::column;
using testing::conv1d;
using testing::kF3;
using testing::named;

const ChannelSpec kF1{{1}, DType::kFloat32};

std::vector<float> values_of(const Sequence& s) {
  auto v = s.values().floats();
  return {v.begin(), v.end()};
}

TEST(Serial, ChildrenAreNamedByKindAndIndex) {
  auto l = build(Serial::Config{{Dense::Config{3}, Dense::Config{3}, Activation::Config{"relu"}}}, kF3);
  std::vector<std::string> names;
  for (const auto& c : l->children()) names.push_back(c->name());
  ASSERT_EQ(names.size(), 3u);
  EXPECT_NE(names[0], names[1]);
  EXPECT_TRUE(l->parameters().count(names[0] + "/kernel"));
}

TEST(Serial, DuplicateExplicitNamesAreRejected) {
  EXPECT_THROW(build(Serial::Config{{named(Dense::Config{3}, "d"), named(Dense::Config{3}, "d")}}, kF3), Error);
}

TEST(Serial, ChildSpecMismatchNamesThePath) {
  try {
    build(Serial::Config{{Dense::Config{4}, Reshape::Config{{3}}}}, kF3);
    FAIL() << "expected a shape error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("reshape"), std::string::npos) << e.what();
  }
}

TEST(Serial, LookaheadThenConvStreams) {
  auto l = build(Serial::Config{{Lookahead::Config{1}, conv1d(2, 3, 2)}}, kF3, 4);
  std::mt19937_64 gen(6);
  const Sequence x = testing::random_sequence(gen, 2, 14, {3});
  const Comparison c = compare_sequences(l->layer(x, false), step_by_step(*l, x, 2, false).output, 1e-6);
  EXPECT_TRUE(c.equal) << c.detail;
}

TEST(Parallel, CombineModes) {
  const Sequence x = column({1, 2, 3});
  auto add = build(Parallel::Config{{Scale::Config{2}, Add::Config{1}}, "add"}, kF1);
  EXPECT_EQ(values_of(add->layer(x, false)), (std::vector<float>{4, 7, 10}));
  auto mean = build(Parallel::Config{{Scale::Config{2}, Add::Config{1}}, "mean"}, kF1);
  EXPECT_EQ(values_of(mean->layer(x, false)), (std::vector<float>{2, 3.5, 5}));
  auto concat = build(Parallel::Config{{Scale::Config{2}, Add::Config{1}}, "concat"}, kF1);
  EXPECT_EQ(concat->output_spec().shape, (Shape{2}));
  EXPECT_EQ(values_of(concat->layer(x, false)), (std::vector<float>{2, 2, 4, 3, 6, 4}));
  auto stack = build(Parallel::Config{{Scale::Config{2}, Add::Config{1}}, "stack"}, kF1);
  EXPECT_EQ(stack->output_spec().shape, (Shape{2, 1}));
}

TEST(Parallel, AlignsBranchLatencies) {
  auto l = build(Parallel::Config{{Identity::Config{}, Lookahead::Config{2}}, "concat"}, kF1);
  EXPECT_EQ(l->output_latency(), 2);
  const Sequence x = column({1, 2, 3, 4, 5});
  const Comparison c = compare_sequences(l->layer(x, false), step_by_step(*l, x, 1, false).output, 0.0);
  EXPECT_TRUE(c.equal) << c.detail;
}

TEST(Parallel, RejectsMismatchedBranches) {
  EXPECT_THROW(build(Parallel::Config{{Dense::Config{2}, Dense::Config{3}}, "add"}, kF3), ShapeError);
  EXPECT_THROW(build(Parallel::Config{{Identity::Config{}, Downsample1D::Config{2}}, "add"}, kF3), Error);
  EXPECT_THROW(build(Parallel::Config{{Identity::Config{}}, "product"}, kF3), Error);
  EXPECT_THROW(build(Parallel::Config{{}, "add"}, kF3), Error);
}

TEST(Residual, AddsInputToBody) {
  auto l = build(Residual::Config{{Scale::Config{3}}}, kF1);
  EXPECT_EQ(values_of(l->layer(column({1, 2}), false)), (std::vector<float>{4, 8}));
}

TEST(Residual, ShortcutNameIsReserved) {
  EXPECT_THROW(build(Residual::Config{{named(Scale::Config{3}, "shortcut")}}, kF1), Error);
}

TEST(Residual, BodyWithLatencyStaysAligned) {
  auto l = build(Residual::Config{{conv1d(3, 5, 1, "same")}}, kF3, 2);
  EXPECT_EQ(l->output_latency(), 2);
  std::mt19937_64 gen(9);
  const Sequence x = testing::random_sequence(gen, 2, 11, {3});
  const Comparison c = compare_sequences(l->layer(x, false), step_by_step(*l, x, 1, false).output, 1e-6);
  EXPECT_TRUE(c.equal) << c.detail;
}

TEST(Repeat, ComposesLikeSerial) {
  auto r = build(Repeat::Config{Scale::Config{2}, 3}, kF1);
  EXPECT_EQ(values_of(r->layer(column({1}), false)), (std::vector<float>{8}));
  EXPECT_EQ(r->children().size(), 3u);
  EXPECT_THROW(build(Repeat::Config{Scale::Config{2}, 0}, kF1), Error);
  EXPECT_THROW(build(Repeat::Config{Dense::Config{4}, 2}, kF3), ShapeError);
}

TEST(Repeat, RepeatsHaveIndependentParameters) {
  auto r = build(Repeat::Config{Dense::Config{3}, 2}, kF3);
  const auto p = r->parameters();
  std::vector<Tensor> kernels;
  for (const auto& [k, v] : p)
    if (k.ends_with("/kernel")) kernels.push_back(v);
  ASSERT_EQ(kernels.size(), 2u);
  EXPECT_FALSE(kernels[0].identical(kernels[1]));
}

TEST(Bidirectional, IsNotSteppable) {
  auto l = build(Bidirectional::Config{Lstm::Config{2}, Lstm::Config{2}}, kF3);
  EXPECT_FALSE(l->supports_step());
  EXPECT_EQ(l->output_spec().shape, (Shape{4}));
  EXPECT_THROW(l->get_initial_state(1, false), UnsupportedStepError);
  EXPECT_EQ(l->receptive_field(), (RFInterval{Bound::neg_inf(), Bound::pos_inf()}));
}

TEST(Bidirectional, BackwardSeesTheFutureOfEachRow) {
  auto l = build(Bidirectional::Config{Identity::Config{}, Emit::Config{}, "concat"}, kF1);
  const Sequence x = Sequence::from_lengths(Tensor::from_floats({1, 4, 1}, {1, 2, 3, 9}), {3});
  const auto v = values_of(l->layer(x, false).mask_invalid());
  EXPECT_EQ(v, (std::vector<float>{1, 1, 2, 2, 3, 3, 0, 0}));
}

TEST(Blockwise, ReportsWrappedBlockSize) {
  auto l = build(Blockwise::Config{conv1d(2, 3, 2), 8}, kF3);
  EXPECT_EQ(l->block_size(), 8);
  EXPECT_EQ(l->output_ratio(), Fraction(1, 2));
  EXPECT_THROW(build(Blockwise::Config{conv1d(2, 3, 2), 3}, kF3), Error);
  EXPECT_THROW(build(Blockwise::Config{Bidirectional::Config{Lstm::Config{2}, Lstm::Config{2}}, 4}, kF3),
               UnsupportedStepError);
}

TEST(Blockwise, StepsInWrappedBlocks) {
  auto l = build(Blockwise::Config{conv1d(2, 3, 2), 8}, kF3, 1);
  std::mt19937_64 gen(4);
  const Sequence x = testing::random_sequence(gen, 2, 24, {3});
  const Comparison c = compare_sequences(l->layer(x, false), step_by_step(*l, x, 8, false).output, 1e-6);
  EXPECT_TRUE(c.equal) << c.detail;
  EXPECT_THROW(l->step(x.slice_time(0, 4), l->get_initial_state(2, false), false), Error);
}

}  // namespace
}  // namespace seqlayers
