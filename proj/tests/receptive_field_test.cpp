// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "seqlayers/seqlayers.hpp"
#include "seqlayers/verify.hpp"
#include "test_util.hpp"

namespace seqlayers {
namespace {

using testing::kF3;

RFInterval iv(Bound a, Bound b) { return {a, b}; }

Conv1D::Config conv(std::int64_t k, std::int64_t s, const std::string& padding, std::int64_t filters = 2) {
  Conv1D::Config c;
  c.filters = filters;
  c.kernel_size = k;
  c.strides = s;
  c.padding = padding;
  return c;
}

Conv1DTranspose::Config conv_t(std::int64_t k, std::int64_t s, const std::string& padding) {
  Conv1DTranspose::Config c;
  c.filters = 2;
  c.kernel_size = k;
  c.strides = s;
  c.padding = padding;
  return c;
}

TEST(ReceptiveField, Conv1DPaddings) {
  EXPECT_EQ(build(conv(5, 1, "causal"), kF3)->receptive_field(), iv(-4, 0));
  EXPECT_EQ(build(conv(5, 1, "reverse_causal"), kF3)->receptive_field(), iv(0, 4));
  EXPECT_EQ(build(conv(5, 1, "same"), kF3)->receptive_field(), iv(-2, 2));
}

TEST(ReceptiveField, SerialOfFourSameConvs) {
  Serial::Config s;
  for (int i = 0; i < 4; ++i) s.layers.push_back(conv(5, 1, "same", 3));
  EXPECT_EQ(build(s, kF3)->receptive_field(), iv(-8, 8));
}

TEST(ReceptiveField, LstmIsUnboundedPast) {
  EXPECT_EQ(build(Lstm::Config{4}, kF3)->receptive_field(), iv(Bound::neg_inf(), 0));
}

TEST(ReceptiveField, TransposeKernelOneStrideTwo) {
  auto l = build(conv_t(1, 2, "same"), kF3);
  const ReceptiveFieldMap want{{0, iv(0, 0)}, {1, std::nullopt}};
  EXPECT_EQ(l->receptive_field_per_step(), want);
  EXPECT_EQ(l->receptive_field(), iv(0, 0));
  EXPECT_EQ(to_string(l->receptive_field_per_step()), "{0: (0, 0), 1: None}");
}

TEST(ReceptiveField, MixedConvTranspose) {
  Serial::Config s{{conv(5, 2, "same", 4), conv_t(6, 4, "same")}};
  auto l = build(s, kF3);
  const ReceptiveFieldMap want{{0, iv(-4, 2)}, {1, iv(-2, 2)}, {2, iv(-2, 2)}, {3, iv(-2, 4)}};
  EXPECT_EQ(l->receptive_field_per_step(), want);
  EXPECT_EQ(l->receptive_field(), iv(-4, 3));
  EXPECT_EQ(l->output_ratio(), Fraction(2));
}

// The declared maps above are checked against perturbation measurements.
TEST(ReceptiveField, DeclaredMatchesMeasured) {
  std::vector<LayerPtr> layers{
      build(conv(5, 1, "causal"), kF3),
      build(conv(5, 1, "reverse_causal"), kF3),
      build(conv(5, 1, "same"), kF3),
      build(conv_t(1, 2, "same"), kF3),
      build(Serial::Config{{conv(5, 2, "same", 4), conv_t(6, 4, "same")}}, kF3),
  };
  for (const auto& l : layers) {
    const auto measured = empirical_receptive_field(*l, HarnessConfig{});
    EXPECT_EQ(measured.per_step, l->receptive_field_per_step()) << l->kind();
  }
}

TEST(ReceptiveField, ParseRoundTrip) {
  const ReceptiveFieldMap m = parse_receptive_field_map("{0: (-inf, 2), 1: None, 2: (-2, 4)}");
  EXPECT_EQ(to_string(m), "{0: (-inf, 2), 1: None, 2: (-2, 4)}");
  EXPECT_THROW(parse_receptive_field_map("{1: (0, 0)}"), Error);
  EXPECT_THROW(parse_receptive_field_map("{0: (0 0)}"), Error);
}

TEST(SerialMetadata, TwoStridedConvs) {
  Serial::Config s{{conv(3, 2, "causal", 8), conv(3, 3, "causal", 8)}};
  auto l = build(s, kF3);
  EXPECT_EQ(l->output_ratio(), Fraction(1, 6));
  EXPECT_EQ(l->block_size(), 6);
  std::mt19937_64 gen(1);
  for (std::int64_t t : {6, 12, 36}) {
    const Sequence y = l->layer(testing::random_sequence(gen, 2, t, {3}), false);
    EXPECT_EQ(y.shape(), (Shape{2, t / 6, 8}));
  }
}

TEST(SerialMetadata, EmptySerialIsIdentity) {
  auto l = build(Serial::Config{}, kF3);
  EXPECT_EQ(l->output_ratio(), Fraction(1));
  EXPECT_EQ(l->block_size(), 1);
  EXPECT_EQ(l->input_latency(), 0);
  EXPECT_EQ(l->output_latency(), 0);
  EXPECT_EQ(l->receptive_field(), iv(0, 0));
}

// Runs the flush-and-trim protocol by hand, one step call per block.
Sequence stream_by_hand(const SequenceLayer& l, const Sequence& x) {
  const Sequence padded = x.pad_time(0, l.input_latency(), false);
  State state = l.get_initial_state(x.batch(), false);
  std::vector<Sequence> outs;
  for (std::int64_t t = 0; t < padded.time(); t += l.block_size()) {
    auto [y, next] = l.step(padded.slice_time(t, t + l.block_size()), state, false);
    outs.push_back(y);
    state = std::move(next);
  }
  const Sequence all = Sequence::concatenate(outs);
  return all.slice_time(l.output_latency(), l.output_latency() + x.time());
}

TEST(Latency, ReverseCausalConv) {
  auto l = build(conv(5, 1, "reverse_causal"), kF3, 3);
  EXPECT_EQ(l->input_latency(), 4);
  EXPECT_EQ(l->output_latency(), 4);
  std::mt19937_64 gen(2);
  const Sequence x = testing::random_sequence(gen, 2, 24, {3});
  const Sequence want = l->layer(x, false);
  const Comparison c = compare_sequences(want, stream_by_hand(*l, x), 1e-6);
  EXPECT_TRUE(c.equal) << c.detail;
  const Comparison d = compare_sequences(want, step_by_step(*l, x, 1, false).output, 1e-6);
  EXPECT_TRUE(d.equal) << d.detail;
}

TEST(Latency, CausalConvHasNone) {
  auto l = build(conv(5, 1, "causal"), kF3);
  EXPECT_EQ(l->input_latency(), 0);
  EXPECT_EQ(l->output_latency(), 0);
}

TEST(Latency, SameConvIsHalfKernel) {
  auto l = build(conv(5, 1, "same"), kF3);
  EXPECT_EQ(l->input_latency(), 2);
  EXPECT_EQ(l->output_latency(), 2);
}

}  // namespace
}  // namespace seqlayers
