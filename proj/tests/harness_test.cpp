// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "catalog.hpp"
#include "sabotage.hpp"
#include "test_util.hpp"

namespace seqlayers {
namespace {

using testing::CatalogEntry;

class CatalogContract : public ::testing::TestWithParam<CatalogEntry> {};

TEST_P(CatalogContract, PassesEveryCheck) {
  const CatalogEntry& e = GetParam();
  auto layer = build(e.config, e.input, 7);
  const ContractReport report = verify_contract(*layer, testing::harness_for(e));
  EXPECT_TRUE(report.passed()) << report.text();
  EXPECT_EQ(report.checks.size(), std::size(kContractChecks));
  EXPECT_EQ(report.find("gradient_equality")->status, CheckStatus::kSkipped);
}

TEST_P(CatalogContract, BlockwiseAtFourTimesNativeMatchesLayer) {
  const CatalogEntry& e = GetParam();
  auto inner = build(e.config, e.input, 7);
  if (!inner->supports_step()) GTEST_SKIP() << "not steppable";
  const std::int64_t block = 4 * inner->block_size();
  auto wrapped = testing::blockwise_twin(e.config, e.input, block, 7);
  EXPECT_EQ(wrapped->block_size(), block);
  std::mt19937_64 gen(5);
  const Sequence x = detail::random_input(gen, 2, 3 * block + 1, e.input);
  const Constants c = detail::random_constants(gen, testing::harness_for(e), 2, x.time());
  const Comparison cmp = compare_sequences(inner->layer(x, false, c), wrapped->layer(x, false, c), e.tolerance);
  EXPECT_TRUE(cmp.equal) << cmp.detail;
}

std::string label(const ::testing::TestParamInfo<CatalogEntry>& info) { return info.param.label; }

INSTANTIATE_TEST_SUITE_P(Layers, CatalogContract, ::testing::ValuesIn(testing::layer_catalog()), label);
INSTANTIATE_TEST_SUITE_P(Compositions, CatalogContract, ::testing::ValuesIn(testing::composition_catalog()), label);

class Sabotage : public ::testing::TestWithParam<sabotage::Case> {};

TEST_P(Sabotage, DesignatedCheckFails) {
  const auto& c = GetParam();
  const ContractReport report = verify_contract(*c.layer);
  const CheckResult* r = report.find(c.check);
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->status, CheckStatus::kFail) << report.text();
  EXPECT_FALSE(report.passed());
}

INSTANTIATE_TEST_SUITE_P(Harness, Sabotage, ::testing::ValuesIn(sabotage::cases()),
                         [](const ::testing::TestParamInfo<sabotage::Case>& info) { return info.param.check; });

TEST(Harness, BidirectionalStepChecksAreSkipped) {
  auto l = build(Bidirectional::Config{Lstm::Config{2}, Lstm::Config{2}}, testing::kF3);
  const ContractReport report = verify_contract(*l);
  EXPECT_TRUE(report.passed()) << report.text();
  EXPECT_EQ(report.find("layer_step_equal_1x")->status, CheckStatus::kSkipped);
  EXPECT_EQ(report.find("layer_step_equal_2x")->status, CheckStatus::kSkipped);
  EXPECT_EQ(report.find("layer_step_equal_1x")->detail, "not steppable");
}

TEST(Harness, CompareSequencesReportsFirstMismatch) {
  const Sequence a = testing::column({1, 2, 3});
  const Sequence b = testing::column({1, 2.5f, 3});
  const Comparison c = compare_sequences(a, b, 1e-6);
  EXPECT_FALSE(c.equal);
  EXPECT_DOUBLE_EQ(c.max_diff, 0.5);
  EXPECT_NE(c.detail.find("t=1"), std::string::npos) << c.detail;
  EXPECT_TRUE(compare_sequences(a, b, 0.6).equal);
}

TEST(Harness, MaskMismatchIsNeverTolerated) {
  const Sequence a = testing::column({1, 2, 3});
  const Sequence b = Sequence::from_lengths(a.values(), {2});
  EXPECT_FALSE(compare_sequences(a, b, 1e9).equal);
}

TEST(Harness, ReportsAreDeterministic) {
  auto l = build(testing::conv1d(2, 3, 2, "same"), testing::kF3, 4);
  EXPECT_EQ(verify_contract(*l).text(), verify_contract(*l).text());
}

// Dropout in training mode: the streamed mask must not depend on how the
// input is cut into blocks.
Sequence stream_partition(const SequenceLayer& l, const Sequence& x, const std::vector<std::int64_t>& sizes) {
  State state = l.get_initial_state(x.batch(), true);
  std::vector<Sequence> outs;
  std::int64_t t = 0;
  for (std::size_t i = 0; t < x.time(); ++i) {
    const std::int64_t n = std::min(sizes[i % sizes.size()], x.time() - t);
    auto [y, next] = l.step(x.slice_time(t, t + n), state, true);
    outs.push_back(y);
    state = std::move(next);
    t += n;
  }
  return Sequence::concatenate(outs);
}

TEST(Dropout, BlockPartitionsAgreeWithLayer) {
  auto l = build(Dropout::Config{0.5, 42}, testing::kF3);
  std::mt19937_64 gen(8);
  const Sequence x = testing::random_sequence(gen, 2, 64, {3}, false);
  const Sequence want = l->layer(x, true);
  for (std::int64_t block : {std::int64_t{1}, std::int64_t{3}, 2 * l->block_size()}) {
    const Comparison c = compare_sequences(want, step_by_step(*l, x, block, true).output, 0.0);
    EXPECT_TRUE(c.equal) << "block " << block << ": " << c.detail;
  }
  const Comparison mixed = compare_sequences(want, stream_partition(*l, x, {1, 3, 2, 5}), 0.0);
  EXPECT_TRUE(mixed.equal) << mixed.detail;
}

TEST(Dropout, DropsAboutHalfAndRescales) {
  auto l = build(Dropout::Config{0.5, 42}, testing::kF3);
  const Sequence x = Sequence::from_values(Tensor::full(DType::kFloat32, {4, 64, 3}, 1.0));
  const Sequence y = l->layer(x, true);
  std::int64_t zeros = 0;
  for (float v : y.values().floats()) {
    EXPECT_TRUE(v == 0.0f || v == 2.0f);
    zeros += v == 0.0f;
  }
  EXPECT_GT(zeros, 300);
  EXPECT_LT(zeros, 468);
  EXPECT_TRUE(compare_sequences(x, l->layer(x, false), 0.0).equal);
}

TEST(Dropout, SiblingsDrawDifferentMasks) {
  auto l = build(Parallel::Config{{Dropout::Config{0.5}, Dropout::Config{0.5}}, "stack"}, testing::kF3);
  const Sequence x = Sequence::from_values(Tensor::full(DType::kFloat32, {1, 16, 3}, 1.0));
  const Sequence y = l->layer(x, true);
  auto v = y.values().floats();
  bool differ = false;
  for (std::int64_t t = 0; t < 16; ++t)
    for (std::int64_t c = 0; c < 3; ++c) differ = differ || v[(t * 2 + 0) * 3 + c] != v[(t * 2 + 1) * 3 + c];
  EXPECT_TRUE(differ);
}

}  // namespace
}  // namespace seqlayers
