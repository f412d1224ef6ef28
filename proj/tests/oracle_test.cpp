// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "oracle_cases.hpp"

namespace seqlayers {
namespace {

void expect_all(const std::vector<oracle::Case>& cases) {
  ASSERT_GE(cases.size(), 20u);
  for (const auto& c : cases) {
    ASSERT_LE(c.x.time(), 16);
    const auto r = oracle::check(c);
    EXPECT_TRUE(r.ok) << r.detail;
  }
}

TEST(Oracle, Conv1D) { expect_all(oracle::conv1d_cases()); }
TEST(Oracle, Conv1DTranspose) { expect_all(oracle::conv1d_transpose_cases()); }
TEST(Oracle, Pooling) { expect_all(oracle::pooling_cases()); }
TEST(Oracle, Lstm) { expect_all(oracle::lstm_cases()); }
TEST(Oracle, SelfAttention) { expect_all(oracle::attention_cases()); }

}  // namespace
}  // namespace seqlayers
