// SPDX-License-Identifier: Apache-2.0
//
// Random layer instances paired with explicit-loop reference outputs.

#pragma once

#include "oracles.hpp"
#include "seqlayers/seqlayers.hpp"
#include "test_util.hpp"

namespace seqlayers::oracle {

inline constexpr int kInstances = 24;
inline constexpr double kTolerance = 1e-5;

struct Case {
  std::string what;
  LayerPtr layer;
  Sequence x;
  Result want;
};

struct CaseCheck {
  bool ok = true;
  std::string detail;
};

namespace cases_detail {

inline std::int64_t pick(std::mt19937_64& gen, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(gen);
}

inline std::string pick_padding(std::mt19937_64& gen, bool allow_reverse = true) {
  static const char* kAll[] = {"causal", "same", "reverse_causal"};
  return kAll[pick(gen, 0, allow_reverse ? 2 : 1)];
}

}  // namespace cases_detail

inline std::vector<Case> conv1d_cases() {
  using namespace cases_detail;
  std::mt19937_64 gen(11);
  std::vector<Case> out;
  for (int i = 0; i < kInstances; ++i) {
    Conv1D::Config c;
    c.filters = pick(gen, 1, 4);
    c.kernel_size = pick(gen, 1, 5);
    c.strides = pick(gen, 1, 3);
    c.dilation_rate = pick(gen, 1, 2);
    c.padding = pick_padding(gen);
    c.use_bias = i % 3 != 0;
    const std::int64_t cin = pick(gen, 1, 3), T = pick(gen, 4, 16);
    auto layer = build(c, testing::f32({cin}), 100 + i);
    Sequence x = testing::random_sequence(gen, 2, T, {cin});
    const auto p = layer->parameters();
    const Tensor* bias = c.use_bias ? &p.at("bias") : nullptr;
    Result want = conv1d(x, p.at("kernel"), bias, c.strides, c.dilation_rate, c.padding);
    out.push_back({"conv1d k=" + std::to_string(c.kernel_size) + " s=" + std::to_string(c.strides) + " d=" +
                       std::to_string(c.dilation_rate) + " " + c.padding,
                   layer, std::move(x), std::move(want)});
  }
  return out;
}

inline std::vector<Case> conv1d_transpose_cases() {
  using namespace cases_detail;
  std::mt19937_64 gen(12);
  std::vector<Case> out;
  for (int i = 0; i < kInstances; ++i) {
    Conv1DTranspose::Config c;
    c.filters = pick(gen, 1, 4);
    c.kernel_size = pick(gen, 1, 6);
    c.strides = pick(gen, 1, 4);
    c.padding = pick_padding(gen, false);
    c.use_bias = i % 4 != 0;
    const std::int64_t cin = pick(gen, 1, 3), T = pick(gen, 4, 16);
    auto layer = build(c, testing::f32({cin}), 200 + i);
    Sequence x = testing::random_sequence(gen, 2, T, {cin});
    const auto p = layer->parameters();
    const Tensor* bias = c.use_bias ? &p.at("bias") : nullptr;
    Result want = conv1d_transpose(x, p.at("kernel"), bias, c.strides, c.padding);
    out.push_back({"conv1d_transpose k=" + std::to_string(c.kernel_size) + " s=" + std::to_string(c.strides) + " " +
                       c.padding,
                   layer, std::move(x), std::move(want)});
  }
  return out;
}

inline std::vector<Case> pooling_cases() {
  using namespace cases_detail;
  std::mt19937_64 gen(13);
  std::vector<Case> out;
  for (int i = 0; i < kInstances; ++i) {
    const std::int64_t pool = pick(gen, 1, 4), stride = pick(gen, 1, 3), T = pick(gen, 4, 16);
    const std::string padding = pick_padding(gen);
    const Sequence x = testing::random_sequence(gen, 2, T, {3});
    const std::string what = " pool=" + std::to_string(pool) + " s=" + std::to_string(stride) + " " + padding;
    out.push_back({"max" + what, build(MaxPooling1D::Config{pool, stride, padding}, testing::kF3), x,
                   pooling1d(x, "max", pool, stride, padding)});
    out.push_back({"min" + what, build(MinPooling1D::Config{pool, stride, padding}, testing::kF3), x,
                   pooling1d(x, "min", pool, stride, padding)});
    out.push_back({"average" + what, build(AveragePooling1D::Config{pool, stride, padding}, testing::kF3), x,
                   pooling1d(x, "average", pool, stride, padding)});
  }
  return out;
}

inline std::vector<Case> lstm_cases() {
  using namespace cases_detail;
  std::mt19937_64 gen(14);
  std::vector<Case> out;
  for (int i = 0; i < kInstances; ++i) {
    Lstm::Config c;
    c.units = pick(gen, 1, 4);
    c.forget_bias = i % 2 ? 1.0 : 0.0;
    const std::int64_t cin = pick(gen, 1, 3), T = pick(gen, 4, 16);
    auto layer = build(c, testing::f32({cin}), 300 + i);
    Sequence x = testing::random_sequence(gen, 2, T, {cin});
    const auto p = layer->parameters();
    Result want = lstm(x, p.at("kernel"), p.at("bias"), c.forget_bias);
    out.push_back({"lstm units=" + std::to_string(c.units), layer, std::move(x), std::move(want)});
  }
  return out;
}

inline std::vector<Case> attention_cases() {
  using namespace cases_detail;
  std::mt19937_64 gen(15);
  std::vector<Case> out;
  for (int i = 0; i < kInstances; ++i) {
    DotProductSelfAttention::Config c;
    c.num_heads = pick(gen, 1, 3);
    c.units_per_head = pick(gen, 1, 4);
    c.max_past_horizon = pick(gen, -1, 4);
    c.max_future_horizon = pick(gen, 0, 2);
    const std::int64_t cin = pick(gen, 1, 4), T = pick(gen, 4, 16);
    auto layer = build(c, testing::f32({cin}), 400 + i);
    Sequence x = testing::random_sequence(gen, 2, T, {cin});
    const auto p = layer->parameters();
    Result want =
        self_attention(x, p.at("q_proj"), p.at("k_proj"), p.at("v_proj"), c.max_past_horizon, c.max_future_horizon);
    out.push_back({"attention past=" + std::to_string(c.max_past_horizon) +
                       " future=" + std::to_string(c.max_future_horizon),
                   layer, std::move(x), std::move(want)});
  }
  return out;
}

// Checks layer() and, when steppable, the streamed output against the oracle.
inline CaseCheck check(const Case& c) {
  CaseCheck r;
  auto judge = [&](const Sequence& got, const char* mode) {
    const Diff d = compare(c.want, got);
    if (!d.mask_equal || !(d.max_diff <= kTolerance)) {
      r.ok = false;
      r.detail += c.what + " (" + mode + "): mask_equal=" + (d.mask_equal ? "true" : "false") +
                  " max_diff=" + std::to_string(d.max_diff) + "\n";
    }
  };
  judge(c.layer->layer(c.x, false), "layer");
  if (c.layer->supports_step()) judge(step_by_step(*c.layer, c.x, c.layer->block_size(), false).output, "step");
  return r;
}

}  // namespace seqlayers::oracle
