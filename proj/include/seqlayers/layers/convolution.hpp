// SPDX-License-Identifier: Apache-2.0
//
// Conv1D and Conv1DTranspose.

#pragma once

#include <string>

#include "seqlayers/layers/basic.hpp"

namespace seqlayers {

enum class Padding { kCausal, kReverseCausal, kSame };

inline Padding parse_padding(const std::string& text, const std::string& where) {
  if (text == "causal") return Padding::kCausal;
  if (text == "reverse_causal") return Padding::kReverseCausal;
  if (text == "same") return Padding::kSame;
  throw Error(where + ": unknown padding '" + text + "'");
}

// A window of `span` consecutive input steps per output, where output o is
// anchored at input o * stride and the window starts `left` steps earlier.
struct StridedWindow {
  std::int64_t span = 1;
  std::int64_t stride = 1;
  std::int64_t left = 0;

  static StridedWindow make(std::int64_t span, std::int64_t stride, Padding padding) {
    std::int64_t left = 0;
    switch (padding) {
      case Padding::kCausal: left = span - 1; break;
      case Padding::kReverseCausal: left = 0; break;
      case Padding::kSame: left = (span - 1) / 2; break;
    }
    return {span, stride, left};
  }

  std::int64_t right() const { return span - 1 - left; }
  std::int64_t output_latency() const {
    return ceil_div(std::max<std::int64_t>(0, right() - stride + 1), stride);
  }
  std::int64_t history() const { return output_latency() * stride + left; }

  LayerProperties properties() const {
    LayerProperties p;
    p.output_ratio = Fraction(1, stride);
    p.block_size = stride;
    p.output_latency = output_latency();
    p.input_latency = implied_input_latency(p.output_ratio, p.output_latency);
    p.receptive_field_per_step = single_step_map(-left, right());
    return p;
  }
};

inline void check_positive(std::int64_t v, const char* what, const std::string& where) {
  if (v < 1) throw Error(where + ": " + what + " must be >= 1, got " + std::to_string(v));
}

inline std::int64_t single_channel_axis(const ChannelSpec& input, const std::string& where) {
  require_float(input, where);
  if (input.shape.size() != 1) throw ShapeError(where + ": expected input f32[C], got " + input.str());
  return input.shape[0];
}

class Conv1D final : public WindowedLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "conv1d";
    std::int64_t filters = 1;
    std::int64_t kernel_size = 1;
    std::int64_t strides = 1;
    std::int64_t dilation_rate = 1;
    std::string padding = "causal";
    bool use_bias = true;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      const std::int64_t in = single_channel_axis(input, ctx.path());
      check_positive(filters, "filters", ctx.path());
      check_positive(kernel_size, "kernel_size", ctx.path());
      check_positive(strides, "strides", ctx.path());
      check_positive(dilation_rate, "dilation_rate", ctx.path());
      const auto geom = StridedWindow::make((kernel_size - 1) * dilation_rate + 1, strides,
                                            parse_padding(padding, ctx.path()));
      Tensor kernel = ctx.parameter("kernel", {kernel_size, in, filters});
      std::optional<Tensor> bias;
      if (use_bias) bias = ctx.parameter("bias", {filters});
      return make_layer<Conv1D>(ctx.name(), input, geom, dilation_rate, std::move(kernel), std::move(bias));
    }
  };

  Conv1D(std::string name, ChannelSpec input, StridedWindow geom, std::int64_t dilation, Tensor kernel,
         std::optional<Tensor> bias)
      : WindowedLayer("conv1d", std::move(name), std::move(input)),
        geom_(geom),
        dilation_(dilation),
        kernel_(std::move(kernel)),
        bias_(std::move(bias)) {}

  std::vector<std::pair<std::string, Tensor>> own_parameters() const override {
    std::vector<std::pair<std::string, Tensor>> out{{"kernel", kernel_}};
    if (bias_) out.emplace_back("bias", *bias_);
    return out;
  }

 protected:
  std::int64_t history() const override { return geom_.history(); }
  LayerProperties compute_properties() const override { return geom_.properties(); }
  ChannelSpec compute_output_spec(const ChannelSpec&) const override { return {{kernel_.dim(2)}, DType::kFloat32}; }

  Sequence compute(const Window& w, std::int64_t begin, std::int64_t count) const override {
    const std::int64_t k = kernel_.dim(0), cin = kernel_.dim(1), f = kernel_.dim(2);
    Tensor values(DType::kFloat32, {w.batch(), count, f});
    Tensor mask(DType::kBool, {w.batch(), count});
    auto out = values.floats_mut();
    auto m = mask.bools_mut();
    const float* kern = kernel_.floats().data();
    for (std::int64_t b = 0; b < w.batch(); ++b)
      for (std::int64_t i = 0; i < count; ++i) {
        const std::int64_t anchor = (begin + i) * geom_.stride;
        m[b * count + i] = w.valid(b, anchor);
        float* acc = out.data() + (b * count + i) * f;
        if (bias_) std::copy_n(bias_->floats().data(), f, acc);
        for (std::int64_t j = 0; j < k; ++j) {
          const float* row = w.floats(b, anchor - geom_.left + j * dilation_);
          if (!row) continue;
          for (std::int64_t c = 0; c < cin; ++c)
            for (std::int64_t o = 0; o < f; ++o) acc[o] += row[c] * kern[(j * cin + c) * f + o];
        }
      }
    return Sequence(std::move(values), std::move(mask));
  }

 private:
  StridedWindow geom_;
  std::int64_t dilation_;
  Tensor kernel_;
  std::optional<Tensor> bias_;
};

// Transposed convolution: input step u scatters kernel tap j into output
// u * stride + j - offset, where offset is 0 for causal and
// floor(max(kernel - stride, 0) / 2) for same.
class Conv1DTranspose final : public WindowedLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "conv1d_transpose";
    std::int64_t filters = 1;
    std::int64_t kernel_size = 1;
    std::int64_t strides = 1;
    std::string padding = "causal";
    bool use_bias = true;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      const std::int64_t in = single_channel_axis(input, ctx.path());
      check_positive(filters, "filters", ctx.path());
      check_positive(kernel_size, "kernel_size", ctx.path());
      check_positive(strides, "strides", ctx.path());
      std::int64_t offset = 0;
      switch (parse_padding(padding, ctx.path())) {
        case Padding::kCausal: offset = 0; break;
        case Padding::kSame: offset = std::max<std::int64_t>(kernel_size - strides, 0) / 2; break;
        case Padding::kReverseCausal:
          throw Error(ctx.path() + ": conv1d_transpose supports causal or same padding");
      }
      Tensor kernel = ctx.parameter("kernel", {kernel_size, in, filters});
      std::optional<Tensor> bias;
      if (use_bias) bias = ctx.parameter("bias", {filters});
      return make_layer<Conv1DTranspose>(ctx.name(), input, strides, offset, std::move(kernel), std::move(bias));
    }
  };

  Conv1DTranspose(std::string name, ChannelSpec input, std::int64_t stride, std::int64_t offset, Tensor kernel,
                  std::optional<Tensor> bias)
      : WindowedLayer("conv1d_transpose", std::move(name), std::move(input)),
        stride_(stride),
        offset_(offset),
        kernel_(std::move(kernel)),
        bias_(std::move(bias)) {}

  std::vector<std::pair<std::string, Tensor>> own_parameters() const override {
    std::vector<std::pair<std::string, Tensor>> out{{"kernel", kernel_}};
    if (bias_) out.emplace_back("bias", *bias_);
    return out;
  }

 protected:
  std::int64_t history() const override {
    return std::max((kernel_.dim(0) - 1) / stride_, ceil_div(offset_, stride_));
  }

  LayerProperties compute_properties() const override {
    LayerProperties p;
    p.output_ratio = Fraction(stride_);
    p.block_size = 1;
    p.output_latency = offset_;
    p.input_latency = implied_input_latency(p.output_ratio, p.output_latency);
    p.receptive_field_per_step.clear();
    for (std::int64_t i = 0; i < stride_; ++i) {
      const auto [lo, hi] = taps(i);
      p.receptive_field_per_step[i] = lo <= hi ? StepReceptiveField(RFInterval{lo, hi}) : std::nullopt;
    }
    p.receptive_field_per_step = canonicalize(p.receptive_field_per_step, p.output_ratio);
    return p;
  }

  ChannelSpec compute_output_spec(const ChannelSpec&) const override { return {{kernel_.dim(2)}, DType::kFloat32}; }

  Sequence compute(const Window& w, std::int64_t begin, std::int64_t count) const override {
    const std::int64_t cin = kernel_.dim(1), f = kernel_.dim(2);
    Tensor values(DType::kFloat32, {w.batch(), count, f});
    Tensor mask(DType::kBool, {w.batch(), count});
    auto out = values.floats_mut();
    auto m = mask.bools_mut();
    const float* kern = kernel_.floats().data();
    for (std::int64_t b = 0; b < w.batch(); ++b)
      for (std::int64_t i = 0; i < count; ++i) {
        const std::int64_t t = begin + i;
        m[b * count + i] = w.valid(b, floor_div(t, stride_));
        float* acc = out.data() + (b * count + i) * f;
        if (bias_) std::copy_n(bias_->floats().data(), f, acc);
        const auto [lo, hi] = taps(t);
        for (std::int64_t u = lo; u <= hi; ++u) {
          const float* row = w.floats(b, u);
          if (!row) continue;
          const std::int64_t j = t + offset_ - u * stride_;
          for (std::int64_t c = 0; c < cin; ++c)
            for (std::int64_t o = 0; o < f; ++o) acc[o] += row[c] * kern[(j * cin + c) * f + o];
        }
      }
    return Sequence(std::move(values), std::move(mask));
  }

 private:
  // Input steps contributing to output t (empty when lo > hi).
  std::pair<std::int64_t, std::int64_t> taps(std::int64_t t) const {
    return {ceil_div(t + offset_ - kernel_.dim(0) + 1, stride_), floor_div(t + offset_, stride_)};
  }

  std::int64_t stride_;
  std::int64_t offset_;
  Tensor kernel_;
  std::optional<Tensor> bias_;
};

}  // namespace seqlayers
