// SPDX-License-Identifier: Apache-2.0
//
// Framing, window functions and overlap-add.
//
// Frames are causal: frame o holds input steps [o*hop + hop - L, o*hop + hop)
// for frame length L. OverlapAdd inverts that placement, so a rectangular
// frame/overlap-add round trip with L == hop is the identity.

#pragma once

#include <cmath>
#include <cstring>
#include <numbers>

#include "seqlayers/layers/convolution.hpp"

namespace seqlayers {

class Frame final : public WindowedLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "frame";
    std::int64_t frame_length = 1;
    std::int64_t frame_step = 1;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      check_positive(frame_step, "frame_step", ctx.path());
      if (frame_length < frame_step)
        throw Error(ctx.path() + ": frame_length " + std::to_string(frame_length) + " < frame_step " +
                    std::to_string(frame_step));
      return make_layer<Frame>(ctx.name(), input, frame_length, frame_step);
    }
  };

  Frame(std::string name, ChannelSpec input, std::int64_t length, std::int64_t hop)
      : WindowedLayer("frame", std::move(name), std::move(input)), length_(length), hop_(hop) {}

 protected:
  StridedWindow geometry() const { return {length_, hop_, length_ - hop_}; }
  std::int64_t history() const override { return geometry().history(); }
  LayerProperties compute_properties() const override { return geometry().properties(); }
  ChannelSpec compute_output_spec(const ChannelSpec& in) const override {
    ChannelSpec out = in;
    out.shape.insert(out.shape.begin(), length_);
    return out;
  }

  Sequence compute(const Window& w, std::int64_t begin, std::int64_t count) const override {
    Sequence out = Sequence::invalid(w.batch(), count, output_spec());
    Tensor values = out.values();
    Tensor mask = out.mask();
    const auto row_bytes = static_cast<std::size_t>(w.channels()) * values.element_bytes();
    auto* dst = static_cast<unsigned char*>(values.raw_mut());
    auto m = mask.bools_mut();
    for (std::int64_t b = 0; b < w.batch(); ++b)
      for (std::int64_t i = 0; i < count; ++i) {
        const std::int64_t anchor = (begin + i) * hop_;
        m[b * count + i] = w.valid(b, anchor);
        for (std::int64_t j = 0; j < length_; ++j)
          if (const auto* src = w.bytes(b, anchor + hop_ - length_ + j))
            std::memcpy(dst + ((b * count + i) * length_ + j) * row_bytes, src, row_bytes);
      }
    return Sequence(std::move(values), std::move(mask));
  }

 private:
  std::int64_t length_;
  std::int64_t hop_;
};

// Sums frames [.., L, ...] back onto a timeline with the given hop.
class OverlapAdd final : public WindowedLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "overlap_add";
    std::int64_t frame_step = 1;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      require_float(input, ctx.path());
      check_positive(frame_step, "frame_step", ctx.path());
      if (input.shape.empty()) throw ShapeError(ctx.path() + ": overlap_add needs a frame axis");
      if (input.shape[0] < frame_step)
        throw Error(ctx.path() + ": frame length " + std::to_string(input.shape[0]) + " < frame_step " +
                    std::to_string(frame_step));
      return make_layer<OverlapAdd>(ctx.name(), input, frame_step);
    }
  };

  OverlapAdd(std::string name, ChannelSpec input, std::int64_t hop)
      : WindowedLayer("overlap_add", std::move(name), std::move(input)), hop_(hop) {}

 protected:
  std::int64_t length() const { return input_spec().shape[0]; }
  std::int64_t overlap() const { return length() - hop_; }

  std::int64_t history() const override { return ceil_div(overlap(), hop_); }

  LayerProperties compute_properties() const override {
    LayerProperties p;
    p.output_ratio = Fraction(hop_);
    p.output_latency = overlap();
    p.input_latency = implied_input_latency(p.output_ratio, p.output_latency);
    p.receptive_field_per_step.clear();
    for (std::int64_t i = 0; i < hop_; ++i)
      p.receptive_field_per_step[i] = RFInterval{0, floor_div(i + overlap(), hop_)};
    p.receptive_field_per_step = canonicalize(p.receptive_field_per_step, p.output_ratio);
    return p;
  }

  ChannelSpec compute_output_spec(const ChannelSpec& in) const override {
    return {Shape(in.shape.begin() + 1, in.shape.end()), in.dtype};
  }

  Sequence compute(const Window& w, std::int64_t begin, std::int64_t count) const override {
    const std::int64_t inner = output_spec().size();
    Tensor values(DType::kFloat32, time_major_shape(w.batch(), count, output_spec().shape));
    Tensor mask(DType::kBool, {w.batch(), count});
    auto out = values.floats_mut();
    auto m = mask.bools_mut();
    for (std::int64_t b = 0; b < w.batch(); ++b)
      for (std::int64_t i = 0; i < count; ++i) {
        const std::int64_t t = begin + i;
        m[b * count + i] = w.valid(b, floor_div(t, hop_));
        float* acc = out.data() + (b * count + i) * inner;
        for (std::int64_t u = floor_div(t, hop_); u <= floor_div(t + overlap(), hop_); ++u) {
          const float* frame = w.floats(b, u);
          if (!frame) continue;
          const std::int64_t j = t - u * hop_ + overlap();
          for (std::int64_t k = 0; k < inner; ++k) acc[k] += frame[j * inner + k];
        }
      }
    return Sequence(std::move(values), std::move(mask));
  }

 private:
  std::int64_t hop_;
};

// Symmetric window curves of length n.
inline std::vector<double> window_curve(const std::string& kind, std::int64_t n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (n == 1 || kind == "rectangular") return w;
  const double denom = static_cast<double>(n - 1);
  for (std::int64_t i = 0; i < n; ++i) {
    const double c = std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom);
    if (kind == "hann") w[i] = 0.5 - 0.5 * c;
    else if (kind == "hamming") w[i] = 0.54 - 0.46 * c;
    else throw Error("unknown window '" + kind + "'");
  }
  return w;
}

// Multiplies the channel axis `axis` by a window curve.
class WindowLayer final : public StatelessLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "window";
    std::string window = "hann";
    std::int64_t axis = 0;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      require_float(input, ctx.path());
      if (input.shape.empty()) throw ShapeError(ctx.path() + ": window needs a channel axis");
      const auto ax = normalize_axis(axis, static_cast<std::int64_t>(input.shape.size()));
      auto curve = window_curve(window, input.shape[ax]);
      return make_layer<WindowLayer>(ctx.name(), input, ax, std::move(curve));
    }
  };

  WindowLayer(std::string name, ChannelSpec input, std::int64_t axis, std::vector<double> curve)
      : StatelessLayer("window", std::move(name), std::move(input)), axis_(axis), curve_(std::move(curve)) {}

 protected:
  Sequence apply(const Sequence& x, bool, const Constants&) const override {
    Shape shape(input_spec().shape.size(), 1);
    shape[axis_] = static_cast<std::int64_t>(curve_.size());
    Tensor w(DType::kFloat32, shape);
    for (std::size_t i = 0; i < curve_.size(); ++i) w.floats_mut()[i] = static_cast<float>(curve_[i]);
    return x.with_values(mul(x.values(), w), x.is_masked());
  }
  ChannelSpec compute_output_spec(const ChannelSpec& in) const override { return in; }

 private:
  std::int64_t axis_;
  std::vector<double> curve_;
};

}  // namespace seqlayers
