// SPDX-License-Identifier: Apache-2.0
//
// Layers that move whole timesteps: Downsample1D, Upsample1D, Delay and
// Lookahead. All accept any dtype.

#pragma once

#include <cstring>

#include "seqlayers/layers/convolution.hpp"

namespace seqlayers {

// Output t copies input source(t); validity follows the source step.
class TimestepCopy : public WindowedLayer {
 public:
  using WindowedLayer::WindowedLayer;

 protected:
  virtual std::int64_t source(std::int64_t t) const = 0;

  ChannelSpec compute_output_spec(const ChannelSpec& in) const override { return in; }

  Sequence compute(const Window& w, std::int64_t begin, std::int64_t count) const override {
    Sequence out = Sequence::invalid(w.batch(), count, input_spec());
    Tensor values = out.values();
    Tensor mask = out.mask();
    const auto row_bytes = static_cast<std::size_t>(w.channels()) * values.element_bytes();
    auto* dst = static_cast<unsigned char*>(values.raw_mut());
    auto m = mask.bools_mut();
    for (std::int64_t b = 0; b < w.batch(); ++b)
      for (std::int64_t i = 0; i < count; ++i) {
        const std::int64_t u = source(begin + i);
        m[b * count + i] = w.valid(b, u);
        if (const auto* src = w.bytes(b, u)) std::memcpy(dst + (b * count + i) * row_bytes, src, row_bytes);
      }
    return Sequence(std::move(values), std::move(mask), true);
  }
};

class Downsample1D final : public TimestepCopy {
 public:
  struct Config {
    static constexpr std::string_view kKind = "downsample1d";
    std::int64_t rate = 1;
    std::string name;
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      check_positive(rate, "rate", ctx.path());
      return make_layer<Downsample1D>(ctx.name(), input, rate);
    }
  };

  Downsample1D(std::string name, ChannelSpec input, std::int64_t rate)
      : TimestepCopy("downsample1d", std::move(name), std::move(input)), rate_(rate) {}

 protected:
  std::int64_t source(std::int64_t t) const override { return t * rate_; }
  std::int64_t history() const override { return 0; }
  LayerProperties compute_properties() const override { return StridedWindow{1, rate_, 0}.properties(); }

 private:
  std::int64_t rate_;
};

class Upsample1D final : public TimestepCopy {
 public:
  struct Config {
    static constexpr std::string_view kKind = "upsample1d";
    std::int64_t rate = 1;
    std::string name;
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      check_positive(rate, "rate", ctx.path());
      return make_layer<Upsample1D>(ctx.name(), input, rate);
    }
  };

  Upsample1D(std::string name, ChannelSpec input, std::int64_t rate)
      : TimestepCopy("upsample1d", std::move(name), std::move(input)), rate_(rate) {}

 protected:
  std::int64_t source(std::int64_t t) const override { return floor_div(t, rate_); }
  std::int64_t history() const override { return 0; }
  LayerProperties compute_properties() const override {
    LayerProperties p;
    p.output_ratio = Fraction(rate_);
    p.receptive_field_per_step.clear();
    for (std::int64_t i = 0; i < rate_; ++i) p.receptive_field_per_step[i] = RFInterval{0, 0};
    return p;
  }

 private:
  std::int64_t rate_;
};

// y[t] = x[t - n]; the first n outputs are invalid.
class Delay final : public TimestepCopy {
 public:
  struct Config {
    static constexpr std::string_view kKind = "delay";
    std::int64_t length = 0;
    std::string name;
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      if (length < 0) throw Error(ctx.path() + ": delay length must be >= 0");
      return make_layer<Delay>(ctx.name(), input, length);
    }
  };

  Delay(std::string name, ChannelSpec input, std::int64_t n)
      : TimestepCopy("delay", std::move(name), std::move(input)), n_(n) {}

 protected:
  std::int64_t source(std::int64_t t) const override { return t - n_; }
  std::int64_t history() const override { return n_; }
  LayerProperties compute_properties() const override {
    LayerProperties p;
    p.receptive_field_per_step = single_step_map(-n_, -n_);
    return p;
  }

 private:
  std::int64_t n_;
};

// y[t] = x[t + n]; streaming output trails input by n steps.
class Lookahead final : public TimestepCopy {
 public:
  struct Config {
    static constexpr std::string_view kKind = "lookahead";
    std::int64_t length = 0;
    std::string name;
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      if (length < 0) throw Error(ctx.path() + ": lookahead length must be >= 0");
      return make_layer<Lookahead>(ctx.name(), input, length);
    }
  };

  Lookahead(std::string name, ChannelSpec input, std::int64_t n)
      : TimestepCopy("lookahead", std::move(name), std::move(input)), n_(n) {}

 protected:
  std::int64_t source(std::int64_t t) const override { return t + n_; }
  std::int64_t history() const override { return 0; }
  LayerProperties compute_properties() const override {
    LayerProperties p;
    p.output_latency = n_;
    p.input_latency = n_;
    p.receptive_field_per_step = single_step_map(n_, n_);
    return p;
  }

 private:
  std::int64_t n_;
};

}  // namespace seqlayers
