// SPDX-License-Identifier: Apache-2.0
//
// Identity, Emit, Dense and scalar affine layers.

#pragma once

#include <optional>
#include <string>

#include "seqlayers/config.hpp"

namespace seqlayers {

inline void require_float(const ChannelSpec& spec, const std::string& who) {
  if (spec.dtype != DType::kFloat32) throw ShapeError(who + " requires f32 input, got " + spec.str());
}

class Identity final : public StatelessLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "identity";
    std::string name;
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      return make_layer<Identity>(ctx.name(), input);
    }
  };

  Identity(std::string name, ChannelSpec input) : StatelessLayer("identity", std::move(name), std::move(input)) {}

 protected:
  Sequence apply(const Sequence& x, bool, const Constants&) const override { return x; }
  ChannelSpec compute_output_spec(const ChannelSpec& in) const override { return in; }
};

// Passes its input through and exposes it as emits.
class Emit final : public StatelessLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "emit";
    std::string name;
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      return make_layer<Emit>(ctx.name(), input);
    }
  };

  Emit(std::string name, ChannelSpec input) : StatelessLayer("emit", std::move(name), std::move(input)) {}

 protected:
  Sequence apply(const Sequence& x, bool, const Constants&) const override { return x; }
  Emits apply_emits(const Sequence& x) const override { return x; }
  ChannelSpec compute_output_spec(const ChannelSpec& in) const override { return in; }
};

// Affine map over the last channel axis: y = x . kernel + bias.
class Dense final : public StatelessLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "dense";
    std::int64_t units = 1;
    bool use_bias = true;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      require_float(input, ctx.path());
      if (input.shape.empty()) throw ShapeError(ctx.path() + ": dense needs a channel axis");
      if (units <= 0) throw Error(ctx.path() + ": units must be positive");
      const std::int64_t in = input.shape.back();
      Tensor kernel = ctx.parameter("kernel", {in, units});
      std::optional<Tensor> bias;
      if (use_bias) bias = ctx.parameter("bias", {units});
      return make_layer<Dense>(ctx.name(), input, std::move(kernel), std::move(bias));
    }
  };

  Dense(std::string name, ChannelSpec input, Tensor kernel, std::optional<Tensor> bias)
      : StatelessLayer("dense", std::move(name), std::move(input)),
        kernel_(std::move(kernel)),
        bias_(std::move(bias)) {}

  const Tensor& kernel() const { return kernel_; }
  const std::optional<Tensor>& bias() const { return bias_; }

  std::vector<std::pair<std::string, Tensor>> own_parameters() const override {
    std::vector<std::pair<std::string, Tensor>> out{{"kernel", kernel_}};
    if (bias_) out.emplace_back("bias", *bias_);
    return out;
  }

 protected:
  Sequence apply(const Sequence& x, bool, const Constants&) const override {
    const std::int64_t in = kernel_.dim(0), units = kernel_.dim(1);
    const std::int64_t rows = x.values().size() / in;
    Tensor y = matmul(reshape(x.values(), {rows, in}), kernel_);
    if (bias_) y = add(y, *bias_);
    Shape shape = x.shape();
    shape.back() = units;
    return x.with_values(reshape(y, shape), !bias_ && x.is_masked());
  }

  ChannelSpec compute_output_spec(const ChannelSpec& in) const override {
    ChannelSpec out = in;
    out.shape.back() = kernel_.dim(1);
    return out;
  }

 private:
  Tensor kernel_;
  std::optional<Tensor> bias_;
};

// Multiplies every element by a constant.
class Scale final : public StatelessLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "scale";
    double scale = 1.0;
    std::string name;
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      return make_layer<Scale>(ctx.name(), input, scale);
    }
  };

  Scale(std::string name, ChannelSpec input, double scale)
      : StatelessLayer("scale", std::move(name), std::move(input)), scale_(scale) {}

 protected:
  Sequence apply(const Sequence& x, bool, const Constants&) const override {
    Tensor s = Tensor::full(x.dtype(), {}, scale_);
    return x.with_values(mul(x.values(), s), x.is_masked());
  }
  ChannelSpec compute_output_spec(const ChannelSpec& in) const override { return in; }

 private:
  double scale_;
};

// Adds a constant to every element.
class Add final : public StatelessLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "add";
    double value = 0.0;
    std::string name;
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      return make_layer<Add>(ctx.name(), input, value);
    }
  };

  Add(std::string name, ChannelSpec input, double value)
      : StatelessLayer("add", std::move(name), std::move(input)), value_(value) {}

 protected:
  Sequence apply(const Sequence& x, bool, const Constants&) const override {
    Tensor s = Tensor::full(x.dtype(), {}, value_);
    return x.with_values(add(x.values(), s), value_ == 0.0 && x.is_masked());
  }
  ChannelSpec compute_output_spec(const ChannelSpec& in) const override { return in; }

 private:
  double value_;
};

}  // namespace seqlayers
