// SPDX-License-Identifier: Apache-2.0
//
// Pointwise activations and softmax over a channel axis.

#pragma once

#include <cmath>
#include <string>

#include "seqlayers/layers/basic.hpp"

namespace seqlayers {

enum class ActivationKind {
  kRelu, kGelu, kSigmoid, kTanh, kSwish, kSoftplus, kLeakyRelu, kElu, kAbs, kExp, kLog,
  kPower, kMaximum, kMinimum, kMod, kSoftmax,
};

struct ActivationInfo {
  ActivationKind kind;
  const char* name;
  bool zero_preserving;
  bool allows_int;
};

inline constexpr ActivationInfo kActivations[] = {
    {ActivationKind::kRelu, "relu", true, false},
    {ActivationKind::kGelu, "gelu", true, false},
    {ActivationKind::kSigmoid, "sigmoid", false, false},
    {ActivationKind::kTanh, "tanh", true, false},
    {ActivationKind::kSwish, "swish", true, false},
    {ActivationKind::kSoftplus, "softplus", false, false},
    {ActivationKind::kLeakyRelu, "leaky_relu", true, false},
    {ActivationKind::kElu, "elu", true, false},
    {ActivationKind::kAbs, "abs", true, true},
    {ActivationKind::kExp, "exp", false, false},
    {ActivationKind::kLog, "log", false, false},
    {ActivationKind::kPower, "power", false, false},
    {ActivationKind::kMaximum, "maximum", false, true},
    {ActivationKind::kMinimum, "minimum", false, true},
    {ActivationKind::kMod, "mod", true, true},
    {ActivationKind::kSoftmax, "softmax", false, false},
};

inline const ActivationInfo& activation_info(const std::string& name) {
  for (const auto& a : kActivations)
    if (name == a.name) return a;
  throw Error("unknown activation '" + name + "'");
}

inline float gelu(float x) {
  return static_cast<float>(0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))));
}
inline float sigmoid(float x) { return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x)))); }
inline float softplus(float x) {
  const double d = x;
  return static_cast<float>(d > 0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d)));
}

class Activation final : public StatelessLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "activation";
    std::string function = "relu";
    // Slope for leaky_relu, scale for elu.
    double alpha = 0.01;
    // Exponent for power, second operand for maximum/minimum/mod.
    double operand = 0.0;
    // Channel axis for softmax.
    std::int64_t axis = -1;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      const auto& info = activation_info(function);
      if (!info.allows_int) require_float(input, ctx.path() + " (" + function + ")");
      if (input.dtype == DType::kBool) throw ShapeError(ctx.path() + ": activations do not accept bool");
      if (info.kind == ActivationKind::kSoftmax) {
        if (input.shape.empty()) throw ShapeError(ctx.path() + ": softmax needs a channel axis");
        normalize_axis(axis, static_cast<std::int64_t>(input.shape.size()));
      }
      if (info.kind == ActivationKind::kMod && operand == 0.0)
        throw Error(ctx.path() + ": mod by zero");
      return make_layer<Activation>(ctx.name(), input, *this);
    }
  };

  Activation(std::string name, ChannelSpec input, Config config)
      : StatelessLayer(config.function, std::move(name), std::move(input)),
        config_(std::move(config)),
        info_(activation_info(config_.function)) {}

 protected:
  Sequence apply(const Sequence& x, bool, const Constants&) const override {
    const double a = config_.alpha, p = config_.operand;
    Tensor y;
    switch (info_.kind) {
      case ActivationKind::kRelu: y = map_floats(x.values(), [](float v) { return v > 0 ? v : 0.0f; }); break;
      case ActivationKind::kGelu: y = map_floats(x.values(), gelu); break;
      case ActivationKind::kSigmoid: y = map_floats(x.values(), sigmoid); break;
      case ActivationKind::kTanh: y = map_floats(x.values(), [](float v) { return std::tanh(v); }); break;
      case ActivationKind::kSwish: y = map_floats(x.values(), [](float v) { return v * sigmoid(v); }); break;
      case ActivationKind::kSoftplus: y = map_floats(x.values(), softplus); break;
      case ActivationKind::kLeakyRelu:
        y = map_floats(x.values(), [a](float v) { return v >= 0 ? v : static_cast<float>(a * v); });
        break;
      case ActivationKind::kElu:
        y = map_floats(x.values(), [a](float v) {
          return v >= 0 ? v : static_cast<float>(a * std::expm1(static_cast<double>(v)));
        });
        break;
      case ActivationKind::kExp: y = map_floats(x.values(), [](float v) { return std::exp(v); }); break;
      case ActivationKind::kLog: y = map_floats(x.values(), [](float v) { return std::log(v); }); break;
      case ActivationKind::kPower:
        y = map_floats(x.values(), [p](float v) { return static_cast<float>(std::pow(v, p)); });
        break;
      case ActivationKind::kAbs:
        y = elementwise(BinaryOp::kMax, x.values(),
                        elementwise(BinaryOp::kSub, Tensor::full(x.dtype(), {}, 0.0), x.values()));
        break;
      case ActivationKind::kMaximum:
        y = elementwise(BinaryOp::kMax, x.values(), Tensor::full(x.dtype(), {}, p));
        break;
      case ActivationKind::kMinimum:
        y = elementwise(BinaryOp::kMin, x.values(), Tensor::full(x.dtype(), {}, p));
        break;
      case ActivationKind::kMod:
        y = elementwise(BinaryOp::kMod, x.values(), Tensor::full(x.dtype(), {}, p));
        break;
      case ActivationKind::kSoftmax: y = softmax(x.values()); break;
    }
    return x.with_values(std::move(y), info_.zero_preserving && x.is_masked());
  }

  ChannelSpec compute_output_spec(const ChannelSpec& in) const override { return in; }

 private:
  Tensor softmax(const Tensor& v) const {
    const auto ax = normalize_axis(config_.axis, v.rank() - 2) + 2;
    const std::int64_t n = v.dim(ax);
    const std::int64_t inner = num_elements(Shape(v.shape().begin() + ax + 1, v.shape().end()));
    const std::int64_t outer = v.size() / (n * inner);
    Tensor out = v;
    auto o = out.floats_mut();
    for (std::int64_t i = 0; i < outer; ++i)
      for (std::int64_t j = 0; j < inner; ++j) {
        float* base = o.data() + i * n * inner + j;
        float m = -INFINITY;
        for (std::int64_t k = 0; k < n; ++k) m = std::max(m, base[k * inner]);
        float sum = 0;
        for (std::int64_t k = 0; k < n; ++k) sum += (base[k * inner] = std::exp(base[k * inner] - m));
        for (std::int64_t k = 0; k < n; ++k) base[k * inner] /= sum;
      }
    return out;
  }

  Config config_;
  ActivationInfo info_;
};

}  // namespace seqlayers
