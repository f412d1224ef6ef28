// SPDX-License-Identifier: Apache-2.0
//
// LayerNorm and RMSNorm over the last channel axis. Statistics never cross
// time or batch, so both are per-timestep.

#pragma once

#include <cmath>

#include "seqlayers/layers/basic.hpp"

namespace seqlayers {

class Normalization final : public StatelessLayer {
 public:
  enum class Kind { kLayer, kRms };

  template <Kind K>
  struct ConfigT {
    static constexpr std::string_view kKind = K == Kind::kLayer ? "layer_norm" : "rms_norm";
    double epsilon = 1e-6;
    bool use_scale = true;
    bool use_bias = K == Kind::kLayer;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      require_float(input, ctx.path());
      if (input.shape.empty()) throw ShapeError(ctx.path() + ": normalization needs a channel axis");
      if (!(epsilon > 0)) throw Error(ctx.path() + ": epsilon must be positive");
      const std::int64_t c = input.shape.back();
      std::optional<Tensor> scale, bias;
      if (use_scale) scale = ctx.parameter("scale", {c});
      if (use_bias) bias = ctx.parameter("bias", {c});
      return make_layer<Normalization>(std::string(kKind), ctx.name(), input, K, epsilon,
                                       std::move(scale), std::move(bias));
    }
  };

  Normalization(std::string kind_name, std::string name, ChannelSpec input, Kind kind, double epsilon,
                std::optional<Tensor> scale, std::optional<Tensor> bias)
      : StatelessLayer(std::move(kind_name), std::move(name), std::move(input)),
        kind_(kind),
        epsilon_(epsilon),
        scale_(std::move(scale)),
        bias_(std::move(bias)) {}

  std::vector<std::pair<std::string, Tensor>> own_parameters() const override {
    std::vector<std::pair<std::string, Tensor>> out;
    if (scale_) out.emplace_back("scale", *scale_);
    if (bias_) out.emplace_back("bias", *bias_);
    return out;
  }

 protected:
  Sequence apply(const Sequence& x, bool, const Constants&) const override {
    Tensor y = x.values();
    const std::int64_t c = y.shape().back();
    auto v = y.floats_mut();
    const float* s = scale_ ? scale_->floats().data() : nullptr;
    const float* b = bias_ ? bias_->floats().data() : nullptr;
    for (std::int64_t r = 0; r < y.size() / c; ++r) {
      float* row = v.data() + r * c;
      float mean = 0;
      if (kind_ == Kind::kLayer) {
        for (std::int64_t i = 0; i < c; ++i) mean += row[i];
        mean /= static_cast<float>(c);
      }
      float sq = 0;
      for (std::int64_t i = 0; i < c; ++i) sq += (row[i] - mean) * (row[i] - mean);
      const float inv = 1.0f / std::sqrt(sq / static_cast<float>(c) + static_cast<float>(epsilon_));
      for (std::int64_t i = 0; i < c; ++i) {
        float out = (row[i] - mean) * inv;
        if (s) out *= s[i];
        if (b) out += b[i];
        row[i] = out;
      }
    }
    return x.with_values(std::move(y), !b && x.is_masked());
  }

  ChannelSpec compute_output_spec(const ChannelSpec& in) const override { return in; }

 private:
  Kind kind_;
  double epsilon_;
  std::optional<Tensor> scale_;
  std::optional<Tensor> bias_;
};

struct LayerNorm {
  using Config = Normalization::ConfigT<Normalization::Kind::kLayer>;
};
struct RmsNorm {
  using Config = Normalization::ConfigT<Normalization::Kind::kRms>;
};

}  // namespace seqlayers
