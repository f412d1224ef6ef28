// SPDX-License-Identifier: Apache-2.0
//
// LSTM with gate order (input, forget, cell, output). The state is held, not
// reset, across invalid steps.

#pragma once

#include <cmath>

#include "seqlayers/layers/activations.hpp"

namespace seqlayers {

class Lstm final : public SequenceLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "lstm";
    std::int64_t units = 1;
    double forget_bias = 1.0;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      require_float(input, ctx.path());
      if (input.shape.size() != 1) throw ShapeError(ctx.path() + ": expected input f32[C], got " + input.str());
      if (units < 1) throw Error(ctx.path() + ": units must be >= 1");
      return make_layer<Lstm>(ctx.name(), input, forget_bias,
                              ctx.parameter("kernel", {input.shape[0] + units, 4 * units}),
                              ctx.parameter("bias", {4 * units}));
    }
  };

  Lstm(std::string name, ChannelSpec input, double forget_bias, Tensor kernel, Tensor bias)
      : SequenceLayer("lstm", std::move(name), std::move(input)),
        forget_bias_(static_cast<float>(forget_bias)),
        kernel_(std::move(kernel)),
        bias_(std::move(bias)) {}

  std::int64_t units() const { return bias_.dim(0) / 4; }

  std::vector<std::pair<std::string, Tensor>> own_parameters() const override {
    return {{"kernel", kernel_}, {"bias", bias_}};
  }

 protected:
  LayerProperties compute_properties() const override {
    LayerProperties p;
    p.receptive_field_per_step = single_step_map(Bound::neg_inf(), 0);
    return p;
  }
  ChannelSpec compute_output_spec(const ChannelSpec&) const override { return {{units()}, DType::kFloat32}; }

  LayerOutput do_layer(const Sequence& x, bool, const Constants&) const override {
    Tensor c(DType::kFloat32, {x.batch(), units()}), h(DType::kFloat32, {x.batch(), units()});
    return {run(x, c, h), {}};
  }
  State do_initial_state(std::int64_t batch, std::int64_t, bool, const Constants&) const override {
    return Tree::Map{{"c", Tensor(DType::kFloat32, {batch, units()})},
                     {"h", Tensor(DType::kFloat32, {batch, units()})}};
  }
  StepOutput do_step(const Sequence& x, const State& state, bool, const Constants&) const override {
    Tensor c = state.at("c").tensor(), h = state.at("h").tensor();
    Sequence y = run(x, c, h);
    return {std::move(y), Tree::Map{{"c", std::move(c)}, {"h", std::move(h)}}, {}};
  }

 private:
  Sequence run(const Sequence& x, Tensor& c_state, Tensor& h_state) const {
    const std::int64_t in = input_spec().shape[0], n = units(), T = x.time();
    Tensor out(DType::kFloat32, {x.batch(), T, n});
    auto y = out.floats_mut();
    auto cs = c_state.floats_mut(), hs = h_state.floats_mut();
    const float* w = kernel_.floats().data();
    std::vector<float> z(4 * n);
    for (std::int64_t b = 0; b < x.batch(); ++b) {
      float* c = cs.data() + b * n;
      float* h = hs.data() + b * n;
      for (std::int64_t t = 0; t < T; ++t) {
        if (!x.valid(b, t)) continue;
        const float* xt = x.values().floats().data() + (b * T + t) * in;
        std::copy_n(bias_.floats().data(), 4 * n, z.data());
        for (std::int64_t i = 0; i < in; ++i)
          for (std::int64_t j = 0; j < 4 * n; ++j) z[j] += xt[i] * w[i * 4 * n + j];
        for (std::int64_t i = 0; i < n; ++i)
          for (std::int64_t j = 0; j < 4 * n; ++j) z[j] += h[i] * w[(in + i) * 4 * n + j];
        for (std::int64_t k = 0; k < n; ++k) {
          const float ig = sigmoid(z[k]);
          const float fg = sigmoid(z[n + k] + forget_bias_);
          const float g = std::tanh(z[2 * n + k]);
          const float og = sigmoid(z[3 * n + k]);
          c[k] = fg * c[k] + ig * g;
          h[k] = og * std::tanh(c[k]);
        }
        std::copy_n(h, n, y.data() + (b * T + t) * n);
      }
    }
    return Sequence(std::move(out), x.mask(), true);
  }

  float forget_bias_;
  Tensor kernel_;
  Tensor bias_;
};

}  // namespace seqlayers
