// SPDX-License-Identifier: Apache-2.0
//
// Dropout with a counter-based mask. Whether element (b, t, c) is dropped is
// a pure function of (seed, absolute step t, b, c), so any block partition
// draws the same mask.

#pragma once

#include "seqlayers/layers/basic.hpp"
#include "seqlayers/params.hpp"

namespace seqlayers {

// Uniform draw in [0, 1) for one element.
inline double dropout_uniform(std::uint64_t seed, std::int64_t t, std::int64_t b, std::int64_t c) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ static_cast<std::uint64_t>(t));
  h = mix64(h ^ (static_cast<std::uint64_t>(b) * 0x9e3779b97f4a7c15ULL));
  h = mix64(h ^ (static_cast<std::uint64_t>(c) * 0xc2b2ae3d27d4eb4fULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

class Dropout final : public SequenceLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "dropout";
    double rate = 0.0;
    std::uint64_t seed = 0;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      require_float(input, ctx.path());
      if (!(rate >= 0.0 && rate < 1.0))
        throw Error(ctx.path() + ": dropout rate " + std::to_string(rate) + " outside [0, 1)");
      return make_layer<Dropout>(ctx.name(), input, rate, ctx.derive_seed(seed));
    }
  };

  Dropout(std::string name, ChannelSpec input, double rate, std::uint64_t seed)
      : SequenceLayer("dropout", std::move(name), std::move(input)), rate_(rate), seed_(seed) {}

  double rate() const { return rate_; }
  std::uint64_t seed() const { return seed_; }
  bool is_stochastic() const override { return true; }

 protected:
  LayerOutput do_layer(const Sequence& x, bool training, const Constants&) const override {
    return {apply(x, training, seed_, 0), {}};
  }
  State do_initial_state(std::int64_t, std::int64_t start, bool, const Constants&) const override {
    return RngCounter{seed_, static_cast<std::uint64_t>(start)};
  }
  StepOutput do_step(const Sequence& x, const State& state, bool training, const Constants&) const override {
    const RngCounter rng = state.rng();
    return {apply(x, training, rng.seed, static_cast<std::int64_t>(rng.offset)),
            RngCounter{rng.seed, rng.offset + static_cast<std::uint64_t>(x.time())},
            {}};
  }
  LayerProperties compute_properties() const override { return {}; }
  ChannelSpec compute_output_spec(const ChannelSpec& in) const override { return in; }

 private:
  Sequence apply(const Sequence& x, bool training, std::uint64_t seed, std::int64_t offset) const {
    if (!training || rate_ == 0.0) return x;
    Tensor y = x.values();
    auto v = y.floats_mut();
    const std::int64_t c = x.channel_size();
    const float keep_scale = static_cast<float>(1.0 / (1.0 - rate_));
    for (std::int64_t b = 0; b < x.batch(); ++b)
      for (std::int64_t t = 0; t < x.time(); ++t)
        for (std::int64_t i = 0; i < c; ++i) {
          float& e = v[(b * x.time() + t) * c + i];
          e = dropout_uniform(seed, offset + t, b, i) < rate_ ? 0.0f : e * keep_scale;
        }
    return x.with_values(std::move(y), x.is_masked());
  }

  double rate_;
  std::uint64_t seed_;
};

}  // namespace seqlayers
