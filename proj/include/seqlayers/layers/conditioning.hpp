// SPDX-License-Identifier: Apache-2.0
//
// Time-aligned conditioning from a constants entry. Step t of the input is
// combined with step t of constants[key]; in step mode a position counter in
// the state tracks t.

#pragma once

#include "seqlayers/layers/basic.hpp"

namespace seqlayers {

class Conditioning final : public SequenceLayer {
 public:
  enum class Mode { kAdd, kConcat };

  struct Config {
    static constexpr std::string_view kKind = "conditioning";
    std::string key;
    std::string mode = "add";
    // Channel spec of the conditioning sequence.
    ChannelSpec conditioning{{}, DType::kFloat32};
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      if (key.empty()) throw Error(ctx.path() + ": conditioning key is empty");
      require_float(input, ctx.path());
      require_float(conditioning, ctx.path() + " conditioning");
      Mode m;
      if (mode == "add") {
        m = Mode::kAdd;
        if (conditioning != input)
          throw ShapeError(ctx.path() + ": add needs conditioning " + input.str() + ", got " +
                           conditioning.str());
      } else if (mode == "concat") {
        m = Mode::kConcat;
        if (input.shape.empty() || conditioning.shape.size() != input.shape.size() ||
            !std::equal(input.shape.begin(), input.shape.end() - 1, conditioning.shape.begin()))
          throw ShapeError(ctx.path() + ": cannot concat " + conditioning.str() + " onto " + input.str());
      } else {
        throw Error(ctx.path() + ": unknown conditioning mode '" + mode + "'");
      }
      return make_layer<Conditioning>(ctx.name(), input, key, m, conditioning);
    }
  };

  Conditioning(std::string name, ChannelSpec input, std::string key, Mode mode, ChannelSpec cond)
      : SequenceLayer("conditioning", std::move(name), std::move(input)),
        key_(std::move(key)),
        mode_(mode),
        cond_spec_(std::move(cond)) {}

  const std::string& key() const { return key_; }

 protected:
  LayerOutput do_layer(const Sequence& x, bool, const Constants& constants) const override {
    return {combine(x, constants, 0), {}};
  }
  State do_initial_state(std::int64_t, std::int64_t start, bool, const Constants& constants) const override {
    lookup(constants);
    return position_state(start);
  }
  StepOutput do_step(const Sequence& x, const State& state, bool, const Constants& constants) const override {
    const std::int64_t pos = read_position(state);
    return {combine(x, constants, pos), position_state(pos + x.time()), {}};
  }
  LayerProperties compute_properties() const override { return {}; }
  ChannelSpec compute_output_spec(const ChannelSpec& in) const override {
    if (mode_ == Mode::kAdd) return in;
    ChannelSpec out = in;
    out.shape.back() += cond_spec_.shape.back();
    return out;
  }

 private:
  const Sequence& lookup(const Constants& constants) const {
    auto it = constants.find(key_);
    if (it == constants.end()) throw Error(name() + ": missing constant '" + key_ + "'");
    const auto* seq = std::get_if<Sequence>(&it->second);
    if (!seq) throw Error(name() + ": constant '" + key_ + "' is not a sequence");
    if (seq->channel_spec() != cond_spec_)
      throw ShapeError(name() + ": constant '" + key_ + "' has spec " + seq->channel_spec().str() +
                       ", expected " + cond_spec_.str());
    return *seq;
  }

  Sequence combine(const Sequence& x, const Constants& constants, std::int64_t pos) const {
    const Sequence& c = lookup(constants);
    if (c.batch() != x.batch())
      throw ShapeError(name() + ": conditioning batch " + std::to_string(c.batch()) + " != input batch " +
                       std::to_string(x.batch()));
    // Aligned slice of the conditioning; steps outside it read as invalid.
    const std::int64_t begin = std::clamp<std::int64_t>(pos, 0, c.time());
    const std::int64_t end = std::clamp<std::int64_t>(pos + x.time(), 0, c.time());
    const std::int64_t front = std::min(begin - pos, x.time());
    const Sequence aligned =
        c.slice_time(begin, std::max(begin, end)).pad_time(front, x.time() - front - std::max<std::int64_t>(0, end - begin), false);
    const auto xm = x.mask().bools(), cm = aligned.mask().bools();
    Tensor mask(DType::kBool, {x.batch(), x.time()});
    auto m = mask.bools_mut();
    for (std::int64_t i = 0; i < x.batch() * x.time(); ++i) {
      const std::int64_t t = i % x.time();
      if (xm[i] && (pos + t >= c.time() || pos + t < 0))
        throw Error(name() + ": valid input step " + std::to_string(pos + t) +
                    " is past the end of conditioning '" + key_ + "' (length " + std::to_string(c.time()) + ")");
      m[i] = xm[i] && cm[i];
    }
    Tensor values = mode_ == Mode::kAdd ? add(x.values(), aligned.values())
                                        : concat({x.values(), aligned.values()}, -1);
    return Sequence(std::move(values), std::move(mask));
  }

  std::string key_;
  Mode mode_;
  ChannelSpec cond_spec_;
};

}  // namespace seqlayers
