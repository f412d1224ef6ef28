// SPDX-License-Identifier: Apache-2.0
//
// Multi-head dot-product self-attention with a KV cache.
//
// Output step t attends over valid steps u with t - past <= u <= t + future
// (every earlier step when past is unbounded). In step mode the layer runs
// `future` steps behind its input, caching keys and values of valid steps
// only. A bounded past uses a ring of past + future + 1 entries; an unbounded
// past grows the cache, which is the one place step state changes shape.

#pragma once

#include <algorithm>
#include <cmath>

#include "seqlayers/layers/basic.hpp"

namespace seqlayers {

class DotProductSelfAttention final : public SequenceLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "self_attention";
    std::int64_t num_heads = 1;
    std::int64_t units_per_head = 1;
    std::int64_t max_past_horizon = -1;
    std::int64_t max_future_horizon = 0;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      require_float(input, ctx.path());
      if (input.shape.size() != 1) throw ShapeError(ctx.path() + ": expected input f32[C], got " + input.str());
      if (num_heads < 1 || units_per_head < 1) throw Error(ctx.path() + ": num_heads and units_per_head must be >= 1");
      if (max_past_horizon < -1) throw Error(ctx.path() + ": max_past_horizon must be -1 or >= 0");
      if (max_future_horizon < 0)
        throw Error(ctx.path() + ": max_future_horizon must be >= 0 (unbounded future is not streamable)");
      const Shape proj{input.shape[0], num_heads, units_per_head};
      return make_layer<DotProductSelfAttention>(ctx.name(), input, max_past_horizon, max_future_horizon,
                                                 ctx.parameter("q_proj", proj), ctx.parameter("k_proj", proj),
                                                 ctx.parameter("v_proj", proj));
    }
  };

  DotProductSelfAttention(std::string name, ChannelSpec input, std::int64_t past, std::int64_t future, Tensor q,
                          Tensor k, Tensor v)
      : SequenceLayer("self_attention", std::move(name), std::move(input)),
        past_(past),
        future_(future),
        q_(std::move(q)),
        k_(std::move(k)),
        v_(std::move(v)) {}

  std::int64_t heads() const { return q_.dim(1); }
  std::int64_t units() const { return q_.dim(2); }
  bool bounded() const { return past_ >= 0; }

  std::vector<std::pair<std::string, Tensor>> own_parameters() const override {
    return {{"q_proj", q_}, {"k_proj", k_}, {"v_proj", v_}};
  }
  bool has_growing_state() const override { return !bounded(); }

 protected:
  LayerProperties compute_properties() const override {
    LayerProperties p;
    p.output_latency = future_;
    p.input_latency = future_;
    p.receptive_field_per_step =
        single_step_map(bounded() ? Bound(-past_) : Bound::neg_inf(), Bound(future_));
    return p;
  }
  ChannelSpec compute_output_spec(const ChannelSpec&) const override {
    return {{heads(), units()}, DType::kFloat32};
  }

  LayerOutput do_layer(const Sequence& x, bool, const Constants&) const override {
    const Sequence xm = x.mask_invalid();
    const std::int64_t T = x.time(), hu = heads() * units();
    Tensor out(DType::kFloat32, time_major_shape(x.batch(), T, {heads(), units()}));
    std::vector<float> keys(T * hu), vals(T * hu);
    std::vector<std::pair<std::int64_t, const float*>> k_ent, v_ent;
    for (std::int64_t b = 0; b < x.batch(); ++b) {
      for (std::int64_t u = 0; u < T; ++u) {
        project(k_, row(xm, b, u), keys.data() + u * hu);
        project(v_, row(xm, b, u), vals.data() + u * hu);
      }
      for (std::int64_t t = 0; t < T; ++t) {
        if (!x.valid(b, t)) continue;
        k_ent.clear();
        v_ent.clear();
        const std::int64_t lo = bounded() ? std::max<std::int64_t>(0, t - past_) : 0;
        for (std::int64_t u = lo; u <= std::min(T - 1, t + future_); ++u)
          if (x.valid(b, u)) {
            k_ent.emplace_back(u, keys.data() + u * hu);
            v_ent.emplace_back(u, vals.data() + u * hu);
          }
        attend(row(xm, b, t), k_ent, v_ent, out.floats_mut().data() + (b * T + t) * hu);
      }
    }
    return {Sequence(std::move(out), x.mask(), true), {}};
  }

  State do_initial_state(std::int64_t batch, std::int64_t start, bool, const Constants&) const override {
    const std::int64_t cap = bounded() ? past_ + future_ + 1 : 0;
    Tensor positions = Tensor::full(DType::kInt32, {batch, cap}, -1.0);
    return Tree::Map{{"keys", Tensor(DType::kFloat32, {batch, cap, heads(), units()})},
                     {"values", Tensor(DType::kFloat32, {batch, cap, heads(), units()})},
                     {"positions", std::move(positions)},
                     {"count", Tensor(DType::kInt32, {batch})},
                     {"queries", Sequence::invalid(batch, future_, input_spec())},
                     {"position", position_state(start)}};
  }

  StepOutput do_step(const Sequence& x, const State& state, bool, const Constants&) const override {
    Tensor keys = state.at("keys").tensor();
    Tensor values = state.at("values").tensor();
    Tensor positions = state.at("positions").tensor();
    Tensor count = state.at("count").tensor();
    const std::int64_t pos = read_position(state.at("position"));
    const Sequence window = Sequence::concatenate({state.at("queries").sequence(), x.mask_invalid()});
    const Window w(window, pos - future_);
    const std::int64_t n = x.time(), hu = heads() * units();

    if (!bounded()) {
      // Grow so every row has room for this block.
      const std::int64_t cap = keys.dim(1);
      std::int64_t need = 0;
      for (std::int64_t b = 0; b < x.batch(); ++b) {
        std::int64_t c = count.ints()[b];
        for (std::int64_t i = 0; i < n; ++i) c += x.valid(b, i) ? 1 : 0;
        need = std::max(need, c);
      }
      if (need > cap) {
        keys = pad(keys, 1, 0, need - cap);
        values = pad(values, 1, 0, need - cap);
        positions = pad(positions, 1, 0, need - cap, -1.0);
      }
    }
    const std::int64_t cap = keys.dim(1);

    Tensor out(DType::kFloat32, time_major_shape(x.batch(), n, {heads(), units()}));
    Tensor mask(DType::kBool, {x.batch(), n});
    std::vector<std::pair<std::int64_t, const float*>> k_ent, v_ent;
    for (std::int64_t b = 0; b < x.batch(); ++b) {
      auto& c = count.ints_mut()[b];
      for (std::int64_t i = 0; i < n; ++i) {
        const std::int64_t tau = pos + i;
        if (x.valid(b, i)) {
          const std::int64_t slot = bounded() ? c % cap : c;
          const float* in = w.floats(b, tau);
          project(k_, in, keys.floats_mut().data() + (b * cap + slot) * hu);
          project(v_, in, values.floats_mut().data() + (b * cap + slot) * hu);
          positions.ints_mut()[b * cap + slot] = static_cast<std::int32_t>(tau);
          ++c;
        }
        const std::int64_t o = tau - future_;
        if (o < 0 || !w.valid(b, o)) continue;
        mask.bools_mut()[b * n + i] = 1;
        k_ent.clear();
        v_ent.clear();
        for (std::int64_t s = 0; s < cap; ++s) {
          const std::int64_t p = positions.ints()[b * cap + s];
          if (p < 0 || p > o + future_ || (bounded() && p < o - past_)) continue;
          k_ent.emplace_back(p, keys.floats().data() + (b * cap + s) * hu);
          v_ent.emplace_back(p, values.floats().data() + (b * cap + s) * hu);
        }
        std::sort(k_ent.begin(), k_ent.end());
        std::sort(v_ent.begin(), v_ent.end());
        attend(w.floats(b, o), k_ent, v_ent, out.floats_mut().data() + (b * n + i) * hu);
      }
    }
    Tree::Map next{{"keys", std::move(keys)},
                   {"values", std::move(values)},
                   {"positions", std::move(positions)},
                   {"count", std::move(count)},
                   {"queries", window.slice_time(window.time() - future_, window.time())},
                   {"position", position_state(pos + n)}};
    return {Sequence(std::move(out), std::move(mask), true), Tree(std::move(next)), {}};
  }

 private:
  static const float* row(const Sequence& s, std::int64_t b, std::int64_t t) {
    return s.values().floats().data() + (b * s.time() + t) * s.channel_size();
  }

  // out[h, u] = sum_c in[c] * w[c, h, u]
  void project(const Tensor& w, const float* in, float* out) const {
    const std::int64_t d = w.dim(0), hu = heads() * units();
    std::fill_n(out, hu, 0.0f);
    const float* wp = w.floats().data();
    for (std::int64_t c = 0; c < d; ++c)
      for (std::int64_t j = 0; j < hu; ++j) out[j] += in[c] * wp[c * hu + j];
  }

  // Softmax attention of the query projected from `in` over (position, row)
  // entries in ascending position order.
  void attend(const float* in, const std::vector<std::pair<std::int64_t, const float*>>& keys,
              const std::vector<std::pair<std::int64_t, const float*>>& vals, float* out) const {
    const std::int64_t H = heads(), U = units();
    std::vector<float> q(H * U), logits(keys.size());
    project(q_, in, q.data());
    const float scale = 1.0f / std::sqrt(static_cast<float>(U));
    for (std::int64_t h = 0; h < H; ++h) {
      float m = -INFINITY;
      for (std::size_t e = 0; e < keys.size(); ++e) {
        float dot = 0;
        for (std::int64_t u = 0; u < U; ++u) dot += q[h * U + u] * keys[e].second[h * U + u];
        logits[e] = dot * scale;
        m = std::max(m, logits[e]);
      }
      float sum = 0;
      for (auto& l : logits) sum += (l = std::exp(l - m));
      float* o = out + h * U;
      std::fill_n(o, U, 0.0f);
      for (std::size_t e = 0; e < vals.size(); ++e) {
        const float p = logits[e] / sum;
        for (std::int64_t u = 0; u < U; ++u) o[u] += p * vals[e].second[h * U + u];
      }
    }
  }

  std::int64_t past_;
  std::int64_t future_;
  Tensor q_, k_, v_;
};

}  // namespace seqlayers
