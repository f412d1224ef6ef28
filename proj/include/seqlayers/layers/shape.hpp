// SPDX-License-Identifier: Apache-2.0
//
// Channel-shape manipulation. Axes count channel dimensions only: axis 0 is
// the first axis after time.

#pragma once

#include <numeric>

#include "seqlayers/layers/basic.hpp"

namespace seqlayers {

class ChannelTransform final : public StatelessLayer {
 public:
  // Maps the channel tensor [...] to a new shape, optionally permuting.
  ChannelTransform(std::string kind, std::string name, ChannelSpec input, Shape out_shape,
                   std::vector<std::int64_t> perm)
      : StatelessLayer(std::move(kind), std::move(name), std::move(input)),
        out_shape_(std::move(out_shape)),
        perm_(std::move(perm)) {}

 protected:
  Sequence apply(const Sequence& x, bool, const Constants&) const override {
    Tensor v = x.values();
    if (!perm_.empty()) {
      std::vector<std::int64_t> full{0, 1};
      for (auto p : perm_) full.push_back(p + 2);
      v = transpose(v, full);
    }
    return x.with_values(reshape(v, time_major_shape(x.batch(), x.time(), out_shape_)), x.is_masked());
  }
  ChannelSpec compute_output_spec(const ChannelSpec& in) const override { return {out_shape_, in.dtype}; }

 private:
  Shape out_shape_;
  std::vector<std::int64_t> perm_;
};

struct Reshape {
  struct Config {
    static constexpr std::string_view kKind = "reshape";
    Shape shape;
    std::string name;
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      Shape out;
      try {
        out = reshape_shape(input.shape, shape);
      } catch (const ShapeError& e) {
        throw ShapeError(ctx.path() + ": " + e.what());
      }
      return make_layer<ChannelTransform>("reshape", ctx.name(), input, out, std::vector<std::int64_t>{});
    }
  };
};

struct Flatten {
  struct Config {
    static constexpr std::string_view kKind = "flatten";
    std::string name;
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      return make_layer<ChannelTransform>("flatten", ctx.name(), input, Shape{input.size()},
                                          std::vector<std::int64_t>{});
    }
  };
};

struct ExpandDims {
  struct Config {
    static constexpr std::string_view kKind = "expand_dims";
    std::int64_t axis = -1;
    std::string name;
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      const auto rank = static_cast<std::int64_t>(input.shape.size());
      const std::int64_t a = axis < 0 ? axis + rank + 1 : axis;
      if (a < 0 || a > rank) throw ShapeError(ctx.path() + ": expand_dims axis out of range");
      Shape out = input.shape;
      out.insert(out.begin() + a, 1);
      return make_layer<ChannelTransform>("expand_dims", ctx.name(), input, out, std::vector<std::int64_t>{});
    }
  };
};

struct Squeeze {
  struct Config {
    static constexpr std::string_view kKind = "squeeze";
    std::int64_t axis = -1;
    std::string name;
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      const auto rank = static_cast<std::int64_t>(input.shape.size());
      if (rank == 0) throw ShapeError(ctx.path() + ": nothing to squeeze");
      const std::int64_t a = normalize_axis(axis, rank);
      if (input.shape[a] != 1)
        throw ShapeError(ctx.path() + ": cannot squeeze axis of extent " + std::to_string(input.shape[a]));
      Shape out = input.shape;
      out.erase(out.begin() + a);
      return make_layer<ChannelTransform>("squeeze", ctx.name(), input, out, std::vector<std::int64_t>{});
    }
  };
};

struct MoveAxis {
  struct Config {
    static constexpr std::string_view kKind = "move_axis";
    std::int64_t source = 0;
    std::int64_t destination = -1;
    std::string name;
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      const auto rank = static_cast<std::int64_t>(input.shape.size());
      const std::int64_t s = normalize_axis(source, rank), d = normalize_axis(destination, rank);
      std::vector<std::int64_t> perm;
      for (std::int64_t i = 0; i < rank; ++i)
        if (i != s) perm.push_back(i);
      perm.insert(perm.begin() + d, s);
      return make_layer<ChannelTransform>("move_axis", ctx.name(), input,
                                          transpose_shape(input.shape, perm), perm);
    }
  };
};

struct TransposeChannels {
  struct Config {
    static constexpr std::string_view kKind = "transpose";
    std::vector<std::int64_t> perm;
    std::string name;
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      Shape out;
      try {
        out = transpose_shape(input.shape, perm);
      } catch (const ShapeError& e) {
        throw ShapeError(ctx.path() + ": " + e.what());
      }
      std::vector<std::int64_t> p;
      for (auto a : perm) p.push_back(normalize_axis(a, static_cast<std::int64_t>(input.shape.size())));
      return make_layer<ChannelTransform>("transpose", ctx.name(), input, out, p);
    }
  };
};

}  // namespace seqlayers
