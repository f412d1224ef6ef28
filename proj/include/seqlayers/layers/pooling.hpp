// SPDX-License-Identifier: Apache-2.0
//
// 1D max/min/average pooling over valid steps only.

#pragma once

#include <limits>

#include "seqlayers/layers/convolution.hpp"

namespace seqlayers {

class Pooling1D final : public WindowedLayer {
 public:
  enum class Kind { kMax, kMin, kAverage };

  template <Kind K>
  struct ConfigT {
    static constexpr std::string_view kKind =
        K == Kind::kMax ? "max_pooling1d" : K == Kind::kMin ? "min_pooling1d" : "average_pooling1d";
    std::int64_t pool_size = 1;
    std::int64_t strides = 1;
    std::string padding = "causal";
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      require_float(input, ctx.path());
      check_positive(pool_size, "pool_size", ctx.path());
      check_positive(strides, "strides", ctx.path());
      const auto geom = StridedWindow::make(pool_size, strides, parse_padding(padding, ctx.path()));
      return make_layer<Pooling1D>(std::string(kKind), ctx.name(), input, K, geom);
    }
  };

  Pooling1D(std::string kind_name, std::string name, ChannelSpec input, Kind kind, StridedWindow geom)
      : WindowedLayer(std::move(kind_name), std::move(name), std::move(input)), kind_(kind), geom_(geom) {}

 protected:
  std::int64_t history() const override { return geom_.history(); }
  LayerProperties compute_properties() const override { return geom_.properties(); }
  ChannelSpec compute_output_spec(const ChannelSpec& in) const override { return in; }

  Sequence compute(const Window& w, std::int64_t begin, std::int64_t count) const override {
    const std::int64_t c = w.channels();
    Tensor values(DType::kFloat32, time_major_shape(w.batch(), count, input_spec().shape));
    Tensor mask(DType::kBool, {w.batch(), count});
    auto out = values.floats_mut();
    auto m = mask.bools_mut();
    for (std::int64_t b = 0; b < w.batch(); ++b)
      for (std::int64_t i = 0; i < count; ++i) {
        const std::int64_t anchor = (begin + i) * geom_.stride;
        const bool valid = w.valid(b, anchor);
        m[b * count + i] = valid;
        if (!valid) continue;
        float* acc = out.data() + (b * count + i) * c;
        std::int64_t n = 0;
        for (std::int64_t j = 0; j < geom_.span; ++j) {
          const std::int64_t u = anchor - geom_.left + j;
          if (!w.valid(b, u)) continue;
          const float* row = w.floats(b, u);
          for (std::int64_t k = 0; k < c; ++k) {
            if (n == 0) acc[k] = row[k];
            else if (kind_ == Kind::kMax) acc[k] = std::max(acc[k], row[k]);
            else if (kind_ == Kind::kMin) acc[k] = std::min(acc[k], row[k]);
            else acc[k] += row[k];
          }
          ++n;
        }
        if (kind_ == Kind::kAverage)
          for (std::int64_t k = 0; k < c; ++k) acc[k] /= static_cast<float>(n);
      }
    return Sequence(std::move(values), std::move(mask), true);
  }

 private:
  Kind kind_;
  StridedWindow geom_;
};

struct MaxPooling1D {
  using Config = Pooling1D::ConfigT<Pooling1D::Kind::kMax>;
};
struct MinPooling1D {
  using Config = Pooling1D::ConfigT<Pooling1D::Kind::kMin>;
};
struct AveragePooling1D {
  using Config = Pooling1D::ConfigT<Pooling1D::Kind::kAverage>;
};

}  // namespace seqlayers
