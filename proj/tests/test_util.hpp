// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the test binaries.

#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "seqlayers/layer.hpp"

namespace seqlayers::testing {

inline const ChannelSpec kF3{{3}, DType::kFloat32};

inline ChannelSpec f32(std::initializer_list<std::int64_t> shape) { return {Shape(shape), DType::kFloat32}; }

// Float sequence with uniform(-1, 1) values, a random valid prefix per row and
// an occasional invalid gap. Invalid steps hold NaN so a layer that reads
// them poisons its output.
inline Sequence random_sequence(std::mt19937_64& gen, std::int64_t batch, std::int64_t time, const Shape& channel,
                                bool with_gaps = true) {
  Shape shape{batch, time};
  shape.insert(shape.end(), channel.begin(), channel.end());
  Tensor values(DType::kFloat32, shape);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (auto& v : values.floats_mut()) v = dist(gen);
  Tensor mask(DType::kBool, {batch, time});
  std::uniform_int_distribution<std::int64_t> len(std::max<std::int64_t>(1, time / 2), time);
  for (std::int64_t b = 0; b < batch; ++b) {
    const std::int64_t n = b == 0 ? time : len(gen);
    for (std::int64_t t = 0; t < n; ++t) mask.bools_mut()[b * time + t] = 1;
    if (with_gaps && b == batch - 1 && n > 4) {
      std::uniform_int_distribution<std::int64_t> at(1, n - 3);
      const std::int64_t g = at(gen);
      mask.bools_mut()[b * time + g] = 0;
      mask.bools_mut()[b * time + g + 1] = 0;
    }
  }
  const std::int64_t c = num_elements(channel);
  for (std::int64_t bt = 0; bt < batch * time; ++bt)
    if (!mask.bools()[bt])
      for (std::int64_t i = 0; i < c; ++i) values.floats_mut()[bt * c + i] = std::numeric_limits<float>::quiet_NaN();
  return Sequence(std::move(values), std::move(mask));
}

// Fully valid input from explicit rows of scalars, shape [1, T, 1].
inline Sequence column(const std::vector<float>& v) {
  return Sequence::from_values(Tensor::from_floats({1, static_cast<std::int64_t>(v.size()), 1}, v));
}

}  // namespace seqlayers::testing
