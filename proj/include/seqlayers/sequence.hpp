// SPDX-License-Identifier: Apache-2.0
//
// Sequence: batched values of shape [batch, time, ...channel] paired with a
// boolean validity mask of shape [batch, time].

#pragma once

#include <charconv>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seqlayers/tensor.hpp"

namespace seqlayers {

// Channel shape and dtype of a sequence; excludes batch and time.
struct ChannelSpec {
  Shape shape;
  DType dtype = DType::kFloat32;

  std::int64_t size() const { return num_elements(shape); }
  friend bool operator==(const ChannelSpec&, const ChannelSpec&) = default;

  // Rendered as e.g. "f32[4]" or "i32[2,3]".
  std::string str() const {
    std::string s = dtype_name(dtype);
    s += '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(shape[i]);
    }
    return s + ']';
  }

  static ChannelSpec parse(std::string_view text) {
    const auto open = text.find('[');
    if (open == std::string_view::npos || text.back() != ']')
      throw Error("malformed channel spec '" + std::string(text) + "', expected e.g. f32[4]");
    const std::string_view tag = text.substr(0, open);
    ChannelSpec spec;
    if (tag == "f32")
      spec.dtype = DType::kFloat32;
    else if (tag == "i32")
      spec.dtype = DType::kInt32;
    else if (tag == "bool")
      spec.dtype = DType::kBool;
    else
      throw Error("unknown dtype '" + std::string(tag) + "' in channel spec");
    std::string_view dims = text.substr(open + 1, text.size() - open - 2);
    while (!dims.empty()) {
      const auto comma = dims.find(',');
      std::string_view item = dims.substr(0, comma);
      while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
      while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size() || v < 0)
        throw Error("bad extent '" + std::string(item) + "' in channel spec");
      spec.shape.push_back(v);
      if (comma == std::string_view::npos) break;
      dims.remove_prefix(comma + 1);
    }
    return spec;
  }
};

class Sequence {
 public:
  Sequence() : Sequence(Tensor(DType::kFloat32, {0, 0}), Tensor(DType::kBool, {0, 0})) {}

  // `masked` promises that invalid positions already hold zeros.
  Sequence(Tensor values, Tensor mask, bool masked = false)
      : values_(std::move(values)), mask_(std::move(mask)), masked_(masked) {
    if (values_.rank() < 2)
      throw ShapeError("sequence values need rank >= 2, got " + shape_string(values_.shape()));
    if (mask_.dtype() != DType::kBool || mask_.rank() != 2 ||
        mask_.shape()[0] != values_.shape()[0] || mask_.shape()[1] != values_.shape()[1])
      throw ShapeError("mask " + shape_string(mask_.shape()) + " does not match values " +
                       shape_string(values_.shape()));
  }

  static Sequence from_values(Tensor values) {
    if (values.rank() < 2)
      throw ShapeError("sequence values need rank >= 2, got " + shape_string(values.shape()));
    Tensor mask = Tensor::full(DType::kBool, {values.dim(0), values.dim(1)}, 1.0);
    return Sequence(std::move(values), std::move(mask), true);
  }

  static Sequence from_lengths(Tensor values, std::span<const std::int64_t> lengths) {
    if (values.rank() < 2)
      throw ShapeError("sequence values need rank >= 2, got " + shape_string(values.shape()));
    const std::int64_t b = values.dim(0), t = values.dim(1);
    if (static_cast<std::int64_t>(lengths.size()) != b)
      throw ShapeError("expected " + std::to_string(b) + " lengths, got " +
                       std::to_string(lengths.size()));
    Tensor mask(DType::kBool, {b, t});
    auto m = mask.bools_mut();
    for (std::int64_t i = 0; i < b; ++i) {
      if (lengths[i] < 0 || lengths[i] > t)
        throw Error("length " + std::to_string(lengths[i]) + " out of range [0, " +
                    std::to_string(t) + "]");
      for (std::int64_t j = 0; j < lengths[i]; ++j) m[i * t + j] = 1;
    }
    return Sequence(std::move(values), std::move(mask), false);
  }

  static Sequence from_lengths(Tensor values, std::initializer_list<std::int64_t> lengths) {
    return from_lengths(std::move(values), std::span<const std::int64_t>(lengths.begin(), lengths.size()));
  }

  // An all-invalid, zero-valued sequence.
  static Sequence invalid(std::int64_t batch, std::int64_t time, const ChannelSpec& spec) {
    Shape shape{batch, time};
    shape.insert(shape.end(), spec.shape.begin(), spec.shape.end());
    return Sequence(Tensor(spec.dtype, shape), Tensor(DType::kBool, {batch, time}), true);
  }

  const Tensor& values() const { return values_; }
  const Tensor& mask() const { return mask_; }
  bool is_masked() const { return masked_; }

  std::int64_t batch() const { return values_.dim(0); }
  std::int64_t time() const { return values_.dim(1); }
  DType dtype() const { return values_.dtype(); }
  Shape shape() const { return values_.shape(); }
  Shape channel_shape() const { return Shape(values_.shape().begin() + 2, values_.shape().end()); }
  std::int64_t channel_size() const { return num_elements(channel_shape()); }
  ChannelSpec channel_spec() const { return {channel_shape(), dtype()}; }

  bool valid(std::int64_t b, std::int64_t t) const { return mask_.bools()[b * time() + t] != 0; }

  Tensor lengths() const {
    Tensor out(DType::kInt32, {batch()});
    for (std::int64_t b = 0; b < batch(); ++b) {
      std::int32_t n = 0;
      for (std::int64_t t = 0; t < time(); ++t) n += valid(b, t) ? 1 : 0;
      out.ints_mut()[b] = n;
    }
    return out;
  }

  Sequence mask_invalid() const {
    if (masked_) return *this;
    Tensor v = values_;
    const std::int64_t c = channel_size();
    const std::size_t eb = v.element_bytes();
    auto* base = static_cast<char*>(v.raw_mut());
    auto m = mask_.bools();
    for (std::int64_t i = 0; i < batch() * time(); ++i)
      if (!m[i]) std::memset(base + i * c * eb, 0, static_cast<std::size_t>(c) * eb);
    return Sequence(std::move(v), mask_, true);
  }

  // Pads the time axis with zero values; padded steps are marked `valid`.
  Sequence pad_time(std::int64_t front, std::int64_t back, bool valid) const {
    if (front < 0 || back < 0) throw ShapeError("negative time padding");
    return Sequence(pad(values_, 1, front, back, 0.0), pad(mask_, 1, front, back, valid ? 1.0 : 0.0),
                    masked_ && !valid);
  }

  Sequence slice_time(std::int64_t begin, std::int64_t end) const {
    return Sequence(slice(values_, 1, begin, end), slice(mask_, 1, begin, end), masked_);
  }

  Sequence slice_batch(std::int64_t begin, std::int64_t end) const {
    return Sequence(slice(values_, 0, begin, end), slice(mask_, 0, begin, end), masked_);
  }

  static Sequence concatenate(std::span<const Sequence> parts) {
    if (parts.empty()) throw Error("concatenate_sequences needs at least one sequence");
    std::vector<Tensor> vals, masks;
    bool all_masked = true;
    for (const auto& p : parts) {
      if (p.batch() != parts[0].batch() || p.channel_spec() != parts[0].channel_spec())
        throw ShapeError("cannot concatenate sequences with specs " +
                         parts[0].channel_spec().str() + " and " + p.channel_spec().str());
      vals.push_back(p.values_);
      masks.push_back(p.mask_);
      all_masked = all_masked && p.masked_;
    }
    return Sequence(concat(vals, 1), concat(masks, 1), all_masked);
  }

  static Sequence concatenate(std::initializer_list<Sequence> parts) {
    return concatenate(std::span<const Sequence>(parts.begin(), parts.size()));
  }

  // Replaces values through `fn`, which must keep batch and time extents.
  // The masked marker survives only if `zero_preserving` is declared.
  template <class Fn>
  Sequence apply_values(Fn&& fn, bool zero_preserving = false) const {
    Tensor v = std::forward<Fn>(fn)(values_);
    if (v.rank() < 2 || v.dim(0) != batch() || v.dim(1) != time())
      throw ShapeError("apply_values changed batch/time extents");
    return Sequence(std::move(v), mask_, masked_ && zero_preserving);
  }

  Sequence with_values(Tensor values, bool masked = false) const {
    return Sequence(std::move(values), mask_, masked);
  }

  Sequence unmasked() const { return Sequence(values_, mask_, false); }

 private:
  Tensor values_;
  Tensor mask_;
  bool masked_ = false;
};

}  // namespace seqlayers
