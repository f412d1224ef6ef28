// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major n-dimensional arrays with the small set of numeric
// operations the layer library needs. Tensors are values: every operation
// returns a freshly materialized tensor and nothing aliases.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "seqlayers/error.hpp"

namespace seqlayers {

enum class DType : std::uint8_t { kFloat32 = 0, kInt32 = 1, kBool = 2 };

inline const char* dtype_name(DType d) {
  switch (d) {
    case DType::kFloat32: return "f32";
    case DType::kInt32: return "i32";
    case DType::kBool: return "bool";
  }
  return "?";
}

// bool < int32 < float32.
inline int promotion_rank(DType d) {
  switch (d) {
    case DType::kBool: return 0;
    case DType::kInt32: return 1;
    case DType::kFloat32: return 2;
  }
  return 0;
}

inline DType promote(DType a, DType b) {
  return promotion_rank(a) >= promotion_rank(b) ? a : b;
}

using Shape = std::vector<std::int64_t>;

inline std::int64_t num_elements(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

inline std::vector<std::int64_t> row_major_strides(const Shape& shape) {
  std::vector<std::int64_t> strides(shape.size(), 1);
  for (std::int64_t i = static_cast<std::int64_t>(shape.size()) - 2; i >= 0; --i)
    strides[i] = strides[i + 1] * shape[i + 1];
  return strides;
}

inline std::int64_t normalize_axis(std::int64_t axis, std::int64_t rank) {
  const std::int64_t a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank)
    throw ShapeError("axis " + std::to_string(axis) + " out of range for rank " +
                     std::to_string(rank));
  return a;
}

class Tensor {
 public:
  using Storage = std::variant<std::vector<float>, std::vector<std::int32_t>,
                               std::vector<std::uint8_t>>;

  Tensor() : Tensor(DType::kFloat32, Shape{}) {}

  Tensor(DType dtype, Shape shape) : dtype_(dtype), shape_(std::move(shape)) {
    for (auto e : shape_)
      if (e < 0) throw ShapeError("negative extent in shape " + shape_string(shape_));
    const auto n = static_cast<std::size_t>(num_elements(shape_));
    switch (dtype_) {
      case DType::kFloat32: data_ = std::vector<float>(n, 0.0f); break;
      case DType::kInt32: data_ = std::vector<std::int32_t>(n, 0); break;
      case DType::kBool: data_ = std::vector<std::uint8_t>(n, 0); break;
    }
  }

  static Tensor zeros(DType dtype, Shape shape) { return Tensor(dtype, std::move(shape)); }

  static Tensor full(DType dtype, Shape shape, double value) {
    Tensor t(dtype, std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t.set(i, value);
    return t;
  }

  static Tensor from_floats(Shape shape, std::vector<float> data) {
    check_count(shape, data.size());
    Tensor t;
    t.dtype_ = DType::kFloat32;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
  }

  static Tensor from_ints(Shape shape, std::vector<std::int32_t> data) {
    check_count(shape, data.size());
    Tensor t;
    t.dtype_ = DType::kInt32;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
  }

  static Tensor from_bools(Shape shape, const std::vector<bool>& data) {
    check_count(shape, data.size());
    std::vector<std::uint8_t> bytes(data.begin(), data.end());
    Tensor t;
    t.dtype_ = DType::kBool;
    t.shape_ = std::move(shape);
    t.data_ = std::move(bytes);
    return t;
  }

  static Tensor scalar(float v) { return from_floats({}, {v}); }

  DType dtype() const { return dtype_; }
  const Shape& shape() const { return shape_; }
  std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
  std::int64_t dim(std::int64_t axis) const { return shape_[normalize_axis(axis, rank())]; }
  std::int64_t size() const { return num_elements(shape_); }

  std::span<const float> floats() const { return typed<float>(); }
  std::span<float> floats_mut() { return typed_mut<float>(); }
  std::span<const std::int32_t> ints() const { return typed<std::int32_t>(); }
  std::span<std::int32_t> ints_mut() { return typed_mut<std::int32_t>(); }
  std::span<const std::uint8_t> bools() const { return typed<std::uint8_t>(); }
  std::span<std::uint8_t> bools_mut() { return typed_mut<std::uint8_t>(); }

  // Generic element access through double; exact for every supported dtype.
  double get(std::int64_t flat) const {
    return std::visit([flat](const auto& v) { return static_cast<double>(v[flat]); }, data_);
  }

  void set(std::int64_t flat, double value) {
    switch (dtype_) {
      case DType::kFloat32:
        std::get<0>(data_)[flat] = static_cast<float>(value);
        break;
      case DType::kInt32:
        std::get<1>(data_)[flat] = static_cast<std::int32_t>(value);
        break;
      case DType::kBool:
        std::get<2>(data_)[flat] = value != 0.0 ? 1 : 0;
        break;
    }
  }

  std::size_t element_bytes() const {
    return dtype_ == DType::kBool ? 1 : 4;
  }

  const void* raw() const {
    return std::visit([](const auto& v) -> const void* { return v.data(); }, data_);
  }
  void* raw_mut() {
    return std::visit([](auto& v) -> void* { return v.data(); }, data_);
  }

  Tensor astype(DType dtype) const {
    if (dtype == dtype_) return *this;
    Tensor out(dtype, shape_);
    for (std::int64_t i = 0; i < size(); ++i) out.set(i, get(i));
    return out;
  }

  // Bitwise equality of dtype, shape and payload (NaN payloads compare equal
  // to themselves).
  bool identical(const Tensor& other) const {
    if (dtype_ != other.dtype_ || shape_ != other.shape_) return false;
    return std::memcmp(raw(), other.raw(), static_cast<std::size_t>(size()) * element_bytes()) == 0;
  }

 private:
  static void check_count(const Shape& shape, std::size_t n) {
    if (static_cast<std::size_t>(num_elements(shape)) != n)
      throw ShapeError("shape " + shape_string(shape) + " needs " +
                       std::to_string(num_elements(shape)) + " elements, got " +
                       std::to_string(n));
  }

  template <class T>
  std::span<const T> typed() const {
    if (const auto* v = std::get_if<std::vector<T>>(&data_)) return {v->data(), v->size()};
    throw Error(std::string("tensor has dtype ") + dtype_name(dtype_));
  }

  template <class T>
  std::span<T> typed_mut() {
    if (auto* v = std::get_if<std::vector<T>>(&data_)) return {v->data(), v->size()};
    throw Error(std::string("tensor has dtype ") + dtype_name(dtype_));
  }

  DType dtype_ = DType::kFloat32;
  Shape shape_;
  Storage data_;
};

// ---------------------------------------------------------------------------
// Shape functions. Each is pure and independently testable.

inline Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::int64_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::int64_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1)
      throw ShapeError("cannot broadcast shapes " + shape_string(a) + " and " + shape_string(b));
    out[i] = da == 1 ? db : da;
  }
  return out;
}

inline Shape matmul_shape(const Shape& a, const Shape& b) {
  if (a.size() < 2 || b.size() < 2)
    throw ShapeError("matmul needs rank >= 2, got " + shape_string(a) + " and " + shape_string(b));
  if (a[a.size() - 1] != b[b.size() - 2])
    throw ShapeError("matmul inner dimension mismatch: " + shape_string(a) + " and " +
                     shape_string(b));
  Shape batch = broadcast_shapes(Shape(a.begin(), a.end() - 2), Shape(b.begin(), b.end() - 2));
  batch.push_back(a[a.size() - 2]);
  batch.push_back(b[b.size() - 1]);
  return batch;
}

inline std::vector<std::int64_t> normalize_axes(std::span<const std::int64_t> axes,
                                                std::int64_t rank) {
  std::vector<std::int64_t> out;
  for (auto a : axes) {
    const auto n = normalize_axis(a, rank);
    if (std::find(out.begin(), out.end(), n) != out.end())
      throw ShapeError("duplicate reduction axis " + std::to_string(a));
    out.push_back(n);
  }
  return out;
}

inline Shape reduce_shape(const Shape& shape, std::span<const std::int64_t> axes, bool keepdims) {
  const auto norm = normalize_axes(axes, static_cast<std::int64_t>(shape.size()));
  Shape out;
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(shape.size()); ++i) {
    const bool reduced = std::find(norm.begin(), norm.end(), i) != norm.end();
    if (!reduced)
      out.push_back(shape[i]);
    else if (keepdims)
      out.push_back(1);
  }
  return out;
}

inline Shape concat_shape(std::span<const Shape> shapes, std::int64_t axis) {
  if (shapes.empty()) throw ShapeError("concat of zero tensors");
  const auto rank = static_cast<std::int64_t>(shapes[0].size());
  const auto ax = normalize_axis(axis, rank);
  Shape out = shapes[0];
  for (std::size_t i = 1; i < shapes.size(); ++i) {
    const Shape& s = shapes[i];
    bool ok = static_cast<std::int64_t>(s.size()) == rank;
    for (std::int64_t d = 0; ok && d < rank; ++d)
      if (d != ax && s[d] != out[d]) ok = false;
    if (!ok)
      throw ShapeError("incompatible concat extents " + shape_string(shapes[0]) + " and " +
                       shape_string(s) + " on axis " + std::to_string(axis));
    out[ax] += s[ax];
  }
  return out;
}

inline Shape transpose_shape(const Shape& shape, std::span<const std::int64_t> perm) {
  if (perm.size() != shape.size())
    throw ShapeError("permutation rank mismatch for shape " + shape_string(shape));
  std::vector<bool> seen(shape.size(), false);
  Shape out(shape.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const auto p = normalize_axis(perm[i], static_cast<std::int64_t>(shape.size()));
    if (seen[p]) throw ShapeError("invalid permutation");
    seen[p] = true;
    out[i] = shape[p];
  }
  return out;
}

// Resolves a single -1 wildcard against the element count.
inline Shape reshape_shape(const Shape& from, const Shape& to) {
  Shape out = to;
  std::int64_t known = 1;
  int wildcard = -1;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] == -1) {
      if (wildcard >= 0) throw ShapeError("reshape allows one -1, got " + shape_string(to));
      wildcard = static_cast<int>(i);
    } else if (out[i] < 0) {
      throw ShapeError("invalid reshape target " + shape_string(to));
    } else {
      known *= out[i];
    }
  }
  const auto total = num_elements(from);
  if (wildcard >= 0) {
    if (known == 0 || total % known != 0)
      throw ShapeError("cannot reshape " + shape_string(from) + " to " + shape_string(to));
    out[wildcard] = total / known;
  }
  if (num_elements(out) != total)
    throw ShapeError("cannot reshape " + shape_string(from) + " to " + shape_string(to));
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise arithmetic.

enum class BinaryOp { kAdd, kSub, kMul, kDiv, kMax, kMin, kMod, kPow };

namespace detail {

template <class T>
T apply_binary(BinaryOp op, T a, T b) {
  if constexpr (std::is_floating_point_v<T>) {
    switch (op) {
      case BinaryOp::kAdd: return a + b;
      case BinaryOp::kSub: return a - b;
      case BinaryOp::kMul: return a * b;
      case BinaryOp::kDiv: return a / b;
      case BinaryOp::kMax: return std::max(a, b);
      case BinaryOp::kMin: return std::min(a, b);
      case BinaryOp::kMod: {
        // Python/numpy semantics: result takes the sign of the divisor.
        T r = std::fmod(a, b);
        if (r != 0 && ((r < 0) != (b < 0))) r += b;
        return r;
      }
      case BinaryOp::kPow: return std::pow(a, b);
    }
  } else {
    switch (op) {
      case BinaryOp::kAdd: return a + b;
      case BinaryOp::kSub: return a - b;
      case BinaryOp::kMul: return a * b;
      case BinaryOp::kDiv:
        if (b == 0) throw Error("integer division by zero");
        return a / b;
      case BinaryOp::kMax: return std::max(a, b);
      case BinaryOp::kMin: return std::min(a, b);
      case BinaryOp::kMod: {
        if (b == 0) throw Error("integer modulo by zero");
        T r = a % b;
        if (r != 0 && ((r < 0) != (b < 0))) r += b;
        return r;
      }
      case BinaryOp::kPow: {
        if (b < 0) return 0;
        T r = 1;
        for (T i = 0; i < b; ++i) r *= a;
        return r;
      }
    }
  }
  return a;
}

// Maps each flat index of `out_shape` to the flat index of a broadcast input.
inline std::vector<std::int64_t> broadcast_index(const Shape& in, const Shape& out) {
  const auto out_strides = row_major_strides(out);
  const auto in_strides = row_major_strides(in);
  const std::size_t offset = out.size() - in.size();
  std::vector<std::int64_t> map(static_cast<std::size_t>(num_elements(out)));
  for (std::int64_t flat = 0; flat < static_cast<std::int64_t>(map.size()); ++flat) {
    std::int64_t rem = flat, src = 0;
    for (std::size_t d = 0; d < out.size(); ++d) {
      const std::int64_t idx = rem / out_strides[d];
      rem %= out_strides[d];
      if (d >= offset && in[d - offset] != 1) src += idx * in_strides[d - offset];
    }
    map[flat] = src;
  }
  return map;
}

}  // namespace detail

inline Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b) {
  const Shape shape = broadcast_shapes(a.shape(), b.shape());
  const DType dtype = promote(a.dtype(), b.dtype());
  const auto ia = detail::broadcast_index(a.shape(), shape);
  const auto ib = detail::broadcast_index(b.shape(), shape);
  Tensor out(dtype, shape);
  const std::int64_t n = out.size();
  if (dtype == DType::kFloat32) {
    const Tensor fa = a.astype(dtype), fb = b.astype(dtype);
    auto pa = fa.floats();
    auto pb = fb.floats();
    auto po = out.floats_mut();
    for (std::int64_t i = 0; i < n; ++i) po[i] = detail::apply_binary<float>(op, pa[ia[i]], pb[ib[i]]);
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      const auto x = static_cast<std::int64_t>(a.get(ia[i]));
      const auto y = static_cast<std::int64_t>(b.get(ib[i]));
      out.set(i, static_cast<double>(detail::apply_binary<std::int64_t>(op, x, y)));
    }
  }
  return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::kAdd, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::kSub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::kMul, a, b); }
inline Tensor div(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::kDiv, a, b); }

// Applies `fn` to every element of a float32 tensor.
template <class Fn>
Tensor map_floats(const Tensor& x, Fn fn) {
  Tensor out = x.astype(DType::kFloat32);
  for (auto& v : out.floats_mut()) v = fn(v);
  return out;
}

inline Tensor ones_like(const Tensor& x) { return Tensor::full(x.dtype(), x.shape(), 1.0); }

// ---------------------------------------------------------------------------
// Contractions and reductions.

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.dtype() != DType::kFloat32 || b.dtype() != DType::kFloat32)
    throw Error("matmul is float32 only");
  const Shape shape = matmul_shape(a.shape(), b.shape());
  const std::int64_t m = a.dim(-2), k = a.dim(-1), n = b.dim(-1);
  const Shape batch(shape.begin(), shape.end() - 2);
  const Shape abatch(a.shape().begin(), a.shape().end() - 2);
  const Shape bbatch(b.shape().begin(), b.shape().end() - 2);
  const auto ia = detail::broadcast_index(abatch, batch);
  const auto ib = detail::broadcast_index(bbatch, batch);
  Tensor out(DType::kFloat32, shape);
  auto pa = a.floats();
  auto pb = b.floats();
  auto po = out.floats_mut();
  for (std::size_t bi = 0; bi < ia.size(); ++bi) {
    const float* ma = pa.data() + ia[bi] * m * k;
    const float* mb = pb.data() + ib[bi] * k * n;
    float* mo = po.data() + static_cast<std::int64_t>(bi) * m * n;
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < n; ++j) {
        float acc = 0.0f;
        for (std::int64_t r = 0; r < k; ++r) acc += ma[i * k + r] * mb[r * n + j];
        mo[i * n + j] = acc;
      }
  }
  return out;
}

enum class ReduceOp { kSum, kMax, kMin, kMean };

inline Tensor reduce(ReduceOp op, const Tensor& x, std::span<const std::int64_t> axes,
                     bool keepdims = false) {
  const auto norm = normalize_axes(axes, x.rank());
  const Shape out_shape = reduce_shape(x.shape(), axes, keepdims);
  std::int64_t count = 1;
  for (auto a : norm) count *= x.shape()[a];
  if (count == 0 && (op == ReduceOp::kMax || op == ReduceOp::kMin || op == ReduceOp::kMean))
    throw ShapeError("reduction over an empty window");

  const DType out_dtype = op == ReduceOp::kMean ? DType::kFloat32
                          : x.dtype() == DType::kBool ? DType::kInt32
                                                      : x.dtype();
  // Map each input element to its output slot; iterate in row-major order so
  // the accumulation order is fixed.
  const auto in_strides = row_major_strides(x.shape());
  Shape kept = reduce_shape(x.shape(), axes, true);
  const auto kept_strides = row_major_strides(kept);
  std::vector<double> acc(static_cast<std::size_t>(num_elements(kept)), 0.0);
  std::vector<float> facc(acc.size(), 0.0f);
  std::vector<bool> seen(acc.size(), false);
  for (std::int64_t flat = 0; flat < x.size(); ++flat) {
    std::int64_t rem = flat, dst = 0;
    for (std::int64_t d = 0; d < x.rank(); ++d) {
      const std::int64_t idx = rem / in_strides[d];
      rem %= in_strides[d];
      if (kept[d] != 1) dst += idx * kept_strides[d];
    }
    const double v = x.get(flat);
    switch (op) {
      case ReduceOp::kSum:
      case ReduceOp::kMean:
        if (x.dtype() == DType::kFloat32)
          facc[dst] += static_cast<float>(v);
        else
          acc[dst] += v;
        break;
      case ReduceOp::kMax:
        acc[dst] = seen[dst] ? std::max(acc[dst], v) : v;
        break;
      case ReduceOp::kMin:
        acc[dst] = seen[dst] ? std::min(acc[dst], v) : v;
        break;
    }
    seen[dst] = true;
  }
  Tensor out(out_dtype, out_shape);
  for (std::int64_t i = 0; i < out.size(); ++i) {
    double v = acc[i];
    if ((op == ReduceOp::kSum || op == ReduceOp::kMean) && x.dtype() == DType::kFloat32)
      v = facc[i];
    if (op == ReduceOp::kMean) {
      out.floats_mut()[i] = static_cast<float>(v) / static_cast<float>(count);
    } else {
      out.set(i, v);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structural operations.

namespace detail {

// Copies `count` contiguous elements between tensors of the same dtype.
inline void copy_elements(const Tensor& src, std::int64_t src_off, Tensor& dst,
                          std::int64_t dst_off, std::int64_t count) {
  if (count <= 0) return;
  const std::size_t eb = src.element_bytes();
  std::memcpy(static_cast<char*>(dst.raw_mut()) + dst_off * eb,
              static_cast<const char*>(src.raw()) + src_off * eb,
              static_cast<std::size_t>(count) * eb);
}

inline std::int64_t outer_extent(const Shape& s, std::int64_t axis) {
  std::int64_t n = 1;
  for (std::int64_t i = 0; i < axis; ++i) n *= s[i];
  return n;
}

inline std::int64_t inner_extent(const Shape& s, std::int64_t axis) {
  std::int64_t n = 1;
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < s.size(); ++i) n *= s[i];
  return n;
}

}  // namespace detail

inline Tensor concat(std::span<const Tensor> parts, std::int64_t axis) {
  std::vector<Shape> shapes;
  for (const auto& p : parts) shapes.push_back(p.shape());
  const Shape shape = concat_shape(shapes, axis);
  const auto ax = normalize_axis(axis, static_cast<std::int64_t>(shape.size()));
  for (const auto& p : parts)
    if (p.dtype() != parts[0].dtype()) throw Error("concat dtype mismatch");
  Tensor out(parts[0].dtype(), shape);
  const std::int64_t outer = detail::outer_extent(shape, ax);
  const std::int64_t inner = detail::inner_extent(shape, ax);
  std::int64_t offset = 0;
  for (const auto& p : parts) {
    const std::int64_t len = p.shape()[ax];
    for (std::int64_t o = 0; o < outer; ++o)
      detail::copy_elements(p, o * len * inner, out, (o * shape[ax] + offset) * inner, len * inner);
    offset += len;
  }
  return out;
}

inline Tensor concat(std::initializer_list<Tensor> parts, std::int64_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

inline Tensor slice(const Tensor& x, std::int64_t axis, std::int64_t begin, std::int64_t end) {
  const auto ax = normalize_axis(axis, x.rank());
  const std::int64_t extent = x.shape()[ax];
  if (begin < 0 || end < begin || end > extent)
    throw ShapeError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for extent " + std::to_string(extent));
  Shape shape = x.shape();
  shape[ax] = end - begin;
  Tensor out(x.dtype(), shape);
  const std::int64_t outer = detail::outer_extent(shape, ax);
  const std::int64_t inner = detail::inner_extent(shape, ax);
  for (std::int64_t o = 0; o < outer; ++o)
    detail::copy_elements(x, (o * extent + begin) * inner, out, o * (end - begin) * inner,
                          (end - begin) * inner);
  return out;
}

// Gathers positions along `axis`; an index of -1 yields zero-filled entries.
inline Tensor take(const Tensor& x, std::int64_t axis, std::span<const std::int64_t> index) {
  const auto ax = normalize_axis(axis, x.rank());
  const std::int64_t extent = x.shape()[ax];
  Shape shape = x.shape();
  shape[ax] = static_cast<std::int64_t>(index.size());
  Tensor out(x.dtype(), shape);
  const std::int64_t outer = detail::outer_extent(shape, ax);
  const std::int64_t inner = detail::inner_extent(shape, ax);
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < index.size(); ++i) {
      const std::int64_t src = index[i];
      if (src < 0) continue;
      if (src >= extent) throw ShapeError("take index out of range");
      detail::copy_elements(x, (o * extent + src) * inner, out,
                            (o * shape[ax] + static_cast<std::int64_t>(i)) * inner, inner);
    }
  return out;
}

inline Tensor pad(const Tensor& x, std::int64_t axis, std::int64_t before, std::int64_t after,
                  double fill = 0.0) {
  if (before < 0 || after < 0) throw ShapeError("negative padding");
  const auto ax = normalize_axis(axis, x.rank());
  Shape shape = x.shape();
  shape[ax] += before + after;
  Tensor out = Tensor::full(x.dtype(), shape, fill);
  const std::int64_t outer = detail::outer_extent(shape, ax);
  const std::int64_t inner = detail::inner_extent(shape, ax);
  const std::int64_t len = x.shape()[ax];
  for (std::int64_t o = 0; o < outer; ++o)
    detail::copy_elements(x, o * len * inner, out, (o * shape[ax] + before) * inner, len * inner);
  return out;
}

inline Tensor transpose(const Tensor& x, std::span<const std::int64_t> perm) {
  const Shape shape = transpose_shape(x.shape(), perm);
  const auto in_strides = row_major_strides(x.shape());
  const auto out_strides = row_major_strides(shape);
  Tensor out(x.dtype(), shape);
  for (std::int64_t flat = 0; flat < out.size(); ++flat) {
    std::int64_t rem = flat, src = 0;
    for (std::size_t d = 0; d < shape.size(); ++d) {
      const std::int64_t idx = rem / out_strides[d];
      rem %= out_strides[d];
      src += idx * in_strides[normalize_axis(perm[d], x.rank())];
    }
    detail::copy_elements(x, src, out, flat, 1);
  }
  return out;
}

inline Tensor reshape(const Tensor& x, const Shape& target) {
  const Shape shape = reshape_shape(x.shape(), target);
  Tensor out(x.dtype(), shape);
  detail::copy_elements(x, 0, out, 0, x.size());
  return out;
}

}  // namespace seqlayers
