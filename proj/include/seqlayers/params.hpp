// SPDX-License-Identifier: Apache-2.0
//
// Parameter sources and the context handed to config `make` methods.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <string_view>

#include "seqlayers/tensor.hpp"

namespace seqlayers {

// 64-bit FNV-1a, used wherever a stable hash of a name is needed.
inline std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

class ParameterSource {
 public:
  virtual ~ParameterSource() = default;
  // Returns the float32 parameter stored under `path` with exactly `shape`.
  virtual Tensor get(const std::string& path, const Shape& shape) = 0;
};

// Draws every parameter from uniform(-0.5, 0.5), keyed by (seed, path) so a
// parameter does not depend on construction order.
class RandomParameters : public ParameterSource {
 public:
  explicit RandomParameters(std::uint64_t seed) : seed_(seed) {}

  Tensor get(const std::string& path, const Shape& shape) override {
    std::mt19937_64 gen(mix64(fnv1a(path) ^ mix64(seed_)));
    std::uniform_real_distribution<float> dist(-0.5f, 0.5f);
    Tensor t(DType::kFloat32, shape);
    for (auto& v : t.floats_mut()) v = dist(gen);
    drawn_[path] = t;
    return t;
  }

  std::uint64_t seed() const { return seed_; }
  // Everything handed out so far, for writing an archive.
  const std::map<std::string, Tensor>& drawn() const { return drawn_; }

 private:
  std::uint64_t seed_;
  std::map<std::string, Tensor> drawn_;
};

class ArchiveParameters : public ParameterSource {
 public:
  explicit ArchiveParameters(std::map<std::string, Tensor> tensors) : tensors_(std::move(tensors)) {}

  Tensor get(const std::string& path, const Shape& shape) override {
    auto it = tensors_.find(path);
    if (it == tensors_.end()) throw Error("parameter archive has no entry '" + path + "'");
    if (it->second.dtype() != DType::kFloat32 || it->second.shape() != shape)
      throw ShapeError("parameter '" + path + "' has shape " + shape_string(it->second.shape()) +
                       ", expected " + shape_string(shape));
    used_.insert(path);
    return it->second;
  }

  std::set<std::string> unused() const {
    std::set<std::string> out;
    for (const auto& [k, v] : tensors_)
      if (!used_.count(k)) out.insert(k);
    return out;
  }

 private:
  std::map<std::string, Tensor> tensors_;
  std::set<std::string> used_;
};

// Where a layer is being built: its slash-separated path and the parameter
// source. Parameter names resolve to "<path>/<name>".
class BuildContext {
 public:
  BuildContext(ParameterSource& params, std::string path) : params_(&params), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  std::string name() const {
    const auto slash = path_.rfind('/');
    return slash == std::string::npos ? path_ : path_.substr(slash + 1);
  }
  BuildContext child(const std::string& name) const { return {*params_, path_ + "/" + name}; }
  ParameterSource& source() const { return *params_; }

  Tensor parameter(const std::string& name, const Shape& shape) const {
    return params_->get(path_ + "/" + name, shape);
  }

  // A seed unique to this layer position, derived from a configured base.
  std::uint64_t derive_seed(std::uint64_t base) const { return mix64(fnv1a(path_) ^ mix64(base)); }

 private:
  ParameterSource* params_;
  std::string path_;
};

}  // namespace seqlayers
