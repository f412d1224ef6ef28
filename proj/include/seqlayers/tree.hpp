// SPDX-License-Identifier: Apache-2.0
//
// Recursive containers threaded through layers: step state and emits.

#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "seqlayers/sequence.hpp"

namespace seqlayers {

// Counter-based random stream position: (seed, offset in timesteps).
struct RngCounter {
  std::uint64_t seed = 0;
  std::uint64_t offset = 0;
  friend bool operator==(const RngCounter&, const RngCounter&) = default;
};

class Tree {
 public:
  using Tuple = std::vector<Tree>;
  using Map = std::map<std::string, Tree>;
  using Node = std::variant<std::monostate, Tensor, Sequence, RngCounter, Tuple, Map>;

  Tree() = default;
  Tree(Tensor t) : node_(std::move(t)) {}        // NOLINT
  Tree(Sequence s) : node_(std::move(s)) {}      // NOLINT
  Tree(RngCounter r) : node_(r) {}               // NOLINT
  Tree(Tuple items) : node_(std::move(items)) {} // NOLINT
  Tree(Map items) : node_(std::move(items)) {}   // NOLINT

  static Tree empty() { return {}; }
  static Tree tuple(Tuple items) { return Tree(std::move(items)); }
  static Tree map(Map items) { return Tree(std::move(items)); }

  bool is_empty() const { return std::holds_alternative<std::monostate>(node_); }
  bool is_tensor() const { return std::holds_alternative<Tensor>(node_); }
  bool is_sequence() const { return std::holds_alternative<Sequence>(node_); }
  bool is_rng() const { return std::holds_alternative<RngCounter>(node_); }
  bool is_tuple() const { return std::holds_alternative<Tuple>(node_); }
  bool is_map() const { return std::holds_alternative<Map>(node_); }

  const Tensor& tensor() const { return get<Tensor>("tensor"); }
  const Sequence& sequence() const { return get<Sequence>("sequence"); }
  const RngCounter& rng() const { return get<RngCounter>("rng counter"); }
  const Tuple& items() const { return get<Tuple>("tuple"); }
  const Map& entries() const { return get<Map>("map"); }

  const Tree& at(std::size_t i) const {
    const auto& t = items();
    if (i >= t.size()) throw Error("tree tuple index " + std::to_string(i) + " out of range");
    return t[i];
  }
  const Tree& at(const std::string& key) const {
    const auto& m = entries();
    auto it = m.find(key);
    if (it == m.end()) throw Error("tree has no entry '" + key + "'");
    return it->second;
  }

  const Node& node() const { return node_; }

 private:
  template <class T>
  const T& get(const char* what) const {
    if (const auto* p = std::get_if<T>(&node_)) return *p;
    throw Error(std::string("tree node is not a ") + what);
  }

  Node node_;
};

using State = Tree;
using Emits = Tree;

// Describes tree structure. With `with_time` false, sequence time extents
// are omitted so per-step and whole-sequence emits compare equal.
inline void describe_tree(const Tree& tree, std::ostream& os, bool with_time) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          os << "()";
        } else if constexpr (std::is_same_v<T, Tensor>) {
          os << "tensor<" << dtype_name(n.dtype()) << shape_string(n.shape()) << '>';
        } else if constexpr (std::is_same_v<T, Sequence>) {
          os << "seq<" << n.channel_spec().str();
          if (with_time) os << " b=" << n.batch() << " t=" << n.time();
          os << '>';
        } else if constexpr (std::is_same_v<T, RngCounter>) {
          os << "rng";
        } else if constexpr (std::is_same_v<T, Tree::Tuple>) {
          os << '(';
          for (std::size_t i = 0; i < n.size(); ++i) {
            if (i) os << ", ";
            describe_tree(n[i], os, with_time);
          }
          os << ')';
        } else {
          os << '{';
          bool first = true;
          for (const auto& [k, v] : n) {
            if (!first) os << ", ";
            first = false;
            os << k << ": ";
            describe_tree(v, os, with_time);
          }
          os << '}';
        }
      },
      tree.node());
}

inline std::string tree_signature(const Tree& tree, bool with_time = true) {
  std::ostringstream os;
  describe_tree(tree, os, with_time);
  return os.str();
}

// Joins per-step emits: sequence leaves concatenate in time, other leaves keep
// the most recent value.
inline Tree concatenate_trees(const std::vector<Tree>& parts) {
  if (parts.empty()) return {};
  const Tree& first = parts.front();
  if (first.is_sequence()) {
    std::vector<Sequence> seqs;
    for (const auto& p : parts) seqs.push_back(p.sequence());
    return Sequence::concatenate(seqs);
  }
  if (first.is_tuple()) {
    Tree::Tuple out;
    for (std::size_t i = 0; i < first.items().size(); ++i) {
      std::vector<Tree> column;
      for (const auto& p : parts) column.push_back(p.at(i));
      out.push_back(concatenate_trees(column));
    }
    return out;
  }
  if (first.is_map()) {
    Tree::Map out;
    for (const auto& [k, v] : first.entries()) {
      std::vector<Tree> column;
      for (const auto& p : parts) column.push_back(p.at(k));
      out.emplace(k, concatenate_trees(column));
    }
    return out;
  }
  return parts.back();
}

// Auxiliary named inputs broadcast to every sublayer.
using ConstantValue = std::variant<Tensor, Sequence>;
using Constants = std::map<std::string, ConstantValue>;

inline const Constants& no_constants() {
  static const Constants empty;
  return empty;
}

}  // namespace seqlayers
