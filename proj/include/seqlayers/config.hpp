// SPDX-License-Identifier: Apache-2.0
//
// Declarative layer configs. Every layer exposes an aggregate `Config` with a
// `name` field, a static `kKind` and
//
//   LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const;
//
// Configs hold no parameters; `make` pulls them from the context.

#pragma once

#include <concepts>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "seqlayers/layer.hpp"
#include "seqlayers/params.hpp"

namespace seqlayers {

template <class C>
concept LayerConfig = requires(const C& c, const ChannelSpec& spec, const BuildContext& ctx) {
  { C::kKind } -> std::convertible_to<std::string_view>;
  { c.name } -> std::convertible_to<std::string>;
  { c.make(spec, ctx) } -> std::convertible_to<LayerPtr>;
};

class AnyConfig {
 public:
  AnyConfig() = default;

  template <LayerConfig C>
  AnyConfig(C config) : impl_(std::make_shared<Model<C>>(std::move(config))) {}  // NOLINT

  bool empty() const { return !impl_; }
  std::string kind() const { return get().kind(); }
  std::string name() const { return get().name(); }
  LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const { return get().make(input, ctx); }

  template <class C>
  const C* as() const {
    auto* m = dynamic_cast<const Model<C>*>(impl_.get());
    return m ? &m->config : nullptr;
  }

 private:
  struct Concept {
    virtual ~Concept() = default;
    virtual std::string kind() const = 0;
    virtual std::string name() const = 0;
    virtual LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const = 0;
  };
  template <class C>
  struct Model final : Concept {
    explicit Model(C c) : config(std::move(c)) {}
    std::string kind() const override { return std::string(C::kKind); }
    std::string name() const override { return config.name; }
    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const override {
      return config.make(input, ctx);
    }
    C config;
  };

  const Concept& get() const {
    if (!impl_) throw Error("empty layer config");
    return *impl_;
  }

  std::shared_ptr<const Concept> impl_;
};

// Names for a list of sibling configs: explicit names are kept, the rest
// become "<kind>_<index>". Names must be unique among siblings.
inline std::vector<std::string> sibling_names(const std::vector<AnyConfig>& configs,
                                              const std::string& where) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::string n = configs[i].name();
    if (n.empty()) n = configs[i].kind() + "_" + std::to_string(i);
    if (n.find('/') != std::string::npos) throw Error(where + ": layer name '" + n + "' contains '/'");
    if (!seen.insert(n).second) throw Error(where + ": duplicate sibling name '" + n + "'");
    names.push_back(std::move(n));
  }
  return names;
}

inline LayerPtr build(const AnyConfig& config, const ChannelSpec& input, ParameterSource& params) {
  const std::string name = config.name().empty() ? config.kind() : config.name();
  return config.make(input, BuildContext(params, name));
}

inline LayerPtr build(const AnyConfig& config, const ChannelSpec& input, std::uint64_t seed = 0) {
  RandomParameters params(seed);
  return build(config, input, params);
}

}  // namespace seqlayers
