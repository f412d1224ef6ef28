// SPDX-License-Identifier: Apache-2.0
//
// Pipeline files: a YAML tree of layer specs, a registry that turns each
// `type` into a layer Config, and run manifests for the command line tool.
//
//   input: f32[16]
//   layer:
//     type: serial
//     layers:
//       - {type: conv1d, filters: 8, kernel_size: 3, strides: 2}
//       - {type: relu}
//
// Specs are plain data. Nothing is allocated until build() is called.
// Requires yaml-cpp.

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "seqlayers/combinators.hpp"
#include "seqlayers/io.hpp"
#include "seqlayers/layers/activations.hpp"
#include "seqlayers/layers/attention.hpp"
#include "seqlayers/layers/basic.hpp"
#include "seqlayers/layers/conditioning.hpp"
#include "seqlayers/layers/convolution.hpp"
#include "seqlayers/layers/dropout.hpp"
#include "seqlayers/layers/dsp.hpp"
#include "seqlayers/layers/normalization.hpp"
#include "seqlayers/layers/pooling.hpp"
#include "seqlayers/layers/recurrent.hpp"
#include "seqlayers/layers/resampling.hpp"
#include "seqlayers/layers/shape.hpp"
#include "seqlayers/testing.hpp"
#include "seqlayers/verify.hpp"

namespace seqlayers {

class ParseError : public Error {
 public:
  using Error::Error;
};

// A scalar or a flat list of scalars, kept as written.
struct ParamValue {
  bool is_list = false;
  std::vector<std::string> items;

  static ParamValue scalar(std::string s) { return {false, {std::move(s)}}; }
  static ParamValue list(std::vector<std::string> v) { return {true, std::move(v)}; }
  friend bool operator==(const ParamValue&, const ParamValue&) = default;
};

struct PipelineSpec;

// Child specs under one key: a single node (`layer: {...}`) or a list
// (`layers: [...]`).
struct ChildSlot {
  bool is_list = true;
  std::vector<PipelineSpec> nodes;
  friend bool operator==(const ChildSlot&, const ChildSlot&);
};

struct PipelineSpec {
  std::string type;
  std::string name;
  std::map<std::string, ParamValue> params;
  std::map<std::string, ChildSlot> children;
  friend bool operator==(const PipelineSpec&, const PipelineSpec&) = default;
};

inline bool operator==(const ChildSlot& a, const ChildSlot& b) { return a.is_list == b.is_list && a.nodes == b.nodes; }

struct PipelineFile {
  std::optional<ChannelSpec> input;
  std::uint64_t seed = 0;
  std::map<std::string, ChannelSpec> constants;
  PipelineSpec layer;
  friend bool operator==(const PipelineFile&, const PipelineFile&) = default;
};

// ---------------------------------------------------------------------------
// YAML <-> spec tree.

namespace pipeline_detail {

inline std::string where(const YAML::Node& n) {
  const auto m = n.Mark();
  if (m.is_null()) return "";
  return " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
}

inline std::string scalar_of(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw ParseError(path + ": expected a scalar" + where(n));
  return n.Scalar();
}

inline PipelineSpec parse_node(const YAML::Node& node, const std::string& path) {
  if (!node.IsMap()) throw ParseError(path + ": expected a mapping with a 'type'" + where(node));
  PipelineSpec spec;
  if (!node["type"]) throw ParseError(path + ": missing 'type'" + where(node));
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string key = it->first.as<std::string>();
    const YAML::Node& v = it->second;
    const std::string sub = path + "." + key;
    if (key == "type") {
      spec.type = scalar_of(v, sub);
    } else if (key == "name") {
      spec.name = scalar_of(v, sub);
    } else if (v.IsMap()) {
      spec.children[key] = ChildSlot{false, {parse_node(v, sub)}};
    } else if (v.IsSequence()) {
      bool maps = v.size() == 0, scalars = v.size() > 0;
      for (const auto& e : v) {
        maps = maps || e.IsMap();
        scalars = scalars && e.IsScalar();
      }
      if (scalars) {
        std::vector<std::string> items;
        for (const auto& e : v) items.push_back(e.Scalar());
        spec.params[key] = ParamValue::list(std::move(items));
      } else if (maps) {
        ChildSlot slot;
        for (std::size_t i = 0; i < v.size(); ++i)
          slot.nodes.push_back(parse_node(v[i], path + "." + key + "[" + std::to_string(i) + "]"));
        spec.children[key] = std::move(slot);
      } else {
        throw ParseError(sub + ": lists must hold only scalars or only layers" + where(v));
      }
    } else if (v.IsScalar()) {
      spec.params[key] = ParamValue::scalar(v.Scalar());
    } else {
      throw ParseError(sub + ": empty value" + where(v));
    }
  }
  return spec;
}

inline void emit_node(YAML::Emitter& out, const PipelineSpec& spec) {
  out << YAML::BeginMap;
  out << YAML::Key << "type" << YAML::Value << spec.type;
  if (!spec.name.empty()) out << YAML::Key << "name" << YAML::Value << spec.name;
  for (const auto& [k, v] : spec.params) {
    out << YAML::Key << k << YAML::Value;
    if (v.is_list) {
      out << YAML::Flow << YAML::BeginSeq;
      for (const auto& item : v.items) out << item;
      out << YAML::EndSeq;
    } else {
      out << v.items.front();
    }
  }
  for (const auto& [k, slot] : spec.children) {
    out << YAML::Key << k << YAML::Value;
    if (slot.is_list) {
      out << YAML::BeginSeq;
      for (const auto& n : slot.nodes) emit_node(out, n);
      out << YAML::EndSeq;
    } else {
      emit_node(out, slot.nodes.front());
    }
  }
  out << YAML::EndMap;
}

inline YAML::Node load_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError("parse error at line " + std::to_string(e.mark.line + 1) + ", column " +
                     std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
}

inline ChannelSpec parse_channel_spec(const YAML::Node& n, const std::string& path) {
  const std::string s = scalar_of(n, path);
  try {
    return ChannelSpec::parse(s);
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what() + where(n));
  }
}

}  // namespace pipeline_detail

inline PipelineSpec parse_spec(const std::string& text) {
  return pipeline_detail::parse_node(pipeline_detail::load_yaml(text), "layer");
}

inline std::string render_spec(const PipelineSpec& spec) {
  YAML::Emitter out;
  pipeline_detail::emit_node(out, spec);
  return std::string(out.c_str()) + "\n";
}

inline PipelineFile parse_pipeline(const std::string& text) {
  using namespace pipeline_detail;
  const YAML::Node root = load_yaml(text);
  if (!root.IsMap()) throw ParseError("pipeline file must be a mapping with a 'layer' entry");
  PipelineFile file;
  bool has_layer = false;
  for (auto it = root.begin(); it != root.end(); ++it) {
    const std::string key = it->first.as<std::string>();
    const YAML::Node& v = it->second;
    if (key == "input") {
      file.input = parse_channel_spec(v, key);
    } else if (key == "seed") {
      try {
        file.seed = v.as<std::uint64_t>();
      } catch (const YAML::Exception&) {
        throw ParseError("seed: expected a non-negative integer" + where(v));
      }
    } else if (key == "constants") {
      if (!v.IsMap()) throw ParseError("constants: expected a mapping of key to channel spec" + where(v));
      for (auto c = v.begin(); c != v.end(); ++c)
        file.constants[c->first.as<std::string>()] = parse_channel_spec(c->second, "constants." + c->first.as<std::string>());
    } else if (key == "layer") {
      file.layer = parse_node(v, "layer");
      has_layer = true;
    } else {
      throw ParseError("unknown top-level key '" + key + "'" + where(it->first));
    }
  }
  if (!has_layer) throw ParseError("pipeline file has no 'layer' entry");
  return file;
}

inline std::string render_pipeline(const PipelineFile& file) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  if (file.input) out << YAML::Key << "input" << YAML::Value << file.input->str();
  if (file.seed != 0) out << YAML::Key << "seed" << YAML::Value << file.seed;
  if (!file.constants.empty()) {
    out << YAML::Key << "constants" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : file.constants) out << YAML::Key << k << YAML::Value << v.str();
    out << YAML::EndMap;
  }
  out << YAML::Key << "layer" << YAML::Value;
  pipeline_detail::emit_node(out, file.layer);
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline PipelineFile load_pipeline(const std::string& path) { return parse_pipeline(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Registry.

// Typed, path-qualified access to one spec node's fields. Every field must be
// consumed; finish() rejects leftovers.
class SpecReader {
 public:
  SpecReader(const PipelineSpec& spec, std::string path) : spec_(spec), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const std::string& name() const { return spec_.name; }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const auto* s = scalar(key);
    if (!s) return fallback;
    return to_integer(*s, key);
  }
  double number(const std::string& key, double fallback) {
    const auto* s = scalar(key);
    if (!s) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(*s, &used);
      if (used == s->size()) return v;
    } catch (const std::exception&) {
    }
    throw bad(key, "expected a number, got '" + *s + "'");
  }
  bool boolean(const std::string& key, bool fallback) {
    const auto* s = scalar(key);
    if (!s) return fallback;
    if (*s == "true" || *s == "True") return true;
    if (*s == "false" || *s == "False") return false;
    throw bad(key, "expected true or false, got '" + *s + "'");
  }
  std::string string(const std::string& key, std::string fallback) {
    const auto* s = scalar(key);
    return s ? *s : std::move(fallback);
  }
  std::string required_string(const std::string& key) {
    const auto* s = scalar(key);
    if (!s) throw bad(key, "required");
    return *s;
  }
  ChannelSpec channel_spec(const std::string& key) {
    const std::string s = required_string(key);
    try {
      return ChannelSpec::parse(s);
    } catch (const std::exception& e) {
      throw bad(key, e.what());
    }
  }
  std::vector<std::int64_t> integers(const std::string& key) {
    used_.insert(key);
    std::vector<std::int64_t> out;
    if (auto it = spec_.children.find(key); it != spec_.children.end() && it->second.nodes.empty()) return out;
    auto it = spec_.params.find(key);
    if (it == spec_.params.end()) throw bad(key, "required");
    if (!it->second.is_list) throw bad(key, "expected a list");
    for (const auto& s : it->second.items) out.push_back(to_integer(s, key));
    return out;
  }
  ReceptiveFieldMap receptive_field(const std::string& key) {
    const std::string s = required_string(key);
    try {
      return parse_receptive_field_map(s);
    } catch (const std::exception& e) {
      throw bad(key, e.what());
    }
  }

  AnyConfig child(const std::string& key, bool required = true);
  std::vector<AnyConfig> child_list(const std::string& key);

  void finish() const {
    for (const auto& [k, v] : spec_.params)
      if (!used_.count(k)) throw Error(path_ + "." + k + ": unknown parameter for '" + spec_.type + "'");
    for (const auto& [k, v] : spec_.children)
      if (!used_.count(k)) throw Error(path_ + "." + k + ": '" + spec_.type + "' takes no child '" + k + "'");
  }

 private:
  const std::string* scalar(const std::string& key) {
    used_.insert(key);
    auto it = spec_.params.find(key);
    if (it == spec_.params.end()) {
      if (spec_.children.count(key)) throw bad(key, "expected a scalar, got a layer");
      return nullptr;
    }
    if (it->second.is_list) throw bad(key, "expected a scalar, got a list");
    return &it->second.items.front();
  }
  std::int64_t to_integer(const std::string& s, const std::string& key) const {
    try {
      std::size_t used = 0;
      const std::int64_t v = std::stoll(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw bad(key, "expected an integer, got '" + s + "'");
  }
  Error bad(const std::string& key, const std::string& why) const { return Error(path_ + "." + key + ": " + why); }

  const PipelineSpec& spec_;
  std::string path_;
  std::set<std::string> used_;
};

using ConfigFactory = std::function<AnyConfig(SpecReader&)>;

namespace pipeline_detail {

template <class C>
C named(SpecReader& r, C c) {
  c.name = r.name();
  return c;
}

inline std::int64_t strides_of(SpecReader& r) {
  // `stride` is accepted as a spelling of `strides`.
  const std::int64_t a = r.integer("stride", 0);
  const std::int64_t b = r.integer("strides", 0);
  if (a && b && a != b) throw Error(r.path() + ": both stride and strides given");
  return a ? a : b ? b : 1;
}

inline std::map<std::string, ConfigFactory> make_registry() {
  std::map<std::string, ConfigFactory> reg;
  reg["identity"] = [](SpecReader& r) { return AnyConfig(named(r, Identity::Config{})); };
  reg["emit"] = [](SpecReader& r) { return AnyConfig(named(r, Emit::Config{})); };
  reg["dense"] = [](SpecReader& r) {
    Dense::Config c;
    c.units = r.integer("units", 1);
    c.use_bias = r.boolean("use_bias", true);
    return AnyConfig(named(r, c));
  };
  reg["scale"] = [](SpecReader& r) {
    Scale::Config c;
    c.scale = r.number("scale", 1.0);
    return AnyConfig(named(r, c));
  };
  reg["add"] = [](SpecReader& r) {
    Add::Config c;
    c.value = r.number("value", 0.0);
    return AnyConfig(named(r, c));
  };
  auto activation = [](std::string fixed) {
    return [fixed](SpecReader& r) {
      Activation::Config c;
      c.function = fixed.empty() ? r.required_string("function") : fixed;
      c.alpha = r.number("alpha", c.alpha);
      c.operand = r.number("operand", c.operand);
      c.axis = r.integer("axis", c.axis);
      return AnyConfig(named(r, c));
    };
  };
  reg["activation"] = activation("");
  for (const auto& a : kActivations) reg[a.name] = activation(a.name);
  reg["layer_norm"] = [](SpecReader& r) {
    LayerNorm::Config c;
    c.epsilon = r.number("epsilon", c.epsilon);
    c.use_scale = r.boolean("use_scale", c.use_scale);
    c.use_bias = r.boolean("use_bias", c.use_bias);
    return AnyConfig(named(r, c));
  };
  reg["rms_norm"] = [](SpecReader& r) {
    RmsNorm::Config c;
    c.epsilon = r.number("epsilon", c.epsilon);
    c.use_scale = r.boolean("use_scale", c.use_scale);
    return AnyConfig(named(r, c));
  };
  reg["dropout"] = [](SpecReader& r) {
    Dropout::Config c;
    c.rate = r.number("rate", 0.0);
    c.seed = static_cast<std::uint64_t>(r.integer("seed", 0));
    return AnyConfig(named(r, c));
  };
  reg["conv1d"] = [](SpecReader& r) {
    Conv1D::Config c;
    c.filters = r.integer("filters", 1);
    c.kernel_size = r.integer("kernel_size", 1);
    c.strides = strides_of(r);
    c.dilation_rate = r.integer("dilation_rate", 1);
    c.padding = r.string("padding", c.padding);
    c.use_bias = r.boolean("use_bias", true);
    return AnyConfig(named(r, c));
  };
  reg["conv1d_transpose"] = [](SpecReader& r) {
    Conv1DTranspose::Config c;
    c.filters = r.integer("filters", 1);
    c.kernel_size = r.integer("kernel_size", 1);
    c.strides = strides_of(r);
    c.padding = r.string("padding", c.padding);
    c.use_bias = r.boolean("use_bias", true);
    return AnyConfig(named(r, c));
  };
  reg["downsample1d"] = [](SpecReader& r) {
    Downsample1D::Config c;
    c.rate = r.integer("rate", 1);
    return AnyConfig(named(r, c));
  };
  reg["upsample1d"] = [](SpecReader& r) {
    Upsample1D::Config c;
    c.rate = r.integer("rate", 1);
    return AnyConfig(named(r, c));
  };
  reg["delay"] = [](SpecReader& r) {
    Delay::Config c;
    c.length = r.integer("length", 0);
    return AnyConfig(named(r, c));
  };
  reg["lookahead"] = [](SpecReader& r) {
    Lookahead::Config c;
    c.length = r.integer("length", 0);
    return AnyConfig(named(r, c));
  };
  auto pooling = []<class C>(C proto) {
    return [proto](SpecReader& r) {
      C c = proto;
      c.pool_size = r.integer("pool_size", 1);
      c.strides = strides_of(r);
      c.padding = r.string("padding", c.padding);
      return AnyConfig(named(r, c));
    };
  };
  reg["max_pooling1d"] = pooling(MaxPooling1D::Config{});
  reg["min_pooling1d"] = pooling(MinPooling1D::Config{});
  reg["average_pooling1d"] = pooling(AveragePooling1D::Config{});
  reg["frame"] = [](SpecReader& r) {
    Frame::Config c;
    c.frame_length = r.integer("frame_length", 1);
    c.frame_step = r.integer("frame_step", 1);
    return AnyConfig(named(r, c));
  };
  reg["overlap_add"] = [](SpecReader& r) {
    OverlapAdd::Config c;
    c.frame_step = r.integer("frame_step", 1);
    return AnyConfig(named(r, c));
  };
  reg["window"] = [](SpecReader& r) {
    WindowLayer::Config c;
    c.window = r.string("window", c.window);
    c.axis = r.integer("axis", c.axis);
    return AnyConfig(named(r, c));
  };
  reg["self_attention"] = [](SpecReader& r) {
    DotProductSelfAttention::Config c;
    c.num_heads = r.integer("num_heads", 1);
    c.units_per_head = r.integer("units_per_head", 1);
    c.max_past_horizon = r.integer("max_past_horizon", -1);
    c.max_future_horizon = r.integer("max_future_horizon", 0);
    return AnyConfig(named(r, c));
  };
  reg["lstm"] = [](SpecReader& r) {
    Lstm::Config c;
    c.units = r.integer("units", 1);
    c.forget_bias = r.number("forget_bias", c.forget_bias);
    return AnyConfig(named(r, c));
  };
  reg["conditioning"] = [](SpecReader& r) {
    Conditioning::Config c;
    c.key = r.required_string("key");
    c.mode = r.string("mode", c.mode);
    c.conditioning = r.channel_spec("conditioning");
    return AnyConfig(named(r, c));
  };
  reg["reshape"] = [](SpecReader& r) {
    Reshape::Config c;
    c.shape = r.integers("shape");
    return AnyConfig(named(r, c));
  };
  reg["flatten"] = [](SpecReader& r) { return AnyConfig(named(r, Flatten::Config{})); };
  reg["expand_dims"] = [](SpecReader& r) {
    ExpandDims::Config c;
    c.axis = r.integer("axis", c.axis);
    return AnyConfig(named(r, c));
  };
  reg["squeeze"] = [](SpecReader& r) {
    Squeeze::Config c;
    c.axis = r.integer("axis", c.axis);
    return AnyConfig(named(r, c));
  };
  reg["move_axis"] = [](SpecReader& r) {
    MoveAxis::Config c;
    c.source = r.integer("source", c.source);
    c.destination = r.integer("destination", c.destination);
    return AnyConfig(named(r, c));
  };
  reg["transpose"] = [](SpecReader& r) {
    TransposeChannels::Config c;
    c.perm = r.integers("perm");
    return AnyConfig(named(r, c));
  };
  reg["serial"] = [](SpecReader& r) {
    Serial::Config c;
    c.layers = r.child_list("layers");
    return AnyConfig(named(r, c));
  };
  reg["parallel"] = [](SpecReader& r) {
    Parallel::Config c;
    c.layers = r.child_list("layers");
    c.combine = r.string("combine", c.combine);
    return AnyConfig(named(r, c));
  };
  reg["residual"] = [](SpecReader& r) {
    Residual::Config c;
    c.layers = r.child_list("layers");
    c.shortcut = r.child("shortcut", false);
    return AnyConfig(named(r, c));
  };
  reg["repeat"] = [](SpecReader& r) {
    Repeat::Config c;
    c.layer = r.child("layer");
    c.num_repeats = r.integer("num_repeats", 1);
    return AnyConfig(named(r, c));
  };
  reg["bidirectional"] = [](SpecReader& r) {
    Bidirectional::Config c;
    c.forward = r.child("forward");
    c.backward = r.child("backward");
    c.combine = r.string("combine", c.combine);
    return AnyConfig(named(r, c));
  };
  reg["blockwise"] = [](SpecReader& r) {
    Blockwise::Config c;
    c.layer = r.child("layer");
    c.block_size = r.integer("block_size", 1);
    return AnyConfig(named(r, c));
  };
  reg[std::string(OverrideReceptiveField::Config::kKind)] = [](SpecReader& r) {
    OverrideReceptiveField::Config c;
    c.layer = r.child("layer");
    c.receptive_field = r.receptive_field("receptive_field");
    return AnyConfig(named(r, c));
  };
  return reg;
}

}  // namespace pipeline_detail

inline const std::map<std::string, ConfigFactory>& layer_registry() {
  static const auto reg = pipeline_detail::make_registry();
  return reg;
}

// Converts a spec tree to a Config. Errors name the offending node path.
inline AnyConfig to_config(const PipelineSpec& spec, const std::string& path = "layer") {
  const auto& reg = layer_registry();
  auto it = reg.find(spec.type);
  if (it == reg.end()) throw Error(path + ": unknown layer type '" + spec.type + "'");
  SpecReader reader(spec, path);
  AnyConfig c = it->second(reader);
  reader.finish();
  return c;
}

inline AnyConfig SpecReader::child(const std::string& key, bool required) {
  used_.insert(key);
  auto it = spec_.children.find(key);
  if (it == spec_.children.end()) {
    if (spec_.params.count(key)) throw bad(key, "expected a layer, got a scalar");
    if (required) throw bad(key, "required");
    return {};
  }
  if (it->second.is_list) throw bad(key, "expected a single layer, got a list");
  return to_config(it->second.nodes.front(), path_ + "." + key);
}

inline std::vector<AnyConfig> SpecReader::child_list(const std::string& key) {
  used_.insert(key);
  std::vector<AnyConfig> out;
  auto it = spec_.children.find(key);
  if (it == spec_.children.end()) {
    if (spec_.params.count(key)) throw bad(key, "expected a list of layers");
    return out;
  }
  if (!it->second.is_list) throw bad(key, "expected a list of layers, got a single layer");
  for (std::size_t i = 0; i < it->second.nodes.size(); ++i)
    out.push_back(to_config(it->second.nodes[i], path_ + "." + key + "[" + std::to_string(i) + "]"));
  return out;
}

inline LayerPtr build_pipeline(const PipelineFile& file, const ChannelSpec& input, ParameterSource& params) {
  return build(to_config(file.layer), input, params);
}

// Harness constants matching the file's declared conditioning specs.
inline std::map<std::string, ConstantSpec> harness_constants(const PipelineFile& file) {
  std::map<std::string, ConstantSpec> out;
  for (const auto& [k, v] : file.constants) out[k] = ConstantSpec{v};
  return out;
}

// ---------------------------------------------------------------------------
// Run manifests.

struct RandomInput {
  std::int64_t batch = 1;
  std::int64_t time = 1;
  std::uint64_t seed = 0;
};

struct RunManifest {
  std::optional<std::string> input;
  std::optional<RandomInput> random_input;
  std::optional<std::string> params;
  // Parameter seed when `params` is absent; the pipeline file's seed otherwise.
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> constants;
  bool training = false;
  std::optional<std::int64_t> block_size;
  std::optional<std::string> output;
};

// Relative paths in the manifest resolve against `base_dir`.
inline RunManifest parse_manifest(const std::string& text, const std::string& base_dir = "") {
  using namespace pipeline_detail;
  const YAML::Node root = load_yaml(text);
  if (!root.IsMap()) throw ParseError("manifest must be a mapping");
  auto resolve = [&](const std::string& p) {
    if (base_dir.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (std::filesystem::path(base_dir) / p).string();
  };
  auto as_int = [](const YAML::Node& n, const std::string& key) -> std::int64_t {
    try {
      return n.as<std::int64_t>();
    } catch (const YAML::Exception&) {
      throw ParseError(key + ": expected an integer" + where(n));
    }
  };
  RunManifest m;
  bool has_training = false;
  for (auto it = root.begin(); it != root.end(); ++it) {
    const std::string key = it->first.as<std::string>();
    const YAML::Node& v = it->second;
    if (key == "input") {
      m.input = resolve(scalar_of(v, key));
    } else if (key == "random_input") {
      if (!v.IsMap()) throw ParseError("random_input: expected {batch, time, seed}" + where(v));
      RandomInput r;
      for (auto f = v.begin(); f != v.end(); ++f) {
        const std::string fk = f->first.as<std::string>();
        if (fk == "batch") r.batch = as_int(f->second, "random_input.batch");
        else if (fk == "time") r.time = as_int(f->second, "random_input.time");
        else if (fk == "seed") r.seed = static_cast<std::uint64_t>(as_int(f->second, "random_input.seed"));
        else throw ParseError("random_input." + fk + ": unknown field" + where(f->first));
      }
      m.random_input = r;
    } else if (key == "params") {
      m.params = resolve(scalar_of(v, key));
    } else if (key == "seed") {
      m.seed = static_cast<std::uint64_t>(as_int(v, key));
    } else if (key == "constants") {
      if (!v.IsMap()) throw ParseError("constants: expected a mapping of key to file" + where(v));
      for (auto c = v.begin(); c != v.end(); ++c)
        m.constants[c->first.as<std::string>()] = resolve(scalar_of(c->second, "constants"));
    } else if (key == "training") {
      const std::string s = scalar_of(v, key);
      if (s != "true" && s != "false") throw ParseError("training: expected true or false" + where(v));
      m.training = s == "true";
      has_training = true;
    } else if (key == "block_size") {
      m.block_size = as_int(v, key);
    } else if (key == "output") {
      m.output = resolve(scalar_of(v, key));
    } else {
      throw ParseError("unknown manifest key '" + key + "'" + where(it->first));
    }
  }
  if (!has_training) throw ParseError("manifest must set 'training' explicitly (true or false)");
  if (m.input.has_value() == m.random_input.has_value())
    throw ParseError("manifest needs exactly one of 'input' or 'random_input'");
  return m;
}

inline RunManifest load_manifest(const std::string& path) {
  return parse_manifest(read_text_file(path), std::filesystem::path(path).parent_path().string());
}

}  // namespace seqlayers
