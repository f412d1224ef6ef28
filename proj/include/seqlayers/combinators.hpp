// SPDX-License-Identifier: Apache-2.0
//
// Layers built from other layers: Serial, Parallel, Residual, Repeat,
// Bidirectional and Blockwise.
//
// Serial keeps children aligned in step mode by delaying a child's input until
// the upstream latency is a multiple of the child's block size, so strided
// children see block boundaries where layer mode puts them. Parallel delays
// lower-latency branches so all branches emit the same output step together.

#pragma once

#include <numeric>

#include "seqlayers/config.hpp"
#include "seqlayers/layer.hpp"

namespace seqlayers {

class Serial : public SequenceLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "serial";
    std::vector<AnyConfig> layers;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      const auto names = sibling_names(layers, ctx.path());
      std::vector<LayerPtr> built;
      ChannelSpec spec = input;
      for (std::size_t i = 0; i < layers.size(); ++i) {
        built.push_back(layers[i].make(spec, ctx.child(names[i])));
        spec = built.back()->output_spec();
      }
      return make_layer<Serial>("serial", ctx.name(), input, std::move(built));
    }
  };

  Serial(std::string kind, std::string name, ChannelSpec input, std::vector<LayerPtr> layers)
      : SequenceLayer(std::move(kind), std::move(name), std::move(input)), layers_(std::move(layers)) {
    ChannelSpec spec = input_spec();
    for (const auto& l : layers_) {
      if (l->input_spec() != spec)
        throw ShapeError(this->name() + ": child " + l->name() + " expects " + l->input_spec().str() +
                         " but receives " + spec.str());
      spec = l->output_spec();
    }
    plan();
  }

  std::vector<LayerPtr> children() const override { return layers_; }
  const std::vector<LayerPtr>& layers() const { return layers_; }

  // Extra input delay inserted in front of child i in step mode.
  std::int64_t alignment_delay(std::size_t i) const { return align_[i].delay(); }

 protected:
  LayerProperties compute_properties() const override {
    LayerProperties p;
    p.block_size = block_;
    p.output_latency = latency_;
    for (const auto& l : layers_) {
      p.supports_step = p.supports_step && l->supports_step();
      if (&l == &layers_.front()) {
        p.receptive_field_per_step = l->receptive_field_per_step();
      } else {
        p.receptive_field_per_step = compose_receptive_fields(p.receptive_field_per_step, p.output_ratio,
                                                              l->receptive_field_per_step(), l->output_ratio());
      }
      p.output_ratio = p.output_ratio * l->output_ratio();
    }
    p.input_latency = implied_input_latency(p.output_ratio, p.output_latency);
    return p;
  }

  ChannelSpec compute_output_spec(const ChannelSpec& in) const override {
    return layers_.empty() ? in : layers_.back()->output_spec();
  }

  LayerOutput do_layer(const Sequence& x, bool training, const Constants& constants) const override {
    Sequence y = x;
    Tree::Tuple emits;
    for (const auto& l : layers_) {
      auto r = l->layer_with_emits(y, training, constants);
      y = std::move(r.output);
      emits.push_back(std::move(r.emits));
    }
    // Chained ceilings can overshoot ceil(T * ratio); the extra steps map past
    // the end of the input.
    const std::int64_t want = layer_output_time(x.time());
    if (y.time() > want) y = y.slice_time(0, want);
    return {std::move(y), Tree(std::move(emits))};
  }

  State do_initial_state(std::int64_t batch, std::int64_t start, bool training,
                         const Constants& constants) const override {
    Tree::Tuple states;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const Fraction at = Fraction(start) * prefix_[i];
      if (!at.is_integer()) throw ShapeError(name() + ": start " + std::to_string(start) + " is not block aligned");
      State s = layers_[i]->initial_state_at(batch, at.num() - lead_[i], training, constants);
      if (align_[i].delay() > 0)
        s = Tree::Tuple{align_[i].initial_state(batch, layers_[i]->input_spec()), std::move(s)};
      states.push_back(std::move(s));
    }
    return Tree(std::move(states));
  }

  StepOutput do_step(const Sequence& x, const State& state, bool training,
                     const Constants& constants) const override {
    Sequence y = x;
    Tree::Tuple states, emits;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const State& s = state.at(i);
      if (align_[i].delay() > 0) {
        auto [delayed, line] = align_[i].step(y, s.at(0));
        auto r = layers_[i]->step_with_emits(delayed, s.at(1), training, constants);
        y = std::move(r.output);
        states.push_back(Tree::Tuple{std::move(line), std::move(r.state)});
        emits.push_back(std::move(r.emits));
      } else {
        auto r = layers_[i]->step_with_emits(y, s, training, constants);
        y = std::move(r.output);
        states.push_back(std::move(r.state));
        emits.push_back(std::move(r.emits));
      }
    }
    return {std::move(y), Tree(std::move(states)), Tree(std::move(emits))};
  }

 private:
  void plan() {
    Fraction prefix(1);
    std::int64_t block = 1;
    std::int64_t lat = 0;
    for (const auto& l : layers_) {
      // Smallest n with n * prefix a multiple of the child's block size.
      const std::int64_t bb = l->block_size() * prefix.den();
      block = std::lcm(block, bb / std::gcd(prefix.num(), bb));
      const std::int64_t e = floor_mod(-lat, l->block_size());
      align_.emplace_back(e);
      prefix_.push_back(prefix);
      lead_.push_back(lat + e);
      const Fraction next = Fraction(lat + e) * l->output_ratio();
      lat = next.num() + l->output_latency();
      prefix = prefix * l->output_ratio();
    }
    block_ = std::lcm(block, prefix.den());
    latency_ = lat;
  }

  std::vector<LayerPtr> layers_;
  std::vector<DelayLine> align_;
  std::vector<Fraction> prefix_;
  std::vector<std::int64_t> lead_;
  std::int64_t block_ = 1;
  std::int64_t latency_ = 0;
};

// ---------------------------------------------------------------------------

enum class Combine { kAdd, kMean, kStack, kConcat };

inline Combine parse_combine(const std::string& s, const std::string& where) {
  if (s == "add") return Combine::kAdd;
  if (s == "mean") return Combine::kMean;
  if (s == "stack") return Combine::kStack;
  if (s == "concat") return Combine::kConcat;
  throw Error(where + ": unknown combine mode '" + s + "' (expected add, mean, stack or concat)");
}

inline ChannelSpec combined_spec(Combine mode, const std::vector<ChannelSpec>& specs, const std::string& where) {
  if (specs.empty()) throw Error(where + ": needs at least one branch");
  const ChannelSpec& first = specs.front();
  for (const auto& s : specs) {
    if (s.dtype != first.dtype) throw ShapeError(where + ": branch dtypes differ");
    if (mode == Combine::kConcat) {
      if (s.shape.empty() || s.shape.size() != first.shape.size() ||
          !std::equal(s.shape.begin(), s.shape.end() - 1, first.shape.begin()))
        throw ShapeError(where + ": cannot concat " + s.str() + " with " + first.str());
    } else if (s != first) {
      throw ShapeError(where + ": branch outputs " + s.str() + " and " + first.str() + " differ");
    }
  }
  if (mode == Combine::kAdd && first.dtype == DType::kBool) throw ShapeError(where + ": cannot add bool branches");
  if (mode == Combine::kMean && first.dtype != DType::kFloat32)
    throw ShapeError(where + ": mean needs float branches");
  ChannelSpec out = first;
  if (mode == Combine::kStack) out.shape.insert(out.shape.begin(), static_cast<std::int64_t>(specs.size()));
  if (mode == Combine::kConcat) {
    out.shape.back() = 0;
    for (const auto& s : specs) out.shape.back() += s.shape.back();
  }
  return out;
}

inline Sequence combine_sequences(Combine mode, const std::vector<Sequence>& parts, const std::string& where) {
  for (const auto& p : parts)
    if (p.time() != parts.front().time() || p.batch() != parts.front().batch())
      throw ShapeError(where + ": branch outputs have lengths " + std::to_string(parts.front().time()) + " and " +
                       std::to_string(p.time()));
  Tensor mask = parts.front().mask();
  auto m = mask.bools_mut();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto other = parts[i].mask().bools();
    for (std::size_t j = 0; j < m.size(); ++j) m[j] = m[j] && other[j];
  }
  std::vector<Tensor> values;
  for (const auto& p : parts) values.push_back(p.values());
  Tensor out;
  switch (mode) {
    case Combine::kAdd:
    case Combine::kMean:
      out = values.front();
      for (std::size_t i = 1; i < values.size(); ++i) out = add(out, values[i]);
      if (mode == Combine::kMean) {
        const float n = static_cast<float>(values.size());
        out = map_floats(out, [n](float v) { return v / n; });
      }
      break;
    case Combine::kStack:
      for (auto& v : values) {
        Shape s = v.shape();
        s.insert(s.begin() + 2, 1);
        v = reshape(v, s);
      }
      out = concat(std::span<const Tensor>(values), 2);
      break;
    case Combine::kConcat:
      out = concat(std::span<const Tensor>(values), -1);
      break;
  }
  return Sequence(std::move(out), std::move(mask));
}

// Branches that all read the same input and whose outputs are combined.
class Branches : public SequenceLayer {
 public:
  Branches(std::string kind, std::string name, ChannelSpec input, std::vector<LayerPtr> branches, Combine mode)
      : SequenceLayer(std::move(kind), std::move(name), std::move(input)),
        branches_(std::move(branches)),
        mode_(mode) {
    if (branches_.empty()) throw Error(this->name() + ": needs at least one branch");
    for (const auto& b : branches_) {
      if (b->input_spec() != input_spec())
        throw ShapeError(this->name() + ": branch " + b->name() + " expects " + b->input_spec().str());
      if (b->output_ratio() != branches_.front()->output_ratio())
        throw Error(this->name() + ": branch output ratios differ (" + b->output_ratio().str() + " vs " +
                    branches_.front()->output_ratio().str() + ")");
      latency_ = std::max(latency_, b->output_latency());
    }
    for (const auto& b : branches_) delays_.emplace_back(latency_ - b->output_latency());
  }

  const std::vector<LayerPtr>& branches() const { return branches_; }
  std::vector<LayerPtr> children() const override { return branches_; }

 protected:
  LayerProperties compute_properties() const override {
    LayerProperties p;
    p.output_ratio = branches_.front()->output_ratio();
    std::vector<ReceptiveFieldMap> maps;
    for (const auto& b : branches_) {
      p.block_size = std::lcm(p.block_size, b->block_size());
      p.supports_step = p.supports_step && b->supports_step();
      maps.push_back(b->receptive_field_per_step());
    }
    p.output_latency = latency_;
    p.input_latency = implied_input_latency(p.output_ratio, latency_);
    p.receptive_field_per_step = union_maps(maps, p.output_ratio);
    return p;
  }

  ChannelSpec compute_output_spec(const ChannelSpec&) const override {
    std::vector<ChannelSpec> specs;
    for (const auto& b : branches_) specs.push_back(b->output_spec());
    return combined_spec(mode_, specs, name());
  }

  LayerOutput do_layer(const Sequence& x, bool training, const Constants& constants) const override {
    std::vector<Sequence> outs;
    Tree::Tuple emits;
    for (const auto& b : branches_) {
      auto r = b->layer_with_emits(x, training, constants);
      outs.push_back(std::move(r.output));
      emits.push_back(std::move(r.emits));
    }
    return {combine_sequences(mode_, outs, name()), Tree(std::move(emits))};
  }

  State do_initial_state(std::int64_t batch, std::int64_t start, bool training,
                         const Constants& constants) const override {
    Tree::Tuple states;
    for (std::size_t i = 0; i < branches_.size(); ++i) {
      State s = branches_[i]->initial_state_at(batch, start, training, constants);
      if (delays_[i].delay() > 0)
        s = Tree::Tuple{std::move(s), delays_[i].initial_state(batch, branches_[i]->output_spec())};
      states.push_back(std::move(s));
    }
    return Tree(std::move(states));
  }

  StepOutput do_step(const Sequence& x, const State& state, bool training,
                     const Constants& constants) const override {
    std::vector<Sequence> outs;
    Tree::Tuple states, emits;
    for (std::size_t i = 0; i < branches_.size(); ++i) {
      const bool delayed = delays_[i].delay() > 0;
      const State& s = state.at(i);
      auto r = branches_[i]->step_with_emits(x, delayed ? s.at(0) : s, training, constants);
      emits.push_back(std::move(r.emits));
      if (delayed) {
        auto [y, line] = delays_[i].step(r.output, s.at(1));
        outs.push_back(std::move(y));
        states.push_back(Tree::Tuple{std::move(r.state), std::move(line)});
      } else {
        outs.push_back(std::move(r.output));
        states.push_back(std::move(r.state));
      }
    }
    return {combine_sequences(mode_, outs, name()), Tree(std::move(states)), Tree(std::move(emits))};
  }

  std::vector<LayerPtr> branches_;
  Combine mode_;
  std::vector<DelayLine> delays_;
  std::int64_t latency_ = 0;
};

class Parallel final : public Branches {
 public:
  struct Config {
    static constexpr std::string_view kKind = "parallel";
    std::vector<AnyConfig> layers;
    std::string combine = "add";
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      const Combine mode = parse_combine(combine, ctx.path());
      const auto names = sibling_names(layers, ctx.path());
      std::vector<LayerPtr> built;
      for (std::size_t i = 0; i < layers.size(); ++i) built.push_back(layers[i].make(input, ctx.child(names[i])));
      return make_layer<Parallel>(ctx.name(), input, std::move(built), mode);
    }
  };

  Parallel(std::string name, ChannelSpec input, std::vector<LayerPtr> branches, Combine mode)
      : Branches("parallel", std::move(name), std::move(input), std::move(branches), mode) {}
};

// y = body(x) + shortcut(x); the shortcut defaults to the identity.
class Residual final : public Branches {
 public:
  struct Config {
    static constexpr std::string_view kKind = "residual";
    std::vector<AnyConfig> layers;
    AnyConfig shortcut;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const;
  };

  Residual(std::string name, ChannelSpec input, LayerPtr body, LayerPtr shortcut)
      : Branches("residual", std::move(name), std::move(input), {std::move(body), std::move(shortcut)},
                 Combine::kAdd) {}

  const SequenceLayer& body() const { return *branches_[0]; }
  const SequenceLayer& shortcut() const { return *branches_[1]; }

  // Body children sit directly under the residual; the shortcut is "shortcut".
  std::vector<LayerPtr> children() const override {
    std::vector<LayerPtr> out = branches_[0]->children();
    out.push_back(branches_[1]);
    return out;
  }
};

// Default shortcut of a residual.
class PassThrough final : public SequenceLayer {
 public:
  PassThrough(std::string name, ChannelSpec input) : SequenceLayer("identity", std::move(name), std::move(input)) {}

 protected:
  LayerOutput do_layer(const Sequence& x, bool, const Constants&) const override { return {x, {}}; }
  State do_initial_state(std::int64_t, std::int64_t, bool, const Constants&) const override { return {}; }
  StepOutput do_step(const Sequence& x, const State& s, bool, const Constants&) const override { return {x, s, {}}; }
  LayerProperties compute_properties() const override { return {}; }
  ChannelSpec compute_output_spec(const ChannelSpec& in) const override { return in; }
};

inline LayerPtr Residual::Config::make(const ChannelSpec& input, const BuildContext& ctx) const {
  const auto names = sibling_names(layers, ctx.path());
  for (const auto& n : names)
    if (n == "shortcut") throw Error(ctx.path() + ": 'shortcut' is reserved inside a residual");
  std::vector<LayerPtr> built;
  ChannelSpec spec = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    built.push_back(layers[i].make(spec, ctx.child(names[i])));
    spec = built.back()->output_spec();
  }
  auto body = make_layer<Serial>("serial", "body", input, std::move(built));
  LayerPtr sc = shortcut.empty() ? LayerPtr(make_layer<PassThrough>("shortcut", input))
                                 : shortcut.make(input, ctx.child("shortcut"));
  return make_layer<Residual>(ctx.name(), input, std::move(body), std::move(sc));
}

// ---------------------------------------------------------------------------

// num_repeats independent copies of one config applied in series.
class Repeat final : public Serial {
 public:
  struct Config {
    static constexpr std::string_view kKind = "repeat";
    AnyConfig layer;
    std::int64_t num_repeats = 1;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      if (num_repeats < 1) throw Error(ctx.path() + ": num_repeats must be >= 1");
      const std::string base = layer.name().empty() ? layer.kind() : layer.name();
      std::vector<LayerPtr> built;
      for (std::int64_t i = 0; i < num_repeats; ++i) {
        const std::string child = base + "_" + std::to_string(i);
        built.push_back(layer.make(input, ctx.child(child)));
        if (built.back()->output_spec() != input)
          throw ShapeError(ctx.child(child).path() + ": repeated layer maps " + input.str() + " to " +
                           built.back()->output_spec().str());
      }
      return make_layer<Repeat>(ctx.name(), input, std::move(built));
    }
  };

  Repeat(std::string name, ChannelSpec input, std::vector<LayerPtr> layers)
      : Serial("repeat", std::move(name), std::move(input), std::move(layers)) {}
};

// ---------------------------------------------------------------------------

// Runs `forward` on x and `backward` on x reversed in time, then combines.
// Needs the whole sequence, so it only has a layer mode.
class Bidirectional final : public SequenceLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "bidirectional";
    AnyConfig forward;
    AnyConfig backward;
    std::string combine = "concat";
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      const Combine mode = parse_combine(combine, ctx.path());
      const std::string fname = forward.name().empty() ? "forward" : forward.name();
      const std::string bname = backward.name().empty() ? "backward" : backward.name();
      if (fname == bname) throw Error(ctx.path() + ": duplicate sibling name '" + fname + "'");
      return make_layer<Bidirectional>(ctx.name(), input, forward.make(input, ctx.child(fname)),
                                       backward.make(input, ctx.child(bname)), mode);
    }
  };

  Bidirectional(std::string name, ChannelSpec input, LayerPtr forward, LayerPtr backward, Combine mode)
      : SequenceLayer("bidirectional", std::move(name), std::move(input)),
        forward_(std::move(forward)),
        backward_(std::move(backward)),
        mode_(mode) {
    for (const auto* l : {forward_.get(), backward_.get()})
      if (l->output_ratio() != Fraction(1))
        throw Error(this->name() + ": " + l->name() + " must have output ratio 1, got " + l->output_ratio().str());
  }

  std::vector<LayerPtr> children() const override { return {forward_, backward_}; }

  // Reverses each row's steps up to and including its last valid step.
  static Sequence reverse_valid(const Sequence& x, const std::vector<std::int64_t>& extent) {
    Tensor values = x.values();
    Tensor mask = x.mask();
    const std::int64_t T = x.time();
    const auto row = static_cast<std::int64_t>(x.values().element_bytes()) * x.channel_size();
    const auto* src = static_cast<const unsigned char*>(x.values().raw());
    auto* dst = static_cast<unsigned char*>(values.raw_mut());
    auto m = mask.bools_mut();
    for (std::int64_t b = 0; b < x.batch(); ++b)
      for (std::int64_t t = 0; t < extent[b]; ++t) {
        const std::int64_t s = extent[b] - 1 - t;
        std::memcpy(dst + (b * T + t) * row, src + (b * T + s) * row, static_cast<std::size_t>(row));
        m[b * T + t] = x.mask().bools()[b * T + s];
      }
    return Sequence(std::move(values), std::move(mask), x.is_masked());
  }

  static std::vector<std::int64_t> valid_extent(const Sequence& x) {
    std::vector<std::int64_t> out(x.batch(), 0);
    for (std::int64_t b = 0; b < x.batch(); ++b)
      for (std::int64_t t = 0; t < x.time(); ++t)
        if (x.valid(b, t)) out[b] = t + 1;
    return out;
  }

 protected:
  LayerProperties compute_properties() const override {
    LayerProperties p;
    p.block_size = std::lcm(forward_->block_size(), backward_->block_size());
    p.supports_step = false;
    const auto back = backward_->receptive_field();
    ReceptiveFieldMap mirrored{{0, back ? StepReceptiveField(RFInterval{negate(back->end), negate(back->start)})
                                        : StepReceptiveField()}};
    p.receptive_field_per_step = union_maps({forward_->receptive_field_per_step(), mirrored}, Fraction(1));
    return p;
  }

  ChannelSpec compute_output_spec(const ChannelSpec&) const override {
    return combined_spec(mode_, {forward_->output_spec(), backward_->output_spec()}, name());
  }

  LayerOutput do_layer(const Sequence& x, bool training, const Constants& constants) const override {
    auto f = forward_->layer_with_emits(x, training, constants);
    const auto extent = valid_extent(x);
    auto b = backward_->layer_with_emits(reverse_valid(x, extent), training, constants);
    Sequence back = reverse_valid(b.output, extent);
    return {combine_sequences(mode_, {f.output, back}, name()), Tree::Tuple{f.emits, b.emits}};
  }

  State do_initial_state(std::int64_t, std::int64_t, bool, const Constants&) const override { return {}; }
  StepOutput do_step(const Sequence&, const State&, bool, const Constants&) const override {
    throw UnsupportedStepError(name() + " (bidirectional) is not steppable");
  }

 private:
  static Bound negate(Bound b) {
    if (!b.is_finite()) return b == Bound::neg_inf() ? Bound::pos_inf() : Bound::neg_inf();
    return Bound(-b.value());
  }

  LayerPtr forward_;
  LayerPtr backward_;
  Combine mode_;
};

// ---------------------------------------------------------------------------

// Runs a child in layer mode by streaming it in fixed blocks, and in step
// mode requires that block size. Outputs match the child's step mode.
class Blockwise final : public SequenceLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "blockwise";
    AnyConfig layer;
    std::int64_t block_size = 1;
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      const std::string child = layer.name().empty() ? layer.kind() : layer.name();
      LayerPtr built = layer.make(input, ctx.child(child));
      if (block_size < 1 || block_size % built->block_size() != 0)
        throw Error(ctx.path() + ": block_size " + std::to_string(block_size) + " is not a multiple of " +
                    child + " block_size " + std::to_string(built->block_size()));
      if (!built->supports_step()) throw UnsupportedStepError(ctx.path() + ": " + child + " is not steppable");
      return make_layer<Blockwise>(ctx.name(), input, std::move(built), block_size);
    }
  };

  Blockwise(std::string name, ChannelSpec input, LayerPtr child, std::int64_t block)
      : SequenceLayer("blockwise", std::move(name), std::move(input)), child_(std::move(child)), block_(block) {}

  std::vector<LayerPtr> children() const override { return {child_}; }

 protected:
  LayerProperties compute_properties() const override {
    LayerProperties p = child_->properties();
    p.block_size = block_;
    return p;
  }
  ChannelSpec compute_output_spec(const ChannelSpec&) const override { return child_->output_spec(); }

  LayerOutput do_layer(const Sequence& x, bool training, const Constants& constants) const override {
    auto r = step_by_step(*child_, x, block_, training, constants);
    return {std::move(r.output), std::move(r.emits)};
  }
  State do_initial_state(std::int64_t batch, std::int64_t start, bool training,
                         const Constants& constants) const override {
    return child_->initial_state_at(batch, start, training, constants);
  }
  StepOutput do_step(const Sequence& x, const State& state, bool training,
                     const Constants& constants) const override {
    return child_->step_with_emits(x, state, training, constants);
  }

 private:
  LayerPtr child_;
  std::int64_t block_;
};

}  // namespace seqlayers
