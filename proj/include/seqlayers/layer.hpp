// SPDX-License-Identifier: Apache-2.0
//
// The SequenceLayer contract and the shared machinery concrete layers build on.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seqlayers/fraction.hpp"
#include "seqlayers/receptive_field.hpp"
#include "seqlayers/sequence.hpp"
#include "seqlayers/tree.hpp"

namespace seqlayers {

class UnsupportedStepError : public Error {
 public:
  using Error::Error;
};

struct LayerProperties {
  Fraction output_ratio{1};
  std::int64_t block_size = 1;
  std::int64_t input_latency = 0;
  std::int64_t output_latency = 0;
  ReceptiveFieldMap receptive_field_per_step{{0, RFInterval{0, 0}}};
  bool supports_step = true;

  StepReceptiveField receptive_field() const {
    return overall_receptive_field(receptive_field_per_step, output_ratio);
  }

  friend bool operator==(const LayerProperties&, const LayerProperties&) = default;
};

// Input latency implied by an output latency: the number of trailing input
// steps that must be fed to push `output_latency` outputs out.
inline std::int64_t implied_input_latency(Fraction ratio, std::int64_t output_latency) {
  return ceil_div(output_latency * ratio.den(), ratio.num());
}

struct LayerOutput {
  Sequence output;
  Emits emits;
};

struct StepOutput {
  Sequence output;
  State state;
  Emits emits;
};

class SequenceLayer;
using LayerPtr = std::shared_ptr<const SequenceLayer>;

class SequenceLayer {
 public:
  SequenceLayer(std::string kind, std::string name, ChannelSpec input_spec)
      : kind_(std::move(kind)), name_(std::move(name)), input_spec_(std::move(input_spec)) {}
  virtual ~SequenceLayer() = default;
  SequenceLayer(const SequenceLayer&) = delete;
  SequenceLayer& operator=(const SequenceLayer&) = delete;

  const std::string& kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const ChannelSpec& input_spec() const { return input_spec_; }
  const ChannelSpec& output_spec() const { return output_spec_; }
  const LayerProperties& properties() const { return properties_; }

  Fraction output_ratio() const { return properties_.output_ratio; }
  std::int64_t block_size() const { return properties_.block_size; }
  std::int64_t input_latency() const { return properties_.input_latency; }
  std::int64_t output_latency() const { return properties_.output_latency; }
  bool supports_step() const { return properties_.supports_step; }
  StepReceptiveField receptive_field() const { return properties_.receptive_field(); }
  const ReceptiveFieldMap& receptive_field_per_step() const {
    return properties_.receptive_field_per_step;
  }

  Sequence layer(const Sequence& x, bool training, const Constants& constants = no_constants()) const {
    return layer_with_emits(x, training, constants).output;
  }

  LayerOutput layer_with_emits(const Sequence& x, bool training,
                               const Constants& constants = no_constants()) const {
    check_input(x);
    return do_layer(x, training, constants);
  }

  State get_initial_state(std::int64_t batch, const ChannelSpec& input_spec, bool training,
                          const Constants& constants = no_constants()) const {
    if (input_spec != input_spec_)
      throw ShapeError(name_ + ": initial state requested for " + input_spec.str() +
                       " but layer expects " + input_spec_.str());
    return get_initial_state(batch, training, constants);
  }

  State get_initial_state(std::int64_t batch, bool training,
                          const Constants& constants = no_constants()) const {
    return initial_state_at(batch, 0, training, constants);
  }

  // Initial state for a stream whose first input sits at absolute position
  // `start`. Combinators use this to keep position-dependent children
  // aligned with layer mode when upstream latency delays their input.
  State initial_state_at(std::int64_t batch, std::int64_t start, bool training,
                         const Constants& constants = no_constants()) const {
    require_step();
    return do_initial_state(batch, start, training, constants);
  }

  std::pair<Sequence, State> step(const Sequence& x, const State& state, bool training,
                                  const Constants& constants = no_constants()) const {
    auto out = step_with_emits(x, state, training, constants);
    return {std::move(out.output), std::move(out.state)};
  }

  StepOutput step_with_emits(const Sequence& x, const State& state, bool training,
                             const Constants& constants = no_constants()) const {
    require_step();
    check_input(x);
    if (x.time() == 0 || x.time() % block_size() != 0)
      throw ShapeError(name_ + ": step got " + std::to_string(x.time()) +
                       " timesteps, which is not a positive multiple of block_size " +
                       std::to_string(block_size()));
    return do_step(x, state, training, constants);
  }

  ChannelSpec get_output_spec(const ChannelSpec& input_spec,
                              const Constants& constants = no_constants()) const {
    (void)constants;
    if (input_spec != input_spec_)
      throw ShapeError(name_ + ": expected input " + input_spec_.str() + ", got " + input_spec.str());
    return output_spec_;
  }

  virtual std::vector<LayerPtr> children() const { return {}; }
  // Parameters owned directly by this layer, keyed by short name.
  virtual std::vector<std::pair<std::string, Tensor>> own_parameters() const { return {}; }

  // All parameters in the subtree keyed by path relative to this layer.
  std::map<std::string, Tensor> parameters() const {
    std::map<std::string, Tensor> out;
    for (const auto& [k, v] : own_parameters()) out.emplace(k, v);
    for (const auto& c : children())
      for (const auto& [k, v] : c->parameters()) out.emplace(c->name() + "/" + k, v);
    return out;
  }

  virtual bool is_stochastic() const {
    for (const auto& c : children())
      if (c->is_stochastic()) return true;
    return false;
  }

  // True when step state leaves may change shape between steps.
  virtual bool has_growing_state() const {
    for (const auto& c : children())
      if (c->has_growing_state()) return true;
    return false;
  }

  // Recomputes properties from scratch, bypassing the cache.
  LayerProperties derive_properties() const { return compute_properties(); }

  // Computes and validates cached metadata. Called once by make_layer.
  void finalize() {
    output_spec_ = compute_output_spec(input_spec_);
    properties_ = compute_properties();
    const auto& p = properties_;
    if (p.output_ratio.num() <= 0)
      throw Error(name_ + ": output ratio must be positive, got " + p.output_ratio.str());
    if (p.block_size <= 0 || p.block_size % p.output_ratio.den() != 0)
      throw Error(name_ + ": block_size " + std::to_string(p.block_size) +
                  " is not a positive multiple of " + std::to_string(p.output_ratio.den()));
    if (p.input_latency < 0 || p.output_latency < 0) throw Error(name_ + ": negative latency");
    const auto period = period_of(p.receptive_field_per_step);
    if (period <= 0 || period % p.output_ratio.num() != 0)
      throw Error(name_ + ": receptive field period " + std::to_string(period) +
                  " is not a multiple of " + std::to_string(p.output_ratio.num()));
  }

 protected:
  virtual LayerOutput do_layer(const Sequence& x, bool training, const Constants& constants) const = 0;
  virtual State do_initial_state(std::int64_t batch, std::int64_t start, bool training,
                                 const Constants& constants) const = 0;
  virtual StepOutput do_step(const Sequence& x, const State& state, bool training,
                             const Constants& constants) const = 0;
  virtual LayerProperties compute_properties() const = 0;
  virtual ChannelSpec compute_output_spec(const ChannelSpec& input_spec) const = 0;

  // Output length of layer() for `time` input steps.
  std::int64_t layer_output_time(std::int64_t time) const {
    return (Fraction(time) * output_ratio()).ceil();
  }

  // Output length of step() for `time` input steps.
  std::int64_t step_output_time(std::int64_t time) const {
    const Fraction n = Fraction(time) * output_ratio();
    if (!n.is_integer()) throw ShapeError(name_ + ": fractional step output length");
    return n.num();
  }

 private:
  void check_input(const Sequence& x) const {
    if (x.channel_spec() != input_spec_)
      throw ShapeError(name_ + ": expected input " + input_spec_.str() + ", got " +
                       x.channel_spec().str());
  }
  void require_step() const {
    if (!properties_.supports_step)
      throw UnsupportedStepError(name_ + " (" + kind_ + ") is not steppable");
  }

  std::string kind_;
  std::string name_;
  ChannelSpec input_spec_;
  ChannelSpec output_spec_;
  LayerProperties properties_;
};

template <class L, class... Args>
std::shared_ptr<const L> make_layer(Args&&... args) {
  auto layer = std::make_shared<L>(std::forward<Args>(args)...);
  layer->finalize();
  return layer;
}

inline Shape time_major_shape(std::int64_t batch, std::int64_t time, const Shape& channel) {
  Shape s{batch, time};
  s.insert(s.end(), channel.begin(), channel.end());
  return s;
}

inline State position_state(std::int64_t pos) {
  return Tensor::from_ints({}, {static_cast<std::int32_t>(pos)});
}

inline std::int64_t read_position(const State& s) { return s.tensor().ints()[0]; }

// ---------------------------------------------------------------------------
// Per-timestep layers with no state: layer and step share one implementation.

class StatelessLayer : public SequenceLayer {
 public:
  using SequenceLayer::SequenceLayer;

 protected:
  virtual Sequence apply(const Sequence& x, bool training, const Constants& constants) const = 0;
  virtual Emits apply_emits(const Sequence& x) const {
    (void)x;
    return {};
  }

  LayerOutput do_layer(const Sequence& x, bool training, const Constants& constants) const override {
    return {apply(x, training, constants), apply_emits(x)};
  }
  State do_initial_state(std::int64_t, std::int64_t, bool, const Constants&) const override { return {}; }
  StepOutput do_step(const Sequence& x, const State& state, bool training,
                     const Constants& constants) const override {
    return {apply(x, training, constants), state, apply_emits(x)};
  }
  LayerProperties compute_properties() const override { return {}; }
};

// ---------------------------------------------------------------------------
// Time-mixing layers described by a window over absolute input positions.
//
// Layer output index o is computed from input positions near o / ratio. In
// step mode the layer keeps the trailing `history()` input steps and emits
// outputs `output_latency` steps behind layer mode, so every output it emits
// only needs inputs already seen.

// Read-only view of masked input positions [origin, origin + time).
class Window {
 public:
  Window(const Sequence& seq, std::int64_t origin) : seq_(&seq), origin_(origin) {}

  std::int64_t origin() const { return origin_; }
  std::int64_t end() const { return origin_ + seq_->time(); }
  std::int64_t batch() const { return seq_->batch(); }
  std::int64_t channels() const { return seq_->channel_size(); }
  const Sequence& sequence() const { return *seq_; }

  bool valid(std::int64_t b, std::int64_t u) const {
    const std::int64_t j = u - origin_;
    return j >= 0 && j < seq_->time() && seq_->valid(b, j);
  }

  // Float channel row at absolute step u, or nullptr if outside the window.
  // Invalid steps inside the window read as zeros.
  const float* floats(std::int64_t b, std::int64_t u) const {
    const std::int64_t j = u - origin_;
    if (j < 0 || j >= seq_->time()) return nullptr;
    return seq_->values().floats().data() + (b * seq_->time() + j) * channels();
  }

  // Raw channel row of any dtype, or nullptr if outside the window.
  const unsigned char* bytes(std::int64_t b, std::int64_t u) const {
    const std::int64_t j = u - origin_;
    if (j < 0 || j >= seq_->time()) return nullptr;
    const auto eb = static_cast<std::int64_t>(seq_->values().element_bytes());
    return static_cast<const unsigned char*>(seq_->values().raw()) +
           (b * seq_->time() + j) * channels() * eb;
  }

 private:
  const Sequence* seq_;
  std::int64_t origin_;
};

class WindowedLayer : public SequenceLayer {
 public:
  using SequenceLayer::SequenceLayer;

 protected:
  // Input steps carried between blocks.
  virtual std::int64_t history() const = 0;
  // Computes layer-mode outputs [begin, begin + count), begin >= 0.
  virtual Sequence compute(const Window& window, std::int64_t begin, std::int64_t count) const = 0;

  LayerOutput do_layer(const Sequence& x, bool, const Constants&) const override {
    const Sequence masked = x.mask_invalid();
    return {compute(Window(masked, 0), 0, layer_output_time(x.time())), {}};
  }

  State do_initial_state(std::int64_t batch, std::int64_t start, bool, const Constants&) const override {
    return Tree::Map{{"buffer", Sequence::invalid(batch, history(), input_spec())},
                     {"position", position_state(start)}};
  }

  StepOutput do_step(const Sequence& x, const State& state, bool, const Constants&) const override {
    const Sequence& buffer = state.at("buffer").sequence();
    const std::int64_t pos = read_position(state.at("position"));
    const Sequence window = Sequence::concatenate({buffer, x.mask_invalid()});
    const std::int64_t h = history();
    const std::int64_t count = step_output_time(x.time());
    const std::int64_t begin = (Fraction(pos) * output_ratio()).num() - output_latency();
    const std::int64_t skip = std::clamp<std::int64_t>(-begin, 0, count);

    Sequence out = Sequence::invalid(x.batch(), skip, output_spec());
    if (count > skip) {
      Sequence tail = compute(Window(window, pos - h), begin + skip, count - skip);
      out = skip ? Sequence::concatenate({out, tail}) : tail;
    }
    Tree::Map next{{"buffer", window.slice_time(window.time() - h, window.time())},
                   {"position", position_state(pos + x.time())}};
    return {std::move(out), Tree(std::move(next)), {}};
  }
};

// ---------------------------------------------------------------------------
// A fixed delay applied to a step stream, used by combinators to realign
// children. State is a buffer of the last `delay` steps.

class DelayLine {
 public:
  explicit DelayLine(std::int64_t delay = 0) : delay_(delay) {}
  std::int64_t delay() const { return delay_; }

  State initial_state(std::int64_t batch, const ChannelSpec& spec) const {
    return Sequence::invalid(batch, delay_, spec);
  }

  std::pair<Sequence, State> step(const Sequence& x, const State& state) const {
    if (delay_ == 0) return {x, state};
    const Sequence joined = Sequence::concatenate({state.sequence(), x});
    return {joined.slice_time(0, x.time()), joined.slice_time(x.time(), joined.time())};
  }

 private:
  std::int64_t delay_;
};

// ---------------------------------------------------------------------------
// Step drivers.

struct SteppedOutput {
  Sequence output;
  Emits emits;
  State state;
};

// Runs `layer` over x in blocks of `block` steps with no flushing or trimming.
// x.time() must be a multiple of `block`.
inline SteppedOutput step_blocks(const SequenceLayer& layer, const Sequence& x, std::int64_t block,
                                 bool training, const Constants& constants = no_constants(),
                                 std::optional<State> initial = std::nullopt) {
  if (block <= 0 || block % layer.block_size() != 0)
    throw ShapeError("block " + std::to_string(block) + " is not a positive multiple of block_size " +
                     std::to_string(layer.block_size()));
  if (x.time() % block != 0)
    throw ShapeError("input length " + std::to_string(x.time()) + " is not a multiple of block " +
                     std::to_string(block));
  State state = initial ? std::move(*initial) : layer.get_initial_state(x.batch(), training, constants);
  std::vector<Sequence> outs;
  std::vector<Emits> emits;
  for (std::int64_t t = 0; t < x.time(); t += block) {
    auto r = layer.step_with_emits(x.slice_time(t, t + block), state, training, constants);
    outs.push_back(std::move(r.output));
    emits.push_back(std::move(r.emits));
    state = std::move(r.state);
  }
  Sequence out = outs.empty() ? Sequence::invalid(x.batch(), 0, layer.output_spec())
                              : Sequence::concatenate(outs);
  return {std::move(out), concatenate_trees(emits), std::move(state)};
}

// Streams x through `layer` the way a real-time caller would: pads with
// invalid steps to flush buffered lookahead, drops the leading
// output_latency steps and trims to the layer-mode output length.
inline SteppedOutput step_by_step(const SequenceLayer& layer, const Sequence& x, std::int64_t block,
                                  bool training, const Constants& constants = no_constants()) {
  const std::int64_t padded = round_up(x.time() + layer.input_latency(), block);
  const Sequence input = x.pad_time(0, padded - x.time(), false);
  SteppedOutput r = step_blocks(layer, input, block, training, constants);
  const std::int64_t want = (Fraction(x.time()) * layer.output_ratio()).ceil();
  const std::int64_t lat = layer.output_latency();
  r.output = r.output.slice_time(lat, lat + want);
  return r;
}

}  // namespace seqlayers
