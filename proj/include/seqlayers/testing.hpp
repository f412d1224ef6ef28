// SPDX-License-Identifier: Apache-2.0
//
// Test-only layers. OverrideReceptiveField forwards everything to its child
// but reports a different receptive field, which is how harness tests and the
// CLI fixtures mis-declare metadata on purpose.

#pragma once

#include "seqlayers/config.hpp"
#include "seqlayers/layer.hpp"

namespace seqlayers {

class OverrideReceptiveField final : public SequenceLayer {
 public:
  struct Config {
    static constexpr std::string_view kKind = "testing.override_receptive_field";
    AnyConfig layer;
    ReceptiveFieldMap receptive_field{{0, RFInterval{0, 0}}};
    std::string name;

    LayerPtr make(const ChannelSpec& input, const BuildContext& ctx) const {
      const std::string child = layer.name().empty() ? layer.kind() : layer.name();
      return make_layer<OverrideReceptiveField>(ctx.name(), input, layer.make(input, ctx.child(child)),
                                                receptive_field);
    }
  };

  OverrideReceptiveField(std::string name, ChannelSpec input, LayerPtr child, ReceptiveFieldMap rf)
      : SequenceLayer(std::string(Config::kKind), std::move(name), std::move(input)),
        child_(std::move(child)),
        rf_(std::move(rf)) {}

  std::vector<LayerPtr> children() const override { return {child_}; }

 protected:
  LayerProperties compute_properties() const override {
    LayerProperties p = child_->properties();
    p.receptive_field_per_step = rf_;
    return p;
  }
  ChannelSpec compute_output_spec(const ChannelSpec&) const override { return child_->output_spec(); }
  LayerOutput do_layer(const Sequence& x, bool training, const Constants& constants) const override {
    return child_->layer_with_emits(x, training, constants);
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
  ReceptiveFieldMap rf_;
};

}  // namespace seqlayers
