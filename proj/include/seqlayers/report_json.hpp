// SPDX-License-Identifier: Apache-2.0
//
// JSON rendering of contract reports and layer metadata. Requires nlohmann
// json (vendored as json.hpp).

#pragma once

#include <cmath>

#include "json.hpp"
#include "seqlayers/layer.hpp"
#include "seqlayers/verify.hpp"

namespace seqlayers {

inline nlohmann::json to_json(const ContractReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [k, v] : c.metrics) {
      if (std::isfinite(v))
        metrics[k] = v;
      else
        metrics[k] = v > 0 ? "inf" : v < 0 ? "-inf" : "nan";
    }
    checks.push_back({{"name", c.name}, {"status", to_string(c.status)}, {"detail", c.detail}, {"metrics", metrics}});
  }
  return {{"layer", report.layer}, {"passed", report.passed()}, {"checks", checks}};
}

inline nlohmann::json describe_json(const SequenceLayer& layer) {
  return {
      {"name", layer.name()},
      {"kind", layer.kind()},
      {"input_spec", layer.input_spec().str()},
      {"output_spec", layer.output_spec().str()},
      {"output_ratio", layer.output_ratio().str()},
      {"block_size", layer.block_size()},
      {"input_latency", layer.input_latency()},
      {"output_latency", layer.output_latency()},
      {"supports_step", layer.supports_step()},
      {"receptive_field", to_string(layer.receptive_field())},
      {"receptive_field_per_step", to_string(layer.receptive_field_per_step())},
  };
}

}  // namespace seqlayers
