// SPDX-License-Identifier: Apache-2.0
//
// Contract harness: checks that a layer's step mode agrees with its layer
// mode, that its metadata matches what it does, and that padding and batch
// layout cannot leak into valid outputs.
//
// Receptive fields are measured by perturbing one input step at a time and
// watching which outputs move, since there is no autodiff here. The gradient
// equality check is always reported as skipped.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "seqlayers/layer.hpp"

namespace seqlayers {

enum class CheckStatus { kPass, kFail, kSkipped };

inline std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::kPass: return "PASS";
    case CheckStatus::kFail: return "FAIL";
    case CheckStatus::kSkipped: return "SKIPPED";
  }
  return "?";
}

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::kPass;
  std::string detail;
  std::map<std::string, double> metrics;
};

struct ContractReport {
  std::string layer;
  std::vector<CheckResult> checks;

  bool passed() const {
    for (const auto& c : checks)
      if (c.status == CheckStatus::kFail) return false;
    return true;
  }
  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
  std::vector<std::string> failed() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
      if (c.status == CheckStatus::kFail) out.push_back(c.name);
    return out;
  }
  std::string text() const {
    std::ostringstream os;
    os << "layer: " << layer << "\n";
    for (const auto& c : checks) {
      os << c.name << ": " << to_string(c.status);
      if (!c.detail.empty()) os << " (" << c.detail << ")";
      os << "\n";
    }
    os << "result: " << (passed() ? "PASS" : "FAIL") << "\n";
    return os.str();
  }
};

inline constexpr const char* kContractChecks[] = {
    "layer_step_equal_1x",  "layer_step_equal_2x", "metadata_consistency", "receptive_field_empirical",
    "batching_invariance",  "padding_invariance",  "emits_consistency",    "rng_equivalence",
    "gradient_equality",
};

// Channel spec of a conditioning constant. Its length is the input length
// scaled by `time_ratio`.
struct ConstantSpec {
  ChannelSpec spec;
  Fraction time_ratio{1};
};

struct HarnessConfig {
  std::int64_t batch = 2;
  // Input length; 0 picks one from the layer's block size and latency.
  std::int64_t time = 0;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;
  double epsilon = 1e-3;
  std::int64_t probe_cap = 16;
  std::map<std::string, ConstantSpec> constants;
};

// ---------------------------------------------------------------------------
// Comparison.

struct Comparison {
  bool equal = true;
  double max_diff = 0.0;
  std::string detail;
};

// Compares masks exactly and values at valid positions; floats within `tol`.
inline Comparison compare_sequences(const Sequence& a, const Sequence& b, double tol) {
  Comparison c;
  auto fail = [&](std::string why) {
    if (c.equal) c.detail = std::move(why);
    c.equal = false;
  };
  if (a.channel_spec() != b.channel_spec()) {
    fail("spec " + a.channel_spec().str() + " vs " + b.channel_spec().str());
    return c;
  }
  if (a.batch() != b.batch() || a.time() != b.time()) {
    fail("shape [" + std::to_string(a.batch()) + ", " + std::to_string(a.time()) + "] vs [" +
         std::to_string(b.batch()) + ", " + std::to_string(b.time()) + "]");
    return c;
  }
  const std::int64_t ch = a.channel_size();
  for (std::int64_t bt = 0; bt < a.batch() * a.time(); ++bt) {
    const std::int64_t bb = bt / std::max<std::int64_t>(a.time(), 1), t = bt % std::max<std::int64_t>(a.time(), 1);
    const std::string at = "(b=" + std::to_string(bb) + ", t=" + std::to_string(t) + ")";
    const bool va = a.valid(bb, t), vb = b.valid(bb, t);
    if (va != vb) {
      fail("mask differs at " + at);
      continue;
    }
    if (!va) continue;
    for (std::int64_t i = 0; i < ch; ++i) {
      const std::int64_t k = bt * ch + i;
      double d = 0.0;
      switch (a.dtype()) {
        case DType::kFloat32: {
          const float x = a.values().floats()[k], y = b.values().floats()[k];
          if (std::isnan(x) && std::isnan(y)) break;
          d = std::isnan(x) || std::isnan(y) ? std::numeric_limits<double>::infinity()
                                             : std::abs(static_cast<double>(x) - y);
          if (d > tol) fail("max |diff| exceeded at " + at);
          break;
        }
        case DType::kInt32:
          d = std::abs(static_cast<double>(a.values().ints()[k]) - b.values().ints()[k]);
          if (d != 0) fail("int mismatch at " + at);
          break;
        case DType::kBool:
          d = a.values().bools()[k] != b.values().bools()[k] ? 1.0 : 0.0;
          if (d != 0) fail("bool mismatch at " + at);
          break;
      }
      c.max_diff = std::max(c.max_diff, d);
    }
  }
  if (!c.equal) {
    std::ostringstream os;
    os << c.detail << "; max |diff| " << c.max_diff;
    c.detail = os.str();
  }
  return c;
}

// ---------------------------------------------------------------------------
// Input construction.

namespace detail {

inline Tensor random_values(std::mt19937_64& rng, const Shape& shape, DType dtype) {
  Tensor t(dtype, shape);
  switch (dtype) {
    case DType::kFloat32: {
      std::uniform_real_distribution<float> d(-1.0f, 1.0f);
      for (auto& v : t.floats_mut()) v = d(rng);
      break;
    }
    case DType::kInt32: {
      std::uniform_int_distribution<std::int32_t> d(-5, 5);
      for (auto& v : t.ints_mut()) v = d(rng);
      break;
    }
    case DType::kBool: {
      std::bernoulli_distribution d(0.5);
      for (auto& v : t.bools_mut()) v = d(rng) ? 1 : 0;
      break;
    }
  }
  return t;
}

// Row b valid for a prefix that shrinks with b; row 1 also has a short
// invalid gap so mid-sequence padding is exercised.
inline Sequence random_input(std::mt19937_64& rng, std::int64_t batch, std::int64_t time, const ChannelSpec& spec) {
  Tensor values = random_values(rng, time_major_shape(batch, time, spec.shape), spec.dtype);
  Tensor mask(DType::kBool, {batch, time});
  auto m = mask.bools_mut();
  for (std::int64_t b = 0; b < batch; ++b) {
    const std::int64_t len = std::max<std::int64_t>(1, time - 3 * b);
    for (std::int64_t t = 0; t < len; ++t) m[b * time + t] = 1;
    if (b == 1 && time >= 8)
      for (std::int64_t t = time / 3; t < time / 3 + 2; ++t) m[b * time + t] = 0;
  }
  return Sequence(std::move(values), std::move(mask));
}

inline Constants random_constants(std::mt19937_64& rng, const HarnessConfig& cfg, std::int64_t batch,
                                  std::int64_t time) {
  Constants out;
  for (const auto& [key, c] : cfg.constants) {
    const std::int64_t n = (Fraction(time) * c.time_ratio).ceil();
    out.emplace(key, Sequence::from_values(random_values(rng, time_major_shape(batch, n, c.spec.shape), c.spec.dtype)));
  }
  return out;
}

// Rows of `x` gathered by index; -1 inserts an all-invalid row of noise.
inline Sequence gather_rows(std::mt19937_64& rng, const Sequence& x, const std::vector<std::int64_t>& rows,
                            bool noise_valid) {
  std::vector<Tensor> values, masks;
  for (auto r : rows) {
    if (r >= 0) {
      const Sequence s = x.slice_batch(r, r + 1);
      values.push_back(s.values());
      masks.push_back(s.mask());
    } else {
      values.push_back(random_values(rng, time_major_shape(1, x.time(), x.channel_shape()), x.dtype()));
      masks.push_back(Tensor::full(DType::kBool, {1, x.time()}, noise_valid ? 1.0 : 0.0));
    }
  }
  return Sequence(concat(std::span<const Tensor>(values), 0), concat(std::span<const Tensor>(masks), 0));
}

inline Sequence poison_invalid(const Sequence& x) {
  Tensor v = x.values();
  const std::int64_t ch = x.channel_size();
  for (std::int64_t bt = 0; bt < x.batch() * x.time(); ++bt) {
    if (x.mask().bools()[bt]) continue;
    for (std::int64_t i = bt * ch; i < (bt + 1) * ch; ++i) {
      switch (x.dtype()) {
        case DType::kFloat32: v.floats_mut()[i] = std::numeric_limits<float>::quiet_NaN(); break;
        case DType::kInt32: v.ints_mut()[i] = 1000000000; break;
        case DType::kBool: v.bools_mut()[i] = 1; break;
      }
    }
  }
  return Sequence(std::move(v), x.mask());
}

// Adds `delta` times a fixed per-channel pattern to step t of row b. A
// non-uniform pattern keeps shift-invariant layers (softmax, norms) sensitive.
inline Sequence perturb(const Sequence& x, std::int64_t b, std::int64_t t, double delta,
                        const std::vector<double>& pattern) {
  Tensor v = x.values();
  const std::int64_t ch = x.channel_size();
  const std::int64_t base = (b * x.time() + t) * ch;
  for (std::int64_t i = 0; i < ch; ++i) {
    switch (x.dtype()) {
      case DType::kFloat32: v.floats_mut()[base + i] += static_cast<float>(delta * pattern[i]); break;
      case DType::kInt32: v.ints_mut()[base + i] += static_cast<std::int32_t>(std::lround(delta * pattern[i])); break;
      case DType::kBool: v.bools_mut()[base + i] ^= 1; break;
    }
  }
  return Sequence(std::move(v), x.mask());
}

inline bool step_changed(const Sequence& a, const Sequence& b, std::int64_t t, double threshold) {
  if (a.valid(0, t) != b.valid(0, t)) return true;
  const std::int64_t ch = a.channel_size();
  for (std::int64_t i = t * ch; i < (t + 1) * ch; ++i) {
    switch (a.dtype()) {
      case DType::kFloat32: {
        const float x = a.values().floats()[i], y = b.values().floats()[i];
        if (std::isnan(x) != std::isnan(y) || std::abs(static_cast<double>(x) - y) > threshold) return true;
        break;
      }
      case DType::kInt32:
        if (a.values().ints()[i] != b.values().ints()[i]) return true;
        break;
      case DType::kBool:
        if (a.values().bools()[i] != b.values().bools()[i]) return true;
        break;
    }
  }
  return false;
}

inline std::string tree_detail(const Tree& t) {
  std::string s = tree_signature(t, false);
  return s.size() > 80 ? s.substr(0, 77) + "..." : s;
}

}  // namespace detail

// Length of the equivalence inputs: a multiple of 2 * block_size with room
// for the flush and a few full blocks.
inline std::int64_t harness_time(const SequenceLayer& layer, const HarnessConfig& cfg) {
  const std::int64_t unit = 2 * layer.block_size();
  if (cfg.time > 0) return round_up(cfg.time, unit);
  return round_up(std::max<std::int64_t>({32, 2 * unit, 2 * layer.input_latency() + unit}), unit);
}

// ---------------------------------------------------------------------------
// Empirical receptive field.

struct EmpiricalReceptiveField {
  // Measured per-step map over the declared period. Bounds that reached the
  // probe cap are reported as infinite.
  ReceptiveFieldMap per_step;
  std::int64_t cap = 0;
  std::int64_t input_time = 0;
  // Step classes with no interior valid output to measure.
  std::vector<std::int64_t> unprobed;
};

inline EmpiricalReceptiveField empirical_receptive_field(const SequenceLayer& layer, const HarnessConfig& cfg) {
  const ReceptiveFieldMap& declared = layer.receptive_field_per_step();
  const Fraction r = layer.output_ratio();
  const std::int64_t period = period_of(declared);

  std::int64_t extent = 0;
  for (const auto& [k, v] : declared)
    if (v)
      for (Bound b : {v->start, v->end})
        if (b.is_finite()) extent = std::max(extent, std::abs(b.value()));

  EmpiricalReceptiveField out;
  out.cap = std::max(cfg.probe_cap, extent + 4);
  const std::int64_t span = (Fraction(2 * period) / r).ceil() + 2;
  const std::int64_t T = round_up(2 * out.cap + span + 2, layer.block_size());
  out.input_time = T;

  std::mt19937_64 rng(cfg.seed ^ 0x5eedf00dULL);
  Sequence x = Sequence::from_values(
      detail::random_values(rng, time_major_shape(1, T, layer.input_spec().shape), layer.input_spec().dtype));
  const Constants constants = detail::random_constants(rng, cfg, 1, T);
  std::vector<double> pattern(layer.input_spec().size());
  std::uniform_real_distribution<double> pd(0.5, 1.5);
  for (auto& p : pattern) p = pd(rng);

  const Sequence base = layer.layer(x, false, constants);
  const std::int64_t To = base.time();
  std::vector<std::int64_t> lo(To, std::numeric_limits<std::int64_t>::max()), hi(To, std::numeric_limits<std::int64_t>::min());
  const double threshold = 10.0 * cfg.tolerance;
  const std::vector<double> deltas = layer.input_spec().dtype == DType::kFloat32
                                         ? std::vector<double>{cfg.epsilon, 10.0, -10.0}
                                     : layer.input_spec().dtype == DType::kInt32 ? std::vector<double>{1.0, 1000.0, -1000.0}
                                                                                 : std::vector<double>{1.0};
  for (std::int64_t u = 0; u < T; ++u) {
    for (double delta : deltas) {
      const Sequence y = layer.layer(detail::perturb(x, 0, u, delta, pattern), false, constants);
      for (std::int64_t t = 0; t < To; ++t)
        if (base.valid(0, t) && detail::step_changed(base, y, t, threshold)) {
          lo[t] = std::min(lo[t], u);
          hi[t] = std::max(hi[t], u);
        }
    }
  }

  std::map<std::int64_t, bool> seen;
  for (std::int64_t t = 0; t < To; ++t) {
    const std::int64_t key = floor_mod(t, period);
    const std::int64_t anchor = (Fraction(t - key) / r).floor();
    if (anchor - out.cap < 0 || anchor + out.cap >= T || !base.valid(0, t)) continue;
    StepReceptiveField rel;
    if (lo[t] <= hi[t]) {
      const std::int64_t s = lo[t] - anchor, e = hi[t] - anchor;
      rel = RFInterval{s <= -out.cap ? Bound::neg_inf() : Bound(s), e >= out.cap ? Bound::pos_inf() : Bound(e)};
    }
    out.per_step[key] = seen[key] ? union_of(out.per_step[key], rel) : rel;
    seen[key] = true;
  }
  for (std::int64_t k = 0; k < period; ++k)
    if (!seen[k]) out.unprobed.push_back(k);
  return out;
}

// ---------------------------------------------------------------------------
// The harness.

namespace detail {

struct Harness {
  const SequenceLayer& layer;
  const HarnessConfig& cfg;
  std::mt19937_64 gen;
  std::int64_t T;
  Sequence x;
  Constants constants;

  Harness(const SequenceLayer& l, const HarnessConfig& c)
      : layer(l), cfg(c), gen(c.seed), T(harness_time(l, c)) {
    x = random_input(gen, cfg.batch, T, layer.input_spec());
    constants = random_constants(gen, cfg, cfg.batch, T);
  }

  static CheckResult skipped(const std::string& name, std::string why) {
    return {name, CheckStatus::kSkipped, std::move(why), {}};
  }

  static CheckResult from(const std::string& name, const Comparison& c, const std::string& what = "") {
    CheckResult r{name, c.equal ? CheckStatus::kPass : CheckStatus::kFail, {}, {{"max_abs_diff", c.max_diff}}};
    if (!c.equal) r.detail = what.empty() ? c.detail : what + ": " + c.detail;
    return r;
  }

  CheckResult equivalence(const std::string& name, std::int64_t block, bool training) {
    if (!layer.supports_step()) return skipped(name, "not steppable");
    const Sequence y_layer = layer.layer(x, training, constants);
    const Sequence y_step = step_by_step(layer, x, block, training, constants).output;
    auto r = from(name, compare_sequences(y_layer, y_step, cfg.tolerance), "block " + std::to_string(block));
    r.metrics["block"] = static_cast<double>(block);
    return r;
  }

  CheckResult metadata() {
    const std::string name = "metadata_consistency";
    std::vector<std::string> problems;
    auto expect = [&](bool ok, const std::string& what) {
      if (!ok) problems.push_back(what);
    };
    const LayerProperties& p = layer.properties();
    expect(layer.derive_properties() == p, "cached properties differ from derived properties");
    expect(layer.get_output_spec(layer.input_spec(), constants) == layer.output_spec(),
           "get_output_spec disagrees with output_spec");
    const std::int64_t lat = layer.output_latency();
    const Fraction r = layer.output_ratio();
    expect(Fraction(layer.input_latency()) * r >= Fraction(lat) &&
               (layer.input_latency() == 0 || Fraction(layer.input_latency() - 1) * r < Fraction(lat)),
           "input_latency " + std::to_string(layer.input_latency()) + " is not the minimal flush for output_latency " +
               std::to_string(lat));

    for (std::int64_t len : {T, 2 * layer.block_size(), T + layer.block_size()}) {
      std::mt19937_64 local(cfg.seed + static_cast<std::uint64_t>(len));
      const Sequence in = random_input(local, cfg.batch, len, layer.input_spec());
      const Constants c = random_constants(local, cfg, cfg.batch, len);
      const Sequence y = layer.layer(in, false, c);
      expect(y.channel_spec() == layer.output_spec(),
             "layer output spec " + y.channel_spec().str() + " != declared " + layer.output_spec().str());
      expect(y.time() == (Fraction(len) * r).ceil(), "layer output length " + std::to_string(y.time()) + " for " +
                                                         std::to_string(len) + " inputs, expected ceil(" +
                                                         std::to_string(len) + " * " + r.str() + ")");
    }

    if (layer.supports_step()) {
      // Per-call output counts, state structure and measured latency.
      Sequence full = Sequence::from_values(x.values());
      const Sequence y_layer = layer.layer(full, false, constants);
      State state = layer.get_initial_state(cfg.batch, false, constants);
      const std::string sig0 = tree_signature(state);
      std::vector<Sequence> outs;
      std::int64_t t = 0;
      for (std::int64_t n : {layer.block_size(), 2 * layer.block_size()}) {
        for (int rep = 0; rep < 2 && t + n <= T; ++rep, t += n) {
          auto o = layer.step_with_emits(full.slice_time(t, t + n), state, false, constants);
          expect(o.output.time() == (Fraction(n) * r).num() && (Fraction(n) * r).is_integer(),
                 "step of " + std::to_string(n) + " produced " + std::to_string(o.output.time()) + " outputs");
          expect(o.output.channel_spec() == layer.output_spec(),
                 "step output spec " + o.output.channel_spec().str() + " != declared " + layer.output_spec().str());
          state = std::move(o.state);
          // Growing caches legitimately change leaf shapes.
          if (!layer.has_growing_state())
            expect(tree_signature(state) == sig0, "state structure changed across steps");
          outs.push_back(std::move(o.output));
        }
      }
      const std::int64_t fed = t;
      const Sequence y_step = Sequence::concatenate(outs);
      auto first_valid = [](const Sequence& s, std::int64_t limit) -> std::int64_t {
        for (std::int64_t i = 0; i < std::min(limit, s.time()); ++i)
          if (s.valid(0, i)) return i;
        return -1;
      };
      const std::int64_t avail = (Fraction(fed) * r).num() - lat;
      const std::int64_t j0 = first_valid(y_layer, avail);
      if (j0 >= 0) {
        const std::int64_t j1 = first_valid(y_step, y_step.time());
        expect(j1 == j0 + lat, "measured output latency " + std::to_string(j1 - j0) + " != declared " +
                                   std::to_string(lat));
      }
    }

    CheckResult res{name, problems.empty() ? CheckStatus::kPass : CheckStatus::kFail, {}, {}};
    if (!problems.empty()) res.detail = problems.front();
    res.metrics["problems"] = static_cast<double>(problems.size());
    return res;
  }

  CheckResult receptive_field() {
    const std::string name = "receptive_field_empirical";
    const EmpiricalReceptiveField measured = empirical_receptive_field(layer, cfg);
    const ReceptiveFieldMap& declared = layer.receptive_field_per_step();
    std::vector<std::string> problems;
    for (const auto& [k, obs] : measured.per_step) {
      const StepReceptiveField& d = declared.at(k);
      const std::string where = "step class " + std::to_string(k) + ": measured " + to_string(obs) + ", declared " +
                                to_string(d);
      if (!d) {
        if (obs) problems.push_back(where);
        continue;
      }
      if (!obs) {
        problems.push_back(where);
        continue;
      }
      // Containment, with infinite measured bounds meaning "at least cap".
      const bool start_ok = d->start.is_finite() ? obs->start == d->start : !obs->start.is_finite();
      const bool end_ok = d->end.is_finite() ? obs->end == d->end : !obs->end.is_finite();
      if (!start_ok || !end_ok) problems.push_back(where);
    }
    CheckResult res{name, problems.empty() ? CheckStatus::kPass : CheckStatus::kFail, {}, {}};
    if (!problems.empty()) res.detail = problems.front();
    else res.detail = "measured " + to_string(measured.per_step) + ", cap " + std::to_string(measured.cap);
    res.metrics["probe_cap"] = static_cast<double>(measured.cap);
    res.metrics["unprobed_classes"] = static_cast<double>(measured.unprobed.size());
    return res;
  }

  CheckResult batching() {
    const std::string name = "batching_invariance";
    // Reverse the rows and insert invalid rows at the front and middle.
    std::vector<std::int64_t> rows{-1};
    for (std::int64_t b = cfg.batch - 1; b >= 0; --b) {
      rows.push_back(b);
      if (b == cfg.batch / 2) rows.push_back(-1);
    }
    std::mt19937_64 local(cfg.seed ^ 0xba7c4ULL);
    const Sequence xb = gather_rows(local, x, rows, false);
    Constants cb;
    for (const auto& [k, v] : constants) {
      if (const auto* s = std::get_if<Sequence>(&v)) cb.emplace(k, gather_rows(local, *s, rows, true));
      else cb.emplace(k, v);
    }
    auto check = [&](const Sequence& y, const Sequence& yb, const std::string& mode) -> std::optional<CheckResult> {
      std::vector<std::int64_t> kept;
      for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i] >= 0) kept.push_back(static_cast<std::int64_t>(i));
      std::mt19937_64 unused;
      const Sequence picked = gather_rows(unused, yb, kept, false);
      std::vector<std::int64_t> order;
      for (auto r : rows)
        if (r >= 0) order.push_back(r);
      const Sequence expected = gather_rows(unused, y, order, false);
      const Comparison c = compare_sequences(expected, picked, cfg.tolerance);
      if (!c.equal) return from(name, c, mode);
      std::int64_t extra_valid = 0;
      for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i] < 0)
          for (std::int64_t t = 0; t < yb.time(); ++t) extra_valid += yb.valid(static_cast<std::int64_t>(i), t);
      if (extra_valid > 0) {
        CheckResult r{name, CheckStatus::kFail, mode + ": inserted invalid rows produced valid outputs", {}};
        return r;
      }
      return std::nullopt;
    };
    if (auto r = check(layer.layer(x, false, constants), layer.layer(xb, false, cb), "layer")) return *r;
    if (layer.supports_step()) {
      const std::int64_t block = layer.block_size();
      if (auto r = check(step_by_step(layer, x, block, false, constants).output,
                         step_by_step(layer, xb, block, false, cb).output, "step"))
        return *r;
    }
    return {name, CheckStatus::kPass, {}, {}};
  }

  CheckResult padding() {
    const std::string name = "padding_invariance";
    const Sequence xp = poison_invalid(x);
    const Comparison c1 = compare_sequences(layer.layer(x, false, constants), layer.layer(xp, false, constants),
                                            cfg.tolerance);
    if (!c1.equal) return from(name, c1, "layer");
    if (layer.supports_step()) {
      const std::int64_t block = layer.block_size();
      const Comparison c2 = compare_sequences(step_by_step(layer, x, block, false, constants).output,
                                              step_by_step(layer, xp, block, false, constants).output, cfg.tolerance);
      if (!c2.equal) return from(name, c2, "step");
    }
    return {name, CheckStatus::kPass, {}, {}};
  }

  CheckResult emits() {
    const std::string name = "emits_consistency";
    auto fail = [&](std::string why) { return CheckResult{name, CheckStatus::kFail, std::move(why), {}}; };
    const LayerOutput a = layer.layer_with_emits(x, false, constants);
    const LayerOutput b = layer.layer_with_emits(x, false, constants);
    if (tree_signature(a.emits) != tree_signature(b.emits)) return fail("layer emits differ between calls");
    const Comparison c = compare_sequences(a.output, layer.layer(x, false, constants), 0.0);
    if (!c.equal) return fail("layer_with_emits output differs from layer: " + c.detail);
    if (!layer.supports_step()) return {name, CheckStatus::kPass, "layer mode only", {}};

    const std::string layer_sig = tree_signature(a.emits, false);
    State state = layer.get_initial_state(cfg.batch, false, constants);
    std::string step_sig;
    const std::int64_t n = layer.block_size();
    for (std::int64_t t = 0; t + n <= T && t < 4 * n; t += n) {
      const Sequence in = x.slice_time(t, t + n);
      auto o = layer.step_with_emits(in, state, false, constants);
      auto [plain, unused] = layer.step(in, state, false, constants);
      if (!compare_sequences(o.output, plain, 0.0).equal) return fail("step_with_emits output differs from step");
      const std::string sig = tree_signature(o.emits);
      if (tree_signature(o.emits, false) != layer_sig)
        return fail("step emits " + tree_detail(o.emits) + " vs layer emits " + tree_detail(a.emits));
      if (!step_sig.empty() && sig != step_sig) return fail("step emits structure changed between calls");
      step_sig = sig;
      state = std::move(o.state);
    }
    return {name, CheckStatus::kPass, {}, {}};
  }

  CheckResult stochastic() {
    const std::string name = "rng_equivalence";
    if (!layer.is_stochastic()) return skipped(name, "not stochastic");
    const Sequence a = layer.layer(x, true, constants);
    const Comparison again = compare_sequences(a, layer.layer(x, true, constants), 0.0);
    if (!again.equal) return from(name, again, "layer repeat");
    if (!layer.supports_step()) return {name, CheckStatus::kPass, "layer mode only", {}};
    for (std::int64_t block : {layer.block_size(), 2 * layer.block_size()}) {
      const Comparison c = compare_sequences(a, step_by_step(layer, x, block, true, constants).output, cfg.tolerance);
      if (!c.equal) return from(name, c, "training, block " + std::to_string(block));
    }
    return {name, CheckStatus::kPass, {}, {}};
  }
};

inline CheckResult guarded(const std::string& name, const std::function<CheckResult()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {name, CheckStatus::kFail, std::string("threw: ") + e.what(), {}};
  }
}

}  // namespace detail

inline ContractReport verify_contract(const SequenceLayer& layer, const HarnessConfig& cfg = {}) {
  ContractReport report;
  report.layer = layer.name() + " (" + layer.kind() + ")";
  detail::Harness h(layer, cfg);
  const std::int64_t block = layer.block_size();
  report.checks.push_back(detail::guarded("layer_step_equal_1x", [&] { return h.equivalence("layer_step_equal_1x", block, false); }));
  report.checks.push_back(
      detail::guarded("layer_step_equal_2x", [&] { return h.equivalence("layer_step_equal_2x", 2 * block, false); }));
  report.checks.push_back(detail::guarded("metadata_consistency", [&] { return h.metadata(); }));
  report.checks.push_back(detail::guarded("receptive_field_empirical", [&] { return h.receptive_field(); }));
  report.checks.push_back(detail::guarded("batching_invariance", [&] { return h.batching(); }));
  report.checks.push_back(detail::guarded("padding_invariance", [&] { return h.padding(); }));
  report.checks.push_back(detail::guarded("emits_consistency", [&] { return h.emits(); }));
  report.checks.push_back(detail::guarded("rng_equivalence", [&] { return h.stochastic(); }));
  report.checks.push_back({"gradient_equality", CheckStatus::kSkipped, "no autodiff; receptive field probed instead", {}});
  return report;
}

}  // namespace seqlayers
