// SPDX-License-Identifier: Apache-2.0
//
// seqlayers: describe, run, stream, diff and verify pipeline specs.
//
// Exit codes: 0 success, 1 contract/diff failure or I/O error, 2 usage,
// parse or build error.

#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "seqlayers/pipeline.hpp"
#include "seqlayers/report_json.hpp"

namespace sl = seqlayers;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

// Anything the user got wrong before a layer exists: bad flags, bad spec,
// bad manifest.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class Fn>
auto as_usage(Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

struct Options {
  std::string spec;
  std::string input_spec;
  std::string manifest;
  std::string output;
  std::string json_out;
  std::string save_params;
  std::int64_t block = 0;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool json = false;
};

struct Built {
  std::string spec_path;
  sl::PipelineFile file;
  sl::LayerPtr layer;
  std::uint64_t seed = 0;
  std::string param_source;
  std::map<std::string, sl::Tensor> drawn;
};

sl::ChannelSpec input_spec_for(const Options& o, const sl::PipelineFile& file) {
  if (!o.input_spec.empty()) return as_usage([&] { return sl::ChannelSpec::parse(o.input_spec); });
  if (file.input) return *file.input;
  throw UsageError("no input spec: pass --input-spec or set 'input' in " + o.spec);
}

Built build(const Options& o, const std::optional<sl::RunManifest>& manifest) {
  Built b;
  b.spec_path = o.spec;
  b.file = as_usage([&] { return sl::load_pipeline(o.spec); });
  const sl::ChannelSpec input = input_spec_for(o, b.file);
  b.seed = b.file.seed;
  if (manifest && manifest->seed) b.seed = *manifest->seed;
  if (o.seed_given) b.seed = o.seed;
  if (manifest && manifest->params) {
    b.param_source = *manifest->params;
    sl::ArchiveParameters params(sl::load_archive(*manifest->params));
    b.layer = as_usage([&] { return sl::build_pipeline(b.file, input, params); });
    for (const auto& name : params.unused()) std::cerr << "warning: unused parameter '" << name << "'\n";
  } else {
    b.param_source = "random";
    sl::RandomParameters params(b.seed);
    b.layer = as_usage([&] { return sl::build_pipeline(b.file, input, params); });
    b.drawn = params.drawn();
  }
  return b;
}

sl::ConstantValue load_constant(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw sl::Error("cannot open '" + path + "'");
  char magic[4] = {};
  in.read(magic, 4);
  in.seekg(0);
  if (std::string(magic, 4) == "SLS1") return sl::read_sequence(in);
  return sl::read_tensor(in);
}

struct Inputs {
  sl::Sequence x;
  sl::Constants constants;
};

Inputs load_inputs(const sl::RunManifest& m, const Built& b) {
  Inputs in;
  std::mt19937_64 gen(m.random_input ? m.random_input->seed : 0);
  if (m.input) {
    in.x = sl::load_sequence(*m.input);
  } else {
    in.x = sl::detail::random_input(gen, m.random_input->batch, m.random_input->time, b.layer->input_spec());
  }
  for (const auto& [k, path] : m.constants) in.constants.emplace(k, load_constant(path));
  for (const auto& [k, spec] : b.file.constants) {
    if (in.constants.count(k)) continue;
    if (!m.random_input) throw UsageError("constant '" + k + "' is declared in the pipeline file but not bound in the manifest");
    in.constants.emplace(k, sl::Sequence::from_values(sl::detail::random_values(
                                gen, sl::time_major_shape(in.x.batch(), in.x.time(), spec.shape), spec.dtype)));
  }
  return in;
}

std::int64_t block_for(const Options& o, const sl::RunManifest& m, const sl::SequenceLayer& layer) {
  const std::int64_t block = o.block > 0 ? o.block : m.block_size.value_or(layer.block_size());
  if (block <= 0 || block % layer.block_size() != 0)
    throw UsageError("block " + std::to_string(block) + " is not a positive multiple of the layer's block_size " +
                     std::to_string(layer.block_size()));
  return block;
}

void write_output(const std::string& path, const sl::Sequence& y, const Built& b, const sl::RunManifest& m,
                  const std::string& mode, std::int64_t block) {
  sl::save_sequence(path, y);
  nlohmann::json meta = {
      {"mode", mode},
      {"spec", b.spec_path},
      {"param_source", b.param_source},
      {"seed", b.seed},
      {"training", m.training},
      {"output_spec", y.channel_spec().str()},
      {"batch", y.batch()},
      {"time", y.time()},
  };
  if (block > 0) meta["block"] = block;
  std::ofstream side(path + ".json");
  side << meta.dump(2) << "\n";
  if (!side) throw sl::Error("cannot write '" + path + ".json'");
}

void print_tree(const sl::SequenceLayer& layer, int depth) {
  std::cout << std::string(2 * depth, ' ') << layer.name() << " (" << layer.kind() << ")\n";
  for (const auto& c : layer.children()) print_tree(*c, depth + 1);
}

int describe(const Options& o) {
  const Built b = build(o, std::nullopt);
  const auto& l = *b.layer;
  if (o.json) {
    std::cout << sl::describe_json(l).dump(2) << "\n";
    return kOk;
  }
  print_tree(l, 0);
  std::cout << "input_spec: " << l.input_spec().str() << "\n"
            << "output_spec: " << l.output_spec().str() << "\n"
            << "output_ratio: " << l.output_ratio().str() << "\n"
            << "block_size: " << l.block_size() << "\n"
            << "input_latency: " << l.input_latency() << "\n"
            << "output_latency: " << l.output_latency() << "\n"
            << "supports_step: " << (l.supports_step() ? "true" : "false") << "\n"
            << "receptive_field: " << sl::to_string(l.receptive_field()) << "\n"
            << "receptive_field_per_step: " << sl::to_string(l.receptive_field_per_step()) << "\n";
  return kOk;
}

sl::RunManifest manifest_for(const Options& o) {
  return as_usage([&] { return sl::load_manifest(o.manifest); });
}

std::string output_for(const Options& o, const sl::RunManifest& m) {
  if (!o.output.empty()) return o.output;
  if (m.output) return *m.output;
  throw UsageError("no output path: pass --output or set 'output' in the manifest");
}

void maybe_save_params(const Options& o, const Built& b) {
  if (o.save_params.empty()) return;
  if (b.param_source != "random") throw UsageError("--save-params only applies to randomly initialized parameters");
  sl::save_archive(o.save_params, b.drawn);
}

int run(const Options& o) {
  const auto m = manifest_for(o);
  const std::string out = output_for(o, m);
  const Built b = build(o, m);
  const Inputs in = load_inputs(m, b);
  const sl::Sequence y = b.layer->layer(in.x, m.training, in.constants);
  write_output(out, y, b, m, "layer", 0);
  maybe_save_params(o, b);
  return kOk;
}

int stream(const Options& o) {
  const auto m = manifest_for(o);
  const std::string out = output_for(o, m);
  const Built b = build(o, m);
  if (!b.layer->supports_step()) throw UsageError(b.layer->name() + " (" + b.layer->kind() + ") is not steppable");
  const std::int64_t block = block_for(o, m, *b.layer);
  const Inputs in = load_inputs(m, b);
  const auto r = sl::step_by_step(*b.layer, in.x, block, m.training, in.constants);
  write_output(out, r.output, b, m, "step", block);
  maybe_save_params(o, b);
  return kOk;
}

int diff(const Options& o) {
  const auto m = manifest_for(o);
  const Built b = build(o, m);
  if (!b.layer->supports_step()) throw UsageError(b.layer->name() + " (" + b.layer->kind() + ") is not steppable");
  const std::int64_t block = block_for(o, m, *b.layer);
  const Inputs in = load_inputs(m, b);
  const sl::Sequence y_layer = b.layer->layer(in.x, m.training, in.constants);
  const sl::Sequence y_step = sl::step_by_step(*b.layer, in.x, block, m.training, in.constants).output;
  const sl::Comparison c = sl::compare_sequences(y_layer, y_step, o.tolerance);
  std::cout << "block: " << block << "\n"
            << "max_diff: " << std::setprecision(9) << c.max_diff << "\n"
            << "tolerance: " << o.tolerance << "\n";
  if (c.equal) {
    std::cout << "result: PASS\n";
    return kOk;
  }
  std::cout << "first_mismatch: " << c.detail << "\n" << "result: FAIL\n";
  return kFailed;
}

int verify(const Options& o) {
  const Built b = build(o, std::nullopt);
  sl::HarnessConfig cfg;
  cfg.seed = b.seed;
  cfg.tolerance = o.tolerance;
  cfg.constants = sl::harness_constants(b.file);
  const sl::ContractReport report = sl::verify_contract(*b.layer, cfg);
  if (o.json)
    std::cout << sl::to_json(report).dump(2) << "\n";
  else
    std::cout << report.text();
  if (!o.json_out.empty()) {
    std::ofstream out(o.json_out);
    out << sl::to_json(report).dump(2) << "\n";
    if (!out) throw sl::Error("cannot write '" + o.json_out + "'");
  }
  if (report.passed()) return kOk;
  for (const auto& name : report.failed()) std::cerr << "failed check: " << name << "\n";
  return kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inspect, run and verify streaming sequence-layer pipelines"};
  app.require_subcommand(1);
  Options o;

  auto add_spec = [&](CLI::App* cmd) {
    cmd->add_option("--spec", o.spec, "pipeline spec (YAML)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--input-spec", o.input_spec, "input channel spec, e.g. f32[16]; overrides the file");
  };
  auto add_manifest = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", o.manifest, "run manifest (YAML)")->required()->check(CLI::ExistingFile);
  };

  auto* describe_cmd = app.add_subcommand("describe", "print layer tree and streaming metadata");
  add_spec(describe_cmd);
  describe_cmd->add_flag("--json", o.json, "print JSON instead of text");

  auto* run_cmd = app.add_subcommand("run", "run the whole input through layer()");
  auto* stream_cmd = app.add_subcommand("stream", "run the input block by block through step()");
  for (auto* cmd : {run_cmd, stream_cmd}) {
    add_spec(cmd);
    add_manifest(cmd);
    cmd->add_option("--output", o.output, "output SLS1 path; overrides the manifest");
    cmd->add_option("--save-params", o.save_params, "write the randomly drawn parameters to an archive");
  }
  stream_cmd->add_option("--block", o.block, "steps per call; defaults to the manifest or block_size");

  auto* diff_cmd = app.add_subcommand("diff", "compare layer() against step() on the manifest input");
  add_spec(diff_cmd);
  add_manifest(diff_cmd);
  diff_cmd->add_option("--block", o.block, "steps per call; defaults to the manifest or block_size");
  diff_cmd->add_option("--tolerance", o.tolerance, "max abs difference for float outputs")->capture_default_str();

  auto* verify_cmd = app.add_subcommand("verify", "run the contract harness");
  add_spec(verify_cmd);
  verify_cmd->add_option("--tolerance", o.tolerance, "float tolerance")->capture_default_str();
  verify_cmd->add_flag("--json", o.json, "print the report as JSON");
  verify_cmd->add_option("--report", o.json_out, "also write the JSON report to this path");

  for (auto* cmd : {describe_cmd, run_cmd, stream_cmd, diff_cmd, verify_cmd})
    cmd->add_option_function<std::uint64_t>(
        "--seed",
        [&](const std::uint64_t& s) {
          o.seed = s;
          o.seed_given = true;
        },
        "parameter seed; overrides the pipeline file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*describe_cmd) return describe(o);
    if (*run_cmd) return run(o);
    if (*stream_cmd) return stream(o);
    if (*diff_cmd) return diff(o);
    if (*verify_cmd) return verify(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}
