// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks, one line per criterion. Exits nonzero if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "catalog.hpp"
#include "oracle_cases.hpp"
#include "sabotage.hpp"
#include "seqlayers/io.hpp"
#include "seqlayers/pipeline.hpp"
#include "test_util.hpp"

namespace sl = seqlayers;
namespace fs = std::filesystem;

namespace {

// Failure notes for the criterion being evaluated.
std::ostringstream notes;

bool expect(bool ok, const std::string& what) {
  if (!ok) notes << "    " << what << "\n";
  return ok;
}

std::string spec(const std::string& name) { return std::string(SEQLAYERS_SPECS_DIR) + "/" + name; }

sl::Conv1D::Config conv(std::int64_t k, std::int64_t s, const std::string& padding, std::int64_t filters = 2) {
  return sl::testing::conv1d(filters, k, s, padding);
}

bool receptive_fields() {
  using sl::RFInterval;
  const sl::ChannelSpec f3 = sl::testing::kF3;
  bool ok = true;
  auto rf = [&](const sl::AnyConfig& c) { return sl::build(c, f3)->receptive_field(); };
  ok &= expect(rf(conv(5, 1, "causal")) == RFInterval{-4, 0}, "causal conv k5");
  ok &= expect(rf(conv(5, 1, "reverse_causal")) == RFInterval{0, 4}, "reverse_causal conv k5");
  ok &= expect(rf(conv(5, 1, "same")) == RFInterval{-2, 2}, "same conv k5");
  sl::Serial::Config four;
  for (int i = 0; i < 4; ++i) four.layers.push_back(conv(5, 1, "same", 3));
  ok &= expect(rf(four) == RFInterval{-8, 8}, "serial of four same convs");
  ok &= expect(rf(sl::Lstm::Config{4}) == RFInterval{sl::Bound::neg_inf(), 0}, "lstm");
  auto t = sl::build(sl::testing::conv1d_transpose(2, 1, 2, "same"), f3);
  ok &= expect(t->receptive_field_per_step() == sl::ReceptiveFieldMap{{0, RFInterval{0, 0}}, {1, std::nullopt}},
               "transpose k1 s2 per step: " + sl::to_string(t->receptive_field_per_step()));
  ok &= expect(t->receptive_field() == RFInterval{0, 0}, "transpose k1 s2 overall");
  auto m = sl::build(sl::Serial::Config{{conv(5, 2, "same", 4), sl::testing::conv1d_transpose(4, 6, 4, "same")}}, f3);
  const sl::ReceptiveFieldMap want{
      {0, RFInterval{-4, 2}}, {1, RFInterval{-2, 2}}, {2, RFInterval{-2, 2}}, {3, RFInterval{-2, 4}}};
  ok &= expect(m->receptive_field_per_step() == want, "mixed per step: " + sl::to_string(m->receptive_field_per_step()));
  ok &= expect(m->receptive_field() == RFInterval{-4, 3}, "mixed overall: " + sl::to_string(m->receptive_field()));
  return ok;
}

bool serial_metadata() {
  const sl::PipelineFile f = sl::load_pipeline(spec("strided_convs.yaml"));
  sl::RandomParameters params(f.seed);
  auto l = sl::build_pipeline(f, *f.input, params);
  bool ok = expect(l->output_ratio() == sl::Fraction(1, 6), "ratio " + l->output_ratio().str());
  ok &= expect(l->block_size() == 6, "block_size " + std::to_string(l->block_size()));
  std::mt19937_64 gen(1);
  for (std::int64_t b : {1, 3})
    for (std::int64_t t : {6, 12, 30, 36}) {
      const sl::Sequence y = l->layer(sl::testing::random_sequence(gen, b, t, {3}), false);
      ok &= expect(y.shape() == sl::Shape{b, t / 6, 8}, "output shape " + sl::shape_string(y.shape()));
    }
  return ok;
}

bool latency() {
  auto l = sl::build(conv(5, 1, "reverse_causal"), sl::testing::kF3, 3);
  bool ok = expect(l->input_latency() == 4 && l->output_latency() == 4, "latencies");
  std::mt19937_64 gen(2);
  const sl::Sequence x = sl::testing::random_sequence(gen, 2, 24, {3});
  // Pad the input by the input latency, stream, drop the first output_latency
  // outputs and keep T.
  const sl::Sequence padded = x.pad_time(0, l->input_latency(), false);
  sl::State state = l->get_initial_state(2, false);
  std::vector<sl::Sequence> outs;
  for (std::int64_t t = 0; t < padded.time(); ++t) {
    auto [y, next] = l->step(padded.slice_time(t, t + 1), state, false);
    outs.push_back(y);
    state = std::move(next);
  }
  const sl::Sequence streamed = sl::Sequence::concatenate(outs).slice_time(4, 4 + 24);
  const sl::Comparison c = sl::compare_sequences(l->layer(x, false), streamed, 1e-6);
  ok &= expect(c.equal, "streamed vs layer: " + c.detail);
  return ok;
}

struct CatalogRun {
  std::vector<std::pair<sl::testing::CatalogEntry, sl::ContractReport>> reports;
  double seconds = 0;
};

const CatalogRun& catalog_run() {
  static const CatalogRun run = [] {
    CatalogRun r;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& e : sl::testing::full_catalog()) {
      auto layer = sl::build(e.config, e.input, 7);
      r.reports.emplace_back(e, sl::verify_contract(*layer, sl::testing::harness_for(e)));
    }
    // The shipped transformer block spec, d_model 32, 2 heads, T 32.
    const sl::PipelineFile f = sl::load_pipeline(spec("transformer_block.yaml"));
    sl::RandomParameters params(f.seed);
    auto block = sl::build_pipeline(f, *f.input, params);
    sl::testing::CatalogEntry e{"transformer_block.yaml", sl::Identity::Config{}, *f.input,
                                sl::testing::kAttentionTolerance, {}, 32};
    r.reports.emplace_back(e, sl::verify_contract(*block, sl::testing::harness_for(e, f.seed)));
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }();
  return run;
}

bool contract_catalog() {
  const auto& run = catalog_run();
  bool ok = true;
  for (const auto& [e, report] : run.reports) {
    ok &= expect(report.passed(), e.label + " failed: " + [&] {
      std::string s;
      for (const auto& f : report.failed()) s += f + " ";
      return s;
    }());
    ok &= expect(report.checks.size() == std::size(sl::kContractChecks), e.label + " ran the wrong check set");
  }
  ok &= expect(run.seconds < 60.0, "took " + std::to_string(run.seconds) + " s");
  notes << "    (" << run.reports.size() << " layers and compositions in " << run.seconds << " s)\n";
  return ok;
}

bool invariance() {
  bool ok = true;
  int exact = 0;
  for (const auto& [e, report] : catalog_run().reports) {
    for (const char* check : {"batching_invariance", "padding_invariance"}) {
      const sl::CheckResult* r = report.find(check);
      ok &= expect(r && r->status == sl::CheckStatus::kPass, e.label + " " + check);
    }
    if (e.input.dtype != sl::DType::kFloat32) ++exact;
    else ok &= expect(e.tolerance <= sl::testing::kAttentionTolerance, e.label + " tolerance too loose");
  }
  ok &= expect(exact >= 4, "too few int/bool entries");
  return ok;
}

bool oracles() {
  bool ok = true;
  for (const auto& [family, cases] :
       std::vector<std::pair<std::string, std::vector<sl::oracle::Case>>>{
           {"conv1d", sl::oracle::conv1d_cases()},
           {"conv1d_transpose", sl::oracle::conv1d_transpose_cases()},
           {"pooling", sl::oracle::pooling_cases()},
           {"lstm", sl::oracle::lstm_cases()},
           {"attention", sl::oracle::attention_cases()}}) {
    ok &= expect(cases.size() >= 20, family + " has fewer than 20 instances");
    for (const auto& c : cases) {
      ok &= expect(c.x.time() <= 16, c.what + " longer than 16 steps");
      const auto r = sl::oracle::check(c);
      ok &= expect(r.ok, r.detail);
    }
  }
  return ok;
}

bool blockwise() {
  bool ok = true;
  int checked = 0;
  for (const auto& e : sl::testing::full_catalog()) {
    auto inner = sl::build(e.config, e.input, 7);
    if (!inner->supports_step()) continue;
    const std::int64_t block = 4 * inner->block_size();
    auto wrapped = sl::testing::blockwise_twin(e.config, e.input, block, 7);
    ok &= expect(wrapped->block_size() == block, e.label + " reports block " + std::to_string(wrapped->block_size()));
    std::mt19937_64 gen(5);
    const sl::Sequence x = sl::detail::random_input(gen, 2, 3 * block + 1, e.input);
    const sl::Constants c = sl::detail::random_constants(gen, sl::testing::harness_for(e), 2, x.time());
    const sl::Sequence want = inner->layer(x, false, c);
    const sl::Comparison a = sl::compare_sequences(want, wrapped->layer(x, false, c), e.tolerance);
    const sl::Comparison b =
        sl::compare_sequences(want, sl::step_by_step(*wrapped, x, block, false, c).output, e.tolerance);
    ok &= expect(a.equal, e.label + " layer: " + a.detail);
    ok &= expect(b.equal, e.label + " step: " + b.detail);
    ++checked;
  }
  ok &= expect(checked > 50, "only " + std::to_string(checked) + " entries checked");
  return ok;
}

bool dropout() {
  auto l = sl::build(sl::Dropout::Config{0.5, 42}, sl::testing::kF3);
  std::mt19937_64 gen(8);
  const sl::Sequence x = sl::testing::random_sequence(gen, 2, 64, {3}, false);
  const sl::Sequence want = l->layer(x, true);
  bool ok = true;
  for (std::int64_t block : {std::int64_t{1}, std::int64_t{3}, 2 * l->block_size()}) {
    const sl::Comparison c = sl::compare_sequences(want, sl::step_by_step(*l, x, block, true).output, 0.0);
    ok &= expect(c.equal, "block " + std::to_string(block) + ": " + c.detail);
  }
  int zeros = 0;
  for (float v : want.values().floats()) zeros += v == 0.0f;
  ok &= expect(zeros > 0 && zeros < 384, "mask is degenerate");
  return ok;
}

bool sabotage() {
  bool ok = true;
  int killed = 0;
  const auto cases = sl::sabotage::cases();
  for (const auto& c : cases) {
    const sl::ContractReport report = sl::verify_contract(*c.layer);
    const sl::CheckResult* r = report.find(c.check);
    const bool kill = r && r->status == sl::CheckStatus::kFail;
    killed += kill;
    ok &= expect(kill, c.layer->kind() + " survived " + c.check);
  }
  notes << "    (" << killed << "/" << cases.size() << " killed)\n";
  return ok && killed == 8;
}

struct CliResult {
  int code;
  std::string output;
};

CliResult cli(const std::string& args, const fs::path& dir) {
  const std::string log = (dir / "log.txt").string();
  const std::string cmd = std::string("\"") + SEQLAYERS_CLI + "\" " + args + " > \"" + log + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, sl::read_text_file(log)};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool command_line() {
  const fs::path dir = fs::temp_directory_path() / "seqlayers_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  bool ok = true;

  const CliResult d = cli("diff --spec " + spec("transformer_block.yaml") + " --manifest " +
                        spec("manifests/transformer_block_random.yaml"),
                    dir);
  ok &= expect(d.code == 0, "diff exited " + std::to_string(d.code) + ":\n" + d.output);

  const CliResult v = cli("verify --spec " + spec("sabotage_misdeclared_rf.yaml"), dir);
  ok &= expect(v.code == 1, "verify exited " + std::to_string(v.code));
  ok &= expect(v.output.find("failed check: receptive_field_empirical") != std::string::npos,
               "verify did not name the failed check:\n" + v.output);

  // SLS1 round trip, in memory and through the CLI.
  std::mt19937_64 gen(21);
  const sl::Sequence x = sl::testing::random_sequence(gen, 3, 9, {4});
  const std::string in = (dir / "x.sls").string();
  sl::save_sequence(in, x);
  const sl::Sequence back = sl::load_sequence(in);
  ok &= expect(back.values().identical(x.values()) && back.mask().identical(x.mask()), "in-memory round trip");
  std::ofstream(dir / "m.yaml") << "input: x.sls\ntraining: false\n";
  const std::string out = (dir / "y.sls").string();
  const CliResult r = cli("run --spec " + spec("identity.yaml") + " --input-spec \"f32[4]\" --manifest " +
                        (dir / "m.yaml").string() + " --output " + out,
                    dir);
  ok &= expect(r.code == 0, "run exited " + std::to_string(r.code) + ":\n" + r.output);
  ok &= expect(slurp(in) == slurp(out), "CLI round trip is not bit-exact");

  fs::remove_all(dir);
  return ok;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<bool()>>> criteria = {
      {"receptive fields match the regression table", receptive_fields},
      {"strided serial has ratio 1/6, block 6 and shape (b, t/6, 8)", serial_metadata},
      {"reverse-causal conv latency and flush-and-trim streaming", latency},
      {"contract checks pass for every layer and composition", contract_catalog},
      {"padding and batching invariance across the catalog", invariance},
      {"explicit-loop oracles agree within 1e-5", oracles},
      {"blockwise at 4x native block matches the layer", blockwise},
      {"dropout masks agree across block partitions", dropout},
      {"every sabotaged layer is caught", sabotage},
      {"CLI diff, verify and SLS1 round trip", command_line},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    notes.str("");
    bool ok = false;
    try {
      ok = criteria[i].second();
    } catch (const std::exception& e) {
      notes << "    exception: " << e.what() << "\n";
    }
    std::cout << "criterion " << i + 1 << ": " << (ok ? "PASS" : "FAIL") << " - " << criteria[i].first << "\n"
              << notes.str();
    failed += !ok;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << "\n";
  return failed ? 1 : 0;
}
