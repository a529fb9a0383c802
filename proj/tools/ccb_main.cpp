// ccb: command-line front end for the causal bandit library.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ccb/experiment.hpp"
#include "ccb/generators.hpp"
#include "ccb/model_io.hpp"
#include "ccb/oracle.hpp"
#include "ccb/transform.hpp"

namespace fs = std::filesystem;

namespace {

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> batches;
  std::optional<std::uint64_t> horizon;
  std::optional<bool> charge_init_regret;
  std::optional<double> rho_scale;
  std::optional<std::string> t0_mode;
  std::optional<std::string> oracle;
  std::optional<std::string> output;
};

int cmd_run(const RunArgs& a) {
  auto cfg = ccb::read_experiment_file(a.config);
  if (a.seed) cfg.base_seed = *a.seed;
  if (a.workers) cfg.workers = *a.workers;
  if (a.reps) cfg.reps = *a.reps;
  if (a.batches) cfg.batches = *a.batches;
  if (a.horizon) cfg.horizon = *a.horizon;
  if (a.charge_init_regret) cfg.charge_init_regret = *a.charge_init_regret;
  if (a.output) cfg.output = *a.output;
  for (auto& p : cfg.policies) {
    const bool learner = p.kind == ccb::PolicyKind::bglm_ofu || p.kind == ccb::PolicyKind::blm_lr;
    if (learner && a.rho_scale) p.rho_scale = *a.rho_scale;
    if (learner && a.oracle) p.oracle = ccb::OracleSpec::parse(*a.oracle);
    if (p.kind == ccb::PolicyKind::bglm_ofu && a.t0_mode) p.t0 = ccb::T0Mode::parse(*a.t0_mode);
  }
  ccb::finalize_config(cfg);

  const auto table = ccb::run_experiment(cfg);
  ccb::write_results(table, cfg.output);
  std::printf("%s: T=%llu K=%zu, %zu x %zu runs per policy, %.1f s\n", cfg.name.c_str(),
              static_cast<unsigned long long>(cfg.horizon), cfg.budget, cfg.batches, cfg.reps,
              table.metadata["wall_clock_seconds"].get<double>());
  for (const auto& p : table.policies) {
    std::printf("  %-16s final mean cumulative regret %10.3f  [%.3f, %.3f]\n", p.label.c_str(),
                p.final_mean(), p.ci_low.back(), p.ci_high.back());
  }
  std::printf("wrote %s\n", (cfg.output / "results.csv").string().c_str());
  return 0;
}

int cmd_best_set(const std::string& graph, std::size_t k, bool exact_size) {
  const auto model = ccb::load_model(graph);
  ccb::SearchOptions opt;
  opt.exact_size = exact_size;
  const auto best = ccb::best_intervention(model, k, opt);
  std::printf("%s value=%.10g\n", ccb::format_node_set(model, best.set).c_str(), best.value);
  return 0;
}

int cmd_validate(const std::string& graph) {
  const auto model = ccb::load_model(graph);
  auto report = ccb::validate_model(model);
  if (model.is_acyclic() && model.has_hidden()) {
    for (const auto& m : ccb::validate_hidden_structure(model).messages) report.violations.push_back(m);
  }
  if (report.ok()) {
    std::printf("%s: ok (%zu nodes)\n", model.name().c_str(), model.num_nodes());
    return 0;
  }
  for (const auto& v : report.violations) std::printf("%s: %s\n", model.name().c_str(), v.c_str());
  return 1;
}

int cmd_transform(const std::string& graph, std::string out, std::string sidecar) {
  const auto model = ccb::load_model(graph);
  const auto result = ccb::transform_to_markovian(model);
  if (out.empty()) out = fs::path(graph).stem().string() + "-markovian.json";
  if (sidecar.empty()) {
    fs::path p(out);
    sidecar = (p.parent_path() / (p.stem().string() + ".provenance.json")).string();
  }
  ccb::write_model_file(result.markovian, out);
  std::ofstream side(sidecar);
  if (!side) throw std::runtime_error("cannot write " + sidecar);
  side << result.provenance_json(model).dump(2) << '\n';
  std::printf("wrote %s (%zu nodes) and %s\n", out.c_str(), result.markovian.num_nodes(),
              sidecar.c_str());
  return 0;
}

int cmd_check_props(const std::string& graph, std::size_t k, std::size_t trials,
                    std::size_t samples, std::uint64_t seed) {
  const auto model = ccb::load_model(graph);
  bool ok = true;

  const auto mono = ccb::monotonicity_check(model, k);
  std::printf("monotonicity: %zu comparisons, %zu violations\n", mono.checked, mono.violations.size());
  for (const auto& v : mono.violations) std::printf("  %s\n", v.c_str());
  ok = ok && mono.ok();

  if (model.has_hidden()) {
    const auto tr = ccb::transform_to_markovian(model);
    const auto eq = ccb::verify_equivalence(model, tr, {k, true, 1, 1e-9});
    std::printf("equivalence: %zu reward checks (max gap %.3g), %zu conditional checks (max gap %.3g)\n",
                eq.reward_checks, eq.max_reward_gap, eq.conditional_checks, eq.max_conditional_gap);
    for (const auto& f : eq.failures) std::printf("  %s\n", f.c_str());
    ok = ok && eq.ok();
  } else {
    ccb::Engine engine(seed);
    std::size_t violations = 0;
    const auto candidates = model.intervenable();
    for (std::size_t i = 0; i < trials; ++i) {
      const auto theta1 = ccb::perturb_weights(model, 0.1, engine);
      const auto theta2 = model.weights();
      std::vector<ccb::NodeId> s;
      for (ccb::NodeId c : candidates) {
        if (s.size() < k && ccb::uniform01(engine) < 0.5) s.push_back(c);
      }
      const auto iv = ccb::Intervention::all_ones(s);
      const auto g = ccb::gom_check(model, theta1, theta2, iv, samples, ccb::RngStream{seed, i});
      if (g.lhs > g.rhs + 3.0 * g.rhs_std_error + 1e-12 * std::max(1.0, g.rhs)) {
        ++violations;
        std::printf("  GOM violated for %s: lhs=%.6g rhs=%.6g se=%.3g\n",
                    ccb::format_node_set(model, iv).c_str(), g.lhs, g.rhs, g.rhs_std_error);
      }
    }
    std::printf("gom: %zu trials, %zu violations\n", trials, violations);
    ok = ok && violations == 0;
  }
  std::printf("%s\n", ok ? "all properties hold" : "property check FAILED");
  return ok ? 0 : 1;
}

int cmd_emit(const std::string& name, const std::string& out) {
  const auto model = ccb::builtin_graph(name);
  if (out.empty()) {
    std::cout << ccb::model_to_json(model).dump(2) << '\n';
  } else {
    ccb::write_model_file(model, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Combinatorial causal bandits on binary generalized linear models"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config; writes results.csv and metadata.json");
  run_cmd->add_option("config", run.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "Base seed");
  run_cmd->add_option("--workers", run.workers, "Worker threads (0 = all cores)");
  run_cmd->add_option("--reps", run.reps, "Repetitions per batch");
  run_cmd->add_option("--batches", run.batches, "Number of batches");
  run_cmd->add_option("--horizon", run.horizon, "Override T");
  run_cmd->add_option("--charge-init-regret", run.charge_init_regret,
                      "Charge regret for observational warm-up rounds (true/false)");
  run_cmd->add_option("--rho-scale", run.rho_scale, "Confidence radius scale for the learners");
  run_cmd->add_option("--t0-mode", run.t0_mode, "Warm-up length: formula, fraction:F or adaptive");
  run_cmd->add_option("--oracle", run.oracle, "Optimistic oracle: pair, eps-net:E or optimistic");
  run_cmd->add_option("--output", run.output, "Output directory");

  std::string graph;
  std::size_t k = 1;
  bool exact_size = false;
  auto* best_cmd = app.add_subcommand("best-set", "Exhaustive best intervention under the true weights");
  best_cmd->add_option("graph", graph, "Builtin name (G1..G5) or graph file")->required();
  best_cmd->add_option("--k", k, "Budget K")->required();
  best_cmd->add_flag("--exact-size", exact_size, "Only sets of size exactly K");

  std::string out, sidecar;
  auto* tr_cmd = app.add_subcommand("transform", "Rewrite a hidden-variable model as a Markovian one");
  tr_cmd->add_option("graph", graph, "Graph file")->required();
  tr_cmd->add_option("-o,--output", out, "Output graph file");
  tr_cmd->add_option("--provenance", sidecar, "Provenance sidecar file");

  auto* val_cmd = app.add_subcommand("validate", "Check structural constraints of a graph");
  val_cmd->add_option("graph", graph, "Builtin name or graph file")->required();

  std::size_t trials = 100, samples = 100'000;
  std::uint64_t seed = 1;
  auto* props_cmd = app.add_subcommand("check-props", "Monotonicity, GOM and transform-equivalence checks");
  props_cmd->add_option("graph", graph, "Builtin name or graph file")->required();
  props_cmd->add_option("--k", k, "Largest intervention size")->default_val(2);
  props_cmd->add_option("--trials", trials, "Random GOM trials")->default_val(100);
  props_cmd->add_option("--samples", samples, "Monte-Carlo samples per GOM trial")->default_val(100000);
  props_cmd->add_option("--seed", seed, "Seed")->default_val(1);

  auto* emit_cmd = app.add_subcommand("emit", "Write a builtin graph as a graph document");
  emit_cmd->add_option("name", graph, "G1..G5")->required();
  emit_cmd->add_option("-o,--output", out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return cmd_run(run);
    if (*best_cmd) return cmd_best_set(graph, k, exact_size);
    if (*tr_cmd) return cmd_transform(graph, out, sidecar);
    if (*val_cmd) return cmd_validate(graph);
    if (*props_cmd) return cmd_check_props(graph, k, trials, samples, seed);
    if (*emit_cmd) return cmd_emit(graph, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ccb: %s\n", e.what());
    return 1;
  }
  return 1;
}
