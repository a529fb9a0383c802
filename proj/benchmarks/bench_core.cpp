#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "ccb/estimate.hpp"
#include "ccb/generators.hpp"
#include "ccb/model.hpp"
#include "ccb/oracle.hpp"
#include "ccb/policies.hpp"
#include "ccb/propagate.hpp"
#include "ccb/rng.hpp"

namespace {

ccb::CausalModel random_model(std::size_t nodes) {
  ccb::Engine engine(42);
  ccb::RandomBlmOptions opt;
  opt.nodes = nodes;
  return ccb::random_blm(opt, engine);
}

// Estimates fitted on a few hundred observational rounds of G1.
std::vector<ccb::NodeEstimate> fitted_estimates(const ccb::CausalModel& g) {
  std::vector<ccb::NodeEstimate> est(g.num_nodes());
  for (ccb::NodeId id = 0; id < g.num_nodes(); ++id) {
    if (!g.node(id).constant) est[id] = ccb::NodeEstimate(g.node(id).parents.size(), true);
  }
  ccb::Engine engine(7);
  std::vector<std::uint8_t> values;
  for (int t = 0; t < 300; ++t) {
    ccb::sample_values(g, {}, engine, values);
    for (ccb::NodeId id = 0; id < g.num_nodes(); ++id) {
      if (g.node(id).constant) continue;
      est[id].ridge_update(ccb::parent_vector(g.node(id), values), values[id] ? 1.0 : 0.0);
    }
  }
  return est;
}

void bm_forward_pass(benchmark::State& state) {
  const auto m = random_model(static_cast<std::size_t>(state.range(0)));
  const auto iv = ccb::Intervention::all_ones({1});
  for (auto _ : state) benchmark::DoNotOptimize(ccb::exact_expected_reward(m, iv));
}
BENCHMARK(bm_forward_pass)->Arg(8)->Arg(32)->Arg(128);

void bm_enumeration(benchmark::State& state) {
  const auto m = random_model(static_cast<std::size_t>(state.range(0)));
  const auto iv = ccb::Intervention::all_ones({1});
  for (auto _ : state) benchmark::DoNotOptimize(ccb::enumerate_expectation(m, iv, m.target()));
}
BENCHMARK(bm_enumeration)->Arg(6)->Arg(10)->Arg(14);

void bm_sample_values(benchmark::State& state) {
  const auto g = ccb::builtin_graph("G1");
  ccb::Engine engine(1);
  std::vector<std::uint8_t> values;
  for (auto _ : state) {
    ccb::sample_values(g, {}, engine, values);
    benchmark::DoNotOptimize(values.data());
  }
}
BENCHMARK(bm_sample_values);

void bm_pair_oracle(benchmark::State& state) {
  const auto g = ccb::builtin_graph("G1");
  const auto est = fitted_estimates(g);
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ccb::pair_oracle_blm(g, est, k, 0.5).value);
}
BENCHMARK(bm_pair_oracle)->Arg(1)->Arg(2)->Arg(3);

void bm_ridge_update(benchmark::State& state) {
  const auto dim = static_cast<Eigen::Index>(state.range(0));
  ccb::NodeEstimate e(static_cast<std::size_t>(dim), true);
  ccb::Engine engine(3);
  Eigen::VectorXd v(dim);
  for (auto _ : state) {
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = ccb::uniform01(engine) < 0.5 ? 1.0 : 0.0;
    e.ridge_update(v, ccb::uniform01(engine) < 0.5 ? 1.0 : 0.0);
  }
  benchmark::DoNotOptimize(e.theta_hat().data());
}
BENCHMARK(bm_ridge_update)->Arg(2)->Arg(4)->Arg(8);

}  // namespace
BENCHMARK_MAIN();
