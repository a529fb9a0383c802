#include "ccb/propagate.hpp"

#include <algorithm>
#include <cmath>

namespace ccb {

double activation_probability(const Node& node, std::span<const std::uint8_t> values,
                              double noise) {
  double z = 0.0;
  for (std::size_t k = 0; k < node.parents.size(); ++k) {
    if (values[node.parents[k]]) z += node.theta[k];
  }
  return std::clamp(node.link.value(z) + noise, 0.0, 1.0);
}

double draw_noise(const NoiseSpec& noise, Engine& engine) {
  if (noise.kind == NoiseKind::none || noise.stddev == 0.0) return 0.0;
  std::normal_distribution<double> normal(0.0, noise.stddev);
  const double cut = 3.0 * noise.stddev;
  double e;
  do {
    e = normal(engine);
  } while (std::abs(e) > cut);
  return e;
}

void sample_values(const CausalModel& model, const Intervention& iv, Engine& engine,
                   std::vector<std::uint8_t>& values) {
  values.assign(model.num_nodes(), 0);
  for (NodeId id : model.topological_order()) {
    const Node& node = model.node(id);
    if (node.constant) {
      values[id] = 1;
      continue;
    }
    if (auto forced = iv.forced(id)) {
      values[id] = *forced;
      continue;
    }
    const double eps = draw_noise(node.noise, engine);
    const double p = activation_probability(node, values, eps);
    values[id] = p >= uniform_threshold(engine) ? 1 : 0;
  }
}

Observation sample_round(const CausalModel& model, const Intervention& iv, Engine& engine,
                         std::uint64_t round_index) {
  Observation obs;
  obs.intervention = iv;
  obs.round_index = round_index;
  sample_values(model, iv, engine, obs.values);
  return obs;
}

Observation sample_round(const CausalModel& model, const Intervention& iv, const RngStream& rng,
                         std::uint64_t round_index) {
  Engine engine = rng.engine(round_index);
  return sample_round(model, iv, engine, round_index);
}

Observation sample_observational(const CausalModel& model, Engine& engine,
                                 std::uint64_t round_index) {
  return sample_round(model, Intervention{}, engine, round_index);
}

Observation sample_observational(const CausalModel& model, const RngStream& rng,
                                 std::uint64_t round_index) {
  return sample_round(model, Intervention{}, rng, round_index);
}

std::vector<std::uint8_t> visible_values(const CausalModel& model, const Observation& obs) {
  std::vector<std::uint8_t> out = obs.values;
  for (NodeId id = 0; id < model.num_nodes(); ++id) {
    if (model.node(id).hidden) out[id] = 0;
  }
  return out;
}

}  // namespace ccb
