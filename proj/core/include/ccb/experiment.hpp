#pragma once

// Seeded repetition batches, aggregation and result files.
//
// Every policy runs `batches` x `reps` independent simulations. Run seeds are
// mix_seed({base_seed, policy_index, batch, rep}). Each batch contributes the
// average cumulative-regret trace of its reps; the table reports the mean of
// the batch traces per round with a two-sided Student-t interval on
// batches - 1 degrees of freedom.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccb/model.hpp"
#include "ccb/policies.hpp"

namespace ccb {

struct ExperimentConfig {
  std::string name = "experiment";
  /// Builtin graph name or a graph file path (relative paths resolve against
  /// the directory of the config file).
  std::string model;
  std::uint64_t horizon = 1;
  std::size_t budget = 1;
  std::size_t reps = 30;
  std::size_t batches = 20;
  std::uint64_t base_seed = 1;
  std::vector<PolicyConfig> policies;
  bool charge_init_regret = true;
  /// 0 uses the hardware concurrency.
  std::size_t workers = 0;
  std::filesystem::path output = "results";
};

/// Horizon, budget and the charge flag are copied into every policy.
[[nodiscard]] ExperimentConfig experiment_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json experiment_to_json(const ExperimentConfig& cfg);
/// Reads a config document and resolves a relative model path.
[[nodiscard]] ExperimentConfig read_experiment_file(const std::filesystem::path& path);

/// Propagates horizon, budget and the charge flag into the policy configs and
/// checks ranges. Throws std::invalid_argument.
void finalize_config(ExperimentConfig& cfg);

[[nodiscard]] std::uint64_t run_seed(std::uint64_t base_seed, std::size_t policy_index,
                                     std::size_t batch, std::size_t rep) noexcept;

struct Interval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

/// Student-t interval of the mean of `samples` at the given level; a single
/// sample gives a zero-width interval.
[[nodiscard]] Interval t_interval(std::span<const double> samples, double level = 0.95);

struct PolicySummary {
  std::string label;
  std::vector<double> mean;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  double cpu_seconds = 0.0;
  double mean_init_rounds = 0.0;
  bool heuristic_oracle = false;

  [[nodiscard]] double final_mean() const { return mean.empty() ? 0.0 : mean.back(); }
};

struct ResultTable {
  std::vector<PolicySummary> policies;
  nlohmann::json metadata;

  [[nodiscard]] const PolicySummary& policy(const std::string& label) const;
};

[[nodiscard]] ResultTable run_experiment(const ExperimentConfig& cfg, const CausalModel& model);
/// Loads cfg.model first.
[[nodiscard]] ResultTable run_experiment(const ExperimentConfig& cfg);

inline constexpr const char* kResultsHeader = "policy,round,mean_cum_regret,ci_low,ci_high";

void write_results_csv(const ResultTable& table, std::ostream& out);

/// One data row of results.csv.
struct ResultRow {
  std::string policy;
  std::size_t round = 0;
  double mean_cum_regret = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Strict reader for consumers of results.csv (plotting, comparisons): the
/// header must match kResultsHeader exactly and every row must have five
/// fields. Throws std::invalid_argument on any mismatch or on an empty table.
[[nodiscard]] std::vector<ResultRow> read_results_csv(std::istream& in);
/// Writes results.csv and metadata.json into `dir`, creating it if needed.
void write_results(const ResultTable& table, const std::filesystem::path& dir);

}  // namespace ccb
