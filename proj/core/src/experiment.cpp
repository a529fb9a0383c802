#include "ccb/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "ccb/model_io.hpp"
#include "ccb/oracle.hpp"

namespace ccb {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.name = j.value("name", cfg.name);
  cfg.model = j.at("model").get<std::string>();
  cfg.horizon = j.at("T").get<std::uint64_t>();
  cfg.budget = j.at("K").get<std::size_t>();
  cfg.reps = j.value("reps", cfg.reps);
  cfg.batches = j.value("batches", cfg.batches);
  cfg.base_seed = j.value("base_seed", cfg.base_seed);
  cfg.charge_init_regret = j.value("charge_init_regret", cfg.charge_init_regret);
  cfg.workers = j.value("workers", cfg.workers);
  if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
  for (const auto& p : j.at("policies")) cfg.policies.push_back(policy_from_json(p));
  finalize_config(cfg);
  return cfg;
}

nlohmann::json experiment_to_json(const ExperimentConfig& cfg) {
  nlohmann::json policies = nlohmann::json::array();
  for (const auto& p : cfg.policies) policies.push_back(policy_to_json(p));
  return {{"name", cfg.name},
          {"model", cfg.model},
          {"T", cfg.horizon},
          {"K", cfg.budget},
          {"reps", cfg.reps},
          {"batches", cfg.batches},
          {"base_seed", cfg.base_seed},
          {"charge_init_regret", cfg.charge_init_regret},
          {"policies", std::move(policies)}};
}

ExperimentConfig read_experiment_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config '" + path.string() + "': " + e.what());
  }
  ExperimentConfig cfg = experiment_from_json(j);
  const auto names = builtin_graph_names();
  if (std::find(names.begin(), names.end(), cfg.model) == names.end()) {
    std::filesystem::path mp(cfg.model);
    if (mp.is_relative()) cfg.model = (path.parent_path() / mp).string();
  }
  return cfg;
}

void finalize_config(ExperimentConfig& cfg) {
  if (cfg.reps < 1) throw std::invalid_argument("experiment: reps must be >= 1");
  if (cfg.batches < 1) throw std::invalid_argument("experiment: batches must be >= 1");
  if (cfg.horizon < 1) throw std::invalid_argument("experiment: T must be >= 1");
  if (cfg.budget < 1) throw std::invalid_argument("experiment: K must be >= 1");
  if (cfg.policies.empty()) throw std::invalid_argument("experiment: no policies");
  for (auto& p : cfg.policies) {
    if (p.label.empty()) p.label = to_string(p.kind);
    if (p.label.find_first_of(",\"\n") != std::string::npos) {
      throw std::invalid_argument("experiment: policy label '" + p.label +
                                  "' may not contain commas, quotes or newlines");
    }
    p.horizon = cfg.horizon;
    p.budget = cfg.budget;
    p.charge_init_regret = cfg.charge_init_regret;
  }
  for (std::size_t i = 0; i < cfg.policies.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (cfg.policies[i].label == cfg.policies[k].label) {
        throw std::invalid_argument("experiment: duplicate policy label '" + cfg.policies[i].label + "'");
      }
    }
  }
}

std::uint64_t run_seed(std::uint64_t base_seed, std::size_t policy_index, std::size_t batch,
                       std::size_t rep) noexcept {
  return mix_seed({base_seed, policy_index, batch, rep});
}

Interval t_interval(std::span<const double> samples, double level) {
  if (samples.empty()) throw std::invalid_argument("t_interval: no samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  if (samples.size() == 1) return {mean, mean, mean};
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t dist(n - 1.0);
  const double q = boost::math::quantile(boost::math::complement(dist, (1.0 - level) / 2.0));
  const double half = q * sd / std::sqrt(n);
  return {mean, mean - half, mean + half};
}

const PolicySummary& ResultTable::policy(const std::string& label) const {
  for (const auto& p : policies) {
    if (p.label == label) return p;
  }
  throw std::out_of_range("result table: no policy '" + label + "'");
}

ResultTable run_experiment(const ExperimentConfig& cfg_in, const CausalModel& model) {
  ExperimentConfig cfg = cfg_in;
  finalize_config(cfg);
  const auto start = Clock::now();
  const std::size_t np = cfg.policies.size();
  const std::size_t nb = cfg.batches;
  const std::size_t horizon = cfg.horizon;

  const auto best = best_intervention(model, cfg.budget);

  // batch_avg[p][b] = average cumulative-regret trace of one batch.
  std::vector<std::vector<std::vector<double>>> batch_avg(
      np, std::vector<std::vector<double>>(nb));
  std::vector<std::vector<double>> task_seconds(np, std::vector<double>(nb, 0.0));
  std::vector<std::vector<double>> task_init(np, std::vector<double>(nb, 0.0));
  std::vector<std::vector<char>> heuristic(np, std::vector<char>(nb, 0));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t task = next.fetch_add(1);
      if (task >= np * nb) return;
      const std::size_t p = task / nb;
      const std::size_t b = task % nb;
      try {
        const auto t0 = Clock::now();
        std::vector<double> acc(horizon, 0.0);
        double init_rounds = 0.0;
        for (std::size_t r = 0; r < cfg.reps; ++r) {
          const auto trace = run_policy(model, cfg.policies[p], run_seed(cfg.base_seed, p, b, r));
          for (std::size_t t = 0; t < horizon; ++t) acc[t] += trace.cumulative[t];
          init_rounds += static_cast<double>(trace.init_rounds);
          if (trace.heuristic_oracle) heuristic[p][b] = 1;
        }
        const double reps = static_cast<double>(cfg.reps);
        for (double& x : acc) x /= reps;
        batch_avg[p][b] = std::move(acc);
        task_init[p][b] = init_rounds / reps;
        task_seconds[p][b] = seconds_since(t0);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(np * nb);
      }
    }
  };

  std::size_t workers = cfg.workers != 0 ? cfg.workers : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, np * nb);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ResultTable table;
  std::vector<double> column(nb);
  nlohmann::json policies_meta = nlohmann::json::array();
  for (std::size_t p = 0; p < np; ++p) {
    PolicySummary s;
    s.label = cfg.policies[p].label;
    s.mean.resize(horizon);
    s.ci_low.resize(horizon);
    s.ci_high.resize(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
      for (std::size_t b = 0; b < nb; ++b) column[b] = batch_avg[p][b][t];
      const auto ci = t_interval(column);
      s.mean[t] = ci.mean;
      s.ci_low[t] = ci.low;
      s.ci_high[t] = ci.high;
    }
    for (std::size_t b = 0; b < nb; ++b) {
      s.cpu_seconds += task_seconds[p][b];
      s.mean_init_rounds += task_init[p][b] / static_cast<double>(nb);
      s.heuristic_oracle = s.heuristic_oracle || heuristic[p][b] != 0;
    }
    auto pj = policy_to_json(cfg.policies[p]);
    pj["policy_index"] = p;
    pj["final_mean_cum_regret"] = s.final_mean();
    pj["cpu_seconds"] = s.cpu_seconds;
    pj["mean_init_rounds"] = s.mean_init_rounds;
    pj["heuristic_oracle"] = s.heuristic_oracle;
    policies_meta.push_back(std::move(pj));
    table.policies.push_back(std::move(s));
  }

  table.metadata = experiment_to_json(cfg);
  table.metadata["model_name"] = model.name();
  table.metadata["optimum"] = best.value;
  table.metadata["best_set"] = format_node_set(model, best.set);
  table.metadata["policies"] = std::move(policies_meta);
  table.metadata["workers"] = workers;
  table.metadata["seed_derivation"] = "mix_seed({base_seed, policy_index, batch, rep})";
  table.metadata["confidence_interval"] = "student-t, 95%, over batch means";
  table.metadata["wall_clock_seconds"] = seconds_since(start);
  return table;
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, load_model(cfg.model));
}

void write_results_csv(const ResultTable& table, std::ostream& out) {
  out << kResultsHeader << '\n';
  char buf[512];
  for (const auto& p : table.policies) {
    for (std::size_t t = 0; t < p.mean.size(); ++t) {
      std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%.6f,%.6f\n", p.label.c_str(), t + 1, p.mean[t],
                    p.ci_low[t], p.ci_high[t]);
      out << buf;
    }
  }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("results.csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) {
    throw std::invalid_argument("results.csv: unexpected header '" + line + "'");
  }
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 5) {
      throw std::invalid_argument("results.csv line " + std::to_string(line_no) + ": expected 5 fields");
    }
    ResultRow row;
    row.policy = fields[0];
    try {
      std::size_t used = 0;
      row.round = std::stoul(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("trailing characters");
      row.mean_cum_regret = std::stod(fields[2]);
      row.ci_low = std::stod(fields[3]);
      row.ci_high = std::stod(fields[4]);
    } catch (const std::exception&) {
      throw std::invalid_argument("results.csv line " + std::to_string(line_no) + ": malformed number");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("results.csv: no data rows");
  return rows;
}

void write_results(const ResultTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "results.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + (dir / "results.csv").string());
    write_results_csv(table, csv);
  }
  std::ofstream meta(dir / "metadata.json");
  if (!meta) throw std::runtime_error("cannot write " + (dir / "metadata.json").string());
  meta << table.metadata.dump(2) << '\n';
}

}  // namespace ccb
