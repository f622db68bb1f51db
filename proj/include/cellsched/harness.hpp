#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "cellsched/a2c.hpp"
#include "cellsched/config.hpp"
#include "cellsched/gradcheck.hpp"
#include "cellsched/pareto.hpp"

namespace cellsched {

struct SchemeResult {
  std::string name;
  double thp_bits = 0.0;  // total over windows
  double jfi = 0.0;       // mean per-window index
  double pdr = 0.0;       // from total packet counts
  std::int64_t dropped_packets = 0;
  std::int64_t arrived_packets = 0;
  std::int64_t transmitted_packets = 0;
  double mean_reward = 0.0;
};

struct WindowRow {
  int window = 0;
  std::string scheme;
  std::uint64_t exo_hash = 0;
  double thp_bits = 0.0;
  double jfi = 0.0;
  double pdr = 0.0;
  std::int64_t dropped_packets = 0;
  double mean_reward = 0.0;
};

struct ComparisonReport {
  std::string mode;
  int windows = 0;
  std::string config_digest;
  std::uint64_t exo_hash_a = 0;  // combined over windows, per scheme
  std::uint64_t exo_hash_b = 0;
  SchemeResult a;
  SchemeResult b;
  // a-over-b ratios, only meaningful when the b metric is > 0
  double thp_ratio = 0.0;
  double jfi_ratio = 0.0;
  double pdr_ratio = 0.0;
  double dropped_ratio = 0.0;
  double reward_ratio = 0.0;

  nlohmann::json to_json() const;
  std::vector<WindowRow> rows;
};

struct TrainArtifacts {
  TrainResult result;
  std::string checkpoint_path;
  std::string curves_path;
};

struct ParetoReport {
  bool ran_ga = false;
  bool ran_pla = false;
  bool ran_exhaustive = false;
  std::vector<GaIndividual> ga_front;
  PlaResult pla;
  std::vector<GaIndividual> exhaustive_front;
  nlohmann::json to_json() const;
};

// Subcommand entry points. Each writes its primary output files under
// cfg.output_dir and returns the in-memory result.
ComparisonReport run_compare(const ExperimentConfig& cfg);
ComparisonReport run_eval(const ExperimentConfig& cfg);
TrainArtifacts run_train(const ExperimentConfig& cfg);
ParetoReport run_pareto(const ExperimentConfig& cfg);
std::string run_trace_record(const ExperimentConfig& cfg);  // returns the path
nlohmann::json run_trace_replay(const ExperimentConfig& cfg,
                                const std::string& trace_path);
GradCheckReport run_gradcheck_report(const ExperimentConfig& cfg);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace cellsched
