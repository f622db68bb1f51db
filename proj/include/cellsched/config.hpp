#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "cellsched/a2c.hpp"
#include "cellsched/baselines.hpp"
#include "cellsched/env.hpp"
#include "cellsched/pareto.hpp"

namespace cellsched {

struct SchedulerConfig {
  std::string name = "pf";  // rr | maxci | maxmin | pf | drl
  SchedulerParams params;
  std::string checkpoint;  // required for drl
  bool greedy = true;      // drl only: greedy vs sampled actions
};

struct CompareConfig {
  SchedulerConfig scheme_a;
  SchedulerConfig scheme_b;
  std::string mode = "paired";  // paired | independent
  int windows = 10;
  bool emit_kpi_rows = false;
};

struct ParetoRunConfig {
  std::string algorithm = "both";  // ga | pla | both
  GaConfig ga;
  int l_max = 2000;
  PlaKnobs knobs;
  RewardWeights weights;  // scalarization for the final path pick
  bool exhaustive = false;
  std::int64_t exhaustive_limit = 1000000;
  std::string trace_path;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware default, 1 = serial
  std::string output_dir = "out";
  EnvConfig env;
  SchedulerConfig scheduler;  // used by trace-replay and eval
  TrainConfig train;
  // Training deployments: partial env overrides, cycled across env slots.
  // Empty means every slot trains on `env`.
  std::vector<EnvConfig> train_deployments;
  std::vector<std::string> virtual_traces;  // train on replays when nonempty
  CompareConfig compare;
  ParetoRunConfig pareto;

  std::string digest;  // hash of the canonical config JSON

  // Loads, applies dotted-path overrides ("train.gamma=0.95"), validates, and
  // checks that referenced files exist.
  static ExperimentConfig load(const std::string& path,
                               const std::vector<std::string>& overrides = {});
  static ExperimentConfig from_json(nlohmann::json j);
};

}  // namespace cellsched
