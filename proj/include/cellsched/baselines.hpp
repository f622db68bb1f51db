#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cellsched/env.hpp"

namespace cellsched {

// Windowed average-throughput tracker, updated once per TTI with the
// delivered rate (zero for UEs that were not served).
struct PfState {
  std::vector<double> avg_throughput;
  int window = 100;
  double floor_eps = 1e-6;  // bits/TTI floor so never-served UEs rank first

  PfState(int num_ues, int w)
      : avg_throughput(static_cast<std::size_t>(num_ues), 0.0), window(w) {}

  void update(const std::vector<std::int64_t>& delivered_bits) {
    const double w = static_cast<double>(window);
    for (std::size_t u = 0; u < avg_throughput.size(); ++u) {
      avg_throughput[u] = (w - 1.0) / w * avg_throughput[u] +
                          static_cast<double>(delivered_bits[u]) / w;
    }
  }
};

// Selectors. All of them return a UE index, or -1 when no UE is active
// (idle TTI). Ties break toward the lowest index.
int rr_select(const std::vector<bool>& active, int last_served);
int max_ci_select(const std::vector<std::int64_t>& rates,
                  const std::vector<bool>& active);
int max_min_select(const std::vector<double>& avg_throughput,
                   const std::vector<bool>& active);
int pf_select(const std::vector<std::int64_t>& inst_rates, const PfState& pf,
              const std::vector<bool>& active);

// Per-TTI scheduler driving one environment. Multi-RBG grants are made
// RBG-by-RBG against provisionally drained buffers.
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode(const CellEnv& env) = 0;
  virtual std::vector<int> decide(CellEnv& env) = 0;
  virtual void after_step(const CellEnv& env, const StepOutcome& out) = 0;
};

struct SchedulerParams {
  int pf_window = 100;
  double pf_epsilon = 1e-6;
};

// "rr" | "maxci" | "maxmin" | "pf"; DRL schedulers are built elsewhere.
std::unique_ptr<Scheduler> make_baseline_scheduler(const std::string& name,
                                                   const SchedulerParams& params);

}  // namespace cellsched
