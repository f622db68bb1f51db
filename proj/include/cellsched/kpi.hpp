#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "cellsched/env.hpp"

namespace cellsched {

struct RewardWeights {
  double alpha = 0.07;
  double beta = 0.71;
  double delta = 0.22;
};

struct KpiSummary {
  double thp_bits = 0.0;
  double jfi = 0.0;
  double pdr = 0.0;
};

// Jain's fairness index over a throughput vector; 0 when everything is zero.
double jain_index(const std::vector<double>& x);

// Cumulative KPI state over one scheduling duration.
class KpiWindow {
 public:
  explicit KpiWindow(int num_ues);

  void update(const StepOutcome& step);

  int num_ues() const { return static_cast<int>(delivered_bits_.size()); }
  const std::vector<double>& per_ue_delivered_bits() const {
    return delivered_bits_;
  }
  std::int64_t thp_bits() const { return total_delivered_; }
  std::int64_t arrived_packets() const { return arrived_; }
  std::int64_t transmitted_packets() const { return transmitted_; }
  std::int64_t dropped_packets() const { return dropped_; }
  std::int64_t steps() const { return steps_; }

  double jfi_to_date() const { return jain_index(delivered_bits_); }
  double pdr_to_date() const;
  KpiSummary finalize() const;

 private:
  std::vector<double> delivered_bits_;
  std::int64_t total_delivered_ = 0;
  std::int64_t arrived_ = 0;
  std::int64_t transmitted_ = 0;
  std::int64_t dropped_ = 0;
  std::int64_t steps_ = 0;
};

// Normalizer for the throughput term: K * top ladder rate.
struct RewardScale {
  int num_ues = 1;
  std::int64_t top_rate_bits = 1;
  double thp_norm() const {
    return static_cast<double>(num_ues) *
           static_cast<double>(top_rate_bits);
  }
};

// Per-TTI reward: alpha * normalized step throughput + beta * fairness to
// date - delta * (packets dropped this TTI / K).
double step_reward(const RewardWeights& w, std::int64_t thp_step_bits,
                   double jfi_to_date, std::int64_t dropped_step,
                   const RewardScale& scale);

// CSV emitter for per-TTI KPI rows.
class KpiCsvWriter {
 public:
  explicit KpiCsvWriter(const std::string& path);
  void row(std::int64_t tti, std::int64_t thp_step_bits, double jfi_to_date,
           std::int64_t dropped_step, double reward);

 private:
  std::ofstream out_;
};

}  // namespace cellsched
