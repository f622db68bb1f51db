#include "cellsched/kpi.hpp"

#include <cstdio>

namespace cellsched {

double jain_index(const std::vector<double>& x) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : x) {
    sum += v;
    sum_sq += v * v;
  }
  if (sum_sq <= 0.0) return 0.0;
  return sum * sum / (static_cast<double>(x.size()) * sum_sq);
}

KpiWindow::KpiWindow(int num_ues)
    : delivered_bits_(static_cast<std::size_t>(num_ues), 0.0) {
  if (num_ues < 1) throw ConfigError("KpiWindow needs at least one UE");
}

void KpiWindow::update(const StepOutcome& step) {
  for (std::size_t u = 0; u < delivered_bits_.size(); ++u) {
    delivered_bits_[u] += static_cast<double>(step.delivered_bits[u]);
    total_delivered_ += step.delivered_bits[u];
    arrived_ += step.arrived[u];
    transmitted_ += step.delivered_packets[u];
    dropped_ += step.dropped_overflow[u] + step.dropped_expired[u];
  }
  ++steps_;
}

double KpiWindow::pdr_to_date() const {
  if (arrived_ <= 0) return 0.0;
  return static_cast<double>(arrived_ - transmitted_) /
         static_cast<double>(arrived_);
}

KpiSummary KpiWindow::finalize() const {
  return KpiSummary{static_cast<double>(total_delivered_), jfi_to_date(),
                    pdr_to_date()};
}

double step_reward(const RewardWeights& w, std::int64_t thp_step_bits,
                   double jfi_to_date, std::int64_t dropped_step,
                   const RewardScale& scale) {
  const double thp_norm = static_cast<double>(thp_step_bits) / scale.thp_norm();
  const double pdr_step =
      static_cast<double>(dropped_step) / static_cast<double>(scale.num_ues);
  return w.alpha * thp_norm + w.beta * jfi_to_date - w.delta * pdr_step;
}

KpiCsvWriter::KpiCsvWriter(const std::string& path) : out_(path) {
  if (!out_) throw ConfigError("cannot open KPI csv for writing: " + path);
  out_ << "tti,thp_step,jfi_to_date,dropped_step,reward\n";
}

void KpiCsvWriter::row(std::int64_t tti, std::int64_t thp_step_bits,
                       double jfi_to_date, std::int64_t dropped_step,
                       double reward) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%lld,%lld,%.10g,%lld,%.10g\n",
                static_cast<long long>(tti),
                static_cast<long long>(thp_step_bits), jfi_to_date,
                static_cast<long long>(dropped_step), reward);
  out_ << buf;
}

}  // namespace cellsched
