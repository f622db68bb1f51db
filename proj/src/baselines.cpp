#include "cellsched/baselines.hpp"

#include <algorithm>

#include "cellsched/planner.hpp"

namespace cellsched {

int rr_select(const std::vector<bool>& active, int last_served) {
  const int k = static_cast<int>(active.size());
  for (int step = 1; step <= k; ++step) {
    const int ue = (last_served + step) % k;
    if (active[static_cast<std::size_t>(ue)]) return ue;
  }
  return -1;
}

int max_ci_select(const std::vector<std::int64_t>& rates,
                  const std::vector<bool>& active) {
  int best = -1;
  std::int64_t best_rate = -1;
  for (std::size_t ue = 0; ue < rates.size(); ++ue) {
    if (!active[ue]) continue;
    if (rates[ue] > best_rate) {
      best_rate = rates[ue];
      best = static_cast<int>(ue);
    }
  }
  return best;
}

int max_min_select(const std::vector<double>& avg_throughput,
                   const std::vector<bool>& active) {
  int best = -1;
  double best_avg = 0.0;
  for (std::size_t ue = 0; ue < avg_throughput.size(); ++ue) {
    if (!active[ue]) continue;
    if (best < 0 || avg_throughput[ue] < best_avg) {
      best_avg = avg_throughput[ue];
      best = static_cast<int>(ue);
    }
  }
  return best;
}

int pf_select(const std::vector<std::int64_t>& inst_rates, const PfState& pf,
              const std::vector<bool>& active) {
  int best = -1;
  double best_metric = 0.0;
  for (std::size_t ue = 0; ue < inst_rates.size(); ++ue) {
    if (!active[ue]) continue;
    const double avg = std::max(pf.avg_throughput[ue], pf.floor_eps);
    const double metric = static_cast<double>(inst_rates[ue]) / avg;
    if (best < 0 || metric > best_metric) {
      best_metric = metric;
      best = static_cast<int>(ue);
    }
  }
  return best;
}

namespace {

// Shared RBG-by-RBG loop: pull per-RBG rates, mask by provisionally drained
// buffers, delegate the per-RBG pick, apply the provisional grant.
template <class PickFn>
std::vector<int> plan_tti(CellEnv& env, PickFn&& pick) {
  const int k = env.num_ues();
  const int nb = env.num_rbgs();
  ProvisionalQueues prov(env);
  std::vector<int> grants(static_cast<std::size_t>(nb), -1);
  std::vector<bool> active(static_cast<std::size_t>(k));
  std::vector<std::int64_t> rates(static_cast<std::size_t>(k));
  for (int b = 0; b < nb; ++b) {
    bool any = false;
    for (int ue = 0; ue < k; ++ue) {
      active[static_cast<std::size_t>(ue)] = prov.active(ue);
      any = any || prov.active(ue);
      rates[static_cast<std::size_t>(ue)] = env.achievable_rate(ue, b);
    }
    if (!any) continue;
    const int ue = pick(rates, active, b);
    grants[static_cast<std::size_t>(b)] = ue;
    if (ue >= 0) prov.grant(ue, rates[static_cast<std::size_t>(ue)]);
  }
  return grants;
}

class RoundRobinScheduler final : public Scheduler {
 public:
  std::string name() const override { return "rr"; }
  void begin_episode(const CellEnv&) override { last_served_ = -1; }
  std::vector<int> decide(CellEnv& env) override {
    return plan_tti(env, [this](const std::vector<std::int64_t>&,
                                const std::vector<bool>& active, int) {
      const int ue = rr_select(active, last_served_);
      if (ue >= 0) last_served_ = ue;
      return ue;
    });
  }
  void after_step(const CellEnv&, const StepOutcome&) override {}

 private:
  int last_served_ = -1;
};

class MaxCiScheduler final : public Scheduler {
 public:
  std::string name() const override { return "maxci"; }
  void begin_episode(const CellEnv&) override {}
  std::vector<int> decide(CellEnv& env) override {
    return plan_tti(env, [](const std::vector<std::int64_t>& rates,
                            const std::vector<bool>& active, int) {
      return max_ci_select(rates, active);
    });
  }
  void after_step(const CellEnv&, const StepOutcome&) override {}
};

class MaxMinScheduler final : public Scheduler {
 public:
  explicit MaxMinScheduler(const SchedulerParams& p) : params_(p) {}
  std::string name() const override { return "maxmin"; }
  void begin_episode(const CellEnv& env) override {
    tracker_ = std::make_unique<PfState>(env.num_ues(), params_.pf_window);
  }
  std::vector<int> decide(CellEnv& env) override {
    return plan_tti(env, [this](const std::vector<std::int64_t>&,
                                const std::vector<bool>& active, int) {
      return max_min_select(tracker_->avg_throughput, active);
    });
  }
  void after_step(const CellEnv&, const StepOutcome& out) override {
    tracker_->update(out.delivered_bits);
  }

 private:
  SchedulerParams params_;
  std::unique_ptr<PfState> tracker_;
};

class PfScheduler final : public Scheduler {
 public:
  explicit PfScheduler(const SchedulerParams& p) : params_(p) {}
  std::string name() const override { return "pf"; }
  void begin_episode(const CellEnv& env) override {
    state_ = std::make_unique<PfState>(env.num_ues(), params_.pf_window);
    state_->floor_eps = params_.pf_epsilon;
  }
  std::vector<int> decide(CellEnv& env) override {
    // The average-throughput state is held fixed across the RBGs of one TTI
    // and updated once per TTI with the delivered rates.
    return plan_tti(env, [this](const std::vector<std::int64_t>& rates,
                                const std::vector<bool>& active, int) {
      return pf_select(rates, *state_, active);
    });
  }
  void after_step(const CellEnv&, const StepOutcome& out) override {
    state_->update(out.delivered_bits);
  }

 private:
  SchedulerParams params_;
  std::unique_ptr<PfState> state_;
};

}  // namespace

std::unique_ptr<Scheduler> make_baseline_scheduler(const std::string& name,
                                                   const SchedulerParams& params) {
  if (name == "rr") return std::make_unique<RoundRobinScheduler>();
  if (name == "maxci") return std::make_unique<MaxCiScheduler>();
  if (name == "maxmin") return std::make_unique<MaxMinScheduler>(params);
  if (name == "pf") return std::make_unique<PfScheduler>(params);
  throw ConfigError("unknown scheduler name: " + name);
}

}  // namespace cellsched
