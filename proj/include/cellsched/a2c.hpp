#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cellsched/agent.hpp"
#include "cellsched/baselines.hpp"
#include "cellsched/env.hpp"
#include "cellsched/kpi.hpp"
#include "cellsched/trace.hpp"

namespace cellsched {

// One per-RBG decision: the provisional state the policy saw and what it did.
struct Experience {
  std::vector<double> features;  // K x 4, normalized planner view
  std::vector<bool> active;
  int action = -1;
  int rbg = 0;
};

// One TTI: the state at its first RBG, the decisions taken (empty when no UE
// was active) and the shared TTI reward.
struct TtiStep {
  std::vector<double> state_features;
  std::vector<Experience> subs;
  double reward = 0.0;
  bool terminal = false;
};

struct Trajectory {
  std::vector<TtiStep> steps;
  std::vector<double> bootstrap_features;  // state after the last step
  bool has_bootstrap = false;
};

struct TrainConfig {
  ArchKind arch = ArchKind::Scalable;
  int hidden_base = 128;
  int n_steps = 20;          // batch length per env and TD horizon
  double gamma = 0.9;
  double entropy_weight = 0.03;
  double value_weight = 0.5;
  int max_updates = 10000;
  double learning_rate = 1e-3;
  double lr_decay = 0.1;
  int lr_decay_after = 5000;
  int num_envs = 8;
  double grad_clip = 5.0;
  std::string optimizer = "sgd";  // or "adam"
  bool mean_loss = true;          // scale the batch gradient by 1/#experiences
  RewardWeights reward;
  int eval_every = 50;
  int eval_windows = 4;
  double stop_at_pf_ratio = 0.0;  // early stop once eval reward ratio holds; 0 = off
  int stop_patience = 2;
  bool keep_best_eval = true;  // restore the best-eval parameters at the end

  void validate() const;
};

struct UpdateStats {
  double mean_reward = 0.0;      // mean per-TTI reward over the batch
  double policy_objective = 0.0; // sum A_i log pi(a_i|s_i)
  double entropy_mean = 0.0;
  double value_loss = 0.0;       // sum A_i^2
  double grad_norm = 0.0;
  int num_experiences = 0;
};

struct CurvePoint {
  int update = 0;
  double mean_reward = 0.0;  // training reward since the previous point
  double thp_ratio = 0.0;    // greedy agent / PF on held-out paired windows
  double jfi_ratio = 0.0;
  double pdr_ratio = 0.0;
  double reward_ratio = 0.0;
};

struct EvalResult {
  double agent_reward = 0.0;
  double pf_reward = 0.0;
  double thp_ratio = 0.0;
  double jfi_ratio = 0.0;
  double pdr_ratio = 0.0;
  double reward_ratio = 0.0;
};

struct TrainResult {
  int updates_run = 0;
  std::vector<CurvePoint> curve;
  std::string stop_reason;
};

// Descent gradient wrt the logits for one experience's contribution to
// -(A log pi(a|s) + lambda_e H). The advantage is treated as a constant.
std::vector<double> policy_logit_gradient(const std::vector<double>& probs,
                                          int action, double advantage,
                                          double entropy_weight);

// One TTI decision, RBG by RBG against provisionally drained buffers. The
// sampler draws from the policy; pass nullptr for greedy (argmax) decisions.
// Optionally records the per-RBG experiences and the first-RBG state view.
std::vector<int> drl_decide_tti(const Agent& agent, const CellEnv& env,
                                Rng* sampler,
                                std::vector<Experience>* record = nullptr,
                                std::vector<double>* first_features = nullptr);

// Scheduler adapter so a trained agent can run wherever baselines do.
class DrlScheduler final : public Scheduler {
 public:
  DrlScheduler(const Agent& agent, bool greedy, std::uint64_t sample_seed);
  std::string name() const override { return "drl"; }
  void begin_episode(const CellEnv& env) override;
  std::vector<int> decide(CellEnv& env) override;
  void after_step(const CellEnv&, const StepOutcome&) override {}

 private:
  const Agent& agent_;
  bool greedy_;
  std::uint64_t sample_seed_;
  Rng rng_;
};

struct EpisodeStats {
  KpiSummary kpi;
  double mean_reward = 0.0;
  std::int64_t dropped_packets = 0;
  std::int64_t arrived_packets = 0;
  std::int64_t transmitted_packets = 0;
};

// Run one scheduling duration to completion on a fresh environment.
EpisodeStats run_scheduler_episode(Scheduler& scheduler, CellEnv& env,
                                   const RewardWeights& weights,
                                   KpiCsvWriter* kpi_csv = nullptr);

// Greedy agent vs PF on `windows` recorded traces; both replay the same
// exogenous stream per window.
EvalResult paired_eval(const Agent& agent, const EnvConfig& env_cfg,
                       const RewardWeights& weights,
                       const SchedulerParams& pf_params, std::uint64_t seed,
                       int windows);

class A2cTrainer {
 public:
  // Live training: every env gets its own deployment / episode realizations.
  A2cTrainer(const EnvConfig& env_cfg, const TrainConfig& cfg,
             std::uint64_t master_seed);
  // Live training over differentiated deployments: env slot i cycles through
  // deployments[i % size]. One-pass agents need every deployment to share
  // the UE count; scalable agents do not.
  A2cTrainer(std::vector<EnvConfig> deployments, const TrainConfig& cfg,
             std::uint64_t master_seed);
  // Virtual-environment training: envs replay recorded traces, cycling
  // through the set across episodes.
  A2cTrainer(const EnvConfig& env_cfg, const TrainConfig& cfg,
             std::uint64_t master_seed, std::vector<Trace> traces);
  ~A2cTrainer();

  std::vector<Trajectory> sample_batch();
  UpdateStats apply_update(const std::vector<Trajectory>& batch);
  TrainResult train();

  // n-step discounted returns per TTI of one trajectory. tti_values must
  // hold V(state) per step; bootstrap_value is V of the post-batch state.
  static std::vector<double> n_step_returns(const Trajectory& traj,
                                            const std::vector<double>& tti_values,
                                            double bootstrap_value, double gamma,
                                            int n);

  const Agent& agent() const { return *agent_; }
  Agent& agent() { return *agent_; }
  int updates_done() const { return updates_done_; }
  double current_learning_rate() const;

 private:
  struct EnvContext;
  void init(std::uint64_t master_seed);
  void start_next_episode(EnvContext& ctx);

  EnvConfig env_cfg_;                   // evaluation environment
  std::vector<EnvConfig> deployments_;  // training environments, cycled
  TrainConfig cfg_;
  std::uint64_t master_seed_ = 0;
  std::vector<Trace> traces_;  // nonempty => virtual-environment mode
  std::unique_ptr<Agent> agent_;
  std::vector<std::unique_ptr<EnvContext>> envs_;
  int updates_done_ = 0;

  // optimizer state
  Mlp::Grads adam_m_policy_, adam_v_policy_, adam_m_value_, adam_v_value_;
  bool adam_ready_ = false;
};

}  // namespace cellsched
