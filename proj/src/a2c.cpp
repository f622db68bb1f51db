#include "cellsched/a2c.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <nlohmann/json.hpp>

#include "cellsched/parallel.hpp"
#include "cellsched/planner.hpp"

namespace cellsched {

void TrainConfig::validate() const {
  if (hidden_base < 1) throw ConfigError("train.hidden_units must be >= 1");
  if (n_steps < 1) throw ConfigError("train.n_steps must be >= 1");
  if (gamma < 0.0 || gamma >= 1.0)
    throw ConfigError("train.gamma must be in [0, 1)");
  if (entropy_weight < 0.0)
    throw ConfigError("train.entropy_weight must be >= 0");
  if (value_weight < 0.0) throw ConfigError("train.value_weight must be >= 0");
  if (max_updates < 0) throw ConfigError("train.max_updates must be >= 0");
  if (learning_rate <= 0.0)
    throw ConfigError("train.learning_rate must be > 0");
  if (lr_decay <= 0.0) throw ConfigError("train.lr_decay must be > 0");
  if (lr_decay_after < 0)
    throw ConfigError("train.lr_decay_after must be >= 0");
  if (num_envs < 1) throw ConfigError("train.num_envs must be >= 1");
  if (grad_clip < 0.0) throw ConfigError("train.grad_clip must be >= 0");
  if (optimizer != "sgd" && optimizer != "adam")
    throw ConfigError("train.optimizer must be sgd or adam");
  if (eval_every < 1) throw ConfigError("train.eval_every must be >= 1");
  if (eval_windows < 1) throw ConfigError("train.eval_windows must be >= 1");
  if (stop_at_pf_ratio < 0.0)
    throw ConfigError("train.stop_at_pf_ratio must be >= 0");
  if (stop_patience < 1) throw ConfigError("train.stop_patience must be >= 1");
  if (reward.alpha < 0.0 || reward.beta < 0.0 || reward.delta < 0.0)
    throw ConfigError("train.reward weights must be >= 0");
}

namespace {

// Per-RBG planner view of the environment: estimated rate is the rate at the
// RBG being scheduled, buffers reflect the grants already made this TTI.
// The average delivered rate is normalized by the per-UE fair share of the
// cell (top rate * B / K) rather than the raw top rate, so the feature keeps
// the same dynamic range when the same policy runs over a different UE count.
void build_rbg_features(const CellEnv& env, const ProvisionalQueues& prov,
                        int rbg, std::vector<double>& features,
                        std::vector<bool>& active) {
  const int k = env.num_ues();
  const auto scales = env.rbg_scales();
  const double avg_scale = scales.rate * env.num_rbgs() / k;
  features.resize(static_cast<std::size_t>(k) * Agent::kFeaturesPerUe);
  active.resize(static_cast<std::size_t>(k));
  for (int ue = 0; ue < k; ++ue) {
    double* f = features.data() + static_cast<std::size_t>(ue) * Agent::kFeaturesPerUe;
    f[0] = static_cast<double>(env.achievable_rate(ue, rbg)) / scales.rate;
    f[1] = env.average_rate_tracker(ue) / avg_scale;
    f[2] = static_cast<double>(env.config().buffer_capacity_bits -
                               prov.queued_bits(ue)) /
           scales.buffer;
    f[3] = static_cast<double>(prov.hol_wait(ue)) / scales.wait;
    active[static_cast<std::size_t>(ue)] = prov.active(ue);
  }
}

}  // namespace

std::vector<double> policy_logit_gradient(const std::vector<double>& probs,
                                          int action, double advantage,
                                          double entropy_weight) {
  const double h = entropy(probs);
  std::vector<double> dlogits(probs.size(), 0.0);
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double p = probs[k];
    const double indicator = k == static_cast<std::size_t>(action) ? 1.0 : 0.0;
    double g = -advantage * (indicator - p);
    if (p > 0.0) g += entropy_weight * p * (std::log(p) + h);
    dlogits[k] = g;
  }
  return dlogits;
}

std::vector<int> drl_decide_tti(const Agent& agent, const CellEnv& env,
                                Rng* sampler, std::vector<Experience>* record,
                                std::vector<double>* first_features) {
  const int nb = env.num_rbgs();
  ProvisionalQueues prov(env);
  std::vector<int> grants(static_cast<std::size_t>(nb), -1);
  std::vector<double> features;
  std::vector<bool> active;
  for (int b = 0; b < nb; ++b) {
    build_rbg_features(env, prov, b, features, active);
    if (b == 0 && first_features) *first_features = features;
    bool any = false;
    for (bool a : active) any = any || a;
    if (!any) continue;
    const PolicyOutput out = agent.policy(features, active);
    const int ue = sampler ? out.sample(*sampler) : out.greedy();
    grants[static_cast<std::size_t>(b)] = ue;
    prov.grant(ue, env.achievable_rate(ue, b));
    if (record) {
      record->push_back(Experience{features, active, ue, b});
    }
  }
  return grants;
}

DrlScheduler::DrlScheduler(const Agent& agent, bool greedy,
                           std::uint64_t sample_seed)
    : agent_(agent), greedy_(greedy), sample_seed_(sample_seed),
      rng_(sample_seed) {}

void DrlScheduler::begin_episode(const CellEnv& env) {
  rng_ = Rng(sample_seed_);
  if (agent_.fixed_num_ues() > 0 && agent_.fixed_num_ues() != env.num_ues())
    throw ConfigError("one-pass checkpoint UE count does not match the environment");
}

std::vector<int> DrlScheduler::decide(CellEnv& env) {
  return drl_decide_tti(agent_, env, greedy_ ? nullptr : &rng_);
}

EpisodeStats run_scheduler_episode(Scheduler& scheduler, CellEnv& env,
                                   const RewardWeights& weights,
                                   KpiCsvWriter* kpi_csv) {
  env.reset();
  scheduler.begin_episode(env);
  KpiWindow kpi(env.num_ues());
  const RewardScale scale{env.num_ues(), env.config().ladder.top_rate()};
  double reward_sum = 0.0;
  std::int64_t steps = 0;
  while (!env.done()) {
    const auto grants = scheduler.decide(env);
    const StepOutcome out = env.apply_decision(grants);
    kpi.update(out);
    std::int64_t dropped = 0;
    for (std::size_t u = 0; u < out.dropped_overflow.size(); ++u)
      dropped += out.dropped_overflow[u] + out.dropped_expired[u];
    const double r = step_reward(weights, out.total_delivered_bits(),
                                 kpi.jfi_to_date(), dropped, scale);
    reward_sum += r;
    ++steps;
    if (kpi_csv)
      kpi_csv->row(out.tti, out.total_delivered_bits(), kpi.jfi_to_date(),
                   dropped, r);
    scheduler.after_step(env, out);
  }
  EpisodeStats stats;
  stats.kpi = kpi.finalize();
  stats.mean_reward = steps > 0 ? reward_sum / static_cast<double>(steps) : 0.0;
  stats.dropped_packets = kpi.dropped_packets();
  stats.arrived_packets = kpi.arrived_packets();
  stats.transmitted_packets = kpi.transmitted_packets();
  return stats;
}

EvalResult paired_eval(const Agent& agent, const EnvConfig& env_cfg,
                       const RewardWeights& weights,
                       const SchedulerParams& pf_params, std::uint64_t seed,
                       int windows) {
  std::vector<EpisodeStats> agent_stats(static_cast<std::size_t>(windows));
  std::vector<EpisodeStats> pf_stats(static_cast<std::size_t>(windows));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(windows));
  parallel_for(static_cast<std::size_t>(windows), [&](std::size_t w) {
    try {
      const Trace trace =
          Trace::record(env_cfg, derive_seed(seed, "eval-window", w));
      CellEnv agent_env(env_cfg, trace);
      DrlScheduler drl(agent, /*greedy=*/true, derive_seed(seed, "eval-drl", w));
      agent_stats[w] = run_scheduler_episode(drl, agent_env, weights);
      CellEnv pf_env(env_cfg, trace);
      auto pf = make_baseline_scheduler("pf", pf_params);
      pf_stats[w] = run_scheduler_episode(*pf, pf_env, weights);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  EvalResult res;
  double a_thp = 0, p_thp = 0, a_jfi = 0, p_jfi = 0, a_pdr = 0, p_pdr = 0;
  for (int w = 0; w < windows; ++w) {
    const auto& a = agent_stats[static_cast<std::size_t>(w)];
    const auto& p = pf_stats[static_cast<std::size_t>(w)];
    res.agent_reward += a.mean_reward;
    res.pf_reward += p.mean_reward;
    a_thp += a.kpi.thp_bits;
    p_thp += p.kpi.thp_bits;
    a_jfi += a.kpi.jfi;
    p_jfi += p.kpi.jfi;
    a_pdr += a.kpi.pdr;
    p_pdr += p.kpi.pdr;
  }
  const double n = static_cast<double>(windows);
  res.agent_reward /= n;
  res.pf_reward /= n;
  res.thp_ratio = p_thp > 0 ? a_thp / p_thp : 0.0;
  res.jfi_ratio = p_jfi > 0 ? a_jfi / p_jfi : 0.0;
  res.pdr_ratio = p_pdr > 0 ? a_pdr / p_pdr : 0.0;
  res.reward_ratio = res.pf_reward != 0.0 ? res.agent_reward / res.pf_reward : 0.0;
  return res;
}

// ---------------------------------------------------------------------------
// trainer

struct A2cTrainer::EnvContext {
  const EnvConfig* cfg = nullptr;
  RewardScale scale;
  std::unique_ptr<CellEnv> env;
  std::unique_ptr<KpiWindow> kpi;
  Rng sampler{0};
  std::size_t index = 0;
  std::int64_t episode = 0;
};

A2cTrainer::A2cTrainer(const EnvConfig& env_cfg, const TrainConfig& cfg,
                       std::uint64_t master_seed)
    : env_cfg_(env_cfg), deployments_{env_cfg}, cfg_(cfg) {
  init(master_seed);
}

A2cTrainer::A2cTrainer(std::vector<EnvConfig> deployments,
                       const TrainConfig& cfg, std::uint64_t master_seed)
    : deployments_(std::move(deployments)), cfg_(cfg) {
  if (deployments_.empty())
    throw ConfigError("training needs at least one deployment");
  env_cfg_ = deployments_.front();
  init(master_seed);
}

A2cTrainer::A2cTrainer(const EnvConfig& env_cfg, const TrainConfig& cfg,
                       std::uint64_t master_seed, std::vector<Trace> traces)
    : env_cfg_(env_cfg), deployments_{env_cfg}, cfg_(cfg),
      traces_(std::move(traces)) {
  if (traces_.empty())
    throw ConfigError("virtual-environment training needs at least one trace");
  init(master_seed);
}

A2cTrainer::~A2cTrainer() = default;

void A2cTrainer::init(std::uint64_t master_seed) {
  env_cfg_.validate();
  cfg_.validate();
  for (const auto& d : deployments_) {
    d.validate();
    if (d.num_rbgs != env_cfg_.num_rbgs)
      throw ConfigError("training deployments must share the RBG count");
    if (cfg_.arch == ArchKind::OnePass && d.num_ues != env_cfg_.num_ues)
      throw ConfigError("one-pass training deployments must share the UE count");
  }
  master_seed_ = master_seed;
  agent_ = std::make_unique<Agent>(cfg_.arch, env_cfg_.num_ues,
                                   cfg_.hidden_base,
                                   derive_seed(master_seed, "agent-init"));
  envs_.resize(static_cast<std::size_t>(cfg_.num_envs));
  for (int e = 0; e < cfg_.num_envs; ++e) {
    auto ctx = std::make_unique<EnvContext>();
    ctx->index = static_cast<std::size_t>(e);
    ctx->cfg = &deployments_[static_cast<std::size_t>(e) % deployments_.size()];
    ctx->scale = RewardScale{ctx->cfg->num_ues, ctx->cfg->ladder.top_rate()};
    ctx->episode = -1;
    ctx->sampler = Rng(derive_seed(master_seed, "action-sampler",
                                   static_cast<std::uint64_t>(e)));
    envs_[static_cast<std::size_t>(e)] = std::move(ctx);
    start_next_episode(*envs_[static_cast<std::size_t>(e)]);
  }
}

void A2cTrainer::start_next_episode(EnvContext& ctx) {
  ++ctx.episode;
  if (!traces_.empty()) {
    const std::size_t t =
        (ctx.index + static_cast<std::size_t>(ctx.episode) * envs_.size()) %
        traces_.size();
    ctx.env = std::make_unique<CellEnv>(env_cfg_, traces_[t]);
  } else {
    const std::uint64_t seed =
        derive_seed(master_seed_, "train-episode",
                    ctx.index * 0x10000000ULL + static_cast<std::uint64_t>(ctx.episode));
    if (ctx.env) {
      ctx.env->reseed(seed);
    } else {
      ctx.env = std::make_unique<CellEnv>(*ctx.cfg, seed);
    }
  }
  ctx.kpi = std::make_unique<KpiWindow>(ctx.cfg->num_ues);
}

std::vector<Trajectory> A2cTrainer::sample_batch() {
  std::vector<Trajectory> batch(envs_.size());
  std::vector<std::exception_ptr> errors(envs_.size());
  parallel_for(envs_.size(), [&](std::size_t e) {
    try {
      EnvContext& ctx = *envs_[e];
      Trajectory& traj = batch[e];
      traj.steps.reserve(static_cast<std::size_t>(cfg_.n_steps));
      for (int s = 0; s < cfg_.n_steps; ++s) {
        TtiStep step;
        const auto grants = drl_decide_tti(*agent_, *ctx.env, &ctx.sampler,
                                           &step.subs, &step.state_features);
        const StepOutcome out = ctx.env->apply_decision(grants);
        ctx.kpi->update(out);
        std::int64_t dropped = 0;
        for (std::size_t u = 0; u < out.dropped_overflow.size(); ++u)
          dropped += out.dropped_overflow[u] + out.dropped_expired[u];
        step.reward = step_reward(cfg_.reward, out.total_delivered_bits(),
                                  ctx.kpi->jfi_to_date(), dropped, ctx.scale);
        step.terminal = ctx.env->done();
        traj.steps.push_back(std::move(step));
        if (ctx.env->done()) start_next_episode(ctx);
      }
      if (!traj.steps.back().terminal) {
        ProvisionalQueues prov(*ctx.env);
        std::vector<bool> active;
        build_rbg_features(*ctx.env, prov, 0, traj.bootstrap_features, active);
        traj.has_bootstrap = true;
      }
    } catch (...) {
      errors[e] = std::current_exception();
    }
  });
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
  return batch;
}

std::vector<double> A2cTrainer::n_step_returns(
    const Trajectory& traj, const std::vector<double>& tti_values,
    double bootstrap_value, double gamma, int n) {
  const std::size_t len = traj.steps.size();
  std::vector<double> returns(len, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    double acc = 0.0;
    double disc = 1.0;
    bool hit_terminal = false;
    std::size_t i = t;
    for (int s = 0; s < n && i < len; ++s, ++i) {
      acc += disc * traj.steps[i].reward;
      disc *= gamma;
      if (traj.steps[i].terminal) {
        hit_terminal = true;
        break;
      }
    }
    if (!hit_terminal) {
      if (i < len) {
        acc += disc * tti_values[i];
      } else if (traj.has_bootstrap) {
        acc += disc * bootstrap_value;
      }
    }
    returns[t] = acc;
  }
  return returns;
}

UpdateStats A2cTrainer::apply_update(const std::vector<Trajectory>& batch) {
  UpdateStats stats;
  std::int64_t reward_steps = 0;
  for (const auto& traj : batch) {
    for (const auto& step : traj.steps) {
      stats.mean_reward += step.reward;
      ++reward_steps;
      stats.num_experiences += static_cast<int>(step.subs.size());
    }
  }
  if (reward_steps > 0) stats.mean_reward /= static_cast<double>(reward_steps);
  if (stats.num_experiences == 0) {
    ++updates_done_;
    return stats;  // nothing to learn from an all-idle batch
  }

  struct Partial {
    Mlp::Grads policy;
    Mlp::Grads value;
    double policy_objective = 0.0;
    double entropy_sum = 0.0;
    double value_loss = 0.0;
  };
  std::vector<Partial> partials(batch.size());
  std::vector<std::exception_ptr> errors(batch.size());

  parallel_for(batch.size(), [&](std::size_t e) {
    try {
      const Trajectory& traj = batch[e];
      Partial& part = partials[e];
      part.policy = agent_->policy_net().make_grads();
      part.value = agent_->value_net().make_grads();

      // UE counts can differ per deployment; the feature layout carries K
      std::vector<double> tti_values(traj.steps.size(), 0.0);
      for (std::size_t t = 0; t < traj.steps.size(); ++t)
        tti_values[t] = agent_->value(
            traj.steps[t].state_features,
            static_cast<int>(traj.steps[t].state_features.size()) /
                Agent::kFeaturesPerUe);
      const double bootstrap =
          traj.has_bootstrap
              ? agent_->value(traj.bootstrap_features,
                              static_cast<int>(traj.bootstrap_features.size()) /
                                  Agent::kFeaturesPerUe)
              : 0.0;
      const auto returns =
          n_step_returns(traj, tti_values, bootstrap, cfg_.gamma, cfg_.n_steps);

      PolicyCache pcache;
      ValueCache vcache;
      for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        for (const Experience& sub : traj.steps[t].subs) {
          const PolicyOutput out = agent_->policy(sub.features, sub.active, &pcache);
          const double v = agent_->value(
              sub.features,
              static_cast<int>(sub.features.size()) / Agent::kFeaturesPerUe,
              &vcache);
          const double adv = returns[t] - v;

          part.entropy_sum += out.entropy();
          const double logp =
              std::log(std::max(out.probs[static_cast<std::size_t>(sub.action)],
                                1e-300));
          part.policy_objective += adv * logp;
          part.value_loss += adv * adv;

          const auto dlogits = policy_logit_gradient(
              out.probs, sub.action, adv, cfg_.entropy_weight);
          agent_->policy_backward(pcache, dlogits, part.policy);
          // descent gradient wrt value for lambda_v * A^2 (through V(s) only)
          agent_->value_backward(vcache, -2.0 * cfg_.value_weight * adv,
                                 part.value);
        }
      }
    } catch (...) {
      errors[e] = std::current_exception();
    }
  });
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);

  Mlp::Grads policy_grads = agent_->policy_net().make_grads();
  Mlp::Grads value_grads = agent_->value_net().make_grads();
  for (const auto& part : partials) {
    policy_grads.add_scaled(part.policy, 1.0);
    value_grads.add_scaled(part.value, 1.0);
    stats.policy_objective += part.policy_objective;
    stats.entropy_mean += part.entropy_sum;
    stats.value_loss += part.value_loss;
  }
  stats.entropy_mean /= static_cast<double>(stats.num_experiences);

  const double loss_scale =
      cfg_.mean_loss ? 1.0 / static_cast<double>(stats.num_experiences) : 1.0;
  policy_grads.scale(loss_scale);
  value_grads.scale(loss_scale);

  double norm_sq = policy_grads.squared_norm() + value_grads.squared_norm();
  if (!std::isfinite(norm_sq))
    throw ContractViolation(
        "non-finite gradient at update " + std::to_string(updates_done_ + 1) +
        " (value_loss=" + std::to_string(stats.value_loss) + ")");
  stats.grad_norm = std::sqrt(norm_sq);
  if (cfg_.grad_clip > 0.0 && stats.grad_norm > cfg_.grad_clip) {
    const double s = cfg_.grad_clip / stats.grad_norm;
    policy_grads.scale(s);
    value_grads.scale(s);
  }

  const double lr = current_learning_rate();
  if (cfg_.optimizer == "sgd") {
    agent_->policy_net().apply(policy_grads, -lr);
    agent_->value_net().apply(value_grads, -lr);
  } else {
    if (!adam_ready_) {
      adam_m_policy_ = agent_->policy_net().make_grads();
      adam_v_policy_ = agent_->policy_net().make_grads();
      adam_m_value_ = agent_->value_net().make_grads();
      adam_v_value_ = agent_->value_net().make_grads();
      adam_ready_ = true;
    }
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const int t = updates_done_ + 1;
    const double bc1 = 1.0 - std::pow(b1, t);
    const double bc2 = 1.0 - std::pow(b2, t);
    auto adam_step = [&](Mlp& net, const Mlp::Grads& g, Mlp::Grads& m,
                         Mlp::Grads& v) {
      auto& layers = net.layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t i = 0; i < layers[l].w.size(); ++i) {
          m.dw[l][i] = b1 * m.dw[l][i] + (1.0 - b1) * g.dw[l][i];
          v.dw[l][i] = b2 * v.dw[l][i] + (1.0 - b2) * g.dw[l][i] * g.dw[l][i];
          layers[l].w[i] -=
              lr * (m.dw[l][i] / bc1) / (std::sqrt(v.dw[l][i] / bc2) + eps);
        }
        for (std::size_t i = 0; i < layers[l].b.size(); ++i) {
          m.db[l][i] = b1 * m.db[l][i] + (1.0 - b1) * g.db[l][i];
          v.db[l][i] = b2 * v.db[l][i] + (1.0 - b2) * g.db[l][i] * g.db[l][i];
          layers[l].b[i] -=
              lr * (m.db[l][i] / bc1) / (std::sqrt(v.db[l][i] / bc2) + eps);
        }
      }
    };
    adam_step(agent_->policy_net(), policy_grads, adam_m_policy_, adam_v_policy_);
    adam_step(agent_->value_net(), value_grads, adam_m_value_, adam_v_value_);
  }

  ++updates_done_;
  return stats;
}

double A2cTrainer::current_learning_rate() const {
  double lr = cfg_.learning_rate;
  if (cfg_.lr_decay_after > 0 && updates_done_ >= cfg_.lr_decay_after)
    lr *= cfg_.lr_decay;
  return lr;
}

TrainResult A2cTrainer::train() {
  TrainResult result;
  double reward_accum = 0.0;
  int reward_points = 0;
  int stop_streak = 0;
  double best_ratio = -1e300;
  nlohmann::json best_params;
  const auto snapshot_best = [&](double ratio) {
    if (!cfg_.keep_best_eval || ratio <= best_ratio) return;
    best_ratio = ratio;
    best_params = agent_->checkpoint();
  };
  const auto restore_best = [&] {
    if (cfg_.keep_best_eval && !best_params.is_null())
      *agent_ = Agent::from_checkpoint(best_params);
  };

  for (int update = 1; update <= cfg_.max_updates; ++update) {
    const auto batch = sample_batch();
    const UpdateStats stats = apply_update(batch);
    reward_accum += stats.mean_reward;
    ++reward_points;
    result.updates_run = update;

    if (update % cfg_.eval_every == 0 || update == cfg_.max_updates) {
      const EvalResult ev =
          paired_eval(*agent_, env_cfg_, cfg_.reward, SchedulerParams{},
                      derive_seed(master_seed_, "train-eval"), cfg_.eval_windows);
      CurvePoint point;
      point.update = update;
      point.mean_reward = reward_points > 0
                              ? reward_accum / static_cast<double>(reward_points)
                              : 0.0;
      point.thp_ratio = ev.thp_ratio;
      point.jfi_ratio = ev.jfi_ratio;
      point.pdr_ratio = ev.pdr_ratio;
      point.reward_ratio = ev.reward_ratio;
      result.curve.push_back(point);
      reward_accum = 0.0;
      reward_points = 0;
      snapshot_best(ev.reward_ratio);

      if (cfg_.stop_at_pf_ratio > 0.0) {
        if (ev.reward_ratio >= cfg_.stop_at_pf_ratio) {
          ++stop_streak;
          if (stop_streak >= cfg_.stop_patience) {
            result.stop_reason = "reached PF reward ratio";
            restore_best();
            return result;
          }
        } else {
          stop_streak = 0;
        }
      }
    }
  }
  result.stop_reason = cfg_.max_updates == 0 ? "no updates requested"
                                             : "max updates";
  restore_best();
  return result;
}

}  // namespace cellsched
