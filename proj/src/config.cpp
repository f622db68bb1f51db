#include "cellsched/config.hpp"

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "cellsched/json_io.hpp"

namespace cellsched {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& prefix) {
  if (!j.is_object()) throw ConfigError(prefix + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key()))
      throw ConfigError("unknown config key: " + prefix + "." + it.key());
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& prefix) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key has wrong type: " + prefix + "." + key);
  }
}

SchedulerConfig scheduler_from_json(const json& j, const std::string& prefix) {
  reject_unknown(j, {"name", "pf_window", "pf_epsilon", "checkpoint", "greedy"},
                 prefix);
  SchedulerConfig cfg;
  read(j, "name", cfg.name, prefix);
  read(j, "pf_window", cfg.params.pf_window, prefix);
  read(j, "pf_epsilon", cfg.params.pf_epsilon, prefix);
  read(j, "checkpoint", cfg.checkpoint, prefix);
  read(j, "greedy", cfg.greedy, prefix);
  static const std::set<std::string> names{"rr", "maxci", "maxmin", "pf", "drl"};
  if (!names.count(cfg.name))
    throw ConfigError(prefix + ".name must be one of rr|maxci|maxmin|pf|drl");
  if (cfg.params.pf_window < 1)
    throw ConfigError(prefix + ".pf_window must be >= 1");
  if (cfg.params.pf_epsilon <= 0.0)
    throw ConfigError(prefix + ".pf_epsilon must be > 0");
  if (cfg.name == "drl" && cfg.checkpoint.empty())
    throw ConfigError(prefix + ": drl scheduler needs a checkpoint path");
  return cfg;
}

RewardWeights reward_from_json(const json& j, const std::string& prefix) {
  reject_unknown(j, {"alpha", "beta", "delta"}, prefix);
  RewardWeights w;
  read(j, "alpha", w.alpha, prefix);
  read(j, "beta", w.beta, prefix);
  read(j, "delta", w.delta, prefix);
  if (w.alpha < 0 || w.beta < 0 || w.delta < 0)
    throw ConfigError(prefix + " weights must be >= 0");
  return w;
}

TrainConfig train_from_json(const json& j, const std::string& prefix) {
  reject_unknown(j,
                 {"arch", "hidden_units", "n_steps", "gamma", "entropy_weight",
                  "value_weight", "max_updates", "learning_rate", "lr_decay",
                  "lr_decay_after", "num_envs", "grad_clip", "optimizer",
                  "mean_loss", "reward", "eval_every", "eval_windows",
                  "stop_at_pf_ratio", "stop_patience", "keep_best_eval"},
                 prefix);
  TrainConfig cfg;
  std::string arch = arch_name(cfg.arch);
  read(j, "arch", arch, prefix);
  cfg.arch = arch_from_name(arch);
  read(j, "hidden_units", cfg.hidden_base, prefix);
  read(j, "n_steps", cfg.n_steps, prefix);
  read(j, "gamma", cfg.gamma, prefix);
  read(j, "entropy_weight", cfg.entropy_weight, prefix);
  read(j, "value_weight", cfg.value_weight, prefix);
  read(j, "max_updates", cfg.max_updates, prefix);
  read(j, "learning_rate", cfg.learning_rate, prefix);
  read(j, "lr_decay", cfg.lr_decay, prefix);
  read(j, "lr_decay_after", cfg.lr_decay_after, prefix);
  read(j, "num_envs", cfg.num_envs, prefix);
  read(j, "grad_clip", cfg.grad_clip, prefix);
  read(j, "optimizer", cfg.optimizer, prefix);
  read(j, "mean_loss", cfg.mean_loss, prefix);
  if (j.contains("reward"))
    cfg.reward = reward_from_json(j.at("reward"), prefix + ".reward");
  read(j, "eval_every", cfg.eval_every, prefix);
  read(j, "eval_windows", cfg.eval_windows, prefix);
  read(j, "stop_at_pf_ratio", cfg.stop_at_pf_ratio, prefix);
  read(j, "stop_patience", cfg.stop_patience, prefix);
  read(j, "keep_best_eval", cfg.keep_best_eval, prefix);
  cfg.validate();
  return cfg;
}

CompareConfig compare_from_json(const json& j, const std::string& prefix) {
  reject_unknown(j, {"scheme_a", "scheme_b", "mode", "windows", "emit_kpi_rows"},
                 prefix);
  CompareConfig cfg;
  if (j.contains("scheme_a"))
    cfg.scheme_a = scheduler_from_json(j.at("scheme_a"), prefix + ".scheme_a");
  if (j.contains("scheme_b"))
    cfg.scheme_b = scheduler_from_json(j.at("scheme_b"), prefix + ".scheme_b");
  read(j, "mode", cfg.mode, prefix);
  read(j, "windows", cfg.windows, prefix);
  read(j, "emit_kpi_rows", cfg.emit_kpi_rows, prefix);
  if (cfg.mode != "paired" && cfg.mode != "independent")
    throw ConfigError(prefix + ".mode must be paired or independent");
  if (cfg.windows < 1) throw ConfigError(prefix + ".windows must be >= 1");
  return cfg;
}

ParetoRunConfig pareto_from_json(const json& j, const std::string& prefix) {
  reject_unknown(j,
                 {"algorithm", "population", "generations", "crossover_prob",
                  "mutation_prob", "eta_crossover", "eta_mutation", "operators",
                  "l_max", "hol_age_bucket", "delivered_quantum", "weights",
                  "exhaustive", "exhaustive_limit", "trace"},
                 prefix);
  ParetoRunConfig cfg;
  read(j, "algorithm", cfg.algorithm, prefix);
  read(j, "population", cfg.ga.population, prefix);
  read(j, "generations", cfg.ga.generations, prefix);
  read(j, "crossover_prob", cfg.ga.crossover_prob, prefix);
  read(j, "mutation_prob", cfg.ga.mutation_prob, prefix);
  read(j, "eta_crossover", cfg.ga.eta_crossover, prefix);
  read(j, "eta_mutation", cfg.ga.eta_mutation, prefix);
  read(j, "operators", cfg.ga.operators, prefix);
  read(j, "l_max", cfg.l_max, prefix);
  read(j, "hol_age_bucket", cfg.knobs.hol_age_bucket, prefix);
  read(j, "delivered_quantum", cfg.knobs.delivered_quantum, prefix);
  if (j.contains("weights"))
    cfg.weights = reward_from_json(j.at("weights"), prefix + ".weights");
  read(j, "exhaustive", cfg.exhaustive, prefix);
  read(j, "exhaustive_limit", cfg.exhaustive_limit, prefix);
  read(j, "trace", cfg.trace_path, prefix);
  if (cfg.algorithm != "ga" && cfg.algorithm != "pla" && cfg.algorithm != "both")
    throw ConfigError(prefix + ".algorithm must be ga, pla or both");
  cfg.ga.validate();
  if (cfg.l_max < 1) throw ConfigError(prefix + ".l_max must be >= 1");
  return cfg;
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like section.key=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty())
      throw ConfigError("override has an empty path segment: " + assignment);
    if (dot == std::string::npos) {
      json parsed = json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(json j) {
  reject_unknown(j,
                 {"seed", "threads", "output_dir", "env", "scheduler", "train",
                  "train_deployments", "virtual_traces", "compare", "pareto"},
                 "config");
  ExperimentConfig cfg;
  read(j, "seed", cfg.seed, "config");
  read(j, "threads", cfg.threads, "config");
  read(j, "output_dir", cfg.output_dir, "config");
  if (j.contains("env")) cfg.env = env_config_from_json(j.at("env"), "env");
  if (j.contains("scheduler"))
    cfg.scheduler = scheduler_from_json(j.at("scheduler"), "scheduler");
  if (j.contains("train")) cfg.train = train_from_json(j.at("train"), "train");
  if (j.contains("train_deployments")) {
    const json& deps = j.at("train_deployments");
    if (!deps.is_array())
      throw ConfigError("train_deployments must be an array of env overrides");
    const json base = j.contains("env") ? j.at("env") : json::object();
    for (std::size_t i = 0; i < deps.size(); ++i) {
      json merged = base;
      merged.update(deps[i]);
      cfg.train_deployments.push_back(env_config_from_json(
          merged, "train_deployments[" + std::to_string(i) + "]"));
    }
  }
  read(j, "virtual_traces", cfg.virtual_traces, "config");
  if (j.contains("compare"))
    cfg.compare = compare_from_json(j.at("compare"), "compare");
  if (j.contains("pareto"))
    cfg.pareto = pareto_from_json(j.at("pareto"), "pareto");
  if (cfg.threads < 0) throw ConfigError("threads must be >= 0");
  cfg.env.validate();
  cfg.digest = std::to_string(fnv1a64(to_canonical_string(j)));
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path,
                                        const std::vector<std::string>& overrides) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("config file does not exist: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + path + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  ExperimentConfig cfg = from_json(std::move(j));

  // referenced files must exist up front
  auto must_exist = [](const std::string& p, const std::string& what) {
    if (!p.empty() && !std::filesystem::exists(p))
      throw ConfigError(what + " does not exist: " + p);
  };
  must_exist(cfg.scheduler.checkpoint, "scheduler.checkpoint");
  must_exist(cfg.compare.scheme_a.checkpoint, "compare.scheme_a.checkpoint");
  must_exist(cfg.compare.scheme_b.checkpoint, "compare.scheme_b.checkpoint");
  must_exist(cfg.pareto.trace_path, "pareto.trace");
  for (const auto& t : cfg.virtual_traces) must_exist(t, "virtual_traces entry");
  return cfg;
}

}  // namespace cellsched
