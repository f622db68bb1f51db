#include "cellsched/agent.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace cellsched {

std::string arch_name(ArchKind arch) {
  return arch == ArchKind::OnePass ? "onepass" : "scalable";
}

ArchKind arch_from_name(const std::string& name) {
  if (name == "onepass") return ArchKind::OnePass;
  if (name == "scalable") return ArchKind::Scalable;
  throw ConfigError("unknown architecture: " + name + " (onepass|scalable)");
}

int PolicyOutput::sample(Rng& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  int last_active = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!active[i]) continue;
    last_active = static_cast<int>(i);
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return last_active;  // rounding tail lands on the last active UE
}

int PolicyOutput::greedy() const {
  int best = -1;
  double best_p = -1.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!active[i]) continue;
    if (probs[i] > best_p) {
      best_p = probs[i];
      best = static_cast<int>(i);
    }
  }
  return best;
}

Agent::Agent(ArchKind arch, int num_ues, int hidden_base, std::uint64_t seed)
    : arch_(arch), num_ues_(num_ues), hidden_base_(hidden_base) {
  if (hidden_base < 1) throw ConfigError("agent hidden width must be >= 1");
  if (arch == ArchKind::OnePass) {
    if (num_ues < 1)
      throw ConfigError("one-pass agent needs the UE count at construction");
    const int h = hidden_base * num_ues;
    const int in = kFeaturesPerUe * num_ues;
    policy_ = Mlp({in, h, h, num_ues}, derive_seed(seed, "policy"));
    value_ = Mlp({in, h, h, 1}, derive_seed(seed, "value"));
  } else {
    policy_ = Mlp({kFeaturesPerUe, hidden_base, hidden_base, 1},
                  derive_seed(seed, "policy"));
    value_ = Mlp({kFeaturesPerUe, hidden_base, hidden_base, 1},
                 derive_seed(seed, "value"));
  }
}

PolicyOutput Agent::policy(const std::vector<double>& features,
                           const std::vector<bool>& active,
                           PolicyCache* cache) const {
  const int k = static_cast<int>(active.size());
  if (features.size() != static_cast<std::size_t>(k) * kFeaturesPerUe)
    throw ContractViolation("policy features must be K x 4");
  bool any = false;
  for (bool a : active) any = any || a;
  if (!any) throw ContractViolation("policy needs at least one active UE");

  PolicyOutput out;
  out.active = active;
  if (arch_ == ArchKind::OnePass) {
    if (k != num_ues_)
      throw ContractViolation("one-pass policy built for a different UE count");
    if (cache) cache->per_pass.assign(1, Mlp::Cache{});
    policy_.forward(features, out.logits, cache ? &cache->per_pass[0] : nullptr);
  } else {
    out.logits.resize(static_cast<std::size_t>(k));
    if (cache) cache->per_pass.assign(static_cast<std::size_t>(k), Mlp::Cache{});
    std::vector<double> ue_features(kFeaturesPerUe);
    std::vector<double> logit;
    for (int ue = 0; ue < k; ++ue) {
      const double* f = features.data() +
                        static_cast<std::size_t>(ue) * kFeaturesPerUe;
      ue_features.assign(f, f + kFeaturesPerUe);
      policy_.forward(ue_features, logit,
                      cache ? &cache->per_pass[static_cast<std::size_t>(ue)]
                            : nullptr);
      out.logits[static_cast<std::size_t>(ue)] = logit[0];
    }
  }
  out.probs = masked_softmax(out.logits, active, kMaskPenalty);
  return out;
}

double Agent::value(const std::vector<double>& features, int num_ues,
                    ValueCache* cache) const {
  if (features.size() != static_cast<std::size_t>(num_ues) * kFeaturesPerUe)
    throw ContractViolation("value features must be K x 4");
  if (arch_ == ArchKind::OnePass) {
    if (num_ues != num_ues_)
      throw ContractViolation("one-pass value built for a different UE count");
    return value_.forward_scalar(features, cache ? &cache->cache : nullptr);
  }
  // scalable: mean of the per-UE feature vectors
  std::vector<double> mean(kFeaturesPerUe, 0.0);
  for (int ue = 0; ue < num_ues; ++ue)
    for (int f = 0; f < kFeaturesPerUe; ++f)
      mean[static_cast<std::size_t>(f)] +=
          features[static_cast<std::size_t>(ue) * kFeaturesPerUe + f];
  for (auto& v : mean) v /= static_cast<double>(num_ues);
  return value_.forward_scalar(mean, cache ? &cache->cache : nullptr);
}

void Agent::policy_backward(const PolicyCache& cache,
                            const std::vector<double>& dlogits,
                            Mlp::Grads& grads) const {
  if (arch_ == ArchKind::OnePass) {
    policy_.backward(cache.per_pass[0], dlogits, grads);
    return;
  }
  std::vector<double> d(1);
  for (std::size_t ue = 0; ue < dlogits.size(); ++ue) {
    if (dlogits[ue] == 0.0) continue;  // masked or no contribution
    d[0] = dlogits[ue];
    policy_.backward(cache.per_pass[ue], d, grads);
  }
}

void Agent::value_backward(const ValueCache& cache, double dvalue,
                           Mlp::Grads& grads) const {
  value_.backward(cache.cache, {dvalue}, grads);
}

nlohmann::json Agent::checkpoint() const {
  return {{"format", "cellsched-checkpoint"},
          {"version", 1},
          {"arch", arch_name(arch_)},
          {"num_ues", arch_ == ArchKind::OnePass ? num_ues_ : 0},
          {"hidden_base", hidden_base_},
          {"policy", policy_.to_json()},
          {"value", value_.to_json()}};
}

Agent Agent::from_checkpoint(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "cellsched-checkpoint")
    throw ConfigError("not a cellsched checkpoint");
  if (j.value("version", 0) != 1)
    throw ConfigError("unsupported checkpoint version");
  Agent agent;
  agent.arch_ = arch_from_name(j.at("arch").get<std::string>());
  agent.num_ues_ = j.at("num_ues").get<int>();
  agent.hidden_base_ = j.at("hidden_base").get<int>();
  agent.policy_ = Mlp::from_json(j.at("policy"));
  agent.value_ = Mlp::from_json(j.at("value"));
  if (agent.arch_ == ArchKind::OnePass) {
    if (agent.num_ues_ < 1)
      throw ConfigError("one-pass checkpoint is missing its UE count");
    if (agent.policy_.input_size() != kFeaturesPerUe * agent.num_ues_ ||
        agent.policy_.output_size() != agent.num_ues_ ||
        agent.value_.input_size() != kFeaturesPerUe * agent.num_ues_ ||
        agent.value_.output_size() != 1)
      throw ConfigError("one-pass checkpoint has inconsistent network shapes");
  } else {
    if (agent.policy_.input_size() != kFeaturesPerUe ||
        agent.policy_.output_size() != 1 ||
        agent.value_.input_size() != kFeaturesPerUe ||
        agent.value_.output_size() != 1)
      throw ConfigError("scalable checkpoint has inconsistent network shapes");
  }
  return agent;
}

void Agent::save_checkpoint(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open checkpoint for writing: " + path);
  f << checkpoint().dump(2) << "\n";
  if (!f) throw ConfigError("failed while writing checkpoint: " + path);
}

Agent Agent::load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("checkpoint file does not exist: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint is not valid JSON: " + path + ": " + e.what());
  }
  return from_checkpoint(j);
}

}  // namespace cellsched
