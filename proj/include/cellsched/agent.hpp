#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "cellsched/nn.hpp"
#include "cellsched/rng.hpp"

namespace cellsched {

enum class ArchKind { OnePass, Scalable };

std::string arch_name(ArchKind arch);
ArchKind arch_from_name(const std::string& name);

struct PolicyOutput {
  std::vector<double> logits;
  std::vector<double> probs;
  std::vector<bool> active;

  int sample(Rng& rng) const;
  int greedy() const;  // argmax probability, ties to the lowest index
  double entropy() const { return cellsched::entropy(probs); }
};

struct PolicyCache {
  std::vector<Mlp::Cache> per_pass;  // scalable: one per UE; one-pass: one entry
};

struct ValueCache {
  Mlp::Cache cache;
};

// Policy + value network pair behind one of the two architectures.
//
// One-pass: both networks consume the 4K-feature concatenation of all UEs;
// hidden width scales with K and the policy head emits K logits, so the
// agent is tied to the UE count it was built for.
//
// Scalable: one shared 4-in/1-out policy network is applied per UE and the
// value network consumes the mean of the per-UE features, so any UE count
// works and permuting UEs permutes the outputs.
class Agent {
 public:
  static constexpr int kFeaturesPerUe = 4;
  static constexpr double kMaskPenalty = 1e9;

  Agent(ArchKind arch, int num_ues, int hidden_base, std::uint64_t seed);

  ArchKind arch() const { return arch_; }
  // UE count a one-pass agent is locked to; 0 for scalable.
  int fixed_num_ues() const { return arch_ == ArchKind::OnePass ? num_ues_ : 0; }
  int hidden_base() const { return hidden_base_; }

  const Mlp& policy_net() const { return policy_; }
  const Mlp& value_net() const { return value_; }
  Mlp& policy_net() { return policy_; }
  Mlp& value_net() { return value_; }

  // features: K x 4 row-major, already normalized
  PolicyOutput policy(const std::vector<double>& features,
                      const std::vector<bool>& active,
                      PolicyCache* cache = nullptr) const;
  double value(const std::vector<double>& features, int num_ues,
               ValueCache* cache = nullptr) const;

  // Accumulate parameter gradients given d(objective)/d(logits) or
  // d(objective)/d(value).
  void policy_backward(const PolicyCache& cache,
                       const std::vector<double>& dlogits,
                       Mlp::Grads& grads) const;
  void value_backward(const ValueCache& cache, double dvalue,
                      Mlp::Grads& grads) const;

  nlohmann::json checkpoint() const;
  static Agent from_checkpoint(const nlohmann::json& j);
  void save_checkpoint(const std::string& path) const;
  static Agent load_checkpoint(const std::string& path);

 private:
  Agent() = default;

  ArchKind arch_ = ArchKind::Scalable;
  int num_ues_ = 0;       // meaningful for one-pass only
  int hidden_base_ = 128; // per-layer width is hidden_base * K (one-pass) or hidden_base
  Mlp policy_;
  Mlp value_;
};

}  // namespace cellsched
