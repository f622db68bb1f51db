#include "cellsched/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace cellsched {

namespace {

struct Setup {
  std::vector<double> features;
  std::vector<bool> active;
  int action = 0;
};

Setup make_setup(int k, Rng& rng) {
  Setup s;
  s.features.resize(static_cast<std::size_t>(k) * Agent::kFeaturesPerUe);
  for (auto& f : s.features) f = rng.uniform();
  s.active.assign(static_cast<std::size_t>(k), true);
  if (k >= 3) s.active[static_cast<std::size_t>(k - 1)] = false;  // exercise the mask
  s.action = 0;
  return s;
}

double policy_objective(const Agent& agent, const Setup& s) {
  const PolicyOutput out = agent.policy(s.features, s.active);
  return std::log(out.probs[static_cast<std::size_t>(s.action)]);
}

double value_objective(const Agent& agent, const Setup& s, int k) {
  return agent.value(s.features, k);
}

GradCheckCase check_net(Agent agent, bool policy_net, int k,
                        const std::string& name, int samples, double step,
                        double tolerance, std::uint64_t seed,
                        const std::function<void(Mlp::Grads&)>& perturb) {
  Rng rng(derive_seed(seed, name));
  const Setup s = make_setup(k, rng);

  Mlp& net = policy_net ? agent.policy_net() : agent.value_net();
  Mlp::Grads grads = net.make_grads();
  if (policy_net) {
    PolicyCache cache;
    const PolicyOutput out = agent.policy(s.features, s.active, &cache);
    std::vector<double> dlogits(out.probs.size());
    for (std::size_t i = 0; i < out.probs.size(); ++i)
      dlogits[i] =
          (i == static_cast<std::size_t>(s.action) ? 1.0 : 0.0) - out.probs[i];
    agent.policy_backward(cache, dlogits, grads);
  } else {
    ValueCache cache;
    agent.value(s.features, k, &cache);
    agent.value_backward(cache, 1.0, grads);
  }
  if (perturb) perturb(grads);

  auto objective = [&]() {
    return policy_net ? policy_objective(agent, s)
                      : value_objective(agent, s, k);
  };

  GradCheckCase result;
  result.name = name;
  const std::size_t total = net.param_count();
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto check_param = [&](double& param, double analytic) {
      const double keep = param;
      param = keep + step;
      const double up = objective();
      param = keep - step;
      const double down = objective();
      param = keep;
      const double fd = (up - down) / (2.0 * step);
      const double rel =
          std::abs(fd - analytic) / std::max(1e-6, std::abs(fd) + std::abs(analytic));
      result.max_rel_err = std::max(result.max_rel_err, rel);
      ++result.params_checked;
    };
    const std::size_t layer_params = layers[l].w.size() + layers[l].b.size();
    const std::size_t quota = std::max<std::size_t>(
        4, static_cast<std::size_t>(samples) * layer_params / total);
    for (std::size_t n = 0; n < quota; ++n) {
      const std::size_t i = rng.uniform_int(layer_params);
      if (i < layers[l].w.size()) {
        check_param(layers[l].w[i], grads.dw[l][i]);
      } else {
        const std::size_t bi = i - layers[l].w.size();
        check_param(layers[l].b[bi], grads.db[l][bi]);
      }
    }
  }
  result.pass = result.max_rel_err < tolerance;
  return result;
}

}  // namespace

GradCheckReport run_gradcheck(std::uint64_t seed, int samples_per_net,
                              double tolerance, double step,
                              const std::function<void(Mlp::Grads&)>& perturb) {
  GradCheckReport report;
  for (ArchKind arch : {ArchKind::OnePass, ArchKind::Scalable}) {
    for (int k : {2, 5}) {
      Agent agent(arch, k, 128, derive_seed(seed, arch_name(arch), static_cast<std::uint64_t>(k)));
      for (bool policy_net : {true, false}) {
        const std::string name = arch_name(arch) + "-k" + std::to_string(k) +
                                 (policy_net ? "-policy" : "-value");
        report.cases.push_back(check_net(agent, policy_net, k, name,
                                         samples_per_net, step, tolerance,
                                         seed, perturb));
        report.pass = report.pass && report.cases.back().pass;
      }
    }
  }
  return report;
}

}  // namespace cellsched
