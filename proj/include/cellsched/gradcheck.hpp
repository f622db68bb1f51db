#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cellsched/agent.hpp"

namespace cellsched {

struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;
  int params_checked = 0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckCase> cases;
  bool pass = true;
};

// Central finite differences vs the analytic gradients, for the policy and
// value networks of both architectures at K in {2, 5}. Parameters are
// sampled across every layer. The perturb hook corrupts the analytic
// gradients before comparison (used by tests to prove the check can fail).
GradCheckReport run_gradcheck(
    std::uint64_t seed, int samples_per_net = 1200, double tolerance = 1e-4,
    double step = 1e-5,
    const std::function<void(Mlp::Grads&)>& perturb = {});

}  // namespace cellsched
