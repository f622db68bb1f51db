#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "cellsched/a2c.hpp"
#include "test_util.hpp"

using namespace cellsched;

namespace {

// always-backlogged two-UE cell: UE0's rate is exactly twice UE1's
EnvConfig toy_env(std::int64_t n_ttis = 40) {
  EnvConfig cfg;
  cfg.num_ues = 2;
  cfg.num_rbgs = 1;
  cfg.duration_ttis = n_ttis;
  cfg.traffic.arrival_rate_per_sec = 4000.0;  // 4 packets/TTI >> service rate
  cfg.traffic.packet_size_bits = 8000;
  cfg.buffer_capacity_bits = 10000000;
  cfg.traffic.max_delay_ttis = 1000000;
  cfg.fading.std_db = 0.0;
  cfg.fading.correlation = 1.0;
  cfg.ladder.thresholds_db = {-50.0, 0.0};
  cfg.ladder.rates_bits = {1000, 2000};
  cfg.mean_snr_db = {10.0, -10.0};  // rates 2000 and 1000
  return cfg;
}

TrainConfig toy_train() {
  TrainConfig cfg;
  cfg.hidden_base = 16;
  cfg.num_envs = 2;
  cfg.n_steps = 8;
  cfg.eval_every = 1000000;  // keep unit tests free of eval overhead
  cfg.reward = RewardWeights{1.0, 0.0, 0.0};
  return cfg;
}

Trajectory reward_only_trajectory(const std::vector<double>& rewards,
                                  int terminal_at = -1) {
  Trajectory traj;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    TtiStep step;
    step.reward = rewards[i];
    step.terminal = static_cast<int>(i) == terminal_at;
    traj.steps.push_back(step);
  }
  traj.has_bootstrap = false;
  return traj;
}

}  // namespace

TEST_CASE("n-step returns follow the discounted-sum definition") {
  SUBCASE("gamma = 0 reduces to the immediate reward") {
    const auto traj = reward_only_trajectory({1.0, 2.0, 3.0});
    const auto r = A2cTrainer::n_step_returns(traj, {5.0, 6.0, 7.0}, 0.0, 0.0, 4);
    CHECK(r[0] == doctest::Approx(1.0));
    CHECK(r[1] == doctest::Approx(2.0));
    CHECK(r[2] == doctest::Approx(3.0));
  }

  SUBCASE("one-step TD bootstraps the next state") {
    // r=1, gamma=0.9, V(s')=2: return 1 + 1.8; advantage vs V(s)=1 is 1.8
    const auto traj = reward_only_trajectory({1.0, 0.0});
    const auto r = A2cTrainer::n_step_returns(traj, {1.0, 2.0}, 0.0, 0.9, 1);
    CHECK(r[0] == doctest::Approx(2.8));
    CHECK(r[0] - 1.0 == doctest::Approx(1.8));
  }

  SUBCASE("terminal steps never bootstrap") {
    auto traj = reward_only_trajectory({0.5, 9.0}, /*terminal_at=*/0);
    const auto r = A2cTrainer::n_step_returns(traj, {3.0, 4.0}, 0.0, 0.9, 5);
    CHECK(r[0] == doctest::Approx(0.5));  // no value, no next episode reward
  }

  SUBCASE("rewards never leak across an episode boundary") {
    auto traj = reward_only_trajectory({1.0, 1.0, 100.0}, /*terminal_at=*/1);
    const auto r = A2cTrainer::n_step_returns(traj, {0.0, 0.0, 0.0}, 0.0, 0.5, 8);
    CHECK(r[0] == doctest::Approx(1.0 + 0.5 * 1.0));
    CHECK(r[1] == doctest::Approx(1.0));
  }

  SUBCASE("constant reward matches the closed form against a brute oracle") {
    const double gamma = 0.9;
    const double reward = 0.37;
    for (int horizon : {1, 3, 20}) {
      for (int len : {1, 5, 12}) {
        std::vector<double> rewards(static_cast<std::size_t>(len), reward);
        auto traj = reward_only_trajectory(rewards, len - 1);
        const auto r = A2cTrainer::n_step_returns(
            traj, std::vector<double>(static_cast<std::size_t>(len), 0.0), 0.0,
            gamma, horizon);
        for (int t = 0; t < len; ++t) {
          // independent oracle: brute-force discounted sum
          double brute = 0.0;
          double disc = 1.0;
          for (int i = t; i < len && i - t < horizon; ++i) {
            brute += disc * reward;
            disc *= gamma;
          }
          CHECK(r[static_cast<std::size_t>(t)] == doctest::Approx(brute).epsilon(1e-12));
          // closed form r*(1-gamma^m)/(1-gamma)
          const int m = std::min(horizon, len - t);
          CHECK(r[static_cast<std::size_t>(t)] ==
                doctest::Approx(reward * (1.0 - std::pow(gamma, m)) / (1.0 - gamma))
                    .epsilon(1e-12));
        }
      }
    }
  }

  SUBCASE("batch tails bootstrap from the stored post-batch state value") {
    auto traj = reward_only_trajectory({1.0, 1.0});
    traj.has_bootstrap = true;
    traj.bootstrap_features = {0.0};  // value passed directly below
    const auto r = A2cTrainer::n_step_returns(traj, {0.0, 0.0}, 10.0, 0.5, 4);
    CHECK(r[0] == doctest::Approx(1.0 + 0.5 + 0.25 * 10.0));
    CHECK(r[1] == doctest::Approx(1.0 + 0.5 * 10.0));
  }
}

TEST_CASE("policy logit gradient: entropy-only when advantages vanish") {
  const std::vector<double> probs{0.5, 0.3, 0.2};

  SUBCASE("zero advantage and zero entropy weight move nothing") {
    const auto g = policy_logit_gradient(probs, 1, 0.0, 0.0);
    for (double v : g) CHECK(v == 0.0);
  }

  SUBCASE("zero advantage leaves only the entropy term") {
    const auto g = policy_logit_gradient(probs, 1, 0.0, 0.03);
    const double h = entropy(probs);
    for (std::size_t k = 0; k < probs.size(); ++k)
      CHECK(g[k] == doctest::Approx(0.03 * probs[k] * (std::log(probs[k]) + h))
                        .epsilon(1e-12));
  }

  SUBCASE("positive advantage pushes probability toward the action") {
    const auto g = policy_logit_gradient(probs, 0, 2.0, 0.0);
    CHECK(g[0] < 0.0);  // descent on -J raises the chosen logit
    CHECK(g[1] > 0.0);
    CHECK(g[2] > 0.0);
  }
}

TEST_CASE("sample_batch shapes, determinism, and experience counts") {
  const EnvConfig env = toy_env();

  SUBCASE("n = 1 gives one step per trajectory") {
    TrainConfig cfg = toy_train();
    cfg.n_steps = 1;
    A2cTrainer trainer(env, cfg, 3);
    const auto batch = trainer.sample_batch();
    REQUIRE(batch.size() == 2);
    for (const auto& traj : batch) CHECK(traj.steps.size() == 1);
  }

  SUBCASE("4 envs x 20 steps give 80 experiences on busy traffic") {
    TrainConfig cfg = toy_train();
    cfg.num_envs = 4;
    cfg.n_steps = 20;
    A2cTrainer trainer(env, cfg, 3);
    trainer.sample_batch();  // warm-up: the very first TTI has empty buffers
    const auto batch = trainer.sample_batch();
    int experiences = 0;
    for (const auto& traj : batch)
      for (const auto& step : traj.steps)
        experiences += static_cast<int>(step.subs.size());
    CHECK(experiences == 80);
  }

  SUBCASE("same seed and config reproduce the batch exactly") {
    TrainConfig cfg = toy_train();
    A2cTrainer a(env, cfg, 11);
    A2cTrainer b(env, cfg, 11);
    for (int round = 0; round < 3; ++round) {
      const auto ba = a.sample_batch();
      const auto bb = b.sample_batch();
      REQUIRE(ba.size() == bb.size());
      for (std::size_t e = 0; e < ba.size(); ++e) {
        REQUIRE(ba[e].steps.size() == bb[e].steps.size());
        for (std::size_t t = 0; t < ba[e].steps.size(); ++t) {
          CHECK(ba[e].steps[t].reward == bb[e].steps[t].reward);
          REQUIRE(ba[e].steps[t].subs.size() == bb[e].steps[t].subs.size());
          for (std::size_t s = 0; s < ba[e].steps[t].subs.size(); ++s)
            CHECK(ba[e].steps[t].subs[s].action == bb[e].steps[t].subs[s].action);
        }
      }
      a.apply_update(ba);
      b.apply_update(bb);
    }
  }

  SUBCASE("episodes terminate at the scheduling duration and reset") {
    TrainConfig cfg = toy_train();
    cfg.n_steps = 100;  // spans two 40-TTI episodes
    cfg.num_envs = 1;
    A2cTrainer trainer(env, cfg, 5);
    const auto batch = trainer.sample_batch();
    int terminals = 0;
    for (const auto& step : batch[0].steps) terminals += step.terminal ? 1 : 0;
    CHECK(terminals == 2);
    CHECK(batch[0].steps[39].terminal);
    CHECK(batch[0].steps[79].terminal);
  }
}

TEST_CASE("update statistics: uniform policy entropy is ln(#active)") {
  const EnvConfig env = toy_env();
  TrainConfig cfg = toy_train();
  cfg.entropy_weight = 0.0;
  A2cTrainer trainer(env, cfg, 7);
  test::zero_net(trainer.agent().policy_net());
  trainer.sample_batch();  // warm up so both UEs are backlogged
  const auto batch = trainer.sample_batch();
  const auto stats = trainer.apply_update(batch);
  CHECK(stats.num_experiences > 0);
  CHECK(stats.entropy_mean == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("multi-RBG rollout reuses the policy with provisional state") {
  EnvConfig cfg = toy_env();
  cfg.num_rbgs = 5;

  SUBCASE("a lone active UE receives every RBG") {
    EnvConfig lone = cfg;
    lone.duration_ttis = 6;
    lone.traffic.arrival_rate_per_sec = 0.0;
    std::vector<std::vector<std::int64_t>> rates(
        6, std::vector<std::int64_t>(10, 1000));
    std::vector<std::vector<std::vector<std::int64_t>>> arrivals(
        6, {std::vector<std::int64_t>{}, std::vector<std::int64_t>{}});
    arrivals[0] = {{8000, 8000}, {}};
    const Trace trace = test::manual_trace(lone, rates, arrivals);
    CellEnv env(lone, trace);
    env.apply_decision({-1, -1, -1, -1, -1});
    Agent agent(ArchKind::Scalable, 0, 8, 2);
    const auto grants = drl_decide_tti(agent, env, nullptr);
    CHECK(grants == std::vector<int>(5, 0));
  }

  SUBCASE("draining a buffer masks the UE for later RBGs in the same TTI") {
    EnvConfig small = toy_env();
    small.num_rbgs = 2;
    small.duration_ttis = 6;
    small.traffic.arrival_rate_per_sec = 0.0;
    std::vector<std::vector<std::int64_t>> rates(
        6, std::vector<std::int64_t>{8000, 8000, 6000, 6000});
    std::vector<std::vector<std::vector<std::int64_t>>> arrivals(
        6, {std::vector<std::int64_t>{}, std::vector<std::int64_t>{}});
    arrivals[0] = {{4000}, {8000, 8000}};
    const Trace trace = test::manual_trace(small, rates, arrivals);
    CellEnv env(small, trace);
    env.apply_decision({-1, -1});
    // zero policy: ties break toward UE0 greedy; UE0 drains at RBG0
    Agent agent(ArchKind::Scalable, 0, 8, 2);
    test::zero_net(agent.policy_net());
    std::vector<Experience> record;
    const auto grants = drl_decide_tti(agent, env, nullptr, &record);
    CHECK(grants == std::vector<int>{0, 1});
    REQUIRE(record.size() == 2);
    CHECK(record[1].active == std::vector<bool>{false, true});
  }

  SUBCASE("B = 1 degenerates to a single decision") {
    EnvConfig single = toy_env(6);
    CellEnv env(single, 3);
    env.apply_decision({-1});
    Agent agent(ArchKind::Scalable, 0, 8, 2);
    const auto grants = drl_decide_tti(agent, env, nullptr);
    CHECK(grants.size() == 1);
  }
}

TEST_CASE("a positive-advantage bandit update raises the chosen action") {
  // UE0 pays twice UE1's reward; a few updates must tilt the policy to UE0
  const EnvConfig env = toy_env();
  TrainConfig cfg = toy_train();
  cfg.gamma = 0.0;
  cfg.entropy_weight = 0.0;
  cfg.learning_rate = 0.05;
  A2cTrainer trainer(env, cfg, 13);

  auto mean_p0 = [&]() {
    CellEnv probe(env, 999);
    probe.apply_decision({-1});
    std::vector<Experience> record;
    drl_decide_tti(trainer.agent(), probe, nullptr, &record);
    const auto out = trainer.agent().policy(record[0].features, record[0].active);
    return out.probs[0];
  };

  const double before = mean_p0();
  for (int u = 0; u < 30; ++u) trainer.apply_update(trainer.sample_batch());
  CHECK(mean_p0() > before);
}

TEST_CASE("train with zero updates returns the untouched checkpoint") {
  TrainConfig cfg = toy_train();
  cfg.max_updates = 0;
  A2cTrainer trainer(toy_env(), cfg, 19);
  const auto before = trainer.agent().checkpoint();
  const auto result = trainer.train();
  CHECK(result.updates_run == 0);
  CHECK(trainer.agent().checkpoint() == before);
}

TEST_CASE("virtual-environment training matches live training on the toy cell") {
  const EnvConfig env = toy_env(30);
  TrainConfig cfg = toy_train();
  cfg.gamma = 0.5;
  cfg.learning_rate = 0.03;
  cfg.num_envs = 2;
  const int updates = 150;

  A2cTrainer live(env, cfg, 23);
  for (int u = 0; u < updates; ++u) live.apply_update(live.sample_batch());

  std::vector<Trace> traces;
  for (std::uint64_t s = 0; s < 4; ++s)
    traces.push_back(Trace::record(env, derive_seed(23, "virtual", s)));
  A2cTrainer virt(env, cfg, 23, std::move(traces));
  for (int u = 0; u < updates; ++u) virt.apply_update(virt.sample_batch());

  // both agents must prefer the dominant UE on a fresh live state
  auto greedy_share = [&](const Agent& agent) {
    CellEnv probe(env, 12345);
    int picks0 = 0, total = 0;
    while (!probe.done()) {
      const auto grants = drl_decide_tti(agent, probe, nullptr);
      if (grants[0] == 0) ++picks0;
      if (grants[0] >= 0) ++total;
      probe.apply_decision(grants);
    }
    return total > 0 ? static_cast<double>(picks0) / total : 0.0;
  };
  const double live_share = greedy_share(live.agent());
  const double virt_share = greedy_share(virt.agent());
  CHECK(live_share > 0.8);
  CHECK(virt_share > 0.8);
}

TEST_CASE("an env contract violation aborts the batch with a diagnostic") {
  EnvConfig env = toy_env(10);
  TrainConfig cfg = toy_train();
  cfg.n_steps = 30;
  A2cTrainer trainer(env, cfg, 29);
  // sabotage: shrink the duration mid-flight is impossible through the API,
  // so instead check that non-finite rewards are caught during the update
  auto batch = trainer.sample_batch();
  bool poisoned = false;
  for (auto& step : batch[0].steps) {
    if (!step.subs.empty()) {  // idle steps never reach the gradients
      step.reward = std::numeric_limits<double>::quiet_NaN();
      poisoned = true;
      break;
    }
  }
  REQUIRE(poisoned);
  CHECK_THROWS_AS(trainer.apply_update(batch), ContractViolation);
}
