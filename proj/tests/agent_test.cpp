#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "cellsched/agent.hpp"
#include "test_util.hpp"

using namespace cellsched;

namespace {

std::vector<double> random_features(int k, Rng& rng) {
  std::vector<double> f(static_cast<std::size_t>(k) * Agent::kFeaturesPerUe);
  for (auto& v : f) v = rng.uniform();
  return f;
}

}  // namespace

TEST_CASE("one-pass policy: uniform at zero weights, masking, fixed K") {
  Agent agent(ArchKind::OnePass, 4, 16, 5);
  test::zero_net(agent.policy_net());
  Rng rng(1);
  const auto features = random_features(4, rng);

  SUBCASE("zero net spreads probability uniformly over active UEs") {
    const auto out = agent.policy(features, {true, true, true, true});
    for (double p : out.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
  }

  SUBCASE("a single active UE gets everything") {
    const auto out = agent.policy(features, {false, false, true, false});
    CHECK(out.probs[2] == doctest::Approx(1.0));
    CHECK(out.probs[0] + out.probs[1] + out.probs[3] <= 1e-6);
  }

  SUBCASE("masked probability stays negligible even with a hot logit") {
    Agent hot(ArchKind::OnePass, 2, 8, 6);
    test::zero_net(hot.policy_net());
    hot.policy_net().layers().back().b = {10.0, 0.0};  // UE0 logit +10
    const auto out = hot.policy(random_features(2, rng), {false, true});
    CHECK(out.probs[0] <= 1e-6);
    CHECK(out.probs[1] == doctest::Approx(1.0));
  }

  SUBCASE("wrong K is a contract violation") {
    CHECK_THROWS_AS(agent.policy(random_features(5, rng),
                                 {true, true, true, true, true}),
                    ContractViolation);
    CHECK_THROWS_AS(agent.value(random_features(5, rng), 5), ContractViolation);
  }

  SUBCASE("an all-inactive mask is rejected") {
    CHECK_THROWS_AS(agent.policy(features, {false, false, false, false}),
                    ContractViolation);
  }
}

TEST_CASE("scalable policy: shared weights, equivariance, any K") {
  Agent agent(ArchKind::Scalable, 0, 32, 17);
  Rng rng(2);

  SUBCASE("identical states give a uniform distribution") {
    std::vector<double> features;
    const std::vector<double> one{0.3, 0.5, 0.8, 0.1};
    for (int u = 0; u < 6; ++u)
      features.insert(features.end(), one.begin(), one.end());
    const auto out =
        agent.policy(features, std::vector<bool>(6, true));
    for (double p : out.probs)
      CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  }

  SUBCASE("permuting UE states permutes the output probabilities") {
    for (int trial = 0; trial < 50; ++trial) {
      const int k = 2 + static_cast<int>(rng.uniform_int(8));
      const auto features = random_features(k, rng);
      std::vector<bool> active(static_cast<std::size_t>(k), true);
      active[rng.uniform_int(static_cast<std::uint64_t>(k))] = false;
      bool any = false;
      for (bool a : active) any = any || a;
      if (!any) continue;
      std::vector<int> perm(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) perm[static_cast<std::size_t>(i)] = i;
      for (int i = k - 1; i > 0; --i)
        std::swap(perm[static_cast<std::size_t>(i)],
                  perm[rng.uniform_int(static_cast<std::uint64_t>(i + 1))]);

      std::vector<double> pf(static_cast<std::size_t>(k) * 4);
      std::vector<bool> pa(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) {
        const int src = perm[static_cast<std::size_t>(i)];
        std::copy_n(features.begin() + src * 4, 4, pf.begin() + i * 4);
        pa[static_cast<std::size_t>(i)] = active[static_cast<std::size_t>(src)];
      }
      const auto base = agent.policy(features, active);
      const auto permuted = agent.policy(pf, pa);
      for (int i = 0; i < k; ++i) {
        CHECK(std::abs(permuted.probs[static_cast<std::size_t>(i)] -
                       base.probs[static_cast<std::size_t>(
                           perm[static_cast<std::size_t>(i)])]) <= 1e-12);
      }
    }
  }

  SUBCASE("one construction serves K=50") {
    const auto features = random_features(50, rng);
    const auto out = agent.policy(features, std::vector<bool>(50, true));
    double sum = 0.0;
    for (double p : out.probs) sum += p;
    CHECK(out.probs.size() == 50);
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("value heads") {
  Rng rng(3);

  SUBCASE("zero net evaluates to zero") {
    Agent agent(ArchKind::Scalable, 0, 16, 4);
    test::zero_net(agent.value_net());
    CHECK(agent.value(random_features(7, rng), 7) == 0.0);
  }

  SUBCASE("identical UE states collapse to the K=1 value") {
    Agent agent(ArchKind::Scalable, 0, 16, 9);
    const std::vector<double> one{0.4, 0.2, 0.9, 0.05};
    std::vector<double> many;
    for (int u = 0; u < 5; ++u) many.insert(many.end(), one.begin(), one.end());
    CHECK(agent.value(many, 5) == doctest::Approx(agent.value(one, 1)).epsilon(1e-12));
  }

  SUBCASE("value is permutation invariant") {
    Agent agent(ArchKind::Scalable, 0, 16, 10);
    auto features = random_features(6, rng);
    const double base = agent.value(features, 6);
    std::vector<double> rotated(features.size());
    std::rotate_copy(features.begin(), features.begin() + 4, features.end(),
                     rotated.begin());
    CHECK(agent.value(rotated, 6) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("action sampling") {
  PolicyOutput out;
  out.probs = {1.0, 0.0, 0.0};
  out.logits = {0.0, 0.0, 0.0};
  out.active = {true, true, true};
  Rng rng(5);
  for (int i = 0; i < 100; ++i) CHECK(out.sample(rng) == 0);

  SUBCASE("greedy picks the mode") {
    PolicyOutput g;
    g.probs = {0.2, 0.5, 0.3};
    g.active = {true, true, true};
    CHECK(g.greedy() == 1);
  }

  SUBCASE("empirical frequencies match a uniform distribution") {
    PolicyOutput u;
    u.probs = {0.25, 0.25, 0.25, 0.25};
    u.active = {true, true, true, true};
    std::vector<int> counts(4, 0);
    const int draws = 100000;
    Rng r(12);
    for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(u.sample(r))];
    for (int a = 0; a < 4; ++a) {
      const double freq = static_cast<double>(counts[static_cast<std::size_t>(a)]) / draws;
      CHECK(std::abs(freq - 0.25) < 0.01);
    }
  }

  SUBCASE("sampling never returns an inactive UE") {
    PolicyOutput m;
    m.probs = {0.5, 0.0, 0.5};
    m.active = {true, false, true};
    Rng r(77);
    for (int i = 0; i < 1000; ++i) CHECK(m.sample(r) != 1);
  }
}

TEST_CASE("checkpoints round-trip and reject mismatched shapes") {
  const std::string dir = (std::filesystem::temp_directory_path() /
                           "cellsched_agent_test").string();
  std::filesystem::create_directories(dir);

  Agent agent(ArchKind::OnePass, 5, 8, 21);
  const std::string path = dir + "/onepass.json";
  agent.save_checkpoint(path);
  const Agent loaded = Agent::load_checkpoint(path);
  CHECK(loaded.arch() == ArchKind::OnePass);
  CHECK(loaded.fixed_num_ues() == 5);
  Rng rng(8);
  std::vector<double> f(20);
  for (auto& v : f) v = rng.uniform();
  const auto a = agent.policy(f, std::vector<bool>(5, true));
  const auto b = loaded.policy(f, std::vector<bool>(5, true));
  CHECK(a.probs == b.probs);

  SUBCASE("tampered shapes are rejected") {
    nlohmann::json j = agent.checkpoint();
    j["num_ues"] = 8;  // declared K no longer matches the stored layers
    CHECK_THROWS_AS(Agent::from_checkpoint(j), ConfigError);
    j = agent.checkpoint();
    j["arch"] = "scalable";  // scalable nets must be 4-in/1-out
    CHECK_THROWS_AS(Agent::from_checkpoint(j), ConfigError);
    j = agent.checkpoint();
    j["version"] = 2;
    CHECK_THROWS_AS(Agent::from_checkpoint(j), ConfigError);
  }

  SUBCASE("missing files and non-checkpoints fail loudly") {
    CHECK_THROWS_AS(Agent::load_checkpoint(dir + "/nope.json"), ConfigError);
    CHECK_THROWS_AS(Agent::from_checkpoint(nlohmann::json{{"format", "?"}}),
                    ConfigError);
  }
}
