#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cellsched/env.hpp"
#include "cellsched/trace.hpp"
#include "test_util.hpp"

using namespace cellsched;

namespace {

EnvConfig base_config(int k = 5, int b = 1) {
  EnvConfig cfg;
  cfg.num_ues = k;
  cfg.num_rbgs = b;
  cfg.duration_ttis = 100;
  cfg.mean_snr_db.assign(static_cast<std::size_t>(k), 10.0);
  return cfg;
}

}  // namespace

TEST_CASE("reset is deterministic and validates its config") {
  EnvConfig cfg = base_config(5, 1);
  cfg.mean_snr_db.clear();  // random deployment, still seed-determined
  CellEnv a(cfg, 7);
  CellEnv b(cfg, 7);
  const std::vector<int> idle{-1};
  for (int t = 0; t < 50; ++t) {
    REQUIRE(a.rates() == b.rates());
    const auto oa = a.observe();
    const auto ob = b.observe();
    for (int u = 0; u < cfg.num_ues; ++u) {
      CHECK(oa[u].estimated_rate == ob[u].estimated_rate);
      CHECK(oa[u].spare_buffer == ob[u].spare_buffer);
      CHECK(oa[u].hol_wait == ob[u].hol_wait);
      CHECK(oa[u].active == ob[u].active);
    }
    const auto sa = a.apply_decision(idle);
    const auto sb = b.apply_decision(idle);
    CHECK(sa.arrived == sb.arrived);
  }

  SUBCASE("zero arrival rate leaves every UE inactive") {
    EnvConfig quiet = base_config(4, 1);
    quiet.traffic.arrival_rate_per_sec = 0.0;
    CellEnv env(quiet, 3);
    for (int t = 0; t < 30; ++t) env.apply_decision(idle);
    for (const auto& o : env.observe()) CHECK_FALSE(o.active);
    CHECK_FALSE(env.any_active());
  }

  SUBCASE("invalid configs name the offending field") {
    EnvConfig bad = base_config();
    bad.num_ues = 0;
    bad.mean_snr_db.clear();
    CHECK_THROWS_WITH_AS(CellEnv(bad, 1), doctest::Contains("num_ues"),
                         ConfigError);
    bad = base_config();
    bad.num_rbgs = 0;
    CHECK_THROWS_WITH_AS(CellEnv(bad, 1), doctest::Contains("num_rbgs"),
                         ConfigError);
    bad = base_config();
    bad.traffic.tti_ms = 0.0;
    CHECK_THROWS_WITH_AS(CellEnv(bad, 1), doctest::Contains("tti_ms"),
                         ConfigError);
  }
}

TEST_CASE("arrivals: zero rate, overflow accounting, Poisson mean") {
  SUBCASE("zero rate gives zero counts") {
    EnvConfig cfg = base_config(3, 1);
    cfg.traffic.arrival_rate_per_sec = 0.0;
    CellEnv env(cfg, 1);
    for (auto c : env.generate_arrivals()) CHECK(c == 0);
  }

  SUBCASE("arrivals beyond capacity are counted and dropped") {
    EnvConfig cfg = base_config(1, 1);
    cfg.traffic.packet_size_bits = 8000;
    cfg.buffer_capacity_bits = 16000;  // room for exactly 2 packets
    cfg.duration_ttis = 4;
    cfg.ladder = test::flat_ladder(1000);
    // step 0 fills the queue, step 1 brings 3 more packets
    const Trace trace = test::manual_trace(
        cfg, {{1000}, {1000}, {1000}, {1000}},
        {{{8000, 8000}}, {{8000, 8000, 8000}}, {{}}, {{}}});
    CellEnv env(cfg, trace);
    env.apply_decision({-1});
    CHECK(env.buffer(0).queued_bits == 16000);
    const auto out = env.apply_decision({-1});
    CHECK(out.arrived[0] == 3);
    CHECK(out.dropped_overflow[0] == 3);
    CHECK(env.buffer(0).arrived_packets == 5);
    CHECK(env.buffer(0).dropped_overflow == 3);
    CHECK(env.buffer(0).queued_bits == 16000);
  }

  SUBCASE("empirical mean arrivals match the configured rate") {
    EnvConfig cfg = base_config(5, 1);
    cfg.traffic.arrival_rate_per_sec = 200.0;  // 0.2 packets per 1 ms TTI
    cfg.buffer_capacity_bits = 8000;           // drops do not affect counts
    CellEnv env(cfg, 123);
    std::int64_t total = 0;
    const int ttis = 1000000;
    for (int t = 0; t < ttis; ++t) {
      for (auto c : env.generate_arrivals()) total += c;
    }
    const double mean = static_cast<double>(total) / (5.0 * ttis);
    CHECK(std::abs(mean - 0.2) < 0.01);
  }
}

TEST_CASE("expiry: strict age boundary, FIFO preserved") {
  EnvConfig cfg = base_config(1, 1);
  cfg.traffic.max_delay_ttis = 5;
  cfg.traffic.arrival_rate_per_sec = 0.0;
  cfg.duration_ttis = 20;
  cfg.ladder = test::flat_ladder(100);
  // one packet arrives during step 0 (stamped TTI 1)
  std::vector<std::vector<std::int64_t>> rates(20, {100});
  std::vector<std::vector<std::vector<std::int64_t>>> arrivals(
      20, {std::vector<std::int64_t>{}});
  arrivals[0] = {{8000}};
  const Trace trace = test::manual_trace(cfg, rates, arrivals);
  CellEnv env(cfg, trace);

  SUBCASE("empty buffers expire nothing") {
    CHECK(env.expire_packets()[0] == 0);
  }

  // age at the step-t check is t - 1; it exceeds max_delay=5 first at t=7
  for (int t = 0; t < 6; ++t) env.apply_decision({-1});
  CHECK(env.buffer(0).queue.size() == 1);
  CHECK(env.observe()[0].hol_wait == 5);
  env.apply_decision({-1});  // checked at age exactly max_delay: retained
  CHECK(env.buffer(0).queue.size() == 1);
  env.apply_decision({-1});  // age max_delay + 1: gone
  CHECK(env.buffer(0).queue.empty());
  CHECK(env.buffer(0).dropped_expired == 1);
}

TEST_CASE("channel: AR(1) fading and the rate ladder") {
  SUBCASE("full correlation freezes the channel") {
    EnvConfig cfg = base_config(2, 2);
    cfg.fading.correlation = 1.0;
    CellEnv env(cfg, 5);
    const auto first = env.rates();
    for (int t = 0; t < 50; ++t) {
      env.apply_decision({-1, -1});
      CHECK(env.rates() == first);
    }
  }

  SUBCASE("zero correlation gives uncorrelated fading") {
    EnvConfig cfg = base_config(1, 1);
    cfg.fading.correlation = 0.0;
    CellEnv env(cfg, 11);
    double prev = env.fading_state(0, 0);
    double sum_xy = 0.0, sum_x = 0.0, sum_xx = 0.0;
    const int n = 100000;
    for (int t = 0; t < n; ++t) {
      env.advance_channel();
      const double cur = env.fading_state(0, 0);
      sum_xy += prev * cur;
      sum_x += prev;
      sum_xx += prev * prev;
      prev = cur;
    }
    const double mean = sum_x / n;
    const double autocorr =
        (sum_xy / n - mean * mean) / (sum_xx / n - mean * mean);
    CHECK(std::abs(autocorr) < 0.02);
  }

  SUBCASE("deep fades earn zero rate") {
    EnvConfig cfg = base_config(1, 1);
    cfg.mean_snr_db = {-100.0};
    CellEnv env(cfg, 2);
    CHECK(env.achievable_rate(0, 0) == 0);
  }

  SUBCASE("ladder lookup is monotone in SNR") {
    const RateLadder ladder = RateLadder::lte_like();
    CHECK(ladder.rate_at(-20.0) == 0);
    CHECK(ladder.rate_at(100.0) == ladder.top_rate());
    std::int64_t prev = -1;
    for (double snr = -10.0; snr <= 25.0; snr += 0.25) {
      const std::int64_t r = ladder.rate_at(snr);
      CHECK(r >= prev);
      prev = r;
    }
  }
}

TEST_CASE("apply_decision: min rule, partial packets, contracts") {
  EnvConfig cfg = base_config(2, 1);
  cfg.traffic.arrival_rate_per_sec = 0.0;
  cfg.traffic.packet_size_bits = 10000;
  cfg.duration_ttis = 10;
  cfg.ladder = test::flat_ladder(8000);
  std::vector<std::vector<std::int64_t>> rates(10, {8000, 8000});
  std::vector<std::vector<std::vector<std::int64_t>>> arrivals(
      10, {std::vector<std::int64_t>{}, std::vector<std::int64_t>{}});
  arrivals[0] = {{10000}, {10000}};
  const Trace trace = test::manual_trace(cfg, rates, arrivals);

  SUBCASE("rate-limited transmission leaves the HoL remainder") {
    CellEnv env(cfg, trace);
    env.apply_decision({-1});  // deliver the arrivals
    const auto out = env.apply_decision({0});
    CHECK(out.delivered_bits[0] == 8000);
    CHECK(out.delivered_packets[0] == 0);  // not fully drained yet
    CHECK(env.buffer(0).queued_bits == 2000);
    CHECK(env.buffer(0).queue.front().remaining_bits == 2000);
    const auto next = env.apply_decision({0});
    CHECK(next.delivered_bits[0] == 2000);
    CHECK(next.delivered_packets[0] == 1);
    CHECK(env.buffer(0).transmitted_packets == 1);
  }

  SUBCASE("all-idle decisions move packets only through arrivals/expiry") {
    CellEnv env(cfg, trace);
    env.apply_decision({-1});
    const std::int64_t queued = env.buffer(0).queued_bits;
    const auto out = env.apply_decision({-1});
    CHECK(out.total_delivered_bits() == 0);
    CHECK(env.buffer(0).queued_bits == queued);
  }

  SUBCASE("granting an inactive UE is a contract violation") {
    CellEnv env(cfg, trace);
    CHECK_THROWS_AS(env.apply_decision({0}), ContractViolation);  // still empty
  }

  SUBCASE("stepping past the duration is a contract violation") {
    CellEnv env(cfg, trace);
    for (int t = 0; t < 10; ++t) env.apply_decision({-1});
    CHECK(env.done());
    CHECK_THROWS_AS(env.apply_decision({-1}), ContractViolation);
  }
}

TEST_CASE("multi-RBG grants are queue-limited; matrices reject double assignment") {
  EnvConfig cfg = base_config(2, 2);
  cfg.traffic.arrival_rate_per_sec = 0.0;
  cfg.traffic.packet_size_bits = 8000;
  cfg.duration_ttis = 5;
  cfg.ladder = test::flat_ladder(5000);
  std::vector<std::vector<std::int64_t>> rates(5, {5000, 5000, 5000, 5000});
  std::vector<std::vector<std::vector<std::int64_t>>> arrivals(
      5, {std::vector<std::int64_t>{}, std::vector<std::int64_t>{}});
  arrivals[0] = {{8000}, {8000}};
  const Trace trace = test::manual_trace(cfg, rates, arrivals);

  SUBCASE("both RBGs to one UE deliver min(rate sum, queue)") {
    CellEnv env(cfg, trace);
    env.apply_decision({-1, -1});
    const auto out = env.apply_decision({0, 0});
    CHECK(out.delivered_bits[0] == 8000);  // queue-limited below 10000
    CHECK(out.delivered_packets[0] == 1);
  }

  SUBCASE("decision matrix with a doubly assigned RBG throws") {
    CellEnv env(cfg, trace);
    env.apply_decision({-1, -1});
    // K x B matrix: RBG 0 assigned to both UEs
    const std::vector<std::uint8_t> d{1, 0, 1, 0};
    CHECK_THROWS_WITH_AS(env.apply_decision_matrix(d),
                         doctest::Contains("more than one"), ContractViolation);
    const std::vector<std::uint8_t> ok{1, 0, 0, 1};
    const auto out = env.apply_decision_matrix(ok);
    CHECK(out.delivered_bits[0] == 5000);
    CHECK(out.delivered_bits[1] == 5000);
  }
}

TEST_CASE("observations expose the four features and the active mask") {
  EnvConfig cfg = base_config(2, 1);
  cfg.traffic.arrival_rate_per_sec = 0.0;
  cfg.duration_ttis = 10;
  cfg.ladder = test::flat_ladder(1000);
  std::vector<std::vector<std::int64_t>> rates(10, {1000, 1000});
  std::vector<std::vector<std::vector<std::int64_t>>> arrivals(
      10, {std::vector<std::int64_t>{}, std::vector<std::int64_t>{}});
  arrivals[0] = {{8000}, {}};
  const Trace trace = test::manual_trace(cfg, rates, arrivals);
  CellEnv env(cfg, trace);

  SUBCASE("fresh environments are fully inactive") {
    for (const auto& o : env.observe()) {
      CHECK_FALSE(o.active);
      CHECK(o.spare_buffer == static_cast<double>(cfg.buffer_capacity_bits));
      CHECK(o.hol_wait == 0.0);
    }
  }

  SUBCASE("HoL wait counts TTIs since arrival") {
    for (int t = 0; t < 4; ++t) env.apply_decision({-1});
    const auto obs = env.observe();  // arrival stamped TTI 1, now at TTI 4
    CHECK(obs[0].active);
    CHECK(obs[0].hol_wait == 3.0);
    CHECK(obs[0].spare_buffer ==
          static_cast<double>(cfg.buffer_capacity_bits - 8000));
    CHECK_FALSE(obs[1].active);
  }
}

TEST_CASE("packet ledger balances exactly at every TTI") {
  EnvConfig cfg = base_config(4, 2);
  cfg.traffic.arrival_rate_per_sec = 2000.0;  // stress arrivals
  cfg.buffer_capacity_bits = 40000;           // force overflow
  cfg.traffic.max_delay_ttis = 10;            // force expiry
  cfg.duration_ttis = 3000;
  cfg.mean_snr_db = {14.0, 8.0, 2.0, -4.0};
  CellEnv env(cfg, 99);
  Rng rng(4242);
  while (!env.done()) {
    std::vector<int> grants(2, -1);
    const auto obs = env.observe();
    for (int b = 0; b < 2; ++b) {
      const int ue = static_cast<int>(rng.uniform_int(4));
      if (obs[static_cast<std::size_t>(ue)].active)
        grants[static_cast<std::size_t>(b)] = ue;
    }
    env.apply_decision(grants);
    for (int ue = 0; ue < 4; ++ue) {
      const RlcBuffer& buf = env.buffer(ue);
      CHECK(buf.arrived_packets ==
            static_cast<std::int64_t>(buf.queue.size()) +
                buf.transmitted_packets + buf.dropped_overflow +
                buf.dropped_expired);
      CHECK(buf.queued_bits <= buf.capacity_bits);
      CHECK(buf.queued_bits >= 0);
    }
  }
  const auto obs = env.observe();
  for (int ue = 0; ue < 4; ++ue)
    CHECK(obs[static_cast<std::size_t>(ue)].active == !env.buffer(ue).empty());
}
