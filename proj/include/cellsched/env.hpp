#pragma once

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellsched/rng.hpp"

namespace cellsched {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller broke an interface contract (invalid grant, stepping a finished
// environment, ...). Maps to exit code 2 in the CLI.
struct ContractViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Packet {
  std::int64_t size_bits = 0;
  std::int64_t remaining_bits = 0;  // partial transmission leaves the rest at HoL
  std::int64_t arrival_tti = 0;
};

// Per-UE FIFO queue at the base station plus the packet ledger. At any point
// arrived == queued + transmitted + dropped_overflow + dropped_expired.
struct RlcBuffer {
  std::deque<Packet> queue;
  std::int64_t capacity_bits = 0;
  std::int64_t queued_bits = 0;
  std::int64_t arrived_packets = 0;
  std::int64_t transmitted_packets = 0;
  std::int64_t dropped_overflow = 0;
  std::int64_t dropped_expired = 0;

  bool empty() const { return queue.empty(); }
  std::int64_t spare_bits() const { return capacity_bits - queued_bits; }
};

// SNR -> bits/TTI/RBG lookup standing in for AMC. Thresholds strictly
// increasing, rates nondecreasing.
struct RateLadder {
  std::vector<double> thresholds_db;
  std::vector<std::int64_t> rates_bits;

  std::int64_t rate_at(double snr_db) const {
    std::int64_t r = 0;
    for (std::size_t i = 0; i < thresholds_db.size(); ++i) {
      if (snr_db >= thresholds_db[i]) r = rates_bits[i];
    }
    return r;
  }
  std::int64_t top_rate() const {
    return rates_bits.empty() ? 0 : rates_bits.back();
  }

  // 15 steps, 2 dB apart from -6 dB, spectral efficiencies 0.15..5.55
  // bits/symbol scaled by the resource elements carried per RBG per TTI.
  static RateLadder lte_like(int resource_elements_per_rbg = 1008);
};

struct FadingConfig {
  double correlation = 0.98;  // AR(1) coefficient, in [0, 1]
  double std_db = 3.0;        // fading scale applied to the unit-variance process
};

struct TrafficConfig {
  double arrival_rate_per_sec = 200.0;
  double tti_ms = 1.0;
  std::int64_t packet_size_bits = 8000;
  std::int64_t max_delay_ttis = 2000;

  double mean_arrivals_per_tti() const {
    return arrival_rate_per_sec * tti_ms * 1e-3;
  }
};

struct EnvConfig {
  int num_ues = 5;                  // K
  int num_rbgs = 1;                 // B
  std::int64_t duration_ttis = 500; // scheduling duration N
  std::int64_t buffer_capacity_bits = 1000000;
  TrafficConfig traffic;
  FadingConfig fading;
  RateLadder ladder = RateLadder::lte_like();
  // Per-UE mean SNR. Empty => drawn uniformly from [snr_low_db, snr_high_db]
  // at reset, so differently seeded environments get different deployments.
  std::vector<double> mean_snr_db;
  double snr_low_db = 0.0;
  double snr_high_db = 20.0;
  int avg_rate_window = 100;  // W for the delivered-rate tracker

  void validate() const;  // throws ConfigError naming the offending field
};

// One UE's state features. Raw units here; normalized() maps them to the
// ~[0,1] ranges the networks consume.
struct UeObservation {
  double estimated_rate = 0.0;  // bits/TTI
  double average_rate = 0.0;    // bits/TTI, windowed delivered rate
  double spare_buffer = 0.0;    // bits
  double hol_wait = 0.0;        // TTIs, 0 when empty
  bool active = false;
};

struct ObservationScales {
  double rate = 1.0;
  double buffer = 1.0;
  double wait = 1.0;
};

inline void write_features(const UeObservation& o, const ObservationScales& s,
                           double* out4) {
  out4[0] = o.estimated_rate / s.rate;
  out4[1] = o.average_rate / s.rate;
  out4[2] = o.spare_buffer / s.buffer;
  out4[3] = o.hol_wait / s.wait;
}

// What one TTI did, per UE. Feeds the KPI window and the packet ledger tests.
struct StepOutcome {
  std::int64_t tti = 0;  // the TTI the decision was applied at
  std::vector<std::int64_t> delivered_bits;
  std::vector<std::int64_t> delivered_packets;
  std::vector<std::int64_t> arrived;
  std::vector<std::int64_t> dropped_overflow;
  std::vector<std::int64_t> dropped_expired;

  std::int64_t total_delivered_bits() const;
  std::int64_t total_dropped() const;
};

class Trace;

// Single-cell TTI-stepped downlink environment. One instance is strictly
// single-threaded; independent instances with derived seeds may run in
// parallel workers.
class CellEnv {
 public:
  // Live mode: channel and arrivals generated from the seed.
  CellEnv(const EnvConfig& cfg, std::uint64_t seed);
  // Replay mode: channel and arrivals read from a recorded trace. The trace
  // must outlive the environment. Buffer dynamics are re-simulated, so
  // different decision streams produce different outcomes on the same trace.
  CellEnv(const EnvConfig& cfg, const Trace& trace);

  // Back to TTI 0 with the same seed (or trace): bit-identical evolution.
  void reset();
  // Fresh exogenous realization for the next episode (live mode only).
  void reseed(std::uint64_t seed);

  const EnvConfig& config() const { return cfg_; }
  int num_ues() const { return cfg_.num_ues; }
  int num_rbgs() const { return cfg_.num_rbgs; }
  std::int64_t tti() const { return tti_; }
  bool done() const { return tti_ >= cfg_.duration_ttis; }
  bool replay() const { return trace_ != nullptr; }

  std::int64_t achievable_rate(int ue, int rbg) const;
  // K x B, row-major
  const std::vector<std::int64_t>& rates() const { return rates_; }

  std::vector<UeObservation> observe() const;
  bool any_active() const;
  // scales for TTI-level (RBG-aggregated) observations
  ObservationScales scales() const;
  // scales for per-RBG planner views
  ObservationScales rbg_scales() const;

  // Apply one TTI's grants (rbg -> ue, -1 = idle RBG), then run the
  // transmit -> expire -> arrive -> channel-advance step and move the clock.
  // Throws ContractViolation for grants to inactive UEs or out-of-range
  // indices, or when the scheduling duration is over.
  StepOutcome apply_decision(const std::vector<int>& rbg_to_ue);
  // Same step but from a K x B 0/1 matrix; rejects RBG double-assignment.
  StepOutcome apply_decision_matrix(const std::vector<std::uint8_t>& d);

  const RlcBuffer& buffer(int ue) const { return buffers_[ue]; }
  double average_rate_tracker(int ue) const { return avg_rate_[ue]; }
  const std::vector<double>& deployment_snr_db() const { return snr_db_; }
  double fading_state(int ue, int rbg) const {
    return fading_[static_cast<std::size_t>(ue) * cfg_.num_rbgs + rbg];
  }

  // Exposed step phases (apply_decision composes them in this order after
  // the transmit phase). Standalone calls are for tests and tools.
  std::vector<std::int64_t> expire_packets();
  std::vector<std::int64_t> generate_arrivals();
  void advance_channel();

  // When set, rates and arrivals are appended as they are produced.
  void attach_recorder(Trace* recorder);

 private:
  void init_storage();
  void draw_deployment();
  void draw_stationary_fading();
  void refresh_rates();
  void record_rates_row();
  std::int64_t transmit(int ue, std::int64_t budget_bits, StepOutcome& out);
  void update_avg_rate(const StepOutcome& out, const std::vector<bool>& was_active);

  EnvConfig cfg_;
  std::uint64_t seed_ = 0;
  const Trace* trace_ = nullptr;
  Trace* recorder_ = nullptr;

  std::int64_t tti_ = 0;
  std::int64_t arrivals_consumed_ = 0;  // arrival batches drawn/replayed so far
  std::vector<RlcBuffer> buffers_;
  std::vector<double> snr_db_;     // per UE mean
  std::vector<double> fading_;     // K x B, unit-variance AR(1) state
  std::vector<std::int64_t> rates_;  // K x B, bits/TTI
  std::vector<double> avg_rate_;   // per UE delivered-rate tracker

  Rng rng_arrivals_{0};
  Rng rng_fading_{0};
  Rng rng_deploy_{0};
};

}  // namespace cellsched
