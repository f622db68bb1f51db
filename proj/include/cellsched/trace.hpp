#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cellsched/env.hpp"

namespace cellsched {

// Recorded exogenous process: per TTI, per UE, the per-RBG achievable rates
// plus the packet arrivals drawn during that TTI's step. Decisions are not
// part of a trace; buffers are re-simulated against it on replay.
class Trace {
 public:
  struct UeRow {
    std::vector<std::int64_t> rates_bits;     // one per RBG
    std::vector<std::int64_t> arrival_sizes;  // packets arriving during the step
  };
  struct TtiRow {
    std::vector<UeRow> ues;
  };

  Trace() = default;
  Trace(const EnvConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {}

  const EnvConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t num_ttis() const { return static_cast<std::int64_t>(rows_.size()); }
  const TtiRow& row(std::int64_t t) const { return rows_[static_cast<std::size_t>(t)]; }

  // Recording interface used by CellEnv.
  void begin_recording();
  void push_rates(const std::vector<std::int64_t>& rates_kxb, int num_ues, int num_rbgs);
  void push_arrivals(int ue, const std::vector<std::int64_t>& sizes);

  // Content hash over config digest, seed and every rate/arrival. Two
  // schedulers replaying the same trace consume identical streams iff their
  // hashes match.
  std::uint64_t content_hash() const;

  void save(const std::string& path) const;
  void save(std::ostream& os) const;
  static Trace load(const std::string& path);
  static Trace load(std::istream& is, const std::string& origin);

  // Run the exogenous process of (cfg, seed) for cfg.duration_ttis TTIs and
  // record it. No scheduler involved: rates and arrivals ignore decisions.
  static Trace record(const EnvConfig& cfg, std::uint64_t seed);

 private:
  EnvConfig cfg_;
  std::uint64_t seed_ = 0;
  std::vector<TtiRow> rows_;
};

}  // namespace cellsched
