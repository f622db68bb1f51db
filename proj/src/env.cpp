#include "cellsched/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cellsched/trace.hpp"

namespace cellsched {

RateLadder RateLadder::lte_like(int resource_elements_per_rbg) {
  // CQI-style spectral efficiencies, bits per resource element.
  static const double kEff[] = {0.1523, 0.2344, 0.3770, 0.6016, 0.8770,
                                1.1758, 1.4766, 1.9141, 2.4063, 2.7305,
                                3.3223, 3.9023, 4.5234, 5.1152, 5.5547};
  RateLadder ladder;
  for (int i = 0; i < 15; ++i) {
    ladder.thresholds_db.push_back(-6.0 + 2.0 * i);
    ladder.rates_bits.push_back(static_cast<std::int64_t>(
        std::floor(kEff[i] * resource_elements_per_rbg)));
  }
  return ladder;
}

void EnvConfig::validate() const {
  if (num_ues < 1) throw ConfigError("env.num_ues must be >= 1");
  if (num_rbgs < 1) throw ConfigError("env.num_rbgs must be >= 1");
  if (duration_ttis < 1) throw ConfigError("env.duration_ttis must be >= 1");
  if (buffer_capacity_bits <= 0)
    throw ConfigError("env.buffer_capacity_bits must be > 0");
  if (traffic.arrival_rate_per_sec < 0.0)
    throw ConfigError("env.arrival_rate_per_sec must be >= 0");
  if (traffic.tti_ms <= 0.0) throw ConfigError("env.tti_ms must be > 0");
  if (traffic.packet_size_bits <= 0)
    throw ConfigError("env.packet_size_bits must be > 0");
  if (traffic.max_delay_ttis < 0)
    throw ConfigError("env.max_delay_ttis must be >= 0");
  if (fading.correlation < 0.0 || fading.correlation > 1.0)
    throw ConfigError("env.fading_correlation must be in [0, 1]");
  if (fading.std_db < 0.0) throw ConfigError("env.fading_std_db must be >= 0");
  if (ladder.thresholds_db.empty() ||
      ladder.thresholds_db.size() != ladder.rates_bits.size())
    throw ConfigError("env.ladder thresholds and rates must be nonempty and equal-length");
  for (std::size_t i = 1; i < ladder.thresholds_db.size(); ++i) {
    if (!(ladder.thresholds_db[i] > ladder.thresholds_db[i - 1]))
      throw ConfigError("env.ladder.thresholds_db must be strictly increasing");
    if (ladder.rates_bits[i] < ladder.rates_bits[i - 1])
      throw ConfigError("env.ladder.rates_bits must be nondecreasing");
  }
  if (ladder.rates_bits.front() < 0)
    throw ConfigError("env.ladder.rates_bits must be nonnegative");
  if (ladder.top_rate() <= 0)
    throw ConfigError("env.ladder top rate must be > 0");
  if (!mean_snr_db.empty() &&
      mean_snr_db.size() != static_cast<std::size_t>(num_ues))
    throw ConfigError("env.mean_snr_db must have one entry per UE");
  if (snr_low_db > snr_high_db)
    throw ConfigError("env.snr_range low must be <= high");
  if (avg_rate_window < 1)
    throw ConfigError("env.avg_rate_window must be >= 1");
}

std::int64_t StepOutcome::total_delivered_bits() const {
  return std::accumulate(delivered_bits.begin(), delivered_bits.end(),
                         std::int64_t{0});
}

std::int64_t StepOutcome::total_dropped() const {
  std::int64_t n = 0;
  for (auto v : dropped_overflow) n += v;
  for (auto v : dropped_expired) n += v;
  return n;
}

CellEnv::CellEnv(const EnvConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), seed_(seed) {
  cfg_.validate();
  init_storage();
  reset();
}

CellEnv::CellEnv(const EnvConfig& cfg, const Trace& trace)
    : cfg_(cfg), seed_(trace.seed()), trace_(&trace) {
  cfg_.validate();
  if (trace.config().num_ues != cfg_.num_ues)
    throw ConfigError("trace UE count does not match env.num_ues");
  if (trace.config().num_rbgs != cfg_.num_rbgs)
    throw ConfigError("trace RBG count does not match env.num_rbgs");
  if (trace.num_ttis() < cfg_.duration_ttis)
    throw ConfigError("trace is shorter than env.duration_ttis");
  init_storage();
  reset();
}

void CellEnv::init_storage() {
  const std::size_t k = static_cast<std::size_t>(cfg_.num_ues);
  const std::size_t kb = k * static_cast<std::size_t>(cfg_.num_rbgs);
  buffers_.assign(k, RlcBuffer{});
  for (auto& b : buffers_) b.capacity_bits = cfg_.buffer_capacity_bits;
  snr_db_.assign(k, 0.0);
  fading_.assign(kb, 0.0);
  rates_.assign(kb, 0);
  avg_rate_.assign(k, 0.0);
}

void CellEnv::reset() {
  tti_ = 0;
  arrivals_consumed_ = 0;
  for (auto& b : buffers_) {
    b.queue.clear();
    b.queued_bits = 0;
    b.arrived_packets = 0;
    b.transmitted_packets = 0;
    b.dropped_overflow = 0;
    b.dropped_expired = 0;
  }
  std::fill(avg_rate_.begin(), avg_rate_.end(), 0.0);
  rng_arrivals_ = Rng(derive_seed(seed_, "env.arrivals"));
  rng_fading_ = Rng(derive_seed(seed_, "env.fading"));
  rng_deploy_ = Rng(derive_seed(seed_, "env.deploy"));
  draw_deployment();
  draw_stationary_fading();
  refresh_rates();
  if (recorder_) {
    recorder_->begin_recording();
    record_rates_row();
  }
}

void CellEnv::reseed(std::uint64_t seed) {
  if (trace_) throw ContractViolation("cannot reseed a replay environment");
  seed_ = seed;
  reset();
}

void CellEnv::attach_recorder(Trace* recorder) {
  if (trace_) throw ContractViolation("cannot record from a replay environment");
  recorder_ = recorder;
}

void CellEnv::draw_deployment() {
  if (!cfg_.mean_snr_db.empty()) {
    snr_db_ = cfg_.mean_snr_db;
    return;
  }
  for (auto& s : snr_db_) {
    s = cfg_.snr_low_db +
        (cfg_.snr_high_db - cfg_.snr_low_db) * rng_deploy_.uniform();
  }
}

void CellEnv::draw_stationary_fading() {
  if (trace_) return;
  for (auto& f : fading_) f = rng_fading_.normal();
}

void CellEnv::refresh_rates() {
  if (trace_) {
    if (tti_ < trace_->num_ttis()) {
      const auto& row = trace_->row(tti_);
      for (int ue = 0; ue < cfg_.num_ues; ++ue)
        for (int b = 0; b < cfg_.num_rbgs; ++b)
          rates_[static_cast<std::size_t>(ue) * cfg_.num_rbgs + b] =
              row.ues[ue].rates_bits[b];
    }
    return;
  }
  for (int ue = 0; ue < cfg_.num_ues; ++ue) {
    for (int b = 0; b < cfg_.num_rbgs; ++b) {
      const std::size_t i = static_cast<std::size_t>(ue) * cfg_.num_rbgs + b;
      const double snr = snr_db_[ue] + cfg_.fading.std_db * fading_[i];
      rates_[i] = cfg_.ladder.rate_at(snr);
    }
  }
}

void CellEnv::record_rates_row() {
  if (recorder_ && tti_ < cfg_.duration_ttis)
    recorder_->push_rates(rates_, cfg_.num_ues, cfg_.num_rbgs);
}

std::int64_t CellEnv::achievable_rate(int ue, int rbg) const {
  if (ue < 0 || ue >= cfg_.num_ues || rbg < 0 || rbg >= cfg_.num_rbgs)
    throw ContractViolation("achievable_rate index out of range");
  return rates_[static_cast<std::size_t>(ue) * cfg_.num_rbgs + rbg];
}

std::vector<UeObservation> CellEnv::observe() const {
  std::vector<UeObservation> obs(static_cast<std::size_t>(cfg_.num_ues));
  for (int ue = 0; ue < cfg_.num_ues; ++ue) {
    auto& o = obs[static_cast<std::size_t>(ue)];
    std::int64_t est = 0;
    for (int b = 0; b < cfg_.num_rbgs; ++b)
      est += rates_[static_cast<std::size_t>(ue) * cfg_.num_rbgs + b];
    const auto& buf = buffers_[static_cast<std::size_t>(ue)];
    o.estimated_rate = static_cast<double>(est);
    o.average_rate = avg_rate_[static_cast<std::size_t>(ue)];
    o.spare_buffer = static_cast<double>(buf.spare_bits());
    o.hol_wait = buf.empty()
                     ? 0.0
                     : static_cast<double>(tti_ - buf.queue.front().arrival_tti);
    o.active = !buf.empty();
  }
  return obs;
}

bool CellEnv::any_active() const {
  for (const auto& b : buffers_)
    if (!b.empty()) return true;
  return false;
}

ObservationScales CellEnv::scales() const {
  return ObservationScales{
      static_cast<double>(cfg_.ladder.top_rate()) * cfg_.num_rbgs,
      static_cast<double>(cfg_.buffer_capacity_bits),
      std::max<double>(1.0, static_cast<double>(cfg_.traffic.max_delay_ttis))};
}

ObservationScales CellEnv::rbg_scales() const {
  return ObservationScales{
      static_cast<double>(cfg_.ladder.top_rate()),
      static_cast<double>(cfg_.buffer_capacity_bits),
      std::max<double>(1.0, static_cast<double>(cfg_.traffic.max_delay_ttis))};
}

std::int64_t CellEnv::transmit(int ue, std::int64_t budget_bits,
                               StepOutcome& out) {
  auto& buf = buffers_[static_cast<std::size_t>(ue)];
  std::int64_t sent = 0;
  while (budget_bits > 0 && !buf.queue.empty()) {
    Packet& hol = buf.queue.front();
    const std::int64_t d = std::min(budget_bits, hol.remaining_bits);
    hol.remaining_bits -= d;
    buf.queued_bits -= d;
    budget_bits -= d;
    sent += d;
    if (hol.remaining_bits == 0) {
      buf.queue.pop_front();
      ++buf.transmitted_packets;
      ++out.delivered_packets[static_cast<std::size_t>(ue)];
    }
  }
  out.delivered_bits[static_cast<std::size_t>(ue)] += sent;
  return sent;
}

std::vector<std::int64_t> CellEnv::expire_packets() {
  std::vector<std::int64_t> expired(static_cast<std::size_t>(cfg_.num_ues), 0);
  const std::int64_t max_delay = cfg_.traffic.max_delay_ttis;
  for (int ue = 0; ue < cfg_.num_ues; ++ue) {
    auto& buf = buffers_[static_cast<std::size_t>(ue)];
    // FIFO order means expired packets form a prefix of the queue.
    while (!buf.queue.empty() &&
           tti_ - buf.queue.front().arrival_tti > max_delay) {
      buf.queued_bits -= buf.queue.front().remaining_bits;
      buf.queue.pop_front();
      ++buf.dropped_expired;
      ++expired[static_cast<std::size_t>(ue)];
    }
  }
  return expired;
}

std::vector<std::int64_t> CellEnv::generate_arrivals() {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(cfg_.num_ues), 0);
  const double mean = cfg_.traffic.mean_arrivals_per_tti();
  for (int ue = 0; ue < cfg_.num_ues; ++ue) {
    auto& buf = buffers_[static_cast<std::size_t>(ue)];
    std::vector<std::int64_t> sizes;
    if (trace_) {
      const std::int64_t row = arrivals_consumed_;
      if (row < trace_->num_ttis())
        sizes = trace_->row(row).ues[static_cast<std::size_t>(ue)].arrival_sizes;
    } else {
      const std::int64_t n = rng_arrivals_.poisson(mean);
      sizes.assign(static_cast<std::size_t>(n), cfg_.traffic.packet_size_bits);
    }
    counts[static_cast<std::size_t>(ue)] =
        static_cast<std::int64_t>(sizes.size());
    for (std::int64_t size : sizes) {
      ++buf.arrived_packets;
      if (buf.queued_bits + size > buf.capacity_bits) {
        ++buf.dropped_overflow;
      } else {
        buf.queue.push_back(Packet{size, size, tti_});
        buf.queued_bits += size;
      }
    }
    if (recorder_) recorder_->push_arrivals(ue, sizes);
  }
  ++arrivals_consumed_;
  return counts;
}

void CellEnv::advance_channel() {
  if (trace_) {
    refresh_rates();
    return;
  }
  const double rho = cfg_.fading.correlation;
  const double noise_scale = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  for (auto& f : fading_) f = rho * f + noise_scale * rng_fading_.normal();
  refresh_rates();
}

void CellEnv::update_avg_rate(const StepOutcome& out,
                              const std::vector<bool>& was_active) {
  const double w = static_cast<double>(cfg_.avg_rate_window);
  for (int ue = 0; ue < cfg_.num_ues; ++ue) {
    const std::size_t u = static_cast<std::size_t>(ue);
    if (!was_active[u] && !buffers_[u].empty()) {
      // UE just (re)joined: start the tracker from its current estimated rate.
      std::int64_t est = 0;
      for (int b = 0; b < cfg_.num_rbgs; ++b)
        est += rates_[u * cfg_.num_rbgs + b];
      avg_rate_[u] = static_cast<double>(est);
    } else {
      avg_rate_[u] = (w - 1.0) / w * avg_rate_[u] +
                     static_cast<double>(out.delivered_bits[u]) / w;
    }
  }
}

StepOutcome CellEnv::apply_decision(const std::vector<int>& rbg_to_ue) {
  if (done())
    throw ContractViolation("apply_decision called past the scheduling duration");
  if (rbg_to_ue.size() != static_cast<std::size_t>(cfg_.num_rbgs))
    throw ContractViolation("decision must assign every RBG (use -1 for idle)");

  const std::size_t k = static_cast<std::size_t>(cfg_.num_ues);
  StepOutcome out;
  out.tti = tti_;
  out.delivered_bits.assign(k, 0);
  out.delivered_packets.assign(k, 0);
  out.arrived.assign(k, 0);
  out.dropped_overflow.assign(k, 0);
  out.dropped_expired.assign(k, 0);

  std::vector<std::int64_t> budget(k, 0);
  for (int b = 0; b < cfg_.num_rbgs; ++b) {
    const int ue = rbg_to_ue[static_cast<std::size_t>(b)];
    if (ue < 0) continue;
    if (ue >= cfg_.num_ues)
      throw ContractViolation("decision grants an out-of-range UE index");
    if (buffers_[static_cast<std::size_t>(ue)].empty())
      throw ContractViolation("decision grants an inactive UE; callers must mask");
    budget[static_cast<std::size_t>(ue)] +=
        rates_[static_cast<std::size_t>(ue) * cfg_.num_rbgs + b];
  }
  for (int ue = 0; ue < cfg_.num_ues; ++ue) {
    if (budget[static_cast<std::size_t>(ue)] > 0)
      transmit(ue, budget[static_cast<std::size_t>(ue)], out);
  }

  const auto expired = expire_packets();
  for (std::size_t u = 0; u < k; ++u) out.dropped_expired[u] = expired[u];

  std::vector<bool> was_active(k);
  for (std::size_t u = 0; u < k; ++u) was_active[u] = !buffers_[u].empty();

  std::vector<std::int64_t> overflow_before(k);
  for (std::size_t u = 0; u < k; ++u)
    overflow_before[u] = buffers_[u].dropped_overflow;

  ++tti_;
  const auto arrived = generate_arrivals();
  for (std::size_t u = 0; u < k; ++u) {
    out.arrived[u] = arrived[u];
    out.dropped_overflow[u] = buffers_[u].dropped_overflow - overflow_before[u];
  }

  advance_channel();
  record_rates_row();
  update_avg_rate(out, was_active);
  return out;
}

StepOutcome CellEnv::apply_decision_matrix(const std::vector<std::uint8_t>& d) {
  if (d.size() != static_cast<std::size_t>(cfg_.num_ues) *
                      static_cast<std::size_t>(cfg_.num_rbgs))
    throw ContractViolation("decision matrix must be K x B");
  std::vector<int> grants(static_cast<std::size_t>(cfg_.num_rbgs), -1);
  for (int b = 0; b < cfg_.num_rbgs; ++b) {
    for (int ue = 0; ue < cfg_.num_ues; ++ue) {
      if (!d[static_cast<std::size_t>(ue) * cfg_.num_rbgs + b]) continue;
      if (grants[static_cast<std::size_t>(b)] >= 0)
        throw ContractViolation("RBG assigned to more than one UE");
      grants[static_cast<std::size_t>(b)] = ue;
    }
  }
  return apply_decision(grants);
}

}  // namespace cellsched
