#pragma once

#include <vector>

#include "cellsched/agent.hpp"
#include "cellsched/env.hpp"
#include "cellsched/trace.hpp"

namespace cellsched::test {

// Hand-built trace: rates[t] is K x B row-major, arrivals[t][ue] lists packet
// sizes delivered into the buffer during step t.
inline Trace manual_trace(
    const EnvConfig& cfg,
    const std::vector<std::vector<std::int64_t>>& rates,
    const std::vector<std::vector<std::vector<std::int64_t>>>& arrivals) {
  Trace trace(cfg, 0);
  trace.begin_recording();
  for (std::size_t t = 0; t < rates.size(); ++t) {
    trace.push_rates(rates[t], cfg.num_ues, cfg.num_rbgs);
    for (int ue = 0; ue < cfg.num_ues; ++ue) {
      const auto& sizes = t < arrivals.size()
                              ? arrivals[t][static_cast<std::size_t>(ue)]
                              : std::vector<std::int64_t>{};
      trace.push_arrivals(ue, sizes);
    }
  }
  return trace;
}

// Single flat ladder: any SNR >= 0 dB earns `rate` bits per TTI per RBG.
inline RateLadder flat_ladder(std::int64_t rate) {
  RateLadder l;
  l.thresholds_db = {0.0};
  l.rates_bits = {rate};
  return l;
}

inline void zero_net(Mlp& net) {
  for (auto& layer : net.layers()) {
    for (auto& w : layer.w) w = 0.0;
    for (auto& b : layer.b) b = 0.0;
  }
}

}  // namespace cellsched::test
