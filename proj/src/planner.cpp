#include "cellsched/planner.hpp"

namespace cellsched {

ProvisionalQueues::ProvisionalQueues(const CellEnv& env) : tti_(env.tti()) {
  const int k = env.num_ues();
  queues_.resize(static_cast<std::size_t>(k));
  head_.assign(static_cast<std::size_t>(k), 0);
  queued_bits_.assign(static_cast<std::size_t>(k), 0);
  for (int ue = 0; ue < k; ++ue) {
    const auto& buf = env.buffer(ue);
    auto& q = queues_[static_cast<std::size_t>(ue)];
    q.reserve(buf.queue.size());
    for (const auto& p : buf.queue)
      q.push_back(Pending{p.remaining_bits, p.arrival_tti});
    queued_bits_[static_cast<std::size_t>(ue)] = buf.queued_bits;
  }
}

std::int64_t ProvisionalQueues::hol_wait(int ue) const {
  const auto& q = queues_[static_cast<std::size_t>(ue)];
  const std::size_t h = head_[static_cast<std::size_t>(ue)];
  if (h >= q.size()) return 0;
  return tti_ - q[h].arrival_tti;
}

void ProvisionalQueues::grant(int ue, std::int64_t rate_bits) {
  auto& q = queues_[static_cast<std::size_t>(ue)];
  auto& h = head_[static_cast<std::size_t>(ue)];
  auto& bits = queued_bits_[static_cast<std::size_t>(ue)];
  while (rate_bits > 0 && h < q.size()) {
    const std::int64_t d = std::min(rate_bits, q[h].remaining_bits);
    q[h].remaining_bits -= d;
    bits -= d;
    rate_bits -= d;
    if (q[h].remaining_bits == 0) ++h;
  }
}

}  // namespace cellsched
