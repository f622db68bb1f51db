#pragma once

#include <cstdint>
#include <vector>

#include "cellsched/env.hpp"

namespace cellsched {

// Scratch copy of the per-UE queues for RBG-by-RBG planning inside one TTI.
// Granting an RBG drains the copy, so later RBGs of the same TTI see the
// buffer state the earlier grants will produce.
class ProvisionalQueues {
 public:
  explicit ProvisionalQueues(const CellEnv& env);

  bool active(int ue) const {
    return head_[static_cast<std::size_t>(ue)] <
           queues_[static_cast<std::size_t>(ue)].size();
  }
  std::int64_t queued_bits(int ue) const {
    return queued_bits_[static_cast<std::size_t>(ue)];
  }
  // HoL waiting time after the provisional drains applied so far.
  std::int64_t hol_wait(int ue) const;
  void grant(int ue, std::int64_t rate_bits);

 private:
  struct Pending {
    std::int64_t remaining_bits;
    std::int64_t arrival_tti;
  };
  std::int64_t tti_;
  std::vector<std::vector<Pending>> queues_;  // front at index 0
  std::vector<std::size_t> head_;             // drain cursor per UE
  std::vector<std::int64_t> queued_bits_;
};

}  // namespace cellsched
