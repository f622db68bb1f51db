#include "cellsched/parallel.hpp"

#include <atomic>

namespace cellsched {

namespace {
std::atomic<int> g_thread_budget{0};
}

void set_thread_budget(int n) { g_thread_budget.store(n < 0 ? 0 : n); }

int thread_budget() { return g_thread_budget.load(); }

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

}  // namespace cellsched
