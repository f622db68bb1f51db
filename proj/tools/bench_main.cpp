// Benchmark comparing the serial reference paths against the OpenMP kernels:
// GA population evaluation, PLA search, and A2C batch sampling + updates.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "cellsched/a2c.hpp"
#include "cellsched/parallel.hpp"
#include "cellsched/pareto.hpp"
#include "cellsched/trace.hpp"

using namespace cellsched;

namespace {

using clock_type = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn) {
  const auto t0 = clock_type::now();
  fn();
  const auto t1 = clock_type::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

EnvConfig bench_env() {
  EnvConfig cfg;
  cfg.num_ues = 5;
  cfg.num_rbgs = 1;
  cfg.duration_ttis = 200;
  cfg.mean_snr_db = {14, 10, 8, 6, 2};
  return cfg;
}

void report(const char* name, double serial_ms, double parallel_ms, bool equal) {
  std::printf("%-22s serial %8.1f ms   parallel %8.1f ms   speedup %4.2fx   %s\n",
              name, serial_ms, parallel_ms,
              parallel_ms > 0 ? serial_ms / parallel_ms : 0.0,
              equal ? "results identical" : "RESULTS DIFFER");
}

void bench_ga(const Trace& trace) {
  GaConfig cfg;
  cfg.population = 64;
  cfg.generations = 12;
  set_thread_budget(1);
  const double serial_ms =
      time_ms([&] { nsga2_run(trace, cfg, 42); });
  GaResult serial = nsga2_run(trace, cfg, 42);
  set_thread_budget(0);
  const double parallel_ms =
      time_ms([&] { nsga2_run(trace, cfg, 42); });
  GaResult parallel = nsga2_run(trace, cfg, 42);
  bool equal = serial.population.size() == parallel.population.size();
  for (std::size_t i = 0; equal && i < serial.population.size(); ++i) {
    equal = serial.population[i].seq.genes == parallel.population[i].seq.genes &&
            serial.population[i].objs.thp == parallel.population[i].objs.thp;
  }
  report("nsga2 (64x12)", serial_ms, parallel_ms, equal);
}

void bench_pla(const Trace& trace) {
  set_thread_budget(1);
  PlaResult serial;
  const double serial_ms =
      time_ms([&] { serial = pla_run(trace, 64, RewardWeights{}); });
  set_thread_budget(0);
  PlaResult parallel;
  const double parallel_ms =
      time_ms([&] { parallel = pla_run(trace, 64, RewardWeights{}); });
  const bool equal = serial.best.seq.genes == parallel.best.seq.genes;
  report("pla (l_max=64)", serial_ms, parallel_ms, equal);
}

void bench_train(const EnvConfig& env_cfg) {
  TrainConfig cfg;
  cfg.num_envs = 4;
  cfg.max_updates = 0;
  auto run = [&](std::uint64_t seed) {
    A2cTrainer trainer(env_cfg, cfg, seed);
    double sum = 0.0;
    for (int u = 0; u < 20; ++u) {
      const auto batch = trainer.sample_batch();
      sum += trainer.apply_update(batch).mean_reward;
    }
    return sum;
  };
  set_thread_budget(1);
  double serial_value = 0.0;
  const double serial_ms = time_ms([&] { serial_value = run(7); });
  set_thread_budget(0);
  double parallel_value = 0.0;
  const double parallel_ms = time_ms([&] { parallel_value = run(7); });
  report("a2c (4 envs x 20)", serial_ms, parallel_ms,
         serial_value == parallel_value);
}

}  // namespace

int main(int argc, char** argv) {
  int repeat = 1;
  if (argc > 1) repeat = std::max(1, std::atoi(argv[1]));
  const EnvConfig env_cfg = bench_env();
  const Trace trace = Trace::record(env_cfg, 11);
  std::printf("openmp: %s, hardware threads respected via thread budget\n",
              openmp_enabled() ? "enabled" : "disabled");
  for (int r = 0; r < repeat; ++r) {
    bench_ga(trace);
    bench_pla(trace);
    bench_train(env_cfg);
  }
  set_thread_budget(0);
  return 0;
}
