#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cellsched/env.hpp"
#include "cellsched/kpi.hpp"
#include "cellsched/rng.hpp"
#include "cellsched/trace.hpp"

namespace cellsched {

struct Objectives {
  double thp = 0.0;  // delivered bits
  double jfi = 0.0;  // higher is better
  double pdr = 0.0;  // lower is better
};

// x dominates y iff x has strictly higher THP with JFI no lower and PDR no
// higher. Irreflexive and transitive.
inline bool dominates(const Objectives& x, const Objectives& y) {
  return x.thp > y.thp && x.jfi >= y.jfi && x.pdr <= y.pdr;
}

// N x B grid of UE picks, row-major by TTI. -1 marks an idle slot (only the
// list search emits those; random sequences always pick a UE and simply waste
// the slot when that UE has nothing queued).
struct ScheduleSequence {
  std::vector<int> genes;
  int num_ttis = 0;
  int num_rbgs = 1;

  int gene(int t, int b) const {
    return genes[static_cast<std::size_t>(t) * num_rbgs + b];
  }
};

// Deterministic replay of a sequence against a recorded trace. Genes that
// point at a UE with an empty buffer waste the slot.
Objectives evaluate_sequence(const Trace& trace, const ScheduleSequence& seq);

// Nondominated fronts F1, F2, ... (Deb's fast nondominated sort); every index
// lands in exactly one front.
std::vector<std::vector<int>> fast_nondominated_sort(
    const std::vector<Objectives>& objs);

// Crowding distances aligned with `front`. Boundary individuals per objective
// get +inf; constant objectives contribute nothing.
std::vector<double> crowding_distance(const std::vector<Objectives>& objs,
                                      const std::vector<int>& front);

// Indices of individuals not dominated by any other (order preserved).
std::vector<int> pareto_front_of(const std::vector<Objectives>& objs);

struct GaConfig {
  int population = 40;    // M, even
  int generations = 200;  // G
  double crossover_prob = 0.95;
  double mutation_prob = 0.05;
  double eta_crossover = 5.0;
  double eta_mutation = 20.0;
  std::string operators = "sbx";  // "sbx" (rounded real-coded) or "discrete"

  void validate() const;
};

struct GaIndividual {
  ScheduleSequence seq;
  Objectives objs;
};

struct GaResult {
  std::vector<GaIndividual> population;
  std::vector<std::vector<int>> fronts;  // over `population`
};

GaResult nsga2_run(const Trace& trace, const GaConfig& cfg, std::uint64_t seed);

// State-merge granularity for the list search. Defaults are exact: two paths
// merge only when their future-relevant state is identical.
struct PlaKnobs {
  std::int64_t hol_age_bucket = 1;
  std::int64_t delivered_quantum = 1;  // bits
};

struct PlaPathResult {
  ScheduleSequence seq;
  Objectives objs;
};

struct PlaResult {
  PlaPathResult best;                  // highest scalarized reward
  std::vector<PlaPathResult> survivors;
  std::vector<int> front;              // nondominated subset of survivors
};

// TTI-by-TTI path expansion with nondominated sorting and pruning to l_max
// survivors. Single-RBG traces only.
PlaResult pla_run(const Trace& trace, int l_max, const RewardWeights& weights,
                  const PlaKnobs& knobs = PlaKnobs{});

// Canonical duplicate-detection key of a replayed prefix: paths with equal
// keys evolve identically under any common suffix (at the default exact
// knobs).
std::string pla_state_key(const CellEnv& env, const KpiWindow& kpi,
                          const PlaKnobs& knobs, std::int64_t now);

// All K^N sequences, evaluated. Throws when the space exceeds `limit`.
std::vector<GaIndividual> enumerate_all(const Trace& trace,
                                        std::int64_t limit = 1000000);

// Scalarized sequence score with the reward weights (used to pick the final
// path from a Pareto list).
double scalarize(const Objectives& objs, const RewardWeights& weights,
                 int num_ues, std::int64_t top_rate_bits, std::int64_t n_ttis);

// Sequence file round-trip (structured text, replayable).
void save_sequence(const std::string& path, const ScheduleSequence& seq,
                   const Objectives& objs);
ScheduleSequence load_sequence(const std::string& path);

}  // namespace cellsched
