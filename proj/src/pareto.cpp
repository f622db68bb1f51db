#include "cellsched/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "cellsched/parallel.hpp"

namespace cellsched {

namespace {

void check_sequence(const Trace& trace, const ScheduleSequence& seq) {
  const EnvConfig& cfg = trace.config();
  if (seq.num_ttis != cfg.duration_ttis || seq.num_rbgs != cfg.num_rbgs)
    throw ContractViolation("sequence dimensions do not match the trace");
  if (seq.genes.size() !=
      static_cast<std::size_t>(seq.num_ttis) * seq.num_rbgs)
    throw ContractViolation("sequence gene count does not match its dimensions");
  for (int g : seq.genes)
    if (g < -1 || g >= cfg.num_ues)
      throw ContractViolation("sequence gene out of range");
}

}  // namespace

Objectives evaluate_sequence(const Trace& trace, const ScheduleSequence& seq) {
  check_sequence(trace, seq);
  const EnvConfig& cfg = trace.config();
  CellEnv env(cfg, trace);
  KpiWindow kpi(cfg.num_ues);
  std::vector<int> grants(static_cast<std::size_t>(cfg.num_rbgs), -1);
  for (int t = 0; t < cfg.duration_ttis; ++t) {
    for (int b = 0; b < cfg.num_rbgs; ++b) {
      const int g = seq.gene(t, b);
      // a pick with nothing queued wastes the slot instead of failing
      grants[static_cast<std::size_t>(b)] =
          (g >= 0 && !env.buffer(g).empty()) ? g : -1;
    }
    kpi.update(env.apply_decision(grants));
  }
  const KpiSummary s = kpi.finalize();
  return Objectives{s.thp_bits, s.jfi, s.pdr};
}

std::vector<std::vector<int>> fast_nondominated_sort(
    const std::vector<Objectives>& objs) {
  const int n = static_cast<int>(objs.size());
  std::vector<std::vector<int>> dominated(static_cast<std::size_t>(n));
  std::vector<int> dom_count(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> fronts;
  std::vector<int> current;
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      if (p == q) continue;
      if (dominates(objs[static_cast<std::size_t>(p)],
                    objs[static_cast<std::size_t>(q)])) {
        dominated[static_cast<std::size_t>(p)].push_back(q);
      } else if (dominates(objs[static_cast<std::size_t>(q)],
                           objs[static_cast<std::size_t>(p)])) {
        ++dom_count[static_cast<std::size_t>(p)];
      }
    }
    if (dom_count[static_cast<std::size_t>(p)] == 0) current.push_back(p);
  }
  while (!current.empty()) {
    fronts.push_back(current);
    std::vector<int> next;
    for (int p : current) {
      for (int q : dominated[static_cast<std::size_t>(p)]) {
        if (--dom_count[static_cast<std::size_t>(q)] == 0) next.push_back(q);
      }
    }
    std::sort(next.begin(), next.end());
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(const std::vector<Objectives>& objs,
                                      const std::vector<int>& front) {
  const std::size_t n = front.size();
  std::vector<double> dist(n, 0.0);
  if (n == 0) return dist;
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(),
              std::numeric_limits<double>::infinity());
    return dist;
  }
  std::vector<std::size_t> order(n);
  for (int obj = 0; obj < 3; ++obj) {
    auto key = [&](int idx) {
      const Objectives& o = objs[static_cast<std::size_t>(idx)];
      return obj == 0 ? o.thp : obj == 1 ? o.jfi : o.pdr;
    };
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double ka = key(front[a]);
      const double kb = key(front[b]);
      if (ka != kb) return ka < kb;
      return front[a] < front[b];
    });
    const double lo = key(front[order.front()]);
    const double hi = key(front[order.back()]);
    if (hi <= lo) continue;  // constant objective contributes nothing
    dist[order.front()] = std::numeric_limits<double>::infinity();
    dist[order.back()] = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < n; ++i) {
      dist[order[i]] +=
          (key(front[order[i + 1]]) - key(front[order[i - 1]])) / (hi - lo);
    }
  }
  return dist;
}

std::vector<int> pareto_front_of(const std::vector<Objectives>& objs) {
  std::vector<int> front;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    bool dominated_by_any = false;
    for (std::size_t j = 0; j < objs.size(); ++j) {
      if (i != j && dominates(objs[j], objs[i])) {
        dominated_by_any = true;
        break;
      }
    }
    if (!dominated_by_any) front.push_back(static_cast<int>(i));
  }
  return front;
}

void GaConfig::validate() const {
  if (population < 2 || population % 2 != 0)
    throw ConfigError("pareto.population must be even and >= 2");
  if (generations < 0) throw ConfigError("pareto.generations must be >= 0");
  if (crossover_prob < 0.0 || crossover_prob > 1.0)
    throw ConfigError("pareto.crossover_prob must be in [0, 1]");
  if (mutation_prob < 0.0 || mutation_prob > 1.0)
    throw ConfigError("pareto.mutation_prob must be in [0, 1]");
  if (eta_crossover <= 0.0 || eta_mutation <= 0.0)
    throw ConfigError("pareto distribution indices must be > 0");
  if (operators != "sbx" && operators != "discrete")
    throw ConfigError("pareto.operators must be sbx or discrete");
}

namespace {

void evaluate_population(const Trace& trace, std::vector<GaIndividual>& pop,
                         std::size_t begin) {
  std::vector<std::exception_ptr> errors(pop.size() - begin);
  parallel_for(pop.size() - begin, [&](std::size_t i) {
    try {
      pop[begin + i].objs = evaluate_sequence(trace, pop[begin + i].seq);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct RankInfo {
  std::vector<int> rank;
  std::vector<double> crowding;
};

RankInfo rank_population(const std::vector<Objectives>& objs) {
  RankInfo info;
  info.rank.assign(objs.size(), 0);
  info.crowding.assign(objs.size(), 0.0);
  const auto fronts = fast_nondominated_sort(objs);
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    const auto dist = crowding_distance(objs, fronts[f]);
    for (std::size_t i = 0; i < fronts[f].size(); ++i) {
      info.rank[static_cast<std::size_t>(fronts[f][i])] = static_cast<int>(f);
      info.crowding[static_cast<std::size_t>(fronts[f][i])] = dist[i];
    }
  }
  return info;
}

// crowded-comparison: lower front first, then larger crowding distance
bool crowded_less(const RankInfo& info, int a, int b) {
  const auto ua = static_cast<std::size_t>(a);
  const auto ub = static_cast<std::size_t>(b);
  if (info.rank[ua] != info.rank[ub]) return info.rank[ua] < info.rank[ub];
  if (info.crowding[ua] != info.crowding[ub])
    return info.crowding[ua] > info.crowding[ub];
  return a < b;
}

int round_clamp(double x, int hi) {
  const long r = std::lround(x);
  if (r < 0) return 0;
  if (r > hi) return hi;
  return static_cast<int>(r);
}

void sbx_pair(double eta, int hi, Rng& rng, int& g1, int& g2) {
  const double p1 = static_cast<double>(g1);
  const double p2 = static_cast<double>(g2);
  const double u = rng.uniform();
  const double beta =
      u <= 0.5 ? std::pow(2.0 * u, 1.0 / (eta + 1.0))
               : std::pow(1.0 / (2.0 * (1.0 - u)), 1.0 / (eta + 1.0));
  const double c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2);
  const double c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2);
  g1 = round_clamp(c1, hi);
  g2 = round_clamp(c2, hi);
}

int polynomial_mutate(int gene, double eta, int hi, Rng& rng) {
  if (hi == 0) return 0;
  const double x = static_cast<double>(gene);
  const double range = static_cast<double>(hi);
  const double u = rng.uniform();
  double dq = 0.0;
  if (u < 0.5) {
    const double d1 = x / range;
    dq = std::pow(2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0),
                  1.0 / (eta + 1.0)) -
         1.0;
  } else {
    const double d2 = (range - x) / range;
    dq = 1.0 - std::pow(2.0 * (1.0 - u) +
                            2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0),
                        1.0 / (eta + 1.0));
  }
  return round_clamp(x + dq * range, hi);
}

}  // namespace

GaResult nsga2_run(const Trace& trace, const GaConfig& cfg,
                   std::uint64_t seed) {
  cfg.validate();
  const EnvConfig& env_cfg = trace.config();
  const int k = env_cfg.num_ues;
  const int genes_per_seq =
      static_cast<int>(env_cfg.duration_ttis) * env_cfg.num_rbgs;
  Rng rng(derive_seed(seed, "nsga2"));

  auto random_individual = [&]() {
    GaIndividual ind;
    ind.seq.num_ttis = static_cast<int>(env_cfg.duration_ttis);
    ind.seq.num_rbgs = env_cfg.num_rbgs;
    ind.seq.genes.resize(static_cast<std::size_t>(genes_per_seq));
    for (auto& g : ind.seq.genes)
      g = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k)));
    return ind;
  };

  std::vector<GaIndividual> parents;
  parents.reserve(static_cast<std::size_t>(cfg.population));
  for (int i = 0; i < cfg.population; ++i) parents.push_back(random_individual());
  evaluate_population(trace, parents, 0);

  std::vector<GaIndividual> offspring;  // starts empty

  auto make_new_pop = [&](const std::vector<GaIndividual>& pop,
                          const RankInfo& info) {
    std::vector<GaIndividual> out;
    out.reserve(static_cast<std::size_t>(cfg.population));
    auto tournament = [&]() -> const GaIndividual& {
      const int a = static_cast<int>(rng.uniform_int(pop.size()));
      const int b = static_cast<int>(rng.uniform_int(pop.size()));
      return pop[static_cast<std::size_t>(crowded_less(info, a, b) ? a : b)];
    };
    while (static_cast<int>(out.size()) < cfg.population) {
      GaIndividual c1 = tournament();
      GaIndividual c2 = tournament();
      if (k > 1 && rng.uniform() < cfg.crossover_prob) {
        for (int g = 0; g < genes_per_seq; ++g) {
          if (rng.uniform() >= 0.5) continue;
          auto& a = c1.seq.genes[static_cast<std::size_t>(g)];
          auto& b = c2.seq.genes[static_cast<std::size_t>(g)];
          if (cfg.operators == "sbx") {
            sbx_pair(cfg.eta_crossover, k - 1, rng, a, b);
          } else {
            std::swap(a, b);
          }
        }
      }
      for (auto* child : {&c1, &c2}) {
        for (auto& g : child->seq.genes) {
          if (rng.uniform() >= cfg.mutation_prob) continue;
          g = cfg.operators == "sbx"
                  ? polynomial_mutate(g, cfg.eta_mutation, k - 1, rng)
                  : static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k)));
        }
      }
      out.push_back(std::move(c1));
      if (static_cast<int>(out.size()) < cfg.population)
        out.push_back(std::move(c2));
    }
    return out;
  };

  auto select_next = [&](std::vector<GaIndividual> merged) {
    std::vector<Objectives> objs(merged.size());
    for (std::size_t i = 0; i < merged.size(); ++i) objs[i] = merged[i].objs;
    const auto fronts = fast_nondominated_sort(objs);
    std::vector<GaIndividual> next;
    next.reserve(static_cast<std::size_t>(cfg.population));
    for (const auto& front : fronts) {
      if (static_cast<int>(next.size() + front.size()) <= cfg.population) {
        for (int idx : front)
          next.push_back(std::move(merged[static_cast<std::size_t>(idx)]));
        if (static_cast<int>(next.size()) == cfg.population) break;
        continue;
      }
      // partial front: fill by descending crowding distance
      const auto dist = crowding_distance(objs, front);
      std::vector<std::size_t> order(front.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dist[a] != dist[b]) return dist[a] > dist[b];
        return front[a] < front[b];
      });
      for (std::size_t i = 0;
           static_cast<int>(next.size()) < cfg.population && i < order.size();
           ++i) {
        next.push_back(
            std::move(merged[static_cast<std::size_t>(front[order[i]])]));
      }
      break;
    }
    return next;
  };

  for (int gen = 0; gen < cfg.generations; ++gen) {
    std::vector<GaIndividual> merged = parents;
    for (auto& ind : offspring) merged.push_back(std::move(ind));
    parents = select_next(std::move(merged));
    std::vector<Objectives> objs(parents.size());
    for (std::size_t i = 0; i < parents.size(); ++i) objs[i] = parents[i].objs;
    offspring = make_new_pop(parents, rank_population(objs));
    evaluate_population(trace, offspring, 0);
  }

  std::vector<GaIndividual> merged = parents;
  for (auto& ind : offspring) merged.push_back(std::move(ind));
  GaResult result;
  result.population = select_next(std::move(merged));
  std::vector<Objectives> objs(result.population.size());
  for (std::size_t i = 0; i < result.population.size(); ++i)
    objs[i] = result.population[i].objs;
  result.fronts = fast_nondominated_sort(objs);
  return result;
}

// ---------------------------------------------------------------------------
// Pareto list search

namespace {

struct PlaPath {
  CellEnv env;
  KpiWindow kpi;
  std::vector<int> genes;
  Objectives objs;
};

Objectives objectives_to_date(const KpiWindow& kpi) {
  return Objectives{static_cast<double>(kpi.thp_bits()), kpi.jfi_to_date(),
                    kpi.pdr_to_date()};
}

}  // namespace

std::string pla_state_key(const CellEnv& env, const KpiWindow& kpi,
                          const PlaKnobs& knobs, std::int64_t now) {
  std::vector<std::int64_t> vals;
  const int k = env.num_ues();
  vals.reserve(static_cast<std::size_t>(k) * 8);
  for (int ue = 0; ue < k; ++ue) {
    const RlcBuffer& buf = env.buffer(ue);
    vals.push_back(static_cast<std::int64_t>(buf.queue.size()));
    for (const Packet& p : buf.queue) {
      vals.push_back(p.remaining_bits);
      vals.push_back((now - p.arrival_tti) / knobs.hol_age_bucket);
    }
    vals.push_back(static_cast<std::int64_t>(
        kpi.per_ue_delivered_bits()[static_cast<std::size_t>(ue)]) /
        knobs.delivered_quantum);
    vals.push_back(buf.transmitted_packets);
    vals.push_back(buf.arrived_packets);
    vals.push_back(buf.dropped_overflow);
    vals.push_back(buf.dropped_expired);
  }
  std::string key(vals.size() * sizeof(std::int64_t), '\0');
  std::memcpy(key.data(), vals.data(), key.size());
  return key;
}

double scalarize(const Objectives& objs, const RewardWeights& weights,
                 int num_ues, std::int64_t top_rate_bits, std::int64_t n_ttis) {
  const double thp_norm =
      objs.thp / (static_cast<double>(num_ues) *
                  static_cast<double>(top_rate_bits) *
                  static_cast<double>(n_ttis));
  return weights.alpha * thp_norm + weights.beta * objs.jfi -
         weights.delta * objs.pdr;
}

PlaResult pla_run(const Trace& trace, int l_max, const RewardWeights& weights,
                  const PlaKnobs& knobs) {
  if (l_max < 1) throw ConfigError("pareto.l_max must be >= 1");
  const EnvConfig& cfg = trace.config();
  if (cfg.num_rbgs != 1)
    throw ConfigError("the Pareto list search handles single-RBG traces only");
  if (knobs.hol_age_bucket < 1 || knobs.delivered_quantum < 1)
    throw ConfigError("pareto merge knobs must be >= 1");
  const int k = cfg.num_ues;

  std::vector<PlaPath> paths;
  paths.push_back(PlaPath{CellEnv(cfg, trace), KpiWindow(k), {}, Objectives{}});

  std::vector<PlaPath> children;
  for (int t = 0; t < cfg.duration_ttis; ++t) {
    children.clear();
    for (const PlaPath& path : paths) {
      bool expanded = false;
      for (int ue = 0; ue < k; ++ue) {
        if (path.env.achievable_rate(ue, 0) <= 0) continue;
        if (path.env.buffer(ue).empty()) continue;
        PlaPath child = path;
        child.kpi.update(child.env.apply_decision({ue}));
        child.genes.push_back(ue);
        child.objs = objectives_to_date(child.kpi);
        children.push_back(std::move(child));
        expanded = true;
      }
      if (!expanded) {
        // nothing admissible: keep the path alive with an explicit idle slot
        PlaPath child = path;
        child.kpi.update(child.env.apply_decision({-1}));
        child.genes.push_back(-1);
        child.objs = objectives_to_date(child.kpi);
        children.push_back(std::move(child));
      }
    }

    // merge paths whose future-relevant state is identical (first one wins)
    {
      std::unordered_map<std::string, std::size_t> seen;
      std::vector<PlaPath> merged;
      merged.reserve(children.size());
      for (auto& child : children) {
        const std::string key = pla_state_key(child.env, child.kpi, knobs, t + 1);
        if (seen.emplace(key, merged.size()).second)
          merged.push_back(std::move(child));
      }
      children = std::move(merged);
    }

    if (static_cast<int>(children.size()) > l_max) {
      std::vector<Objectives> objs(children.size());
      for (std::size_t i = 0; i < children.size(); ++i) objs[i] = children[i].objs;
      const RankInfo info = rank_population(objs);
      std::vector<int> order(static_cast<int>(children.size()));
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      std::sort(order.begin(), order.end(),
                [&](int a, int b) { return crowded_less(info, a, b); });
      std::vector<PlaPath> kept;
      kept.reserve(static_cast<std::size_t>(l_max));
      for (int idx : order) {
        if (static_cast<int>(kept.size()) >= l_max) break;
        if (info.crowding[static_cast<std::size_t>(idx)] == 0.0) continue;
        kept.push_back(std::move(children[static_cast<std::size_t>(idx)]));
      }
      children = std::move(kept);
    }
    paths = std::move(children);
    children.clear();
  }

  PlaResult result;
  result.survivors.reserve(paths.size());
  std::vector<Objectives> objs(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    ScheduleSequence seq;
    seq.num_ttis = static_cast<int>(cfg.duration_ttis);
    seq.num_rbgs = 1;
    seq.genes = paths[i].genes;
    result.survivors.push_back(PlaPathResult{std::move(seq), paths[i].objs});
    objs[i] = paths[i].objs;
  }
  result.front = pareto_front_of(objs);

  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < result.survivors.size(); ++i) {
    const double score =
        scalarize(result.survivors[i].objs, weights, cfg.num_ues,
                  cfg.ladder.top_rate(), cfg.duration_ttis);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  result.best = result.survivors[best];
  return result;
}

std::vector<GaIndividual> enumerate_all(const Trace& trace,
                                        std::int64_t limit) {
  const EnvConfig& cfg = trace.config();
  const int k = cfg.num_ues;
  const std::int64_t genes =
      cfg.duration_ttis * static_cast<std::int64_t>(cfg.num_rbgs);
  double space = 1.0;
  for (std::int64_t i = 0; i < genes; ++i) {
    space *= k;
    if (space > static_cast<double>(limit))
      throw ConfigError("sequence space K^(N*B) exceeds the enumeration limit");
  }
  const std::int64_t total = static_cast<std::int64_t>(space);

  std::vector<GaIndividual> all(static_cast<std::size_t>(total));
  for (std::int64_t idx = 0; idx < total; ++idx) {
    auto& ind = all[static_cast<std::size_t>(idx)];
    ind.seq.num_ttis = static_cast<int>(cfg.duration_ttis);
    ind.seq.num_rbgs = cfg.num_rbgs;
    ind.seq.genes.resize(static_cast<std::size_t>(genes));
    std::int64_t v = idx;
    for (std::int64_t g = 0; g < genes; ++g) {
      ind.seq.genes[static_cast<std::size_t>(g)] = static_cast<int>(v % k);
      v /= k;
    }
  }
  evaluate_population(trace, all, 0);
  return all;
}

void save_sequence(const std::string& path, const ScheduleSequence& seq,
                   const Objectives& objs) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open sequence file for writing: " + path);
  f << "CELLSCHED-SEQ v1\n";
  f << "dims " << seq.num_ttis << " " << seq.num_rbgs << "\n";
  f << "genes";
  for (int g : seq.genes) f << ' ' << g;
  f << "\n";
  char buf[128];
  std::snprintf(buf, sizeof(buf), "objectives %.17g %.17g %.17g\n", objs.thp,
                objs.jfi, objs.pdr);
  f << buf;
}

ScheduleSequence load_sequence(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("sequence file does not exist: " + path);
  std::string line;
  if (!std::getline(f, line) || line != "CELLSCHED-SEQ v1")
    throw ConfigError("malformed sequence file: " + path);
  ScheduleSequence seq;
  if (!std::getline(f, line) || line.rfind("dims ", 0) != 0)
    throw ConfigError("sequence file missing dims: " + path);
  {
    std::istringstream ss(line.substr(5));
    if (!(ss >> seq.num_ttis >> seq.num_rbgs))
      throw ConfigError("sequence file has bad dims: " + path);
  }
  if (!std::getline(f, line) || line.rfind("genes", 0) != 0)
    throw ConfigError("sequence file missing genes: " + path);
  {
    std::istringstream ss(line.substr(5));
    int g = 0;
    while (ss >> g) seq.genes.push_back(g);
  }
  if (seq.genes.size() !=
      static_cast<std::size_t>(seq.num_ttis) * seq.num_rbgs)
    throw ConfigError("sequence file gene count does not match dims: " + path);
  return seq;
}

}  // namespace cellsched
