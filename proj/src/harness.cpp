#include "cellsched/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "cellsched/json_io.hpp"
#include "cellsched/parallel.hpp"

namespace cellsched {

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_output_dir(const ExperimentConfig& cfg) {
  if (!cfg.output_dir.empty()) fs::create_directories(cfg.output_dir);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct SchemeRunner {
  const ExperimentConfig& cfg;
  SchedulerConfig scheme;
  std::unique_ptr<Agent> agent;  // kept alive for drl schedulers

  std::unique_ptr<Scheduler> make(std::uint64_t sample_seed) {
    if (scheme.name == "drl") {
      if (!agent)
        agent = std::make_unique<Agent>(Agent::load_checkpoint(scheme.checkpoint));
      if (agent->fixed_num_ues() > 0 && agent->fixed_num_ues() != cfg.env.num_ues)
        throw ConfigError(
            "one-pass checkpoint was trained for " +
            std::to_string(agent->fixed_num_ues()) + " UEs but env.num_ues is " +
            std::to_string(cfg.env.num_ues));
      return std::make_unique<DrlScheduler>(*agent, scheme.greedy, sample_seed);
    }
    return make_baseline_scheduler(scheme.name, scheme.params);
  }
};

json scheme_to_json(const SchemeResult& s) {
  return {{"name", s.name},
          {"thp_bits", s.thp_bits},
          {"thp_mbit_per_s", s.thp_bits / 1e6},
          {"jfi", s.jfi},
          {"pdr", s.pdr},
          {"dropped_packets", s.dropped_packets},
          {"arrived_packets", s.arrived_packets},
          {"transmitted_packets", s.transmitted_packets},
          {"mean_step_reward", s.mean_reward}};
}

void write_windows_csv(const std::string& path,
                       const std::vector<WindowRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open csv for writing: " + path);
  f << "window,scheme,exo_hash,thp_bits,jfi,pdr,dropped_packets,mean_reward\n";
  for (const auto& r : rows) {
    f << r.window << ',' << r.scheme << ',' << r.exo_hash << ','
      << fmt(r.thp_bits) << ',' << fmt(r.jfi) << ',' << fmt(r.pdr) << ','
      << r.dropped_packets << ',' << fmt(r.mean_reward) << "\n";
  }
}

void write_front_csv(const std::string& path,
                     const std::vector<const GaIndividual*>& front) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open csv for writing: " + path);
  f << "index,thp_bits,jfi,pdr,genes\n";
  for (std::size_t i = 0; i < front.size(); ++i) {
    f << i << ',' << fmt(front[i]->objs.thp) << ',' << fmt(front[i]->objs.jfi)
      << ',' << fmt(front[i]->objs.pdr) << ',';
    for (std::size_t g = 0; g < front[i]->seq.genes.size(); ++g) {
      if (g) f << ' ';
      f << front[i]->seq.genes[g];
    }
    f << "\n";
  }
}

ComparisonReport compare_impl(const ExperimentConfig& cfg,
                              const CompareConfig& cc,
                              const std::string& report_name) {
  ensure_output_dir(cfg);
  const bool paired = cc.mode == "paired";

  SchemeRunner runner_a{cfg, cc.scheme_a, nullptr};
  SchemeRunner runner_b{cfg, cc.scheme_b, nullptr};
  // fail fast on checkpoint/env mismatches before running windows
  runner_a.make(0);
  runner_b.make(0);

  struct PerWindow {
    EpisodeStats stats[2];
    std::uint64_t hash[2] = {0, 0};
  };
  std::vector<PerWindow> windows(static_cast<std::size_t>(cc.windows));
  std::vector<std::exception_ptr> errors(windows.size());

  parallel_for(windows.size(), [&](std::size_t w) {
    try {
      for (int side = 0; side < 2; ++side) {
        const std::string domain =
            paired ? "compare-window"
                   : (side == 0 ? "compare-window-a" : "compare-window-b");
        const Trace trace =
            Trace::record(cfg.env, derive_seed(cfg.seed, domain, w));
        SchemeRunner& runner = side == 0 ? runner_a : runner_b;
        CellEnv env(cfg.env, trace);
        auto sched = runner.make(derive_seed(cfg.seed, "compare-sample", w));
        std::unique_ptr<KpiCsvWriter> kpi_csv;
        if (cc.emit_kpi_rows && w == 0) {
          kpi_csv = std::make_unique<KpiCsvWriter>(join_path(
              cfg.output_dir,
              std::string("kpi_") + (side == 0 ? "a" : "b") + ".csv"));
        }
        windows[w].stats[side] =
            run_scheduler_episode(*sched, env, cfg.train.reward, kpi_csv.get());
        windows[w].hash[side] = trace.content_hash();
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  ComparisonReport report;
  report.mode = cc.mode;
  report.windows = cc.windows;
  report.config_digest = cfg.digest;
  report.a.name = cc.scheme_a.name;
  report.b.name = cc.scheme_b.name;
  std::uint64_t hash_a = 0xcbf29ce484222325ULL;
  std::uint64_t hash_b = 0xcbf29ce484222325ULL;
  for (int w = 0; w < cc.windows; ++w) {
    const PerWindow& pw = windows[static_cast<std::size_t>(w)];
    hash_a = fnv1a64_mix(hash_a, pw.hash[0]);
    hash_b = fnv1a64_mix(hash_b, pw.hash[1]);
    for (int side = 0; side < 2; ++side) {
      SchemeResult& dst = side == 0 ? report.a : report.b;
      const EpisodeStats& st = pw.stats[side];
      dst.thp_bits += st.kpi.thp_bits;
      dst.jfi += st.kpi.jfi;
      dst.dropped_packets += st.dropped_packets;
      dst.arrived_packets += st.arrived_packets;
      dst.transmitted_packets += st.transmitted_packets;
      dst.mean_reward += st.mean_reward;
      WindowRow row;
      row.window = w;
      row.scheme = dst.name;
      row.exo_hash = pw.hash[side];
      row.thp_bits = st.kpi.thp_bits;
      row.jfi = st.kpi.jfi;
      row.pdr = st.kpi.pdr;
      row.dropped_packets = st.dropped_packets;
      row.mean_reward = st.mean_reward;
      report.rows.push_back(row);
    }
  }
  report.exo_hash_a = hash_a;
  report.exo_hash_b = hash_b;
  const double n = static_cast<double>(cc.windows);
  for (SchemeResult* s : {&report.a, &report.b}) {
    s->jfi /= n;
    s->mean_reward /= n;
    s->pdr = s->arrived_packets > 0
                 ? static_cast<double>(s->arrived_packets - s->transmitted_packets) /
                       static_cast<double>(s->arrived_packets)
                 : 0.0;
  }
  auto ratio = [](double x, double y) { return y > 0.0 ? x / y : 0.0; };
  report.thp_ratio = ratio(report.a.thp_bits, report.b.thp_bits);
  report.jfi_ratio = ratio(report.a.jfi, report.b.jfi);
  report.pdr_ratio = ratio(report.a.pdr, report.b.pdr);
  report.dropped_ratio = ratio(static_cast<double>(report.a.dropped_packets),
                               static_cast<double>(report.b.dropped_packets));
  report.reward_ratio =
      report.b.mean_reward != 0.0 ? report.a.mean_reward / report.b.mean_reward
                                  : 0.0;

  write_text_file(join_path(cfg.output_dir, report_name + "_report.json"),
                  report.to_json().dump(2) + "\n");
  write_windows_csv(join_path(cfg.output_dir, report_name + "_windows.csv"),
                    report.rows);
  return report;
}

}  // namespace

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open file for writing: " + path);
  f << content;
  if (!f) throw ConfigError("failed while writing file: " + path);
}

json ComparisonReport::to_json() const {
  return {{"mode", mode},
          {"windows", windows},
          {"config_digest", config_digest},
          {"exogenous_hash", {{"a", exo_hash_a}, {"b", exo_hash_b}}},
          {"paired_streams_identical", exo_hash_a == exo_hash_b},
          {"schemes", {{"a", scheme_to_json(a)}, {"b", scheme_to_json(b)}}},
          {"ratios_a_over_b",
           {{"thp", thp_ratio},
            {"jfi", jfi_ratio},
            {"pdr", pdr_ratio},
            {"dropped_packets", dropped_ratio},
            {"mean_step_reward", reward_ratio}}}};
}

ComparisonReport run_compare(const ExperimentConfig& cfg) {
  set_thread_budget(cfg.threads);
  return compare_impl(cfg, cfg.compare, "compare");
}

ComparisonReport run_eval(const ExperimentConfig& cfg) {
  set_thread_budget(cfg.threads);
  if (cfg.scheduler.name != "drl")
    throw ConfigError("eval needs scheduler.name = drl with a checkpoint");
  CompareConfig cc;
  cc.scheme_a = cfg.scheduler;
  cc.scheme_a.greedy = true;  // evaluation runs the greedy policy
  cc.scheme_b.name = "pf";
  cc.scheme_b.params = cfg.scheduler.params;
  cc.mode = "paired";
  cc.windows = cfg.compare.windows;
  cc.emit_kpi_rows = cfg.compare.emit_kpi_rows;
  return compare_impl(cfg, cc, "eval");
}

TrainArtifacts run_train(const ExperimentConfig& cfg) {
  set_thread_budget(cfg.threads);
  ensure_output_dir(cfg);
  std::unique_ptr<A2cTrainer> trainer;
  if (!cfg.virtual_traces.empty()) {
    if (!cfg.train_deployments.empty())
      throw ConfigError("virtual_traces and train_deployments cannot be combined");
    std::vector<Trace> traces;
    traces.reserve(cfg.virtual_traces.size());
    for (const auto& path : cfg.virtual_traces) traces.push_back(Trace::load(path));
    trainer = std::make_unique<A2cTrainer>(cfg.env, cfg.train, cfg.seed,
                                           std::move(traces));
  } else if (!cfg.train_deployments.empty()) {
    std::vector<EnvConfig> deployments{cfg.env};  // slot 0 is the eval env
    for (const auto& d : cfg.train_deployments) deployments.push_back(d);
    trainer = std::make_unique<A2cTrainer>(std::move(deployments), cfg.train,
                                           cfg.seed);
  } else {
    trainer = std::make_unique<A2cTrainer>(cfg.env, cfg.train, cfg.seed);
  }

  TrainArtifacts artifacts;
  artifacts.result = trainer->train();
  artifacts.checkpoint_path = join_path(cfg.output_dir, "checkpoint.json");
  artifacts.curves_path = join_path(cfg.output_dir, "curves.csv");
  trainer->agent().save_checkpoint(artifacts.checkpoint_path);

  std::ofstream f(artifacts.curves_path, std::ios::binary);
  if (!f) throw ConfigError("cannot open curves csv: " + artifacts.curves_path);
  f << "update,mean_reward,thp_ratio_vs_pf,jfi_ratio_vs_pf,pdr_ratio_vs_pf,"
       "reward_ratio_vs_pf\n";
  for (const auto& p : artifacts.result.curve) {
    f << p.update << ',' << fmt(p.mean_reward) << ',' << fmt(p.thp_ratio) << ','
      << fmt(p.jfi_ratio) << ',' << fmt(p.pdr_ratio) << ','
      << fmt(p.reward_ratio) << "\n";
  }
  return artifacts;
}

json ParetoReport::to_json() const {
  json j;
  auto front_json = [](const std::vector<GaIndividual>& front) {
    json arr = json::array();
    for (const auto& ind : front)
      arr.push_back({{"thp_bits", ind.objs.thp},
                     {"jfi", ind.objs.jfi},
                     {"pdr", ind.objs.pdr}});
    return arr;
  };
  if (ran_exhaustive) j["exhaustive_front"] = front_json(exhaustive_front);
  if (ran_ga) j["ga_front"] = front_json(ga_front);
  if (ran_pla) {
    json arr = json::array();
    for (int idx : pla.front) {
      const auto& p = pla.survivors[static_cast<std::size_t>(idx)];
      arr.push_back({{"thp_bits", p.objs.thp},
                     {"jfi", p.objs.jfi},
                     {"pdr", p.objs.pdr}});
    }
    j["pla_front"] = arr;
    j["pla_best"] = {{"thp_bits", pla.best.objs.thp},
                     {"jfi", pla.best.objs.jfi},
                     {"pdr", pla.best.objs.pdr}};
  }
  return j;
}

ParetoReport run_pareto(const ExperimentConfig& cfg) {
  set_thread_budget(cfg.threads);
  ensure_output_dir(cfg);
  if (cfg.pareto.trace_path.empty())
    throw ConfigError("pareto.trace path is required");
  const Trace trace = Trace::load(cfg.pareto.trace_path);

  ParetoReport report;
  const bool want_ga =
      cfg.pareto.algorithm == "ga" || cfg.pareto.algorithm == "both";
  const bool want_pla =
      cfg.pareto.algorithm == "pla" || cfg.pareto.algorithm == "both";

  if (cfg.pareto.exhaustive) {
    const auto all = enumerate_all(trace, cfg.pareto.exhaustive_limit);
    std::vector<Objectives> objs(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) objs[i] = all[i].objs;
    for (int idx : pareto_front_of(objs))
      report.exhaustive_front.push_back(all[static_cast<std::size_t>(idx)]);
    report.ran_exhaustive = true;
    std::vector<const GaIndividual*> ptrs;
    for (const auto& ind : report.exhaustive_front) ptrs.push_back(&ind);
    write_front_csv(join_path(cfg.output_dir, "front_exhaustive.csv"), ptrs);
  }

  if (want_ga) {
    const GaResult ga =
        nsga2_run(trace, cfg.pareto.ga, derive_seed(cfg.seed, "nsga2-run"));
    if (!ga.fronts.empty()) {
      for (int idx : ga.fronts.front())
        report.ga_front.push_back(ga.population[static_cast<std::size_t>(idx)]);
    }
    report.ran_ga = true;
    std::vector<const GaIndividual*> ptrs;
    for (const auto& ind : report.ga_front) ptrs.push_back(&ind);
    write_front_csv(join_path(cfg.output_dir, "front_ga.csv"), ptrs);
    // best-by-scalarized-reward member of the first front
    if (!report.ga_front.empty()) {
      std::size_t best = 0;
      double best_score = -1e300;
      for (std::size_t i = 0; i < report.ga_front.size(); ++i) {
        const double s = scalarize(report.ga_front[i].objs, cfg.pareto.weights,
                                   trace.config().num_ues,
                                   trace.config().ladder.top_rate(),
                                   trace.config().duration_ttis);
        if (s > best_score) {
          best_score = s;
          best = i;
        }
      }
      save_sequence(join_path(cfg.output_dir, "best_sequence_ga.txt"),
                    report.ga_front[best].seq, report.ga_front[best].objs);
    }
  }

  if (want_pla) {
    report.pla = pla_run(trace, cfg.pareto.l_max, cfg.pareto.weights,
                         cfg.pareto.knobs);
    report.ran_pla = true;
    std::vector<GaIndividual> front_inds;
    for (int idx : report.pla.front) {
      const auto& p = report.pla.survivors[static_cast<std::size_t>(idx)];
      front_inds.push_back(GaIndividual{p.seq, p.objs});
    }
    std::vector<const GaIndividual*> ptrs;
    for (const auto& ind : front_inds) ptrs.push_back(&ind);
    write_front_csv(join_path(cfg.output_dir, "front_pla.csv"), ptrs);
    save_sequence(join_path(cfg.output_dir, "best_sequence_pla.txt"),
                  report.pla.best.seq, report.pla.best.objs);
  }

  write_text_file(join_path(cfg.output_dir, "pareto_report.json"),
                  report.to_json().dump(2) + "\n");
  return report;
}

std::string run_trace_record(const ExperimentConfig& cfg) {
  set_thread_budget(cfg.threads);
  ensure_output_dir(cfg);
  const Trace trace = Trace::record(cfg.env, cfg.seed);
  const std::string path = join_path(cfg.output_dir, "trace.txt");
  trace.save(path);
  return path;
}

nlohmann::json run_trace_replay(const ExperimentConfig& cfg,
                                const std::string& trace_path) {
  set_thread_budget(cfg.threads);
  ensure_output_dir(cfg);
  const Trace trace = Trace::load(trace_path);
  CellEnv env(trace.config(), trace);
  SchemeRunner runner{cfg, cfg.scheduler, nullptr};
  auto sched = runner.make(derive_seed(cfg.seed, "replay-sample"));
  const EpisodeStats stats =
      run_scheduler_episode(*sched, env, cfg.train.reward);
  json j = {{"scheduler", cfg.scheduler.name},
            {"trace_hash", trace.content_hash()},
            {"thp_bits", stats.kpi.thp_bits},
            {"jfi", stats.kpi.jfi},
            {"pdr", stats.kpi.pdr},
            {"dropped_packets", stats.dropped_packets},
            {"mean_step_reward", stats.mean_reward}};
  write_text_file(join_path(cfg.output_dir, "replay_report.json"),
                  j.dump(2) + "\n");
  return j;
}

GradCheckReport run_gradcheck_report(const ExperimentConfig& cfg) {
  set_thread_budget(cfg.threads);
  ensure_output_dir(cfg);
  const GradCheckReport report = run_gradcheck(derive_seed(cfg.seed, "gradcheck"));
  json cases = json::array();
  for (const auto& c : report.cases) {
    cases.push_back({{"name", c.name},
                     {"max_rel_err", c.max_rel_err},
                     {"params_checked", c.params_checked},
                     {"pass", c.pass}});
  }
  write_text_file(join_path(cfg.output_dir, "gradcheck_report.json"),
                  json{{"pass", report.pass}, {"cases", cases}}.dump(2) + "\n");
  return report;
}

}  // namespace cellsched
