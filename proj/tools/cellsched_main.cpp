#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "cellsched/harness.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* opt = cmd->add_option("-c,--config", args.config_path,
                              "experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--set", args.overrides,
                  "override a config key, e.g. --set train.gamma=0.95");
  cmd->add_option("-o,--output-dir", args.output_dir, "output directory");
  cmd->add_option("--threads", args.threads,
                  "thread budget (0 = hardware, 1 = serial)");
}

cellsched::ExperimentConfig load_config(const CommonArgs& args) {
  cellsched::ExperimentConfig cfg =
      args.config_path.empty()
          ? cellsched::ExperimentConfig::from_json(nlohmann::json::object())
          : cellsched::ExperimentConfig::load(args.config_path, args.overrides);
  if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
  if (args.threads >= 0) cfg.threads = args.threads;
  return cfg;
}

void print_comparison(const cellsched::ComparisonReport& report) {
  std::printf("%s: %s vs %s over %d windows\n", report.mode.c_str(),
              report.a.name.c_str(), report.b.name.c_str(), report.windows);
  for (const auto* s : {&report.a, &report.b}) {
    std::printf("  %-6s thp=%.0f bits  jfi=%.4f  pdr=%.4f  dropped=%lld  "
                "reward=%.5f\n",
                s->name.c_str(), s->thp_bits, s->jfi, s->pdr,
                static_cast<long long>(s->dropped_packets), s->mean_reward);
  }
  std::printf("  ratios a/b: thp=%.4f jfi=%.4f pdr=%.4f reward=%.4f\n",
              report.thp_ratio, report.jfi_ratio, report.pdr_ratio,
              report.reward_ratio);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cellsched: downlink scheduling laboratory"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, compare_args, pareto_args, record_args,
      replay_args, gradcheck_args;
  std::string replay_trace;

  auto* train_cmd = app.add_subcommand("train", "train a DRL scheduler");
  add_common(train_cmd, train_args);
  auto* eval_cmd =
      app.add_subcommand("eval", "evaluate a checkpoint vs PF (paired)");
  add_common(eval_cmd, eval_args);
  auto* compare_cmd =
      app.add_subcommand("compare", "compare two schedulers on shared traffic");
  add_common(compare_cmd, compare_args);
  auto* pareto_cmd =
      app.add_subcommand("pareto", "gene-aided Pareto frontier search on a trace");
  add_common(pareto_cmd, pareto_args);
  auto* record_cmd =
      app.add_subcommand("trace-record", "record an exogenous trace");
  add_common(record_cmd, record_args);
  auto* replay_cmd =
      app.add_subcommand("trace-replay", "replay a trace with a scheduler");
  add_common(replay_cmd, replay_args);
  replay_cmd->add_option("--trace", replay_trace, "trace file")->required();
  auto* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference gradient check");
  add_common(gradcheck_cmd, gradcheck_args, /*config_required=*/false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      const auto cfg = load_config(train_args);
      const auto artifacts = cellsched::run_train(cfg);
      std::printf("trained %d updates (%s)\n", artifacts.result.updates_run,
                  artifacts.result.stop_reason.c_str());
      std::printf("checkpoint: %s\ncurves: %s\n",
                  artifacts.checkpoint_path.c_str(),
                  artifacts.curves_path.c_str());
      if (!artifacts.result.curve.empty()) {
        const auto& last = artifacts.result.curve.back();
        std::printf("final eval vs PF: thp=%.4f jfi=%.4f pdr=%.4f reward=%.4f\n",
                    last.thp_ratio, last.jfi_ratio, last.pdr_ratio,
                    last.reward_ratio);
      }
    } else if (eval_cmd->parsed()) {
      print_comparison(cellsched::run_eval(load_config(eval_args)));
    } else if (compare_cmd->parsed()) {
      print_comparison(cellsched::run_compare(load_config(compare_args)));
    } else if (pareto_cmd->parsed()) {
      const auto report = cellsched::run_pareto(load_config(pareto_args));
      if (report.ran_exhaustive)
        std::printf("exhaustive front: %zu points\n",
                    report.exhaustive_front.size());
      if (report.ran_ga)
        std::printf("ga front: %zu points\n", report.ga_front.size());
      if (report.ran_pla)
        std::printf("pla front: %zu points, best thp=%.0f jfi=%.4f pdr=%.4f\n",
                    report.pla.front.size(), report.pla.best.objs.thp,
                    report.pla.best.objs.jfi, report.pla.best.objs.pdr);
    } else if (record_cmd->parsed()) {
      const auto path = cellsched::run_trace_record(load_config(record_args));
      std::printf("trace written: %s\n", path.c_str());
    } else if (replay_cmd->parsed()) {
      const auto j =
          cellsched::run_trace_replay(load_config(replay_args), replay_trace);
      std::printf("%s\n", j.dump(2).c_str());
    } else if (gradcheck_cmd->parsed()) {
      const auto report =
          cellsched::run_gradcheck_report(load_config(gradcheck_args));
      for (const auto& c : report.cases) {
        std::printf("%-24s max_rel_err=%.3e params=%d %s\n", c.name.c_str(),
                    c.max_rel_err, c.params_checked,
                    c.pass ? "PASS" : "FAIL");
      }
      if (!report.pass) {
        std::fprintf(stderr, "gradient check failed\n");
        return 3;
      }
      std::printf("gradient check passed\n");
    }
  } catch (const cellsched::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const cellsched::ContractViolation& e) {
    std::fprintf(stderr, "contract violation: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
