#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "focus/bench.hpp"
#include "focus/config.hpp"
#include "focus/cost.hpp"
#include "focus/errors.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kScenarioError = 3;

int cmd_run(const std::string& path, const std::string& out_override, std::size_t threads) {
  focus::RunConfig config;
  try {
    config = focus::parse_config_file(path);
  } catch (const focus::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  if (threads) config.threads = threads;
  std::string outdir = out_override;
  if (outdir.empty()) outdir = config.output_dir.empty() ? "runs/" + config.name : config.output_dir;
  try {
    const auto records = focus::run_all(config);
    focus::emit_reports(config, records, outdir);
    std::cout << focus::render_report(outdir);
    std::cout << "\nreports written to " << outdir << "\n";
  } catch (const focus::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kScenarioError;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"focus: federated learning vs local in-context learning simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::size_t threads = 0;
  auto* run = app.add_subcommand("run", "run every scenario of a config and write reports");
  run->add_option("config", config_path, "run config (JSON)")->required();
  run->add_option("-o,--out", out_dir, "output directory (overrides output_dir)");
  run->add_option("-j,--threads", threads, "worker threads (0: config or hardware)");

  focus::CostModelInputs in;
  double down_mbps = in.network.down_bps / 1e6, up_mbps = in.network.up_bps / 1e6;
  auto* cost = app.add_subcommand("cost", "evaluate the FL vs ICL cost model");
  cost->add_option("--params", in.fl_params, "trainable (FL) model parameters")->capture_default_str();
  cost->add_option("--icl-params", in.icl_params, "frozen (ICL) model parameters")->capture_default_str();
  cost->add_option("--bytes-per-param", in.bytes_per_param)->capture_default_str();
  cost->add_option("--rounds", in.rounds, "FL communication rounds")->capture_default_str();
  cost->add_option("--steps", in.steps, "training steps")->capture_default_str();
  cost->add_option("--batch", in.batch, "training batch size")->capture_default_str();
  cost->add_option("--seq-len", in.seq_len, "training and FL inference length")->capture_default_str();
  cost->add_option("--inference-len", in.icl_input_len, "ICL prompt length")->capture_default_str();
  cost->add_option("--down-mbps", down_mbps)->capture_default_str();
  cost->add_option("--up-mbps", up_mbps)->capture_default_str();
  cost->add_option("--tasks", in.tasks_supported, "personal tasks supported")->capture_default_str();

  std::string run_dir;
  auto* report = app.add_subcommand("report", "summarize a finished run directory");
  report->add_option("run_dir", run_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*run) return cmd_run(config_path, out_dir, threads);

  if (*cost) {
    try {
      in.network.down_bps = down_mbps * 1e6;
      in.network.up_bps = up_mbps * 1e6;
      if (!(in.tasks_supported >= 1)) throw focus::ConfigError("--tasks", "must be >= 1");
      for (double v : {in.fl_params, in.icl_params, in.bytes_per_param})
        if (!(v > 0)) throw focus::ConfigError("--params", "model sizes must be positive");
      std::cout << focus::to_json(focus::evaluate_cost_model(in)).dump(2) << "\n";
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kConfigError;
    }
    return kOk;
  }

  if (*report) {
    try {
      std::cout << focus::render_report(run_dir);
    } catch (const std::exception& e) {
      std::cerr << e.what() << "\n";
      return kScenarioError;
    }
  }
  return kOk;
}
