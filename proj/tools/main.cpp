// mesoctl: run / tune / ablate / sweep experiments on a scenario.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "meso/harness/experiment.hpp"

namespace {

using meso::harness::ExperimentSpec;

struct Options {
  std::string scenario = "builtin-small";
  std::string demand;
  std::string mode = "both";
  std::string controller = "proposed";
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int epochs = -1;
  double demand_scale = 1.0;
  double desk_scale = 0.25;
  std::string out = "out";
  bool dump = false;
  bool literal_nstep = false;
  std::string ce = "paper";
  std::vector<double> scales{0.6, 0.8, 1.0, 1.1, 1.25, 1.5};
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--scenario", o.scenario, "builtin-small or a network config path")->capture_default_str();
  app->add_option("--demand", o.demand, "demand profile path (default: <config stem>.demand.json)");
  app->add_option("--mode", o.mode, "control mode")
      ->check(CLI::IsMember({"none", "ramp", "perimeter", "both"}))
      ->capture_default_str();
  app->add_option("--controller", o.controller, "controller")
      ->check(CLI::IsMember({"demonstrator", "proposed", "dqn", "drqn", "no-nsteps", "no-demonstrator",
                             "no-demonstrator-no-nsteps"}))
      ->capture_default_str();
  app->add_option("--seeds", o.seeds, "seeds, comma separated")->delimiter(',')->capture_default_str();
  app->add_option("--epochs", o.epochs, "training epochs (default 30 at desk scale, 100 at full scale)");
  app->add_option("--demand-scale", o.demand_scale, "demand multiplier")
      ->check(CLI::Range(0.1, 3.0))
      ->capture_default_str();
  app->add_option("--desk-scale", o.desk_scale, "demand factor; below 1 also shortens the horizon to 1 h")
      ->check(CLI::Range(1e-6, 1.0))
      ->capture_default_str();
  app->add_option("--out", o.out, "output directory")->capture_default_str();
  app->add_flag("--dump-dynamics", o.dump, "write per-cell and per-region CSVs of evaluation episodes");
  app->add_flag("--paper-literal-nstep", o.literal_nstep, "use the literal multi-step return form");
  app->add_option("--ce-direction", o.ce, "demonstration loss direction")
      ->check(CLI::IsMember({"paper", "conventional"}))
      ->capture_default_str();
}

ExperimentSpec to_spec(const Options& o) {
  ExperimentSpec s;
  s.scenario = o.scenario;
  s.demand_path = o.demand;
  s.control = meso::harness::parse_control(o.mode);
  s.controller = o.controller;
  s.seeds = o.seeds;
  s.desk_scale = o.desk_scale;
  s.epochs = o.epochs >= 0 ? o.epochs : (o.desk_scale < 1.0 ? 30 : 100);
  s.demand_scale = o.demand_scale;
  s.out_dir = o.out;
  s.dump_dynamics = o.dump;
  s.paper_literal_nstep = o.literal_nstep;
  s.conventional_ce = o.ce == "conventional";
  return s;
}

void print_summary(const std::vector<meso::harness::AggregateRow>& rows) {
  std::printf("%-10s %-26s %12s %12s %10s %10s %5s\n", "control", "model", "reward", "TTT", "delay", "speed", "n");
  for (const auto& r : rows)
    std::printf("%-10s %-26s %6.1f±%-5.1f %6.1f±%-5.1f %10.4f %10.2f %5d\n", r.control.c_str(), r.model.c_str(),
                r.reward_mean, r.reward_std, r.ttt_mean, r.ttt_std, r.delay_mean, r.speed_mean, r.seeds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meso-macro traffic simulation with demonstration-guided control"};
  app.require_subcommand(1);
  Options o;
  auto* run = app.add_subcommand("run", "tune or train, then evaluate, per seed");
  auto* tune = app.add_subcommand("tune", "grid-search the demonstrators");
  auto* ablate = app.add_subcommand("ablate", "the four demonstrator / multi-step ablations");
  auto* sweep = app.add_subcommand("sweep", "evaluate saved controllers across demand scales");
  for (auto* sc : {run, tune, ablate, sweep}) add_common(sc, o);
  sweep->add_option("--scales", o.scales, "demand scales, comma separated")->delimiter(',')->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentSpec spec = to_spec(o);
    namespace fs = std::filesystem;
    if (*run) {
      auto res = meso::harness::run_experiment(spec);
      meso::harness::export_results(res.rows, spec.out_dir, "results");
      print_summary(res.summary);
    } else if (*tune) {
      auto res = meso::harness::run_tuning(spec);
      std::string path = (fs::path(spec.out_dir) / "tune.csv").string();
      meso::harness::write_tune(res, path);
      std::printf("wrote %zu grid points to %s\n", res.rows.size(), path.c_str());
    } else if (*ablate) {
      auto res = meso::harness::ablation_suite(spec);
      meso::harness::export_results(res.rows, spec.out_dir, "ablation");
      print_summary(res.summary);
    } else if (*sweep) {
      auto rows = meso::harness::sensitivity_sweep(spec, o.scales);
      fs::create_directories(spec.out_dir);
      std::string path = (fs::path(spec.out_dir) / "sweep.csv").string();
      meso::harness::write_sweep(rows, path);
      for (const auto& r : rows)
        std::printf("scale %.2f seed %llu: TTT %.1f -> %.1f (gap %.1f)\n", r.scale,
                    static_cast<unsigned long long>(r.seed), r.ttt_nocontrol, r.ttt, r.gap());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
