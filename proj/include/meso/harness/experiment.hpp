#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meso/demo/demonstrators.hpp"
#include "meso/drl/trainer.hpp"
#include "meso/harness/scenario.hpp"

namespace meso::harness {

enum class ControlMode { none, ramp, perimeter, both };
ControlMode parse_control(const std::string& s);
std::string to_string(ControlMode m);

/// Which agents act under a control mode.
std::vector<bool> active_agents(const net::Network& net, ControlMode mode);

struct ExperimentSpec {
  std::string scenario = "builtin-small";
  std::string demand_path;
  ControlMode control = ControlMode::both;
  /// demonstrator | proposed | dqn | drqn | no-nsteps | no-demonstrator | no-demonstrator-no-nsteps
  std::string controller = "proposed";
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int epochs = 30;
  double demand_scale = 1.0;  // multiplier on top of the desk scale, [0.1, 3]
  double desk_scale = 0.25;   // < 1: 1 h horizon and demand x desk_scale; 1: full scale
  std::string out_dir = "out";
  bool dump_dynamics = false;
  bool paper_literal_nstep = false;
  bool conventional_ce = false;
  demo::GridSpec grid;
};

/// Checks ranges and that the scenario loads. Throws before any simulation.
void validate(const ExperimentSpec& spec);

/// Hyperparameters for a spec: the defaults, with the desk overrides when
/// desk_scale < 1 (larger learning rate, more updates per epoch).
drl::Hyperparams hyperparams_for(const ExperimentSpec& spec);
/// Simulator settings for a spec (horizon, demand scale).
engine::SimConfig sim_config_for(const ExperimentSpec& spec, const Scenario& sc);

/// Mean per-interval completions of the seeded no-control episode (C_r).
double reward_baseline(const net::Network& net, const engine::DemandProfile& demand, engine::SimConfig cfg,
                       std::uint64_t seed);

struct ResultRow {
  std::string control, model;
  double reward = 0.0;  // TTT(no-control) - TTT, seconds
  double ttt = 0.0, delay = 0.0, speed = 0.0;
  std::uint64_t seed = 0;
};

struct AggregateRow {
  std::string control, model;
  double reward_mean = 0, reward_std = 0, ttt_mean = 0, ttt_std = 0;
  double delay_mean = 0, delay_std = 0, speed_mean = 0, speed_std = 0;
  int seeds = 0;
};

/// Mean and sample std per (control, model), in first-appearance order.
std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows);

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> summary;
};

/// For each seed: tune or train, then one greedy evaluation episode.
/// Writes checkpoints and training logs under out_dir.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// proposed, no-nsteps, no-demonstrator, no-demonstrator-no-nsteps on shared seeds.
ExperimentResult ablation_suite(const ExperimentSpec& spec);

struct SweepRow {
  double scale = 0.0;
  std::string control, model;
  std::uint64_t seed = 0;
  double ttt_nocontrol = 0, ttt = 0, delay_nocontrol = 0, delay = 0, speed_nocontrol = 0, speed = 0;
  double gap() const { return ttt_nocontrol - ttt; }
};

/// Evaluates saved controllers (from a previous run into out_dir) at each
/// demand scale against no-control. No training or tuning happens here.
std::vector<SweepRow> sensitivity_sweep(const ExperimentSpec& spec, const std::vector<double>& scales);

/// Grid search per seed; returns the full table with a seed column.
struct TuneOutput {
  std::vector<std::uint64_t> seed;
  std::vector<demo::TuneRow> rows;
};
TuneOutput run_tuning(const ExperimentSpec& spec);

/// CSV writers. Deterministic formatting; IO failures name the path.
void export_results(const std::vector<ResultRow>& rows, const std::string& dir, const std::string& stem = "results");
std::vector<ResultRow> read_results(const std::string& path);
void write_sweep(const std::vector<SweepRow>& rows, const std::string& path);
void write_tune(const TuneOutput& out, const std::string& path);

/// Saved demonstrator parameters (the tuned "checkpoint" of a demonstrator run).
void save_demonstrator(const std::string& path, const demo::DemonstratorParams& p);
demo::DemonstratorParams load_demonstrator(const std::string& path);

}  // namespace meso::harness
