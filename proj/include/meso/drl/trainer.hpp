#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "meso/demo/demonstrators.hpp"
#include "meso/drl/learn.hpp"
#include "meso/engine/simulator.hpp"

namespace meso::drl {

enum class Mode { proposed, no_nsteps, no_demonstrator, no_demonstrator_no_nsteps, dqn };

/// Accepts "proposed", "no-nsteps", "no-demonstrator", "no-demonstrator-no-nsteps", "dqn".
Mode parse_mode(const std::string& s);
std::string to_string(Mode m);
bool uses_demonstrator(Mode m);
bool uses_nsteps(Mode m);
bool uses_memory(Mode m);

/// One trained agent: which simulator agent it drives and its online network.
struct AgentModel {
  int agent = -1;
  std::string id;
  QNetwork net;
};

struct TrainLogRow {
  int epoch = 0;
  double cumulative_reward = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;
  double mean_loss = 0.0;
};

struct TrainSpec {
  Hyperparams hp;
  Mode mode = Mode::proposed;
  std::uint64_t seed = 1;
  std::vector<bool> active;            // agents to train; the rest stay uncontrolled
  demo::DemonstratorParams teacher;    // required when the mode uses a demonstrator
  /// Optional per-epoch callback (after the update and any clone).
  std::function<void(const TrainLogRow&)> on_epoch;
};

struct TrainResult {
  std::vector<AgentModel> agents;
  std::vector<TrainLogRow> log;
  std::vector<int> clone_epochs;  // epochs after which the target was refreshed
};

/// Demand seed of training epoch `epoch` for run seed `seed`.
std::uint64_t epoch_seed(std::uint64_t seed, int epoch);

/// Runs the training loop on `sim` (reset every epoch).
TrainResult train(engine::Simulator& sim, const TrainSpec& spec);

/// One greedy episode (epsilon 0) from reset(seed) with the given agents.
engine::EpisodeMetrics evaluate(engine::Simulator& sim, const std::vector<AgentModel>& agents, Mode mode,
                                std::uint64_t seed);

/// Checkpoint of one agent: network shape, parameters and metadata.
void save_checkpoint(const std::string& path, const AgentModel& model, const Hyperparams& hp, Mode mode);
/// Loads a checkpoint, verifying the observation dimension when `obs_dim` >= 0.
AgentModel load_checkpoint(const std::string& path, int obs_dim = -1, Hyperparams* hp = nullptr,
                           Mode* mode = nullptr);

/// Training log CSV: epoch,cumulative_reward,epsilon,alpha,mean_loss.
void write_train_log(const std::string& path, const std::vector<TrainLogRow>& rows);

}  // namespace meso::drl
