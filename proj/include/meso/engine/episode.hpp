#pragma once

#include <functional>

#include "meso/engine/simulator.hpp"

namespace meso::engine {

/// Called at every decision interval, before the interval is simulated.
using DecisionHook = std::function<void(Simulator&)>;

/// Runs the episode to completion from the simulator's current state.
EpisodeMetrics run_episode(Simulator& sim, const DecisionHook& on_decision = {});

}  // namespace meso::engine
