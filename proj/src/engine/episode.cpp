#include "meso/engine/episode.hpp"

namespace meso::engine {

EpisodeMetrics run_episode(Simulator& sim, const DecisionHook& on_decision) {
  while (!sim.done()) {
    if (sim.decision_due()) {
      if (on_decision) on_decision(sim);
      sim.reset_window();
    }
    sim.step();
  }
  return sim.finalize_metrics();
}

}  // namespace meso::engine
