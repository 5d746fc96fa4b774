#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "meso/engine/simulator.hpp"

namespace meso::demo {

struct AlineaParams {
  double KI = 0.01;
  double threshold = -1.0;  // veh; <= 0 means the critical cell count
};

struct GatingParams {
  double KP = 0.1;
  double KI = 0.05;
  double threshold = -1.0;  // veh; <= 0 means the critical accumulation
};

/// KI (n_dot - n).
double alinea_step(const AlineaParams& p, double n);
/// -KP (N(t+1) - N(t)) + KI (N_dot - N(t)).
double gating_step(const GatingParams& p, double n_t, double n_next);
/// Sign of a continuous update as an action index; exact zero holds.
int quantize_control(double update);
/// 1 - 2 kappa on `action`, kappa elsewhere. Requires 0 < kappa < 1/3.
std::array<double, 3> teacher_policy(int action, double kappa = 0.05);

/// Per-agent controller parameters; each agent uses the entry matching its kind.
struct DemonstratorParams {
  std::vector<AlineaParams> alinea;
  std::vector<GatingParams> gating;
  static DemonstratorParams defaults(int agents);
};

/// ALINEA on ramp agents and Gating on perimeter agents, quantized to the
/// shared action set. Keeps the previous decision's accumulations for Gating.
class Demonstrator {
 public:
  explicit Demonstrator(DemonstratorParams params) : params_(std::move(params)) {}
  void begin(const engine::Simulator& sim);
  /// Quantized action for one agent at the current decision point.
  int action(const engine::Simulator& sim, int agent) const;
  /// Actions for all agents, then records this decision's accumulations.
  std::vector<int> decide(const engine::Simulator& sim);
  /// decide() and apply to every active agent.
  void act(engine::Simulator& sim);
  const DemonstratorParams& params() const { return params_; }

 private:
  DemonstratorParams params_;
  std::vector<double> prev_acc_;
};

struct TuneRow {
  std::string agent;
  double KI = 0, KP = 0, threshold = 0;
  double ttt = 0;
};

struct GridSpec {
  std::vector<double> alinea_KI = {0.005, 0.01, 0.02};
  std::vector<double> alinea_threshold_scale = {0.6, 0.8, 1.0};  // x critical cell count
  std::vector<double> gating_KP = {0.0, 0.05, 0.1};
  std::vector<double> gating_KI = {0.01, 0.05};
  std::vector<double> gating_threshold_scale = {0.6, 0.8, 1.0};  // x critical accumulation
};

struct TuneResult {
  DemonstratorParams best;
  std::vector<TuneRow> table;
};

/// Independent per-agent grid search minimizing episode TTT with every other
/// agent uncontrolled. `agents` selects which agents are tuned; `make_sim`
/// must return a fresh simulator for the tuning seed. Ties keep the first point.
TuneResult grid_search_tune(const std::function<engine::Simulator()>& make_sim, const std::vector<int>& agents,
                            const GridSpec& grid);

}  // namespace meso::demo
