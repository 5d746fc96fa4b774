#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "meso/actm/freeway.hpp"
#include "meso/bathtub/region.hpp"
#include "meso/engine/demand.hpp"
#include "meso/engine/routing.hpp"
#include "meso/net/network.hpp"
#include "meso/net/region_graph.hpp"

namespace meso::engine {

/// Action indices shared by every agent: raise the rate, hold, lower it.
enum Action : int { kRaise = 0, kHold = 1, kLower = 2 };
constexpr int kNumActions = 3;

struct SimConfig {
  std::uint64_t seed = 1;
  double horizon_s = 3600.0;
  double demand_scale = 1.0;
  double drain_cap_factor = 2.0;  // hard stop at this multiple of the horizon
  int decision_interval = 30;     // intervals between control decisions
  double du = 0.05;
  double u_min = 0.1;
  double u_max = 1.0;
  double reward_baseline = 0.0;   // C_r
  bool audit = false;             // flow-constraint audit and exact recounts every interval
  actm::ActmParams actm;
};

struct StepStats {
  long t = 0;
  double injected = 0.0;   // cumulative trips generated, N_inj
  double running = 0.0;    // N_run after the step
  double completed = 0.0;  // cumulative completions
  double completions = 0.0;// N_com this interval
  double reward = 0.0;
};

struct EpisodeLog {
  std::vector<double> injected, running, completions, reward;
  std::vector<std::vector<float>> rates;  // per interval, per agent
};

struct EpisodeMetrics {
  bool defined = false;  // false when nothing completed
  long intervals = 0;
  double ttt_s = 0.0;
  double ttt_freeflow_s = 0.0;
  double delay = 0.0;
  double speed_kmh = 0.0;
  double completions = 0.0;
  double injected = 0.0;
  double cumulative_reward = 0.0;
  double veh_km = 0.0;
  double veh_h = 0.0;
  double max_mass_error = 0.0;
  long audit_violations = 0;
};

/// Optional CSV sinks for per-cell densities and per-region accumulation.
struct DynamicsDump {
  std::ostream* cells = nullptr;    // t,road,cell,n
  std::ostream* regions = nullptr;  // t,region,accumulation,speed,inflow,outflow
  int stride = 10;
};

/// The coupled ACTM + bathtub simulation of one episode. Not thread-safe;
/// run independent episodes on independent instances.
class Simulator {
 public:
  Simulator(const net::Network& net, const DemandProfile& demand, SimConfig cfg);

  const net::Network& network() const { return *net_; }
  const net::RegionGraph& graph() const { return graph_; }
  const SimConfig& config() const { return cfg_; }
  const std::vector<Path>& paths() const { return paths_; }
  int num_agents() const { return static_cast<int>(net_->agents.size()); }

  /// Clears all state and re-draws the demand table for `seed`.
  void reset(std::uint64_t seed);
  /// Marks agents whose actuator exists for this run. Inactive agents use the
  /// uncontrolled branch and reject actions.
  void set_active(const std::vector<bool>& active);
  bool active(int agent) const { return active_.at(agent); }
  void apply_action(int agent, int action);
  void set_rate(int agent, double rate);
  double rate(int agent) const;

  StepStats step();
  long time() const { return t_; }
  long horizon_intervals() const { return horizon_; }
  bool done() const;
  bool decision_due() const { return t_ % cfg_.decision_interval == 0; }

  std::vector<double> observe(int agent) const;
  int observation_dim(int agent) const;
  /// Starts a new averaging window for observations.
  void reset_window();

  /// Vehicles in the mainline merge cell of a ramp agent.
  double merge_cell_count(int agent) const;
  double critical_cell_count(int agent) const;
  /// Accumulation of a perimeter agent's region.
  double region_accumulation(int agent) const;
  double critical_accumulation(int agent) const;

  double running() const;
  const EpisodeLog& log() const { return log_; }
  EpisodeMetrics finalize_metrics() const;
  void set_dump(DynamicsDump dump) { dump_ = dump; }
  void set_logging(bool on) { logging_ = on; }

  const actm::FreewayModel& freeway() const { return freeway_; }
  const bathtub::RegionState& region_state(int region) const { return regions_[region]; }

 private:
  void build_paths(const DemandProfile& demand);
  std::vector<int> neighbors_of(int region) const;
  void enter_region(int region, int path, double size, double extra_km);
  void enter_road(int road, int path, double size);

  const net::Network* net_;
  DemandProfile demand_;
  SimConfig cfg_;
  net::RegionGraph graph_;
  std::vector<Path> paths_;
  long horizon_ = 0;

  // Per-path lookups.
  std::vector<std::vector<int>> region_next_;  // [region][path]: link id, kEnds, or -1
  std::vector<std::vector<int>> road_next_;    // [road][path]: boundary link from the sink, or -1
  std::vector<std::vector<double>> road_km_;   // [road][path]: traversed length
  std::vector<std::vector<int>> road_cells_;   // [road][path]: traversed cells
  std::vector<std::vector<int>> region_paths_end_;  // [region]: paths completing here
  std::vector<int> origin_of_path_;

  actm::FreewayModel freeway_;
  std::vector<actm::RoadFlows> flows_;
  std::vector<bathtub::RegionState> regions_;
  std::vector<double> waiting_;
  std::vector<std::vector<double>> demand_table_;

  std::vector<bool> active_;
  std::vector<double> rates_;
  std::vector<std::vector<int>> agent_neighbors_;

  // Observation window sums.
  int window_len_ = 0;
  std::vector<std::vector<double>> ramp_window_;     // [agent]: f(k-1,k), f(k,k+1), R
  std::vector<double> start_window_, end_window_;    // [region]
  std::vector<std::vector<double>> in_window_, out_window_;  // [region][vertex]

  long t_ = 0;
  double injected_ = 0.0, completed_ = 0.0;
  double run_integral_ = 0.0;
  double veh_km_ = 0.0, ff_s_ = 0.0;
  double cumulative_reward_ = 0.0;
  double max_mass_error_ = 0.0;
  long audit_violations_ = 0;
  bool logging_ = true;
  EpisodeLog log_;
  DynamicsDump dump_;

  static constexpr int kEnds = -2;
};

/// Reward for one interval: completions minus the baseline constant.
inline double step_reward(double completions, double baseline) { return completions - baseline; }

}  // namespace meso::engine
