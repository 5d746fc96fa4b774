#pragma once

#include <vector>

#include "meso/actm/cell_model.hpp"
#include "meso/net/network.hpp"

namespace meso::actm {

struct ActmParams {
  double gamma = 1.0;  // on-ramp blending
  double zeta = 1.0;   // on-ramp allocation coefficient
};

/// Cell state of one road. `comp` is cells x paths, row-major: the vehicles
/// of each path in each cell.
struct RoadState {
  std::vector<double> n;
  std::vector<double> comp;
  int paths = 0;
  double meter_rate = 1.0;  // on-ramps
  bool metered = false;

  double* row(int k) { return comp.data() + static_cast<std::size_t>(k) * paths; }
  const double* row(int k) const { return comp.data() + static_cast<std::size_t>(k) * paths; }
  double total() const;
};

/// Flows on one road for one interval. Boundary terms (inflow/outflow,
/// injections/completions and their compositions) are filled by the caller
/// before compute_flows; everything else is produced by it.
struct RoadFlows {
  std::vector<double> f;       // f^{k,k+1}, cells - 1 entries
  std::vector<double> beta;    // off-ramp split per cell
  std::vector<double> theta;   // share of each cell's pool leaving it this interval
  std::vector<double> ramp_in; // R^k per cell (mainlines)
  std::vector<double> ramp_out;// S^k per cell (mainlines)
  double ramp = 0.0;           // on-ramp: R delivered; off-ramp: S received
  double ramp_available = 0.0; // on-ramp: n^{-1}(t-1) + f^{-2,-1}(t)
  double ramp_cap = 0.0;       // on-ramp: c
  std::vector<double> ramp_comp;

  double inflow = 0.0, outflow = 0.0;
  double injections = 0.0, completions = 0.0;
  std::vector<double> inflow_comp, outflow_comp, injection_comp, completion_comp;

  void reset(int cells, int paths);
};

/// The cell-modelled part of the network. Per-road flow computation reads
/// only start-of-interval state; advance() is the exclusive write phase.
class FreewayModel {
 public:
  /// `exit_cell[e][p]` is the cell where path p leaves road e (-1 if unused).
  FreewayModel(const net::Network& net, int paths, std::vector<std::vector<int>> exit_cell,
               ActmParams params = {});

  const net::Network& network() const { return *net_; }
  const ActmParams& params() const { return params_; }
  int paths() const { return paths_; }
  const std::vector<int>& roads() const { return roads_; }
  std::vector<RoadState>& states() { return states_; }
  const std::vector<RoadState>& states() const { return states_; }
  const std::vector<int>& exit_cells(int road) const { return exit_cell_[road]; }

  DemandSupply road_demand_supply(int road, double completions, double injections) const;
  /// Ramp flows, then mainline flows, for every cell road.
  void compute_flows(std::vector<RoadFlows>& flows) const;
  /// Applies the conservation laws to every cell.
  void advance(const std::vector<RoadFlows>& flows);
  /// Counts violations of the on-ramp and mainline flow constraints.
  int audit(const std::vector<RoadFlows>& flows, double tol = 1e-9) const;
  double total_vehicles() const;
  void clear();

 private:
  void ramp_internal(int road, RoadFlows& fl) const;
  void mainline(int road, std::vector<RoadFlows>& flows) const;

  const net::Network* net_;
  int paths_;
  ActmParams params_;
  std::vector<int> roads_;
  std::vector<int> ramps_;
  std::vector<int> mainlines_;
  std::vector<std::vector<int>> exit_cell_;
  std::vector<RoadState> states_;
};

}  // namespace meso::actm
