#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "meso/net/network.hpp"
#include "meso/net/region_graph.hpp"

namespace meso::engine {

class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One unit traversed by a path. For roads `entry_cell`/`exit_cell` bound the
/// traversed cells; `link_in` is the graph link used to enter (-1 on the first leg).
struct Leg {
  net::Unit unit;
  int vertex = -1;
  int entry_cell = -1;
  int exit_cell = -1;
  int link_in = -1;
  double length_km = 0.0;  // road: traversed cells x delta; region: mean leg length
};

struct Path {
  int origin = -1;       // region index
  int destination = -1;  // region index
  std::vector<Leg> legs;
  double length_km() const;
};

/// Shortest-distance path between two bathtub regions over the abstract graph.
/// Throws PlanningError naming the pair when unreachable.
Path plan_trip(const net::Network& net, const net::RegionGraph& graph, int origin, int destination);

}  // namespace meso::engine
