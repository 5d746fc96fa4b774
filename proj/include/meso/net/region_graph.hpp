#pragma once

#include <vector>

#include "meso/net/network.hpp"

namespace meso::net {

/// A vertex of the abstract graph: a bathtub region or a cell-modelled road.
struct Unit {
  enum class Kind { region, road };
  Kind kind = Kind::region;
  int index = -1;

  bool is_region() const { return kind == Kind::region; }
  bool is_road() const { return kind == Kind::road; }
  friend bool operator==(const Unit&, const Unit&) = default;
};

enum class LinkKind { region_to_region, region_to_road, road_to_region, road_to_road, ramp_merge, ramp_diverge };

/// A boundary connection between two units.
struct Link {
  int from = -1;  // vertex ids
  int to = -1;
  LinkKind kind = LinkKind::region_to_region;
  int from_cell = -1;       // cell the flow leaves on a road source (sink cell, or diverge cell)
  int to_cell = -1;         // cell the flow enters on a road target (source cell, or merge cell)
  double crossing_km = 0;   // shortest urban boundary road between two regions
};

/// Region adjacency graph. Vertices are bathtub regions plus every
/// cell road; ACTM source and sink cells are the interface points.
struct RegionGraph {
  std::vector<Unit> vertices;
  std::vector<int> region_vertex;  // region index -> vertex, -1 for the freeway region
  std::vector<int> road_vertex;    // road index -> vertex, -1 for urban roads
  std::vector<Link> links;
  std::vector<std::vector<int>> out_links;  // vertex -> link ids

  int vertex_of(const Unit& u) const { return u.is_region() ? region_vertex[u.index] : road_vertex[u.index]; }
  bool connected(int from, int to) const;
  /// True when every link has a reverse link.
  bool symmetric() const;
};

RegionGraph partition_network(const Network& net);

}  // namespace meso::net
