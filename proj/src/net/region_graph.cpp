#include "meso/net/region_graph.hpp"

#include <algorithm>
#include <map>

namespace meso::net {

bool RegionGraph::connected(int from, int to) const {
  for (int l : out_links[from])
    if (links[l].to == to) return true;
  return false;
}

bool RegionGraph::symmetric() const {
  for (const auto& l : links)
    if (!connected(l.to, l.from)) return false;
  return true;
}

RegionGraph partition_network(const Network& net) {
  RegionGraph g;
  g.region_vertex.assign(net.regions.size(), -1);
  g.road_vertex.assign(net.roads.size(), -1);
  for (int d : net.bathtub_regions()) {
    g.region_vertex[d] = static_cast<int>(g.vertices.size());
    g.vertices.push_back({Unit::Kind::region, d});
  }
  for (int e : net.cell_roads()) {
    g.road_vertex[e] = static_cast<int>(g.vertices.size());
    g.vertices.push_back({Unit::Kind::road, e});
  }
  g.out_links.assign(g.vertices.size(), {});
  auto add = [&](Link l) {
    g.out_links[l.from].push_back(static_cast<int>(g.links.size()));
    g.links.push_back(l);
  };

  // Urban boundary roads collapse into one link per ordered region pair.
  std::map<std::pair<int, int>, double> crossings;
  for (const auto& r : net.roads) {
    if (r.kind != RoadKind::urban) continue;
    int a = net.node_region[r.head_index], b = net.node_region[r.tail_index];
    if (a == b || !net.is_bathtub(a) || !net.is_bathtub(b)) continue;
    auto [it, fresh] = crossings.emplace(std::make_pair(a, b), r.length_km);
    if (!fresh) it->second = std::min(it->second, r.length_km);
  }
  for (const auto& [pair, km] : crossings)
    add({g.region_vertex[pair.first], g.region_vertex[pair.second], LinkKind::region_to_region, -1, -1, km});

  for (int e : net.cell_roads()) {
    const Road& r = net.roads[e];
    int v = g.road_vertex[e];
    int dh = net.node_region[r.head_index];
    int dt = net.node_region[r.tail_index];
    if (net.is_bathtub(dh)) add({g.region_vertex[dh], v, LinkKind::region_to_road, -1, 0, 0});
    if (net.is_bathtub(dt)) add({v, g.region_vertex[dt], LinkKind::road_to_region, r.cells - 1, -1, 0});
    if (r.kind == RoadKind::on_ramp) {
      add({v, g.road_vertex[r.attach_road], LinkKind::ramp_merge, r.cells - 1, r.attach_cell, 0});
    } else if (r.kind == RoadKind::off_ramp) {
      add({g.road_vertex[r.attach_road], v, LinkKind::ramp_diverge, r.attach_cell, 0, 0});
    }
  }
  // Sink-to-source junctions between cell roads meeting at a node.
  for (int e : net.cell_roads()) {
    const Road& up = net.roads[e];
    if (up.kind == RoadKind::on_ramp) continue;  // on-ramps discharge into their mainline
    for (int f : net.cell_roads()) {
      const Road& down = net.roads[f];
      if (f == e || down.kind == RoadKind::off_ramp) continue;
      if (up.tail_index == down.head_index)
        add({g.road_vertex[e], g.road_vertex[f], LinkKind::road_to_road, up.cells - 1, 0, 0});
    }
  }
  return g;
}

}  // namespace meso::net
