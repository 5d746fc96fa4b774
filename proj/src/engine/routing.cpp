#include "meso/engine/routing.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <tuple>

namespace meso::engine {

double Path::length_km() const {
  double s = 0.0;
  for (const auto& l : legs) s += l.length_km;
  return s;
}

namespace {

// Search state: a vertex entered at a given cell (0 for regions).
using State = std::pair<int, int>;

double traverse_km(const net::Network& net, const net::Unit& u, int entry, int exit) {
  if (u.is_region()) return net.regions[u.index].mean_leg_km();
  const auto& r = net.roads[u.index];
  return (exit - entry + 1) * r.cell_length_km;
}

}  // namespace

Path plan_trip(const net::Network& net, const net::RegionGraph& graph, int origin, int destination) {
  auto name = [&](int d) { return d >= 0 && d < static_cast<int>(net.regions.size()) ? net.regions[d].id : "?"; };
  if (origin < 0 || destination < 0 || origin >= static_cast<int>(net.regions.size()) ||
      destination >= static_cast<int>(net.regions.size()) || !net.is_bathtub(origin) || !net.is_bathtub(destination))
    throw PlanningError("cannot plan trip " + name(origin) + " -> " + name(destination) +
                        ": endpoints must be bathtub regions");
  int src = graph.region_vertex[origin];
  int dst = graph.region_vertex[destination];

  Path path;
  path.origin = origin;
  path.destination = destination;
  if (src == dst) {
    Leg leg{graph.vertices[src], src, -1, -1, -1, net.regions[origin].mean_leg_km()};
    path.legs.push_back(leg);
    return path;
  }

  struct Prev {
    State from{-1, -1};
    int link = -1;
  };
  std::map<State, double> dist;
  std::map<State, Prev> prev;
  using Item = std::tuple<double, int, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> open;
  std::set<State> done;
  dist[{src, 0}] = 0.0;
  open.emplace(0.0, src, 0);
  State goal{-1, -1};

  while (!open.empty()) {
    auto [d, v, cell] = open.top();
    open.pop();
    State s{v, cell};
    if (done.count(s)) continue;
    done.insert(s);
    if (v == dst) {
      goal = s;
      break;
    }
    const auto& unit = graph.vertices[v];
    for (int l : graph.out_links[v]) {
      const auto& link = graph.links[l];
      int exit = unit.is_road() ? link.from_cell : -1;
      if (unit.is_road() && exit < cell) continue;  // cannot leave upstream of where we entered
      // Never re-enter a unit already on the way here.
      bool seen = false;
      for (State q = s; q.first >= 0; q = prev.count(q) ? prev[q].from : State{-1, -1})
        if (q.first == link.to) seen = true;
      if (seen) continue;
      double cost = d + (v == src ? 0.0 : traverse_km(net, unit, cell, exit)) + link.crossing_km;
      State next{link.to, graph.vertices[link.to].is_road() ? link.to_cell : 0};
      auto it = dist.find(next);
      if (it == dist.end() || cost < it->second) {
        dist[next] = cost;
        prev[next] = {s, l};
        open.emplace(cost, next.first, next.second);
      }
    }
  }
  if (goal.first < 0)
    throw PlanningError("no route from region " + name(origin) + " to region " + name(destination));

  std::vector<std::pair<State, int>> chain;  // (state, link used to enter)
  for (State s = goal; s.first >= 0;) {
    int link = prev.count(s) ? prev[s].link : -1;
    chain.emplace_back(s, link);
    s = prev.count(s) ? prev[s].from : State{-1, -1};
  }
  std::reverse(chain.begin(), chain.end());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    auto [s, link_in] = chain[i];
    Leg leg;
    leg.vertex = s.first;
    leg.unit = graph.vertices[s.first];
    leg.link_in = link_in;
    if (leg.unit.is_road()) {
      leg.entry_cell = s.second;
      leg.exit_cell = graph.links[chain[i + 1].second].from_cell;
    }
    leg.length_km = traverse_km(net, leg.unit, leg.entry_cell, leg.exit_cell);
    path.legs.push_back(leg);
  }
  return path;
}

}  // namespace meso::engine
