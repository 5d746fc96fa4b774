#include "oracle_drivers.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "meso/actm/freeway.hpp"
#include "meso/bathtub/region.hpp"
#include "meso/net/network.hpp"

namespace meso::testing {

namespace {

double offer_main(int t) { return t < 80 ? 0.9 + 0.5 * std::sin(t / 9.0) : 0.0; }
double offer_ramp(int t) { return t < 80 ? 0.45 + 0.3 * std::cos(t / 6.0) : 0.0; }
double freeway_down(int t) { return (t >= 35 && t < 65) ? 0.35 : 1.0; }
double meter(int t) { return (t >= 20 && t < 50) ? 0.3 : 1.0; }

double starts_wanted(int t) { return t < 70 ? 0.6 + 0.4 * std::sin(t / 7.0) : 0.0; }
double boundary_offer(int t) { return t < 80 ? 0.7 : 0.0; }
double region_down(int t) { return (t >= 30 && t < 60) ? 0.3 : 1.0; }

net::Network small_road() {
  using nlohmann::json;
  auto road = [](const char* id, const char* head, const char* tail, const char* kind, double len, double v,
                 double w, double cap) {
    return json{{"id", id},           {"head", head}, {"tail", tail}, {"kind", kind},
                {"length_km", len},   {"vmax_kmh", v}, {"w_kmh", w},   {"capacity_vph", cap},
                {"jam_density_vpkpl", 150.0}};
  };
  json ramp = road("O", "o", "j", "on_ramp", 1.0 / 30.0, 60, 20, 1800);
  ramp["attach"] = {{"road", "M"}, {"km", 0.03}};
  json doc = {{"nodes", {"a", "b", "j", "o"}},
              {"roads", {road("M", "a", "b", "mainline", 0.075, 90, 30, 3600), ramp}},
              {"regions", {{{"id", "F"}, {"nodes", {"a", "b", "j", "o"}}, {"model", "actm"}}}},
              {"freeway_region", "F"}};
  return net::parse_network_config(doc);
}

}  // namespace

Table freeway_trajectory() {
  const net::Network net = small_road();
  const int M = net.road_index("M"), O = net.road_index("O");
  if (net.roads[M].cells != 3 || net.roads[O].cells != 2) throw std::logic_error("oracle road has wrong cell count");
  actm::FreewayModel fw(net, 2, {{2, 2}, {-1, -1}});
  std::vector<actm::RoadFlows> flows(net.roads.size());
  auto& st = fw.states();
  st[O].metered = true;
  Table out;
  for (int t = 0; t < 100; ++t) {
    for (int e : fw.roads()) flows[e].reset(net.roads[e].cells, 2);
    st[O].meter_rate = meter(t);

    auto& fm = flows[M];
    auto dsm = fw.road_demand_supply(M, 0.0, 0.0);
    fm.inflow = std::min(offer_main(t), dsm.supply);
    fm.inflow_comp[0] = fm.inflow;
    fm.outflow = std::min(dsm.demand, freeway_down(t));
    const double* sink = st[M].row(2);
    double held = sink[0] + sink[1];
    for (int p = 0; p < 2; ++p) fm.outflow_comp[p] = held > 0.0 ? fm.outflow * sink[p] / held : 0.0;

    auto& fo = flows[O];
    fo.inflow = std::min(offer_ramp(t), fw.road_demand_supply(O, 0.0, 0.0).supply);
    fo.inflow_comp[1] = fo.inflow;

    fw.compute_flows(flows);
    fw.advance(flows);

    std::vector<double> row{static_cast<double>(t + 1)};
    for (double n : st[M].n) row.push_back(n);
    for (double n : st[O].n) row.push_back(n);
    for (double c : st[M].comp) row.push_back(c);
    for (double c : st[O].comp) row.push_back(c);
    row.push_back(fm.f[0]);
    row.push_back(fm.f[1]);
    row.push_back(fo.ramp);
    out.push_back(std::move(row));
  }
  return out;
}

Table region_trajectory() {
  net::RegionSpec spec;
  spec.id = "R";
  spec.mfd.v_free_kmh = 90.0;
  spec.mfd.critical_accumulation = 30.0;
  spec.L_sum_km = 2.0;
  spec.L_max_km = 2.0;
  spec.trip_length_factor = 4.0;
  spec.jam_accumulation = 45.0;
  spec.inbound_capacity = 0.8;
  spec.outbound_capacity = 0.6;
  const std::uint64_t seed = 7;

  bathtub::RegionState st(2);
  double queue = 0.0;
  Table out;
  for (int t = 0; t < 100; ++t) {
    queue += starts_wanted(t);
    double v = bathtub::region_speed(st, spec);
    st.travel(v * 1.0 / 3600.0);

    double room = std::max(0.0, spec.jam_accumulation - st.accumulation());
    double admitted = queue <= room ? queue : queue * (room / queue);
    queue -= admitted;
    double ends = st.arrived()[0];

    st.controlled = t >= 20 && t < 50;
    st.perimeter_rate = st.controlled ? 0.4 : 1.0;
    auto ds = bathtub::region_demand_supply(st, spec, ends, admitted);

    double offer = boundary_offer(t);
    double inflow = offer > 0.0 ? offer * std::min(1.0, ds.supply / offer) : 0.0;
    double completions = st.leave(0, st.arrived()[0]);
    double outflow = 0.0;
    if (st.arrived()[1] > 0.0 && ds.demand > 0.0) {
      double o = st.arrived()[1] * (ds.demand / st.arrived()[1]);
      outflow = st.leave(1, o * std::min(1.0, region_down(t) / o));
    }
    st.enter(1, inflow, bathtub::leg_distance(spec, seed, 0, 1, t));
    st.enter(0, admitted, bathtub::leg_distance(spec, seed, 0, 0, t));
    out.push_back({static_cast<double>(t + 1), st.accumulation(), queue, v, completions, inflow, outflow,
                   st.arrived()[1]});
  }
  return out;
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Table out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    out.push_back(std::move(row));
  }
  return out;
}

double max_abs_diff(const Table& a, const Table& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) return std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < a[i].size(); ++j) worst = std::max(worst, std::abs(a[i][j] - b[i][j]));
  }
  return worst;
}

}  // namespace meso::testing
