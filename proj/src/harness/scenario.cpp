#include "meso/harness/scenario.hpp"

#include <filesystem>

namespace meso::harness {

using nlohmann::json;

namespace {

json road(const std::string& id, const std::string& head, const std::string& tail, const std::string& kind,
          double length, double vmax, double w, double cap, int lanes) {
  return {{"id", id},         {"head", head},     {"tail", tail},        {"kind", kind},
          {"length_km", length}, {"vmax_kmh", vmax}, {"w_kmh", w},        {"capacity_vph", cap},
          {"jam_density_vpkpl", 150.0}, {"lanes", lanes}};
}

}  // namespace

json small_network_config(const SmallNetworkOptions& opt) {
  json doc;
  doc["dt_s"] = 1.0;
  json nodes = json::array();
  json roads = json::array();
  json agents = json::array();
  std::vector<std::string> freeway_nodes;
  for (const char* r : {"R1", "R2", "R3", "R4"}) nodes.push_back(std::string("n_") + r);

  roads.push_back(road("E", "n_R1", "n_R3", "mainline", 3.0, 90, 30, opt.mainline_capacity_vph, opt.mainline_lanes));
  roads.push_back(road("W", "n_R3", "n_R1", "mainline", 3.0, 90, 30, opt.mainline_capacity_vph, opt.mainline_lanes));

  // Ramp stations: off 0.5, on 1.0, off 1.5, on 2.0 (km from the carriageway start).
  struct Station {
    const char* main;
    const char* kind;
    double km;
    const char* region;
  };
  const Station stations[] = {
      {"E", "off_ramp", 0.5, "R2"}, {"E", "on_ramp", 1.0, "R2"}, {"E", "off_ramp", 1.5, "R4"}, {"E", "on_ramp", 2.0, "R4"},
      {"W", "off_ramp", 0.5, "R4"}, {"W", "on_ramp", 1.0, "R4"}, {"W", "off_ramp", 1.5, "R2"}, {"W", "on_ramp", 2.0, "R2"},
  };
  for (const auto& s : stations) {
    bool on = std::string(s.kind) == "on_ramp";
    std::string id = std::string(s.main) + (on ? "_on_" : "_off_") + std::to_string(static_cast<int>(s.km * 10));
    std::string junction = "f_" + id;
    nodes.push_back(junction);
    freeway_nodes.push_back(junction);
    std::string region_node = std::string("n_") + s.region;
    json r = on ? road(id, region_node, junction, "on_ramp", opt.ramp_length_km, opt.ramp_vmax_kmh, 20,
                       opt.ramp_capacity_vph, opt.ramp_lanes)
                : road(id, junction, region_node, "off_ramp", opt.ramp_length_km, opt.ramp_vmax_kmh, 20,
                       opt.ramp_capacity_vph, opt.ramp_lanes);
    r["attach"] = {{"road", s.main}, {"km", s.km}};
    roads.push_back(r);
    if (on) agents.push_back({{"id", "ramp_" + id}, {"kind", "ramp"}, {"road", id}});
  }

  const char* ring[][2] = {{"R1", "R2"}, {"R2", "R3"}, {"R3", "R4"}, {"R4", "R1"}};
  for (auto& pair : ring) {
    for (int dir = 0; dir < 2; ++dir) {
      std::string a = pair[dir], b = pair[1 - dir];
      roads.push_back(road("u_" + a + "_" + b, "n_" + a, "n_" + b, "urban", opt.ring_length_km, 50, 20,
                           opt.urban_capacity_vph, 2));
    }
  }

  json regions = json::array();
  for (const char* r : {"R1", "R2", "R3", "R4"}) {
    regions.push_back({{"id", r},
                       {"nodes", {std::string("n_") + r}},
                       {"mfd", {{"form", "underwood"}, {"v_free_kmh", opt.v_free_kmh},
                                {"critical_accumulation", opt.critical_accumulation}}},
                       {"L_sum_km", opt.region_L_sum_km},
                       {"L_max_km", opt.region_L_sum_km},
                       {"jam_accumulation", opt.region_jam_accumulation},
                       {"trip_length_factor", 4.0}});
    agents.push_back({{"id", std::string("perimeter_") + r}, {"kind", "perimeter"}, {"region", r}});
  }
  regions.push_back({{"id", "F"}, {"nodes", freeway_nodes}, {"model", "actm"}});

  doc["nodes"] = nodes;
  doc["roads"] = roads;
  doc["regions"] = regions;
  doc["freeway_region"] = "F";
  doc["agents"] = agents;
  return doc;
}

engine::DemandProfile small_network_demand() {
  engine::DemandProfile p;
  p.total_volume = 47271.0;
  p.horizon_s = 3.0 * 3600.0;
  p.noise_ratio = 0.30;
  // Morning peak, highest about two thirds into the window.
  p.ratio_curve = {{0.0, 0.35}, {0.33, 0.65}, {0.67, 1.0}, {0.85, 0.8}, {1.0, 0.45}};
  const char* names[] = {"R1", "R2", "R3", "R4"};
  const double w[4][4] = {
      {0, 9.0, 20.0, 5.4},
      {3.0, 0, 11.0, 5.3},
      {20.0, 5.4, 0, 9.0},
      {11.0, 5.3, 3.0, 0},
  };
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) p.od.push_back({names[i], names[j], w[i][j]});
  return p;
}

Scenario load_scenario(const std::string& spec, const std::string& demand_path) {
  Scenario s;
  s.name = spec;
  if (spec == "builtin-small") {
    s.network = net::parse_network_config(small_network_config());
    s.demand = demand_path.empty() ? small_network_demand() : engine::load_demand_profile(demand_path);
    return s;
  }
  s.network = net::load_network_config(spec);
  std::string dp = demand_path;
  if (dp.empty()) {
    std::filesystem::path p(spec);
    dp = (p.parent_path() / (p.stem().string() + ".demand.json")).string();
  }
  s.demand = engine::load_demand_profile(dp);
  return s;
}

}  // namespace meso::harness
