#include "meso/net/network.hpp"

#include "meso/net/json_fields.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace meso::net {

using nlohmann::json;

const char* to_string(RoadKind kind) {
  switch (kind) {
    case RoadKind::mainline: return "mainline";
    case RoadKind::on_ramp: return "on_ramp";
    case RoadKind::off_ramp: return "off_ramp";
    case RoadKind::urban: return "urban";
  }
  return "?";
}

double RegionSpec::mean_leg_km() const {
  double leg = L_sum_km / trip_length_factor;
  return std::min(leg, L_max_km);
}

int Network::road_index(const std::string& id) const {
  auto it = road_lookup.find(id);
  return it == road_lookup.end() ? -1 : it->second;
}

int Network::region_index(const std::string& id) const {
  auto it = region_lookup.find(id);
  return it == region_lookup.end() ? -1 : it->second;
}

int Network::agent_index(const std::string& id) const {
  for (std::size_t i = 0; i < agents.size(); ++i)
    if (agents[i].id == id) return static_cast<int>(i);
  return -1;
}

std::vector<int> Network::bathtub_regions() const {
  std::vector<int> out;
  for (std::size_t d = 0; d < regions.size(); ++d)
    if (is_bathtub(static_cast<int>(d))) out.push_back(static_cast<int>(d));
  return out;
}

std::vector<int> Network::cell_roads() const {
  std::vector<int> out;
  for (std::size_t e = 0; e < roads.size(); ++e)
    if (is_cell_road(roads[e].kind)) out.push_back(static_cast<int>(e));
  return out;
}

int Network::ramp_at(int road, int cell) const {
  if (road < 0 || road >= static_cast<int>(cell_ramp.size())) return -1;
  const auto& v = cell_ramp[road];
  if (cell < 0 || cell >= static_cast<int>(v.size())) return -1;
  return v[cell];
}

int cell_count(double length_km, double cell_km) {
  // Tolerate representation error: 3 km / 0.025 km is 120 cells, not 121.
  double ratio = length_km / cell_km;
  int n = static_cast<int>(std::ceil(ratio - 1e-9));
  return std::max(n, 1);
}

namespace {

using cfg::check_fields;
using cfg::optional;
using cfg::require;

RoadKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "mainline") return RoadKind::mainline;
  if (s == "on_ramp") return RoadKind::on_ramp;
  if (s == "off_ramp") return RoadKind::off_ramp;
  if (s == "urban") return RoadKind::urban;
  throw ConfigError(where + ": field 'kind' must be mainline|on_ramp|off_ramp|urban");
}

MfdParams parse_mfd(const json& obj, const std::string& where) {
  check_fields(obj, {"form", "v_free_kmh", "critical_accumulation", "gamma_d", "degree_density"}, where);
  MfdParams m;
  auto form = optional<std::string>(obj, "form", "underwood", where);
  if (form == "underwood") {
    m.form = MfdForm::underwood;
    m.v_free_kmh = require<double>(obj, "v_free_kmh", where);
    m.critical_accumulation = require<double>(obj, "critical_accumulation", where);
    if (!(m.v_free_kmh > 0)) throw ConfigError(where + ": field 'v_free_kmh' must be > 0");
    if (!(m.critical_accumulation > 0))
      throw ConfigError(where + ": field 'critical_accumulation' must be > 0");
  } else if (form == "topology") {
    m.form = MfdForm::topology;
    m.gamma_d = require<double>(obj, "gamma_d", where);
    m.degree_density = require<double>(obj, "degree_density", where);
    if (m.gamma_d < 0) throw ConfigError(where + ": field 'gamma_d' must be >= 0");
    if (!(m.degree_density > 0)) throw ConfigError(where + ": field 'degree_density' must be > 0");
    m.v_free_kmh = 53.874 * std::exp(-0.077 * m.gamma_d);
  } else {
    throw ConfigError(where + ": field 'form' must be underwood|topology");
  }
  return m;
}

Road parse_road(const json& obj, std::size_t i) {
  std::string where = "roads[" + std::to_string(i) + "]";
  check_fields(obj,
               {"id", "head", "tail", "kind", "length_km", "vmax_kmh", "w_kmh", "capacity_vph",
                "jam_density_vpkpl", "lanes", "attach"},
               where);
  Road r;
  r.id = require<std::string>(obj, "id", where);
  where += " (" + r.id + ")";
  r.head = require<std::string>(obj, "head", where);
  r.tail = require<std::string>(obj, "tail", where);
  r.kind = parse_kind(require<std::string>(obj, "kind", where), where);
  r.length_km = require<double>(obj, "length_km", where);
  r.vmax_kmh = require<double>(obj, "vmax_kmh", where);
  r.w_kmh = require<double>(obj, "w_kmh", where);
  r.capacity_vph = require<double>(obj, "capacity_vph", where);
  r.jam_density_vpkpl = require<double>(obj, "jam_density_vpkpl", where);
  r.lanes = optional<int>(obj, "lanes", 1, where);
  if (!(r.length_km > 0)) throw ConfigError(where + ": field 'length_km' must be > 0");
  if (!(r.vmax_kmh > 0)) throw ConfigError(where + ": field 'vmax_kmh' must be > 0");
  if (!(r.w_kmh > 0 && r.w_kmh <= r.vmax_kmh))
    throw ConfigError(where + ": field 'w_kmh' must satisfy 0 < w <= vmax");
  if (!(r.capacity_vph > 0)) throw ConfigError(where + ": field 'capacity_vph' must be > 0");
  if (!(r.jam_density_vpkpl > 0)) throw ConfigError(where + ": field 'jam_density_vpkpl' must be > 0");
  if (r.lanes < 1) throw ConfigError(where + ": field 'lanes' must be >= 1");
  bool ramp = r.kind == RoadKind::on_ramp || r.kind == RoadKind::off_ramp;
  if (ramp) {
    if (!obj.contains("attach")) throw ConfigError(where + ": missing field 'attach'");
    const auto& a = obj.at("attach");
    check_fields(a, {"road", "km"}, where + ".attach");
    r.attach.road = require<std::string>(a, "road", where + ".attach");
    r.attach.km = require<double>(a, "km", where + ".attach");
  } else if (obj.contains("attach")) {
    throw ConfigError(where + ": field 'attach' is only valid on ramps");
  }
  return r;
}

void derive_road(Road& r, double dt_s) {
  r.qmax = r.capacity_vph * dt_s / 3600.0;
  r.jam_vehicles = r.jam_density_vpkpl * r.lanes * r.length_km;
  if (is_cell_road(r.kind)) {
    r.cell_length_km = r.vmax_kmh * dt_s / 3600.0;
    r.cells = cell_count(r.length_km, r.cell_length_km);
    r.jam_per_cell = r.jam_density_vpkpl * r.lanes * r.cell_length_km;
  }
}

}  // namespace

Network parse_network_config(const json& doc) {
  check_fields(doc, {"dt_s", "nodes", "roads", "regions", "freeway_region", "agents"}, "network");
  Network net;
  net.dt_s = optional<double>(doc, "dt_s", 1.0, "network");
  if (!(net.dt_s > 0)) throw ConfigError("network: field 'dt_s' must be > 0");

  net.nodes = require<std::vector<std::string>>(doc, "nodes", "network");
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    if (!net.node_lookup.emplace(net.nodes[i], static_cast<int>(i)).second)
      throw ValidationError("duplicate node id '" + net.nodes[i] + "'");
  }

  if (!doc.contains("roads") || !doc.at("roads").is_array())
    throw ConfigError("network: missing field 'roads'");
  const auto& roads = doc.at("roads");
  for (std::size_t i = 0; i < roads.size(); ++i) {
    Road r = parse_road(roads[i], i);
    auto h = net.node_lookup.find(r.head);
    auto t = net.node_lookup.find(r.tail);
    if (h == net.node_lookup.end()) throw ValidationError("road '" + r.id + "': unknown head node '" + r.head + "'");
    if (t == net.node_lookup.end()) throw ValidationError("road '" + r.id + "': unknown tail node '" + r.tail + "'");
    r.head_index = h->second;
    r.tail_index = t->second;
    derive_road(r, net.dt_s);
    if (!net.road_lookup.emplace(r.id, static_cast<int>(net.roads.size())).second)
      throw ValidationError("duplicate road id '" + r.id + "'");
    net.roads.push_back(std::move(r));
  }

  if (!doc.contains("regions") || !doc.at("regions").is_array())
    throw ConfigError("network: missing field 'regions'");
  const auto& regions = doc.at("regions");
  std::string freeway = optional<std::string>(doc, "freeway_region", "", "network");
  net.node_region.assign(net.nodes.size(), -1);
  std::set<std::string> duplicated;
  std::vector<std::pair<double, double>> overrides;  // L_sum, L_max (-1 = derive)
  std::vector<double> jam_overrides;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& obj = regions[i];
    std::string where = "regions[" + std::to_string(i) + "]";
    check_fields(obj, {"id", "nodes", "model", "mfd", "L_sum_km", "L_max_km", "jam_accumulation",
                       "trip_length_factor"},
                 where);
    RegionSpec reg;
    reg.id = require<std::string>(obj, "id", where);
    where += " (" + reg.id + ")";
    reg.nodes = require<std::vector<std::string>>(obj, "nodes", where);
    auto model = optional<std::string>(obj, "model", reg.id == freeway ? "actm" : "bathtub", where);
    if (model == "bathtub") reg.model = RegionModel::bathtub;
    else if (model == "actm") reg.model = RegionModel::actm;
    else throw ConfigError(where + ": field 'model' must be bathtub|actm");
    if (reg.model == RegionModel::bathtub) {
      if (!obj.contains("mfd")) throw ConfigError(where + ": missing field 'mfd'");
      reg.mfd = parse_mfd(obj.at("mfd"), where + ".mfd");
    }
    reg.trip_length_factor = optional<double>(obj, "trip_length_factor", 4.0, where);
    if (!(reg.trip_length_factor > 0)) throw ConfigError(where + ": field 'trip_length_factor' must be > 0");
    overrides.emplace_back(optional<double>(obj, "L_sum_km", -1.0, where),
                           optional<double>(obj, "L_max_km", -1.0, where));
    jam_overrides.push_back(optional<double>(obj, "jam_accumulation", -1.0, where));
    int d = static_cast<int>(net.regions.size());
    for (const auto& n : reg.nodes) {
      auto it = net.node_lookup.find(n);
      if (it == net.node_lookup.end()) throw ValidationError(where + ": unknown node '" + n + "'");
      if (net.node_region[it->second] != -1) duplicated.insert(n);
      net.node_region[it->second] = d;
    }
    if (!net.region_lookup.emplace(reg.id, d).second)
      throw ValidationError("duplicate region id '" + reg.id + "'");
    net.regions.push_back(std::move(reg));
  }
  if (!duplicated.empty()) {
    std::ostringstream os;
    os << "region partition overlap; nodes in more than one region:";
    for (const auto& n : duplicated) os << ' ' << n;
    throw ValidationError(os.str());
  }
  for (std::size_t v = 0; v < net.nodes.size(); ++v)
    if (net.node_region[v] == -1)
      throw ValidationError("region partition incomplete; node '" + net.nodes[v] + "' in no region");

  if (!freeway.empty()) {
    net.freeway_region = net.region_index(freeway);
    if (net.freeway_region < 0) throw ValidationError("freeway_region '" + freeway + "' is not a region");
    if (net.regions[net.freeway_region].model != RegionModel::actm)
      throw ValidationError("freeway_region '" + freeway + "' must use model actm");
  }
  for (std::size_t d = 0; d < net.regions.size(); ++d)
    if (net.regions[d].model == RegionModel::actm && static_cast<int>(d) != net.freeway_region)
      throw ValidationError("region '" + net.regions[d].id + "' uses model actm but is not the freeway region");

  // Region aggregates.
  for (std::size_t e = 0; e < net.roads.size(); ++e) {
    const Road& r = net.roads[e];
    int dh = net.node_region[r.head_index];
    int dt = net.node_region[r.tail_index];
    if (dh == dt) {
      if (r.kind == RoadKind::urban) net.regions[dh].internal_roads.push_back(static_cast<int>(e));
    } else {
      net.regions[dh].outbound_roads.push_back(static_cast<int>(e));
      net.regions[dt].inbound_roads.push_back(static_cast<int>(e));
    }
  }
  for (std::size_t d = 0; d < net.regions.size(); ++d) {
    auto& reg = net.regions[d];
    double lsum = 0.0, jam = 0.0;
    for (int e : reg.internal_roads) {
      lsum += net.roads[e].length_km;
      jam += net.roads[e].jam_vehicles;
    }
    for (int e : reg.inbound_roads) reg.inbound_capacity += net.roads[e].qmax;
    for (int e : reg.outbound_roads) reg.outbound_capacity += net.roads[e].qmax;
    reg.L_sum_km = overrides[d].first >= 0 ? overrides[d].first : lsum;
    reg.L_max_km = overrides[d].second >= 0 ? overrides[d].second : reg.L_sum_km;
    reg.jam_accumulation = jam_overrides[d] >= 0 ? jam_overrides[d] : jam;
    if (reg.model == RegionModel::bathtub) {
      std::string where = "region '" + reg.id + "'";
      if (!(reg.L_sum_km > 0)) throw ValidationError(where + ": L_sum must be > 0 (no internal urban roads?)");
      if (!(reg.L_max_km > 0)) throw ValidationError(where + ": L_max must be > 0");
      if (reg.L_max_km > reg.L_sum_km + 1e-12) throw ValidationError(where + ": L_max exceeds L_sum");
      if (!(reg.jam_accumulation > 0)) throw ValidationError(where + ": jam accumulation must be > 0");
    }
  }

  // Cell roads live in the freeway model; ramps attach to general mainline cells.
  net.cell_ramp.assign(net.roads.size(), {});
  for (std::size_t e = 0; e < net.roads.size(); ++e) {
    if (is_cell_road(net.roads[e].kind)) {
      if (net.freeway_region < 0)
        throw ValidationError("road '" + net.roads[e].id + "' needs a freeway_region");
      if (net.roads[e].cells < 2)
        throw ValidationError("road '" + net.roads[e].id + "' must span at least 2 cells");
      net.cell_ramp[e].assign(net.roads[e].cells, -1);
    }
  }
  for (std::size_t e = 0; e < net.roads.size(); ++e) {
    Road& r = net.roads[e];
    if (r.kind != RoadKind::on_ramp && r.kind != RoadKind::off_ramp) continue;
    int m = net.road_index(r.attach.road);
    if (m < 0 || net.roads[m].kind != RoadKind::mainline)
      throw ValidationError("ramp '" + r.id + "': attach.road must name a mainline road");
    const Road& main = net.roads[m];
    int k = static_cast<int>(std::floor(r.attach.km / main.cell_length_km + 1e-9));
    if (k < 1 || k > main.cells - 2)
      throw ValidationError("ramp '" + r.id + "': attach.km must fall in a general (non source/sink) cell");
    if (net.cell_ramp[m][k] != -1)
      throw ValidationError("ramp '" + r.id + "': cell already has ramp '" + net.roads[net.cell_ramp[m][k]].id + "'");
    r.attach_road = m;
    r.attach_cell = k;
    net.cell_ramp[m][k] = static_cast<int>(e);
  }

  if (doc.contains("agents")) {
    const auto& agents = doc.at("agents");
    if (!agents.is_array()) throw ConfigError("network: field 'agents' must be an array");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      std::string where = "agents[" + std::to_string(i) + "]";
      check_fields(agents[i], {"id", "kind", "road", "region"}, where);
      AgentDecl a;
      a.id = require<std::string>(agents[i], "id", where);
      auto kind = require<std::string>(agents[i], "kind", where);
      if (kind == "ramp") {
        a.kind = AgentKind::ramp;
        a.target = require<std::string>(agents[i], "road", where);
        a.target_index = net.road_index(a.target);
        if (a.target_index < 0 || net.roads[a.target_index].kind != RoadKind::on_ramp)
          throw ValidationError(where + ": ramp agent must target an on_ramp road");
      } else if (kind == "perimeter") {
        a.kind = AgentKind::perimeter;
        a.target = require<std::string>(agents[i], "region", where);
        a.target_index = net.region_index(a.target);
        if (a.target_index < 0 || !net.is_bathtub(a.target_index))
          throw ValidationError(where + ": perimeter agent must target a bathtub region");
      } else {
        throw ConfigError(where + ": field 'kind' must be ramp|perimeter");
      }
      if (net.agent_index(a.id) >= 0) throw ValidationError("duplicate agent id '" + a.id + "'");
      for (const auto& other : net.agents)
        if (other.kind == a.kind && other.target_index == a.target_index)
          throw ValidationError(where + ": target already controlled by '" + other.id + "'");
      net.agents.push_back(std::move(a));
    }
  }
  return net;
}

Network load_network_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open network config '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("network config '" + path + "': " + e.what());
  }
  return parse_network_config(doc);
}

}  // namespace meso::net
