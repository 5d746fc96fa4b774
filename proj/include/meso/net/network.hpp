#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace meso::net {

/// Schema violation in a network or demand config. The message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Semantic validation failure (partition overlap, dangling node, bad attachment).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RoadKind { mainline, on_ramp, off_ramp, urban };

const char* to_string(RoadKind kind);

/// True for roads simulated cell-by-cell (mainlines and ramps).
inline bool is_cell_road(RoadKind kind) { return kind != RoadKind::urban; }

/// Where a ramp meets its mainline.
struct Attachment {
  std::string road;
  double km = 0.0;
};

struct Road {
  std::string id;
  std::string head;  // upstream node r
  std::string tail;  // downstream node s
  RoadKind kind = RoadKind::urban;
  double length_km = 0.0;
  double vmax_kmh = 0.0;
  double w_kmh = 0.0;           // spillback wave speed
  double capacity_vph = 0.0;    // all lanes
  double jam_density_vpkpl = 0.0;
  int lanes = 1;
  Attachment attach;            // ramps only

  // Derived at load time.
  int head_index = -1;
  int tail_index = -1;
  double qmax = 0.0;            // veh per interval
  double cell_length_km = 0.0;  // delta = vmax * dt
  int cells = 0;
  double jam_per_cell = 0.0;    // n-hat, veh per cell
  double jam_vehicles = 0.0;    // whole-road jam count
  int attach_road = -1;         // index of the mainline a ramp joins
  int attach_cell = -1;         // 0-based mainline cell
};

enum class MfdForm { underwood, topology };

struct MfdParams {
  MfdForm form = MfdForm::underwood;
  double v_free_kmh = 90.0;
  double critical_accumulation = 1265.0;  // veh
  double gamma_d = 0.0;                   // junctions per km
  double degree_density = 0.0;            // average node degree per km^2
};

enum class RegionModel { bathtub, actm };

struct RegionSpec {
  std::string id;
  RegionModel model = RegionModel::bathtub;
  std::vector<std::string> nodes;
  MfdParams mfd;
  double trip_length_factor = 4.0;

  // Derived or overridden.
  double L_sum_km = 0.0;
  double L_max_km = 0.0;
  double jam_accumulation = 0.0;  // N-hat_d
  double inbound_capacity = 0.0;  // C-margin (veh/interval), uncontrolled
  double outbound_capacity = 0.0; // C+margin (veh/interval)
  std::vector<int> internal_roads;
  std::vector<int> inbound_roads;
  std::vector<int> outbound_roads;

  /// Mean sampled leg length, L_sum / factor capped at L_max.
  double mean_leg_km() const;
};

enum class AgentKind { ramp, perimeter };

struct AgentDecl {
  std::string id;
  AgentKind kind = AgentKind::ramp;
  std::string target;  // on-ramp road id or region id
  int target_index = -1;
};

/// Immutable after load; shareable across threads.
struct Network {
  double dt_s = 1.0;
  std::vector<std::string> nodes;
  std::vector<Road> roads;
  std::vector<RegionSpec> regions;
  int freeway_region = -1;
  std::vector<AgentDecl> agents;

  std::map<std::string, int> node_lookup;
  std::map<std::string, int> road_lookup;
  std::map<std::string, int> region_lookup;
  std::vector<int> node_region;
  std::vector<std::vector<int>> cell_ramp;  // per road, per cell: attached ramp or -1

  int road_index(const std::string& id) const;
  int region_index(const std::string& id) const;
  int agent_index(const std::string& id) const;
  bool is_bathtub(int region) const { return regions[region].model == RegionModel::bathtub; }
  std::vector<int> bathtub_regions() const;
  std::vector<int> cell_roads() const;
  /// Ramp road attached to `cell` of mainline `road`, or -1.
  int ramp_at(int road, int cell) const;
};

/// Cell count for a road of length `length_km` cut into cells of `cell_km`.
int cell_count(double length_km, double cell_km);

/// Parses and validates a config document. Throws ConfigError / ValidationError.
Network parse_network_config(const nlohmann::json& doc);

/// Reads a JSON network config from disk.
Network load_network_config(const std::string& path);

}  // namespace meso::net
