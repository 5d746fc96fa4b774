#pragma once

#include <string>

#include <json.hpp>

#include "meso/engine/demand.hpp"
#include "meso/net/network.hpp"

namespace meso::harness {

/// Knobs of the built-in small network: two 3 km carriageways between the
/// west (R1) and east (R3) regions, each with two off-ramps and two metered
/// on-ramps serving the middle regions R2 and R4, plus an urban ring.
struct SmallNetworkOptions {
  double mainline_capacity_vph = 3600.0;
  int mainline_lanes = 3;
  double ramp_capacity_vph = 3000.0;
  int ramp_lanes = 2;
  double ramp_length_km = 0.25;
  double ramp_vmax_kmh = 60.0;
  double urban_capacity_vph = 1800.0;
  double ring_length_km = 4.0;
  double region_L_sum_km = 16.0;
  double region_jam_accumulation = 4000.0;
  double critical_accumulation = 1265.0;
  double v_free_kmh = 90.0;
};

nlohmann::json small_network_config(const SmallNetworkOptions& opt = {});
engine::DemandProfile small_network_demand();

/// A loaded scenario: network plus demand profile.
struct Scenario {
  std::string name;
  net::Network network;
  engine::DemandProfile demand;
};

/// "builtin-small", or a path to a network config. A config path `X.json`
/// looks for its demand profile in `X.demand.json` unless `demand_path` is given.
Scenario load_scenario(const std::string& spec, const std::string& demand_path = "");

}  // namespace meso::harness
