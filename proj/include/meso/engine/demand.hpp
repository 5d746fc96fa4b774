#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace meso::engine {

struct OdPair {
  std::string origin;       // region id
  std::string destination;  // region id
  double weight = 1.0;
};

/// Time-varying OD demand. The ratio curve is piecewise linear over
/// normalized time [0, 1] and shapes how the total volume is spread.
struct DemandProfile {
  double total_volume = 0.0;  // veh over the horizon
  double horizon_s = 3600.0;
  double noise_ratio = 0.30;  // std / mean
  std::vector<std::pair<double, double>> ratio_curve;
  std::vector<OdPair> od;

  double ratio_at(double tau) const;
  /// Mean rates (veh per interval) as a [interval][od] table summing to
  /// total_volume * scale over `intervals` intervals.
  std::vector<std::vector<double>> mean_rates(long intervals, double scale) const;
};

DemandProfile parse_demand_profile(const nlohmann::json& doc);
DemandProfile load_demand_profile(const std::string& path);
nlohmann::json to_json(const DemandProfile& profile);

/// Realized [interval][od] trip table: Normal(mu, noise * mu) truncated at 0.
std::vector<std::vector<double>> sample_demand(const DemandProfile& profile, long intervals, double scale,
                                               std::uint64_t seed);

}  // namespace meso::engine
