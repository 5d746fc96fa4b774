#include "meso/engine/demand.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "meso/net/json_fields.hpp"

namespace meso::engine {

using nlohmann::json;
using net::ConfigError;
namespace cfg = net::cfg;

double DemandProfile::ratio_at(double tau) const {
  if (ratio_curve.empty()) return 1.0;
  if (tau <= ratio_curve.front().first) return ratio_curve.front().second;
  for (std::size_t i = 1; i < ratio_curve.size(); ++i) {
    auto [t1, r1] = ratio_curve[i];
    if (tau <= t1) {
      auto [t0, r0] = ratio_curve[i - 1];
      return t1 > t0 ? r0 + (r1 - r0) * (tau - t0) / (t1 - t0) : r1;
    }
  }
  return ratio_curve.back().second;
}

std::vector<std::vector<double>> DemandProfile::mean_rates(long intervals, double scale) const {
  std::vector<std::vector<double>> out(intervals, std::vector<double>(od.size(), 0.0));
  if (intervals <= 0 || od.empty()) return out;
  std::vector<double> shape(intervals);
  double shape_sum = 0.0;
  for (long t = 0; t < intervals; ++t) {
    shape[t] = ratio_at((t + 0.5) / static_cast<double>(intervals));
    shape_sum += shape[t];
  }
  double weight_sum = 0.0;
  for (const auto& p : od) weight_sum += p.weight;
  if (shape_sum <= 0.0 || weight_sum <= 0.0) return out;
  for (long t = 0; t < intervals; ++t)
    for (std::size_t k = 0; k < od.size(); ++k)
      out[t][k] = total_volume * scale * (shape[t] / shape_sum) * (od[k].weight / weight_sum);
  return out;
}

DemandProfile parse_demand_profile(const json& doc) {
  const std::string where = "demand";
  cfg::check_fields(doc, {"total_volume", "horizon_s", "noise_ratio", "ratio_curve", "od"}, where);
  DemandProfile p;
  p.total_volume = cfg::require<double>(doc, "total_volume", where);
  p.horizon_s = cfg::optional<double>(doc, "horizon_s", 3600.0, where);
  p.noise_ratio = cfg::optional<double>(doc, "noise_ratio", 0.30, where);
  if (p.total_volume < 0) throw ConfigError(where + ": field 'total_volume' must be >= 0");
  if (!(p.horizon_s > 0)) throw ConfigError(where + ": field 'horizon_s' must be > 0");
  if (p.noise_ratio < 0) throw ConfigError(where + ": field 'noise_ratio' must be >= 0");
  if (doc.contains("ratio_curve")) {
    const auto& curve = doc.at("ratio_curve");
    if (!curve.is_array()) throw ConfigError(where + ": field 'ratio_curve' must be an array");
    for (const auto& pt : curve) {
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number())
        throw ConfigError(where + ": field 'ratio_curve' entries must be [time, ratio] pairs");
      double tau = pt[0].get<double>(), r = pt[1].get<double>();
      if (tau < 0 || tau > 1) throw ConfigError(where + ": field 'ratio_curve' times must lie in [0, 1]");
      if (r < 0) throw ConfigError(where + ": field 'ratio_curve' ratios must be >= 0");
      if (!p.ratio_curve.empty() && tau < p.ratio_curve.back().first)
        throw ConfigError(where + ": field 'ratio_curve' times must be non-decreasing");
      p.ratio_curve.emplace_back(tau, r);
    }
  }
  const auto& od = doc.contains("od") ? doc.at("od") : json::array();
  if (!od.is_array() || od.empty()) throw ConfigError(where + ": field 'od' must be a non-empty array");
  for (std::size_t i = 0; i < od.size(); ++i) {
    std::string w = where + ".od[" + std::to_string(i) + "]";
    cfg::check_fields(od[i], {"origin", "destination", "weight"}, w);
    OdPair pair;
    pair.origin = cfg::require<std::string>(od[i], "origin", w);
    pair.destination = cfg::require<std::string>(od[i], "destination", w);
    pair.weight = cfg::optional<double>(od[i], "weight", 1.0, w);
    if (pair.weight < 0) throw ConfigError(w + ": field 'weight' must be >= 0");
    p.od.push_back(pair);
  }
  return p;
}

DemandProfile load_demand_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open demand profile '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("demand profile '" + path + "': " + e.what());
  }
  return parse_demand_profile(doc);
}

json to_json(const DemandProfile& p) {
  json doc;
  doc["total_volume"] = p.total_volume;
  doc["horizon_s"] = p.horizon_s;
  doc["noise_ratio"] = p.noise_ratio;
  doc["ratio_curve"] = json::array();
  for (auto [t, r] : p.ratio_curve) doc["ratio_curve"].push_back({t, r});
  doc["od"] = json::array();
  for (const auto& o : p.od) doc["od"].push_back({{"origin", o.origin}, {"destination", o.destination}, {"weight", o.weight}});
  return doc;
}

std::vector<std::vector<double>> sample_demand(const DemandProfile& profile, long intervals, double scale,
                                               std::uint64_t seed) {
  auto table = profile.mean_rates(intervals, scale);
  if (profile.noise_ratio == 0.0) return table;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (auto& row : table)
    for (double& mu : row) mu = std::max(0.0, mu + profile.noise_ratio * mu * unit(rng));
  return table;
}

}  // namespace meso::engine
