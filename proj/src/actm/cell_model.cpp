#include "meso/actm/cell_model.hpp"

#include <algorithm>
#include <stdexcept>

namespace meso::actm {

DemandSupply cell_demand_supply(double n_sink, double completions, double n_source, double injections,
                                double jam_per_cell, double w_over_v, double qmax) {
  DemandSupply ds;
  ds.demand = std::max(0.0, std::min(n_sink - completions, qmax));
  ds.supply = std::max(0.0, std::min(w_over_v * (jam_per_cell - n_source - injections), qmax));
  return ds;
}

double mainline_flow(double n_k, double ramp_in_k, double beta_k, double n_next, double ramp_in_next,
                     double jam_per_cell, double w_over_v, double qmax, double gamma) {
  double sending = (1.0 - beta_k) * (n_k + gamma * ramp_in_k);
  double receiving = w_over_v * (jam_per_cell - n_next - gamma * ramp_in_next);
  return std::max(0.0, std::min({sending, receiving, qmax}));
}

double ramp_capacity(double q_ramp, double q_main, std::optional<double> meter_rate) {
  double c = std::min(q_ramp, q_main);
  return meter_rate ? *meter_rate * c : c;
}

double onramp_flow(double ramp_available, double n_k, double jam_per_cell, double zeta, double capacity) {
  return std::max(0.0, std::min({ramp_available, zeta * (jam_per_cell - n_k), capacity}));
}

double offramp_flow(double beta, double mainline_flow) {
  if (!(beta >= 0.0 && beta < 1.0)) throw std::domain_error("offramp_flow: split ratio must lie in [0, 1)");
  return beta / (1.0 - beta) * mainline_flow;
}

std::vector<std::vector<double>> allocate_proportional(const std::vector<std::vector<double>>& demand,
                                                       std::span<const double> supply) {
  std::vector<std::vector<double>> flow(demand.size(), std::vector<double>(supply.size(), 0.0));
  for (std::size_t j = 0; j < supply.size(); ++j) {
    double total = 0.0;
    for (const auto& row : demand) total += row[j];
    if (total <= 0.0) continue;
    double scale = std::min(1.0, std::max(0.0, supply[j]) / total);
    for (std::size_t i = 0; i < demand.size(); ++i) flow[i][j] = demand[i][j] * scale;
  }
  return flow;
}

std::vector<double> allocate_road_boundary_flows(std::span<const double> demands, double supply) {
  double total = 0.0;
  for (double d : demands) total += d;
  std::vector<double> out(demands.size(), 0.0);
  if (total <= 0.0) return out;
  double scale = std::min(1.0, std::max(0.0, supply) / total);
  for (std::size_t i = 0; i < demands.size(); ++i) out[i] = demands[i] * scale;
  return out;
}

}  // namespace meso::actm
