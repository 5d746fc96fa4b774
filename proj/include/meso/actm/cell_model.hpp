#pragma once

#include <optional>
#include <span>
#include <vector>

// Scalar ACTM relations. All flows are vehicles per interval; speeds enter
// only through the ratio w / vmax because cells are one free-flow interval long.

namespace meso::actm {

struct DemandSupply {
  double demand = 0.0;
  double supply = 0.0;
};

/// Road demand from its sink cell and supply of its receiving (source) cell.
/// D = min{n_sink - nu, q}, S = min{(w/v)(n_hat - n_source - mu), q}, both clamped at 0.
DemandSupply cell_demand_supply(double n_sink, double completions, double n_source, double injections,
                                double jam_per_cell, double w_over_v, double qmax);

/// Internal flow from cell k to k+1:
/// min{(1-beta)(n_k + gamma R_k), (w/v)(n_hat - n_{k+1} - gamma R_{k+1}), q}.
double mainline_flow(double n_k, double ramp_in_k, double beta_k, double n_next, double ramp_in_next,
                     double jam_per_cell, double w_over_v, double qmax, double gamma);

/// Inflow capacity of an on-ramp: min{q_ramp, q_main}, scaled by the meter rate when metered.
double ramp_capacity(double q_ramp, double q_main, std::optional<double> meter_rate);

/// On-ramp flow: min{ramp vehicles available, zeta (n_hat - n_k), capacity}, clamped at 0.
double onramp_flow(double ramp_available, double n_k, double jam_per_cell, double zeta, double capacity);

/// Off-ramp flow S = beta / (1 - beta) * f. Throws std::domain_error unless 0 <= beta < 1.
double offramp_flow(double beta, double mainline_flow);

/// Proportional-fair merge. demand[i][j] is what sender i offers receiver j;
/// each receiver j scales its column by min{1, supply[j] / sum_i demand[i][j]}.
std::vector<std::vector<double>> allocate_proportional(const std::vector<std::vector<double>>& demand,
                                                       std::span<const double> supply);

/// Road-level form: every upstream road offers its whole demand to one downstream supply.
std::vector<double> allocate_road_boundary_flows(std::span<const double> demands, double supply);

}  // namespace meso::actm
