#pragma once

#include "meso/net/network.hpp"

namespace meso::net {

/// Underwood MFD in accumulation units: v_free * exp(-N / N_c), km/h.
/// Throws std::domain_error for negative accumulation.
double underwood_speed(double accumulation, const MfdParams& mfd);

/// Topology-calibrated Underwood speed (km/h) for density `k` veh/km,
/// junction density `gamma_d` (per km) and degree density `deg_t` (per km^2).
double mfd_from_topology(double k, double gamma_d, double deg_t);

/// Speed of a bathtub region at accumulation `accumulation`, whichever MFD form it uses.
double region_mfd_speed(double accumulation, const RegionSpec& region);

}  // namespace meso::net
