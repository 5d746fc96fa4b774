#pragma once

#include <cstdint>
#include <vector>

#include "meso/net/network.hpp"

namespace meso::bathtub {

/// A packet of vehicles on one path sharing a remaining distance.
/// `key` is the region odometer reading at which the packet reaches zero.
struct Cohort {
  double key = 0.0;
  double size = 0.0;
  int path = -1;
};

/// Remaining-distance state of one bathtub region. All vehicles share the
/// regional speed, so remaining distances are stored against a running
/// odometer and a time step only moves the odometer.
class RegionState {
 public:
  RegionState() = default;
  explicit RegionState(int paths);

  int paths() const { return static_cast<int>(arrived_.size()); }
  double accumulation() const { return accumulation_; }
  double odometer() const { return odometer_; }
  double perimeter_rate = 1.0;
  bool controlled = false;

  /// Vehicles with zero remaining distance, per path.
  const std::vector<double>& arrived() const { return arrived_; }
  double arrived_total() const;

  /// Moves every vehicle `dx` km; packets reaching zero join the arrived pool.
  /// Returns the volume that reached zero this call.
  double travel(double dx);
  /// Adds `size` vehicles of `path` with remaining distance `xi` km.
  void enter(int path, double size, double xi);
  /// Removes up to `size` arrived vehicles of `path`; returns the amount removed.
  double leave(int path, double size);

  /// Sum over all packets and the arrived pool, recomputed from scratch.
  double recount() const;
  /// Cohorts ordered by remaining distance (debug and tests).
  std::vector<Cohort> cohorts() const;
  /// Remaining distance of a cohort.
  double remaining(const Cohort& c) const { return c.key - odometer_; }
  void clear();

 private:
  std::vector<Cohort> heap_;    // min-heap on key
  std::vector<Cohort> pending_; // entered since the last travel()
  std::vector<double> arrived_;
  double odometer_ = 0.0;
  double accumulation_ = 0.0;
};

struct RegionDemandSupply {
  double demand = 0.0;
  double supply = 0.0;
};

/// Demand min{arrived - completions, C+} and supply
/// min{N_hat - N - starts, P C-}, both clamped at 0. P applies only when controlled.
RegionDemandSupply region_demand_supply(const RegionState& state, const net::RegionSpec& spec,
                                        double completions, double starts);

/// Inbound boundary capacity, scaled by the perimeter rate when controlled.
double inbound_margin(const net::RegionSpec& spec, double perimeter_rate, bool controlled);

/// MFD speed at the current accumulation, km/h.
double region_speed(const RegionState& state, const net::RegionSpec& spec);

/// Leg distance for vehicles of `path` entering `region` during interval `t`.
/// Uniform in [0.5, 1.5] x mean leg length, capped at L_max. A pure function of
/// its arguments, so the draw sequence never depends on control actions.
double leg_distance(const net::RegionSpec& spec, std::uint64_t seed, int region, int path, long t);

/// Counter-based uniform in [0, 1).
double hash_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace meso::bathtub
