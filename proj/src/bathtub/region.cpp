#include "meso/bathtub/region.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "meso/net/mfd.hpp"

namespace meso::bathtub {

namespace {

bool later(const Cohort& a, const Cohort& b) {
  if (a.key != b.key) return a.key > b.key;
  return a.path > b.path;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

RegionState::RegionState(int paths) : arrived_(paths, 0.0) {}

double RegionState::arrived_total() const {
  double s = 0.0;
  for (double a : arrived_) s += a;
  return s;
}

double RegionState::travel(double dx) {
  if (dx < 0.0) throw std::domain_error("RegionState::travel: negative distance");
  for (const auto& c : pending_) {
    heap_.push_back(c);
    std::push_heap(heap_.begin(), heap_.end(), later);
  }
  pending_.clear();
  odometer_ += dx;
  double moved = 0.0;
  while (!heap_.empty() && heap_.front().key <= odometer_) {
    std::pop_heap(heap_.begin(), heap_.end(), later);
    const Cohort& c = heap_.back();
    arrived_[c.path] += c.size;
    moved += c.size;
    heap_.pop_back();
  }
  return moved;
}

void RegionState::enter(int path, double size, double xi) {
  if (size < 0.0) throw std::domain_error("RegionState::enter: negative cohort size");
  if (size == 0.0) return;
  accumulation_ += size;
  if (xi <= 0.0) {
    arrived_[path] += size;
    return;
  }
  double key = odometer_ + xi;
  // Same path and distance within one interval: one packet.
  for (auto& c : pending_) {
    if (c.path == path && std::abs(c.key - key) <= 1e-9) {
      c.size += size;
      return;
    }
  }
  pending_.push_back({key, size, path});
}

double RegionState::leave(int path, double size) {
  double take = std::clamp(size, 0.0, arrived_[path]);
  arrived_[path] -= take;
  accumulation_ -= take;
  if (accumulation_ < 0.0) accumulation_ = 0.0;
  return take;
}

double RegionState::recount() const {
  double s = arrived_total();
  for (const auto& c : heap_) s += c.size;
  for (const auto& c : pending_) s += c.size;
  return s;
}

std::vector<Cohort> RegionState::cohorts() const {
  std::vector<Cohort> out = heap_;
  out.insert(out.end(), pending_.begin(), pending_.end());
  std::sort(out.begin(), out.end(), [](const Cohort& a, const Cohort& b) { return later(b, a); });
  return out;
}

void RegionState::clear() {
  heap_.clear();
  pending_.clear();
  std::fill(arrived_.begin(), arrived_.end(), 0.0);
  odometer_ = accumulation_ = 0.0;
  perimeter_rate = 1.0;
  controlled = false;
}

double inbound_margin(const net::RegionSpec& spec, double perimeter_rate, bool controlled) {
  return controlled ? perimeter_rate * spec.inbound_capacity : spec.inbound_capacity;
}

RegionDemandSupply region_demand_supply(const RegionState& state, const net::RegionSpec& spec,
                                        double completions, double starts) {
  RegionDemandSupply ds;
  ds.demand = std::max(0.0, std::min(state.arrived_total() - completions, spec.outbound_capacity));
  ds.supply = std::max(0.0, std::min(spec.jam_accumulation - state.accumulation() - starts,
                                     inbound_margin(spec, state.perimeter_rate, state.controlled)));
  return ds;
}

double region_speed(const RegionState& state, const net::RegionSpec& spec) {
  return net::region_mfd_speed(std::max(0.0, state.accumulation()), spec);
}

double hash_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ a);
  h = splitmix(h ^ (b + 0x632BE59BD9B4E019ULL));
  h = splitmix(h ^ (c + 0x85157AF5ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double leg_distance(const net::RegionSpec& spec, std::uint64_t seed, int region, int path, long t) {
  double u = hash_uniform(seed, static_cast<std::uint64_t>(region), static_cast<std::uint64_t>(path),
                          static_cast<std::uint64_t>(t));
  double xi = (0.5 + u) * spec.L_sum_km / spec.trip_length_factor;
  return std::min(xi, spec.L_max_km);
}

}  // namespace meso::bathtub
