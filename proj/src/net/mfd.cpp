#include "meso/net/mfd.hpp"

#include <cmath>
#include <stdexcept>

namespace meso::net {

double underwood_speed(double accumulation, const MfdParams& mfd) {
  if (accumulation < 0) throw std::domain_error("underwood_speed: negative accumulation");
  return mfd.v_free_kmh * std::exp(-accumulation / mfd.critical_accumulation);
}

double mfd_from_topology(double k, double gamma_d, double deg_t) {
  if (k < 0 || gamma_d < 0 || deg_t < 0) throw std::domain_error("mfd_from_topology: negative input");
  if (deg_t == 0) throw std::domain_error("mfd_from_topology: zero degree density");
  return 53.874 * std::exp(-0.077 * gamma_d) * std::exp(-k / (3.161e6 / deg_t));
}

double region_mfd_speed(double accumulation, const RegionSpec& region) {
  if (region.mfd.form == MfdForm::underwood) return underwood_speed(accumulation, region.mfd);
  if (accumulation < 0) throw std::domain_error("region_mfd_speed: negative accumulation");
  return mfd_from_topology(accumulation / region.L_sum_km, region.mfd.gamma_d, region.mfd.degree_density);
}

}  // namespace meso::net
