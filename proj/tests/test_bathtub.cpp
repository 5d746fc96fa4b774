#include <doctest.h>

#include <cmath>

#include "meso/bathtub/region.hpp"
#include "oracle_drivers.hpp"

using namespace meso;

namespace {

net::RegionSpec spec() {
  net::RegionSpec s;
  s.L_sum_km = 8;
  s.L_max_km = 3;
  s.trip_length_factor = 4;
  s.jam_accumulation = 100;
  s.inbound_capacity = 2;
  s.outbound_capacity = 1.5;
  s.mfd.critical_accumulation = 50;
  return s;
}

}  // namespace

TEST_SUITE("bathtub") {
  TEST_CASE("packets arrive once the odometer passes their distance") {
    bathtub::RegionState st(2);
    st.enter(0, 3, 1.0);
    st.enter(1, 2, 0.5);
    st.enter(0, 1, 0.0);
    CHECK(st.accumulation() == 6);
    CHECK(st.arrived()[0] == 1);
    CHECK(st.travel(0.4) == 0);
    CHECK(st.travel(0.1) == 2);
    CHECK(st.arrived()[1] == 2);
    CHECK(st.travel(0.6) == 3);
    CHECK(st.leave(0, 10) == 4);
    CHECK(st.accumulation() == 2);
    CHECK(st.recount() == doctest::Approx(2));
    CHECK_THROWS_AS(st.travel(-1), std::domain_error);
    CHECK_THROWS_AS(st.enter(0, -1, 1), std::domain_error);
  }

  TEST_CASE("same-interval packets of one path and distance merge") {
    bathtub::RegionState st(1);
    st.enter(0, 1, 2.0);
    st.enter(0, 1, 2.0);
    st.enter(0, 1, 1.0);
    CHECK(st.cohorts().size() == 2);
    CHECK(st.cohorts()[0].size == 1);
    CHECK(st.remaining(st.cohorts()[1]) == 2.0);
  }

  TEST_CASE("demand and supply with and without perimeter control") {
    auto s = spec();
    bathtub::RegionState st(1);
    st.enter(0, 90, 0.0);
    auto ds = bathtub::region_demand_supply(st, s, 10, 5);
    CHECK(ds.demand == 1.5);
    CHECK(ds.supply == 2);
    st.controlled = true;
    st.perimeter_rate = 0.25;
    CHECK(bathtub::region_demand_supply(st, s, 10, 5).supply == 0.5);
    CHECK(bathtub::region_demand_supply(st, s, 95, 9).demand == 0);
    CHECK(bathtub::region_demand_supply(st, s, 0, 9.8).supply == doctest::Approx(0.2));
  }

  TEST_CASE("leg distances are bounded, capped and reproducible") {
    auto s = spec();
    for (long t = 0; t < 500; ++t) {
      double x = bathtub::leg_distance(s, 3, 1, 2, t);
      CHECK(x >= 0.5 * 2 - 1e-12);
      CHECK(x <= 3.0);
      CHECK(x == bathtub::leg_distance(s, 3, 1, 2, t));
    }
    CHECK(bathtub::hash_uniform(1, 2, 3, 4) != bathtub::hash_uniform(2, 2, 3, 4));
  }

  TEST_CASE("single region matches the brute-force oracle") {
    auto engine = testing::region_trajectory();
    auto oracle = testing::read_table(std::string(MESO_ORACLE_DIR) + "/region_trajectory.csv");
    REQUIRE(oracle.size() == 100);
    CHECK(testing::max_abs_diff(engine, oracle) < 1e-9);
  }

  TEST_CASE("speed follows the regional MFD") {
    auto s = spec();
    bathtub::RegionState st(1);
    CHECK(bathtub::region_speed(st, s) == 90);
    st.enter(0, 50, 1);
    CHECK(bathtub::region_speed(st, s) == doctest::Approx(90 / std::exp(1.0)));
  }
}
