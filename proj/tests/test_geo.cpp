#include <cmath>

#include "doctest.h"
#include "vanetsim/geo.hpp"
#include "vanetsim/rng.hpp"

using namespace vanetsim;
using geo::GeoPosition;
using geo::Route;
using geo::VehicleState;

namespace {

Route straight_route_east(const GeoPosition& start, double length_m, bool loop = false) {
  Route r;
  r.waypoints = {start, geo::offset_position(start, 90.0, length_m)};
  r.loop = loop;
  return r;
}

}  // namespace

TEST_CASE("haversine identity and pinned oracle value") {
  const GeoPosition a{40.6405, -8.6538, 0.0};
  CHECK(geo::haversine_distance(a, a) == 0.0);

  // value computed by scripts/oracles.py before the implementation existed
  const GeoPosition b{40.6405, -8.6438, 0.0};
  CHECK(geo::haversine_distance(a, b) == doctest::Approx(843.7594594621576).epsilon(1e-12));
}

TEST_CASE("haversine symmetry over random pairs") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const GeoPosition a{rng.uniform(-80, 80), rng.uniform(-179, 179), 0.0};
    const GeoPosition b{rng.uniform(-80, 80), rng.uniform(-179, 179), 0.0};
    const double ab = geo::haversine_distance(a, b);
    const double ba = geo::haversine_distance(b, a);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab >= 0.0);
  }
}

TEST_CASE("bearing axis cases and oracle value") {
  const GeoPosition a{40.6405, -8.6538, 0.0};
  const GeoPosition north = geo::offset_position(a, 0.0, 500.0);
  const GeoPosition east = geo::offset_position(a, 90.0, 500.0);
  CHECK(geo::bearing(a, north).value() == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(geo::bearing(a, east).value() == doctest::Approx(90.0).epsilon(1e-3));

  // pinned from scripts/oracles.py
  const GeoPosition c{40.6512, -8.6401, 0.0};
  CHECK(geo::bearing(a, c).value() == doctest::Approx(44.166857199802564).epsilon(1e-9));

  CHECK(geo::bearing(a, a).error().code == Errc::DegenerateInput);
}

TEST_CASE("advance moves along a straight segment") {
  const GeoPosition start{40.6405, -8.6538, 0.0};
  const Route route = straight_route_east(start, 100.0);

  VehicleState v;
  v.id = "t";
  v.pos = start;
  v.speed = 10.0;
  auto next = geo::advance(v, route, 3.0);
  REQUIRE(next.ok());
  // 30 m along: distance from start must be 30 m, heading east
  CHECK(geo::haversine_distance(start, next.value().pos) == doctest::Approx(30.0).epsilon(1e-6));
  CHECK(next.value().heading == doctest::Approx(90.0).epsilon(1e-3));
  CHECK(next.value().timestamp == 3000);
}

TEST_CASE("advance with zero speed is a fixed point") {
  const GeoPosition start{40.6405, -8.6538, 0.0};
  const Route route = straight_route_east(start, 100.0);
  VehicleState v;
  v.pos = geo::offset_position(start, 90.0, 50.0);
  v.speed = 0.0;
  auto next = geo::advance(v, route, 5.0);
  REQUIRE(next.ok());
  CHECK(geo::haversine_distance(v.pos, next.value().pos) < 1e-6);
}

TEST_CASE("advance wraps on loop routes and clamps on open ones") {
  const GeoPosition start{40.6405, -8.6538, 0.0};

  SUBCASE("loop wraps") {
    Route loop;
    loop.loop = true;
    loop.waypoints = {start, geo::offset_position(start, 90.0, 100.0),
                      geo::offset_position(start, 0.0, 80.0), start};
    const double total = geo::route_length(loop);
    VehicleState v;
    v.pos = start;
    v.speed = total - 10.0;  // ends 10 m before the loop closes
    auto next = geo::advance(v, loop, 1.0);
    REQUIRE(next.ok());
    auto wrapped = geo::advance(next.value(), loop, 1.0);  // far past the end
    REQUIRE(wrapped.ok());
    const auto proj = geo::project_to_route(loop, wrapped.value().pos);
    CHECK(proj.offset_m < 0.5);
    CHECK(wrapped.value().speed > 0.0);
  }

  SUBCASE("open route clamps with speed zero") {
    const Route route = straight_route_east(start, 100.0);
    VehicleState v;
    v.pos = start;
    v.speed = 60.0;
    auto next = geo::advance(v, route, 3.0);  // 180 m on a 100 m route
    REQUIRE(next.ok());
    CHECK(next.value().speed == 0.0);
    CHECK(geo::haversine_distance(start, next.value().pos) ==
          doctest::Approx(100.0).epsilon(1e-6));
  }
}

TEST_CASE("advance rejects off-route positions") {
  const GeoPosition start{40.6405, -8.6538, 0.0};
  const Route route = straight_route_east(start, 100.0);
  VehicleState v;
  v.pos = geo::offset_position(start, 0.0, 60.0);  // 60 m north of the polyline
  v.speed = 5.0;
  auto next = geo::advance(v, route, 1.0);
  REQUIRE(!next.ok());
  CHECK(next.error().code == Errc::OffRoute);
}

TEST_CASE("n small steps equal one big step on a straight segment") {
  const GeoPosition start{40.6405, -8.6538, 0.0};
  const Route route = straight_route_east(start, 500.0);
  VehicleState a;
  a.pos = start;
  a.speed = 10.0;
  VehicleState b = a;

  for (int i = 0; i < 10; ++i) {
    a = geo::advance(a, route, 1.0).value();
  }
  b = geo::advance(b, route, 10.0).value();
  CHECK(geo::haversine_distance(a.pos, b.pos) < 1e-6);
}

TEST_CASE("total distance over a closed loop equals the polyline length") {
  const GeoPosition start{40.6405, -8.6538, 0.0};
  Route loop;
  loop.loop = true;
  loop.waypoints = {start, geo::offset_position(start, 90.0, 150.0),
                    geo::offset_position(geo::offset_position(start, 90.0, 150.0), 0.0, 90.0),
                    geo::offset_position(start, 0.0, 90.0), start};
  const double total = geo::route_length(loop);

  VehicleState v;
  v.pos = start;
  v.speed = 7.0;
  double travelled = 0.0;
  GeoPosition prev = v.pos;
  const double dt = 0.1;
  const int steps = static_cast<int>(std::ceil(total / (v.speed * dt)));
  for (int i = 0; i < steps; ++i) {
    v = geo::advance(v, loop, dt).value();
    travelled += geo::haversine_distance(prev, v.pos);
    prev = v.pos;
  }
  CHECK(travelled == doctest::Approx(total).epsilon(0.001));
}

TEST_CASE("heading alignment axis cases") {
  const GeoPosition pos{40.6405, -8.6538, 0.0};
  const GeoPosition target = geo::offset_position(pos, 90.0, 200.0);

  VehicleState v;
  v.pos = pos;

  v.heading = geo::bearing(pos, target).value();
  CHECK(geo::heading_alignment(v, target).value() == doctest::Approx(1.0).epsilon(1e-9));

  v.heading = geo::normalize_heading(v.heading + 180.0);
  CHECK(geo::heading_alignment(v, target).value() == doctest::Approx(-1.0).epsilon(1e-9));

  v.heading = geo::normalize_heading(geo::bearing(pos, target).value() + 90.0);
  CHECK(geo::heading_alignment(v, target).value() == doctest::Approx(0.0).epsilon(1e-9));

  CHECK(geo::heading_alignment(v, pos).error().code == Errc::DegenerateInput);
}

TEST_CASE("heading alignment is invariant under rigid rotation") {
  const GeoPosition pos{40.6405, -8.6538, 0.0};
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const double target_bearing = rng.uniform(0.0, 360.0);
    const double heading_offset = rng.uniform(0.0, 360.0);
    const double rotation = rng.uniform(0.0, 360.0);

    VehicleState v;
    v.pos = pos;
    v.heading = geo::normalize_heading(target_bearing + heading_offset);
    const GeoPosition target = geo::offset_position(pos, target_bearing, 300.0);

    VehicleState v_rot;
    v_rot.pos = pos;
    v_rot.heading = geo::normalize_heading(target_bearing + rotation + heading_offset);
    const GeoPosition target_rot =
        geo::offset_position(pos, geo::normalize_heading(target_bearing + rotation), 300.0);

    const double a = geo::heading_alignment(v, target).value();
    const double b = geo::heading_alignment(v_rot, target_rot).value();
    CHECK(a == doctest::Approx(b).epsilon(1e-6));
  }
}

TEST_CASE("position validity bounds") {
  CHECK(geo::position_valid({40.0, -8.0, 0.0}));
  CHECK(!geo::position_valid({90.5, 0.0, 0.0}));
  CHECK(!geo::position_valid({0.0, -180.5, 0.0}));
}
