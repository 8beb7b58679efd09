#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vanetsim/core.hpp"

namespace vanetsim::geo {

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
inline constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

struct GeoPosition {
  double lat = 0.0;  // degrees WGS-84, [-90, 90]
  double lon = 0.0;  // degrees WGS-84, [-180, 180]
  double alt = 0.0;  // meters

  bool operator==(const GeoPosition&) const = default;
};

bool position_valid(const GeoPosition& p);

enum class StationType : std::uint8_t {
  Bus = 0,
  Car = 1,
  GarbageTruck = 2,
  EmergencyVehicle = 3,
  Pedestrian = 4,
  Cyclist = 5,
};

const char* station_type_name(StationType t);

struct VehicleState {
  std::string id;
  GeoPosition pos;
  double speed = 0.0;    // m/s, >= 0
  double heading = 0.0;  // degrees [0, 360)
  double accel = 0.0;    // m/s^2, recorded attribute
  TimestampMs timestamp = 0;
  StationType station_type = StationType::Car;
};

struct Route {
  std::vector<GeoPosition> waypoints;        // >= 2, consecutive distinct
  std::vector<double> segment_speed_limits;  // m/s, one per segment
  bool loop = false;
};

struct RoadSegment {
  std::string id;
  GeoPosition a;
  GeoPosition b;
  double length = 0.0;       // meters, > 0, haversine(a,b) within 1%
  double speed_limit = 0.0;  // m/s
  double friction = 0.8;     // [0, 1]
};

/// Great-circle distance on the mean-radius sphere, meters.
double haversine_distance(const GeoPosition& a, const GeoPosition& b);

/// Initial great-circle bearing a -> b, degrees [0, 360).
Result<double> bearing(const GeoPosition& a, const GeoPosition& b);

/// Destination point reached from `start` travelling `distance_m` along
/// `bearing_deg` (spherical). Handy for constructing scenario geometry.
GeoPosition offset_position(const GeoPosition& start, double bearing_deg,
                            double distance_m);

/// Cosine of the angle between the vehicle heading and the bearing to
/// `target`: +1 driving straight at it, -1 straight away.
Result<double> heading_alignment(const VehicleState& v, const GeoPosition& target);

double normalize_heading(double degrees);

/// Total polyline length (sum of haversine segment lengths), meters.
double route_length(const Route& route);

struct AdvanceParams {
  double snap_tolerance_m = 25.0;
};

/// Move `state` speed*dt meters along the route polyline. Heading tracks the
/// current segment. Loop routes wrap; open routes clamp at the final waypoint
/// with speed forced to 0. OffRoute when the position is farther than the
/// snap tolerance from the polyline.
Result<VehicleState> advance(const VehicleState& state, const Route& route,
                             double dt_s, const AdvanceParams& params = {});

/// Position and segment bearing at arclength `s_m` along the polyline
/// (clamped to [0, length]). Used by the harness to place vehicles.
GeoPosition route_point_at(const Route& route, double s_m, double* heading_out = nullptr,
                           std::size_t* segment_out = nullptr);

/// Arclength of the closest polyline point, plus the offset distance from it.
struct RouteProjection {
  double arclength_m = 0.0;
  double offset_m = 0.0;
};
RouteProjection project_to_route(const Route& route, const GeoPosition& p);

}  // namespace vanetsim::geo
