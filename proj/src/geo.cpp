#include "vanetsim/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vanetsim::geo {

namespace {

// Local equirectangular frame around a reference point, meters. Adequate for
// point-to-segment work at city scale; all long distances go through the
// haversine path instead.
struct LocalFrame {
  double ref_lat_rad;
  double cos_ref;

  explicit LocalFrame(const GeoPosition& ref)
      : ref_lat_rad(ref.lat * kDegToRad), cos_ref(std::cos(ref.lat * kDegToRad)) {}

  void to_xy(const GeoPosition& ref, const GeoPosition& p, double& x, double& y) const {
    x = (p.lon - ref.lon) * kDegToRad * kEarthRadiusM * cos_ref;
    y = (p.lat - ref.lat) * kDegToRad * kEarthRadiusM;
  }
};

}  // namespace

bool position_valid(const GeoPosition& p) {
  return p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0 &&
         std::isfinite(p.lat) && std::isfinite(p.lon) && std::isfinite(p.alt);
}

const char* station_type_name(StationType t) {
  switch (t) {
    case StationType::Bus: return "Bus";
    case StationType::Car: return "Car";
    case StationType::GarbageTruck: return "GarbageTruck";
    case StationType::EmergencyVehicle: return "EmergencyVehicle";
    case StationType::Pedestrian: return "Pedestrian";
    case StationType::Cyclist: return "Cyclist";
  }
  return "?";
}

double normalize_heading(double degrees) {
  double h = std::fmod(degrees, 360.0);
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h = 0.0;  // fmod can return 360.0 - epsilon rounding up
  return h;
}

double haversine_distance(const GeoPosition& a, const GeoPosition& b) {
  const double p1 = a.lat * kDegToRad;
  const double p2 = b.lat * kDegToRad;
  const double dp = (b.lat - a.lat) * kDegToRad;
  const double dl = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dp / 2.0);
  const double s2 = std::sin(dl / 2.0);
  const double h = s1 * s1 + std::cos(p1) * std::cos(p2) * s2 * s2;
  return kEarthRadiusM * 2.0 * std::atan2(std::sqrt(h), std::sqrt(std::max(0.0, 1.0 - h)));
}

Result<double> bearing(const GeoPosition& a, const GeoPosition& b) {
  if (a.lat == b.lat && a.lon == b.lon) {
    return make_error(Errc::DegenerateInput, "bearing of coincident points");
  }
  const double p1 = a.lat * kDegToRad;
  const double p2 = b.lat * kDegToRad;
  const double dl = (b.lon - a.lon) * kDegToRad;
  const double y = std::sin(dl) * std::cos(p2);
  const double x = std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl);
  return normalize_heading(std::atan2(y, x) * kRadToDeg);
}

GeoPosition offset_position(const GeoPosition& start, double bearing_deg, double distance_m) {
  const double br = bearing_deg * kDegToRad;
  const double d = distance_m / kEarthRadiusM;
  const double p1 = start.lat * kDegToRad;
  const double l1 = start.lon * kDegToRad;
  const double p2 = std::asin(std::sin(p1) * std::cos(d) + std::cos(p1) * std::sin(d) * std::cos(br));
  const double l2 =
      l1 + std::atan2(std::sin(br) * std::sin(d) * std::cos(p1),
                      std::cos(d) - std::sin(p1) * std::sin(p2));
  GeoPosition out;
  out.lat = p2 * kRadToDeg;
  out.lon = std::remainder(l2 * kRadToDeg, 360.0);
  out.alt = start.alt;
  return out;
}

Result<double> heading_alignment(const VehicleState& v, const GeoPosition& target) {
  auto br = bearing(v.pos, target);
  if (!br.ok()) return br.error();
  const double delta = (v.heading - br.value()) * kDegToRad;
  return std::cos(delta);
}

double route_length(const Route& route) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < route.waypoints.size(); ++i) {
    total += haversine_distance(route.waypoints[i], route.waypoints[i + 1]);
  }
  return total;
}

GeoPosition route_point_at(const Route& route, double s_m, double* heading_out,
                           std::size_t* segment_out) {
  const auto& wp = route.waypoints;
  double remaining = std::max(0.0, s_m);
  for (std::size_t i = 0; i + 1 < wp.size(); ++i) {
    const double seg_len = haversine_distance(wp[i], wp[i + 1]);
    if (remaining <= seg_len || i + 2 == wp.size()) {
      const double t = seg_len > 0.0 ? std::min(remaining / seg_len, 1.0) : 0.0;
      GeoPosition p;
      p.lat = wp[i].lat + t * (wp[i + 1].lat - wp[i].lat);
      p.lon = wp[i].lon + t * (wp[i + 1].lon - wp[i].lon);
      p.alt = wp[i].alt + t * (wp[i + 1].alt - wp[i].alt);
      if (heading_out) {
        auto br = bearing(wp[i], wp[i + 1]);
        *heading_out = br.ok() ? br.value() : 0.0;
      }
      if (segment_out) *segment_out = i;
      return p;
    }
    remaining -= seg_len;
  }
  if (heading_out) *heading_out = 0.0;
  if (segment_out) *segment_out = 0;
  return wp.empty() ? GeoPosition{} : wp.front();
}

RouteProjection project_to_route(const Route& route, const GeoPosition& p) {
  const auto& wp = route.waypoints;
  RouteProjection best;
  best.offset_m = std::numeric_limits<double>::infinity();
  double s_base = 0.0;
  for (std::size_t i = 0; i + 1 < wp.size(); ++i) {
    const LocalFrame frame(wp[i]);
    double px, py, bx, by;
    frame.to_xy(wp[i], p, px, py);
    frame.to_xy(wp[i], wp[i + 1], bx, by);
    const double len_sq = bx * bx + by * by;
    double t = len_sq > 0.0 ? (px * bx + py * by) / len_sq : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - t * bx;
    const double dy = py - t * by;
    const double off = std::hypot(dx, dy);
    const double seg_len = haversine_distance(wp[i], wp[i + 1]);
    if (off < best.offset_m) {
      best.offset_m = off;
      best.arclength_m = s_base + t * seg_len;
    }
    s_base += seg_len;
  }
  return best;
}

Result<VehicleState> advance(const VehicleState& state, const Route& route, double dt_s,
                             const AdvanceParams& params) {
  if (route.waypoints.size() < 2) {
    return make_error(Errc::DegenerateInput, "route needs >= 2 waypoints");
  }
  const auto proj = project_to_route(route, state.pos);
  if (proj.offset_m > params.snap_tolerance_m) {
    return make_error(Errc::OffRoute, "position " + std::to_string(proj.offset_m) +
                                          " m from route polyline");
  }
  VehicleState next = state;
  next.timestamp = state.timestamp + static_cast<TimestampMs>(std::llround(dt_s * 1000.0));
  if (state.speed == 0.0) return next;  // fixed point, no snap drift

  const double total = route_length(route);
  double s = proj.arclength_m + state.speed * dt_s;
  if (route.loop) {
    s = std::fmod(s, total);
    if (s < 0.0) s += total;
  } else if (s >= total) {
    s = total;
    next.speed = 0.0;
  }
  double heading = state.heading;
  next.pos = route_point_at(route, s, &heading);
  if (state.speed > 0.0) next.heading = heading;
  return next;
}

}  // namespace vanetsim::geo
