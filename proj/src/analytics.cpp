#include "vanetsim/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vanetsim::analytics {

// ---------------------------------------------------------------- clustering

namespace {

struct Point2 {
  double x;  // standardized mean_speed
  double y;  // standardized count_per_meter
};

double sq_dist(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

}  // namespace

Result<CongestionResult> congestion_clusters(const std::vector<SegmentSample>& samples,
                                             int k, std::uint64_t seed) {
  if (k < 1 || samples.size() < static_cast<std::size_t>(k)) {
    return make_error(Errc::DegenerateData, "need at least k samples");
  }
  const bool all_identical = std::all_of(
      samples.begin(), samples.end(), [&](const SegmentSample& s) {
        return s.mean_speed == samples.front().mean_speed &&
               s.count_per_meter == samples.front().count_per_meter;
      });
  if (all_identical) {
    return make_error(Errc::DegenerateData, "all samples identical");
  }

  // Standardize both features; zero variance on both axes means the data is
  // a single point cloud with no structure to cluster.
  double mean_s = 0.0, mean_c = 0.0;
  for (const auto& s : samples) {
    mean_s += s.mean_speed;
    mean_c += s.count_per_meter;
  }
  mean_s /= static_cast<double>(samples.size());
  mean_c /= static_cast<double>(samples.size());
  double var_s = 0.0, var_c = 0.0;
  for (const auto& s : samples) {
    var_s += (s.mean_speed - mean_s) * (s.mean_speed - mean_s);
    var_c += (s.count_per_meter - mean_c) * (s.count_per_meter - mean_c);
  }
  var_s /= static_cast<double>(samples.size());
  var_c /= static_cast<double>(samples.size());
  const double sd_s = var_s > 0.0 ? std::sqrt(var_s) : 1.0;
  const double sd_c = var_c > 0.0 ? std::sqrt(var_c) : 1.0;

  std::vector<Point2> pts(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    pts[i] = {(samples[i].mean_speed - mean_s) / sd_s,
              (samples[i].count_per_meter - mean_c) / sd_c};
  }

  // k-means++ style seeding, deterministic under the seed.
  Rng rng(seed);
  std::vector<Point2> centers;
  centers.push_back(pts[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(pts.size()) - 1))]);
  while (centers.size() < static_cast<std::size_t>(k)) {
    std::vector<double> d2(pts.size());
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, sq_dist(pts[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      // fewer distinct points than k: spread the remaining centers anywhere
      centers.push_back(pts[centers.size() % pts.size()]);
      continue;
    }
    double pick = rng.uniform() * total;
    std::size_t chosen = pts.size() - 1;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      pick -= d2[i];
      if (pick <= 0.0) {
        chosen = i;
        break;
      }
    }
    centers.push_back(pts[chosen]);
  }

  std::vector<int> assign(pts.size(), 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = sq_dist(pts[i], centers[static_cast<std::size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    std::vector<Point2> sums(static_cast<std::size_t>(k), {0.0, 0.0});
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      sums[static_cast<std::size_t>(assign[i])].x += pts[i].x;
      sums[static_cast<std::size_t>(assign[i])].y += pts[i].y;
      counts[static_cast<std::size_t>(assign[i])]++;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers[static_cast<std::size_t>(c)] = {
            sums[static_cast<std::size_t>(c)].x / counts[static_cast<std::size_t>(c)],
            sums[static_cast<std::size_t>(c)].y / counts[static_cast<std::size_t>(c)]};
      }
    }
    if (!changed) break;
  }

  // Un-standardize centroids, then order into congestion levels:
  // level 0 = lowest congestion (fewest vehicles per meter, fastest).
  struct Raw {
    int cluster;
    double speed;
    double count;
  };
  std::vector<Raw> raw;
  for (int c = 0; c < k; ++c) {
    raw.push_back({c, centers[static_cast<std::size_t>(c)].x * sd_s + mean_s,
                   centers[static_cast<std::size_t>(c)].y * sd_c + mean_c});
  }
  std::sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) {
    if (a.count != b.count) return a.count < b.count;  // ascending congestion
    return a.speed > b.speed;                          // faster = less congested
  });

  CongestionResult result;
  std::vector<int> cluster_to_level(static_cast<std::size_t>(k), 0);
  for (int level = 0; level < k; ++level) {
    cluster_to_level[static_cast<std::size_t>(raw[static_cast<std::size_t>(level)].cluster)] =
        level;
    result.centroids.push_back({raw[static_cast<std::size_t>(level)].speed,
                                raw[static_cast<std::size_t>(level)].count, level});
  }
  result.assignment.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    result.assignment[i] = cluster_to_level[static_cast<std::size_t>(assign[i])];
  }
  return result;
}

// ---------------------------------------------------------------- behavior

Result<BehaviorCategory> classify_driving_behavior(
    const std::vector<geo::VehicleState>& window, const geo::RoadSegment& segment,
    const BehaviorParams& params) {
  if (window.size() < 2) {
    return make_error(Errc::InsufficientWindow, "need >= 2 samples");
  }
  double mean_speed = 0.0;
  double max_abs_accel = 0.0;
  for (const auto& s : window) {
    mean_speed += s.speed;
    max_abs_accel = std::max(max_abs_accel, std::fabs(s.accel));
  }
  mean_speed /= static_cast<double>(window.size());

  BehaviorCategory cat;
  const double limit = segment.speed_limit;
  if (mean_speed < params.under_limit_factor * limit) {
    cat.speed = SpeedBand::UnderLimit;
  } else if (mean_speed <= params.over_limit_factor * limit) {
    cat.speed = SpeedBand::NearLimit;
  } else {
    cat.speed = SpeedBand::OverLimit;
  }

  const double a_max = segment.friction * params.gravity * params.safety_factor;
  cat.safety = max_abs_accel > a_max ? SafetyBand::OutsideSafety : SafetyBand::WithinSafety;
  return cat;
}

// ---------------------------------------------------------------- collision

namespace {

geo::GeoPosition project_linear(const KinematicSample& s, double dt_s) {
  if (s.speed <= 0.0) return s.pos;
  return geo::offset_position(s.pos, s.heading, s.speed * dt_s);
}

}  // namespace

Result<std::optional<CollisionPrediction>> predict_collision(const KinematicTrack& vehicle,
                                                             const KinematicTrack& vru,
                                                             const CollisionParams& params,
                                                             TimestampMs now) {
  if (vehicle.samples.size() < 2 || vru.samples.size() < 2) {
    return make_error(Errc::InsufficientHistory, "both tracks need >= 2 samples");
  }
  const KinematicSample& v = vehicle.samples.back();
  const KinematicSample& p = vru.samples.back();

  // Align both tracks to the same reference time before projecting.
  const TimestampMs t0 = std::max(v.timestamp, p.timestamp);
  const double v_lead = static_cast<double>(t0 - v.timestamp) / 1000.0;
  const double p_lead = static_cast<double>(t0 - p.timestamp) / 1000.0;

  double best_t = -1.0;
  double best_d = std::numeric_limits<double>::infinity();
  geo::GeoPosition best_pos{};
  for (double t = params.step_s; t <= params.horizon_s + 1e-9; t += params.step_s) {
    const geo::GeoPosition va = project_linear(v, v_lead + t);
    const geo::GeoPosition pa = project_linear(p, p_lead + t);
    const double d = geo::haversine_distance(va, pa);
    if (d < best_d) {
      best_d = d;
      best_t = t;
      best_pos.lat = (va.lat + pa.lat) / 2.0;
      best_pos.lon = (va.lon + pa.lon) / 2.0;
    }
  }

  if (best_d >= params.conflict_radius_m) {
    return std::optional<CollisionPrediction>{};
  }

  CollisionPrediction pred;
  pred.warning.vehicle_id = vehicle.id;
  pred.warning.vru_id = vru.id;
  pred.warning.predicted_conflict_pos = best_pos;
  pred.warning.time_to_conflict_s = best_t;
  pred.warning.min_distance_m = best_d;
  pred.warning.issued_at = now;

  pred.denm.originator_id = 0;  // infrastructure-issued
  pred.denm.event_type = msg::DenmEventType::collision_risk();
  pred.denm.event_pos = best_pos;
  pred.denm.detection_time = now;
  pred.denm.validity_duration_s =
      static_cast<std::uint32_t>(std::max(1.0, std::ceil(params.horizon_s)));
  return std::optional<CollisionPrediction>{pred};
}

// ---------------------------------------------------------------- dissemination

const char* transmitter_name(Transmitter t) {
  switch (t) {
    case Transmitter::Ev: return "Ev";
    case Transmitter::DetectingRsu: return "DetectingRsu";
    case Transmitter::UpcomingRsu: return "UpcomingRsu";
  }
  return "?";
}

Result<std::vector<DisseminationEvent>> ev_disseminate(
    const geo::VehicleState& ev, const DisseminationTopology& topology,
    const HopDelayParams& params, TimestampMs now, Rng& rng,
    std::uint16_t denm_sequence) {
  if (ev.station_type != geo::StationType::EmergencyVehicle) {
    return make_error(Errc::InvariantViolation, "transmitter is not an emergency vehicle");
  }

  msg::Denm denm;
  denm.originator_id = 0xE0000000u;
  denm.event_type = msg::DenmEventType::ev_approaching();
  denm.event_pos = ev.pos;
  denm.detection_time = now;
  denm.validity_duration_s = 30;
  denm.sequence = denm_sequence;  // stages 2 and 3 carry the same sequence

  auto tx = [&] { return rng.uniform(params.tx_delay_min_ms, params.tx_delay_max_ms); };
  auto proc = [&] { return rng.uniform(params.processing_min_ms, params.processing_max_ms); };

  std::vector<DisseminationEvent> events;

  // Stage 1: the EV broadcasts directly, one hop.
  DisseminationEvent direct;
  direct.transmitter = Transmitter::Ev;
  direct.denm = denm;
  for (const auto& [id, pos] : topology.receivers) {
    if (geo::haversine_distance(ev.pos, pos) <= topology.ev_broadcast_range_m) {
      direct.deliveries.push_back({id, tx()});
    }
  }
  events.push_back(std::move(direct));

  // Stage 2: the RSU currently hearing the EV rebroadcasts in its locality.
  const RsuNode* detecting = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& rsu : topology.rsus) {
    const double d = geo::haversine_distance(ev.pos, rsu.pos);
    if (d < best_d) {
      best_d = d;
      detecting = &rsu;
    }
  }
  if (!detecting || best_d > topology.rsu_broadcast_range_m) {
    return events;  // stage 1 still executed; no RSU in range
  }

  DisseminationEvent via_rsu;
  via_rsu.transmitter = Transmitter::DetectingRsu;
  via_rsu.denm = denm;
  for (const auto& [id, pos] : topology.receivers) {
    if (geo::haversine_distance(detecting->pos, pos) <= topology.rsu_broadcast_range_m) {
      via_rsu.deliveries.push_back({id, tx() + proc() + tx()});
    }
  }
  events.push_back(std::move(via_rsu));

  // Stage 3: the next RSU along the EV heading disseminates ahead. "Ahead"
  // means the best-aligned other RSU in front of the EV.
  const RsuNode* upcoming = nullptr;
  double best_gain = 0.0;
  geo::VehicleState ev_state;
  ev_state.pos = ev.pos;
  ev_state.heading = ev.heading;
  for (const auto& rsu : topology.rsus) {
    if (detecting && rsu.id == detecting->id) continue;
    auto alignment = geo::heading_alignment(ev_state, rsu.pos);
    if (!alignment.ok() || alignment.value() <= 0.0) continue;
    const double d = geo::haversine_distance(ev.pos, rsu.pos);
    const double gain = alignment.value() / std::max(d, 1.0);
    if (gain > best_gain) {
      best_gain = gain;
      upcoming = &rsu;
    }
  }
  if (upcoming) {
    DisseminationEvent ahead;
    ahead.transmitter = Transmitter::UpcomingRsu;
    ahead.denm = denm;
    for (const auto& [id, pos] : topology.receivers) {
      if (geo::haversine_distance(upcoming->pos, pos) <= topology.rsu_broadcast_range_m) {
        // EV -> detecting RSU -> backhaul -> upcoming RSU -> receiver
        ahead.deliveries.push_back({id, tx() + proc() + tx() + proc() + tx()});
      }
    }
    events.push_back(std::move(ahead));
  }
  return events;
}

}  // namespace vanetsim::analytics
