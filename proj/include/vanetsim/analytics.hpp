#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vanetsim/core.hpp"
#include "vanetsim/geo.hpp"
#include "vanetsim/messages.hpp"
#include "vanetsim/rng.hpp"

namespace vanetsim::analytics {

// ----- congestion clustering (speed, count per meter) -----

struct SegmentSample {
  std::string segment_id;
  TimestampMs window_start = 0;
  TimestampMs window_end = 0;
  double mean_speed = 0.0;       // m/s
  double count_per_meter = 0.0;  // vehicles / m
};

struct CongestionResult {
  std::vector<int> assignment;  // sample index -> congestion level (0 = lowest)
  struct Centroid {
    double mean_speed;
    double count_per_meter;
    int level;
  };
  std::vector<Centroid> centroids;  // ordered by level ascending
};

/// k-means on standardized (mean_speed, count_per_meter) with seeded
/// deterministic k-means++-style initialization. Levels order clusters by
/// count_per_meter descending, mean_speed ascending as the tie-break, so the
/// highest level is the dense-and-slow regime.
Result<CongestionResult> congestion_clusters(const std::vector<SegmentSample>& samples,
                                             int k, std::uint64_t seed);

// ----- driving behavior (speed band x safety band) -----

enum class SpeedBand : std::uint8_t { UnderLimit = 0, NearLimit = 1, OverLimit = 2 };
enum class SafetyBand : std::uint8_t { WithinSafety = 0, OutsideSafety = 1 };

struct BehaviorCategory {
  SpeedBand speed = SpeedBand::UnderLimit;
  SafetyBand safety = SafetyBand::WithinSafety;

  bool operator==(const BehaviorCategory&) const = default;
};

struct BehaviorParams {
  double under_limit_factor = 0.90;  // mean speed below this x limit
  double over_limit_factor = 1.05;   // mean speed above this x limit
  double safety_factor = 0.5;        // a_max = friction * g * safety_factor
  double gravity = 9.81;
};

/// Classify a track window against the segment's speed limit and friction.
Result<BehaviorCategory> classify_driving_behavior(
    const std::vector<geo::VehicleState>& window, const geo::RoadSegment& segment,
    const BehaviorParams& params = {});

// ----- VRU collision prediction -----

struct KinematicSample {
  TimestampMs timestamp = 0;
  geo::GeoPosition pos;
  double speed = 0.0;
  double heading = 0.0;
};

struct KinematicTrack {
  std::string id;
  std::vector<KinematicSample> samples;  // time-ordered
};

struct CollisionParams {
  double horizon_s = 5.0;
  double step_s = 0.1;
  double conflict_radius_m = 2.0;
};

struct CollisionWarning {
  std::string vehicle_id;
  std::string vru_id;
  geo::GeoPosition predicted_conflict_pos;
  double time_to_conflict_s = 0.0;
  double min_distance_m = 0.0;
  TimestampMs issued_at = 0;
};

struct CollisionPrediction {
  CollisionWarning warning;
  msg::Denm denm;  // CollisionRisk alert addressed to both parties
};

/// Linear projection of both trajectories over the horizon; a warning fires
/// iff the projected separation drops below the conflict radius at some
/// t > 0. time_to_conflict is the time of minimum separation.
Result<std::optional<CollisionPrediction>> predict_collision(const KinematicTrack& vehicle,
                                                             const KinematicTrack& vru,
                                                             const CollisionParams& params,
                                                             TimestampMs now);

// ----- emergency-vehicle DENM dissemination -----

enum class Transmitter : std::uint8_t { Ev = 0, DetectingRsu = 1, UpcomingRsu = 2 };

const char* transmitter_name(Transmitter t);

struct HopDelayParams {
  // Per-hop delays; tuned so the upcoming-RSU path lands at a ~89 ms median
  // with p90 under 108 ms (see scripts/calibrate_dissemination.py).
  double tx_delay_min_ms = 7.0;
  double tx_delay_max_ms = 17.0;
  double processing_min_ms = 14.0;
  double processing_max_ms = 39.0;
};

struct RsuNode {
  std::uint32_t id = 0;
  geo::GeoPosition pos;
};

struct DisseminationTopology {
  std::vector<RsuNode> rsus;
  std::vector<std::pair<std::string, geo::GeoPosition>> receivers;  // road users
  double ev_broadcast_range_m = 300.0;
  double rsu_broadcast_range_m = 400.0;
};

struct DisseminationEvent {
  Transmitter transmitter;
  msg::Denm denm;
  struct Delivery {
    std::string receiver_id;
    double latency_ms;
  };
  std::vector<Delivery> deliveries;
};

/// Three-stage fan-out: the EV broadcasts one hop; the RSU hearing it
/// rebroadcasts to its locality; the next RSU along the EV's path alerts
/// farther ahead. Latencies accumulate per hop.
Result<std::vector<DisseminationEvent>> ev_disseminate(
    const geo::VehicleState& ev, const DisseminationTopology& topology,
    const HopDelayParams& params, TimestampMs now, Rng& rng, std::uint16_t denm_sequence);

}  // namespace vanetsim::analytics
