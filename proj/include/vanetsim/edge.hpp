#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vanetsim/core.hpp"
#include "vanetsim/geo.hpp"
#include "vanetsim/rng.hpp"

namespace vanetsim::edge {

// ----- per-node publish/subscribe bus -----

struct TopicMessage {
  std::string topic;  // nonempty, '/'-separated segments
  std::vector<std::uint8_t> payload;
  TimestampMs published_at = 0;
};

/// MQTT-style matching: '+' matches one level, '#' matches the rest.
bool topic_matches(const std::string& pattern, const std::string& topic);

/// Synchronous in-process bus: every matching subscriber sees each message
/// exactly once, in per-topic publication order.
class TopicBus {
 public:
  using Handler = std::function<void(const TopicMessage&)>;

  int subscribe(const std::string& pattern, Handler handler);
  void unsubscribe(int id);
  void publish(const TopicMessage& message);

  std::uint64_t published_count() const { return published_; }

 private:
  struct Subscription {
    int id;
    std::string pattern;
    Handler handler;
  };
  std::vector<Subscription> subs_;
  int next_id_ = 1;
  std::uint64_t published_ = 0;
};

// ----- short-horizon persisted store -----

/// Rolling store of bus traffic for topics on the persisted list; rows age
/// out after `retention_s` (default 24 h).
class ShortHorizonStore {
 public:
  explicit ShortHorizonStore(double retention_s = 86'400.0,
                             std::vector<std::string> persisted_topics = {"#"})
      : retention_ms_(static_cast<TimestampMs>(retention_s * 1000.0)),
        persisted_topics_(std::move(persisted_topics)) {}

  void insert(const TopicMessage& message);
  void compact(TimestampMs now);

  std::vector<TopicMessage> query(const std::string& topic_pattern, TimestampMs from_ms,
                                  TimestampMs to_ms) const;

  std::size_t row_count() const { return rows_.size(); }
  void attach(TopicBus& bus);  // subscribe to the persisted topic list

  /// Snapshot as CSV (topic, published_at_ms, payload_hex), row order as stored.
  std::string export_csv() const;

 private:
  TimestampMs retention_ms_;
  std::vector<std::string> persisted_topics_;
  std::vector<TopicMessage> rows_;  // insertion-ordered by published_at
};

/// Mirrors every topic of attached node buses onto a central bus under
/// "cloud/{node_id}/...", the same data one hop later.
class CloudBridge {
 public:
  explicit CloudBridge(TopicBus& cloud_bus) : cloud_(cloud_bus) {}

  void attach(const std::string& node_id, TopicBus& node_bus);

  std::uint64_t bridged_count() const { return bridged_; }

 private:
  TopicBus& cloud_;
  std::uint64_t bridged_ = 0;
};

// ----- stochastic sensor models -----

enum class RadarClass : std::uint8_t { Light = 0, Heavy = 1, TwoWheeler = 2 };

struct RadarDetection {
  std::string object_id;
  geo::GeoPosition pos;
  double speed = 0.0;
  double direction = 0.0;
  RadarClass cls = RadarClass::Light;
  RadarClass true_cls = RadarClass::Light;  // ground truth, test-only
};

struct RadarParams {
  double detection_probability = 0.95;
  double classification_accuracy = 0.80;
  double position_jitter_m = 0.5;
};

/// Angular sector swept by the radar head.
struct RadarSector {
  geo::GeoPosition origin;
  double radius_m = 120.0;
  double boresight_deg = 0.0;
  double fov_deg = 360.0;
};

bool in_radar_sector(const RadarSector& sector, const geo::GeoPosition& p);

/// Typed radar classes exist only for vehicles; pedestrians are invisible to
/// the radar (it cannot differentiate smaller objects). Misclassification is
/// uniform over the other two classes.
std::optional<RadarClass> radar_class_of(geo::StationType type);

std::vector<RadarDetection> radar_observe(const std::vector<geo::VehicleState>& ground_truth,
                                          const RadarSector& sector,
                                          const RadarParams& params, Rng& rng);

// ----- camera -----

enum class CameraClass : std::uint8_t {
  Pedestrian = 0,
  Bicycle = 1,
  Motorbike = 2,
  Car = 3,
  Truck = 4,
};

CameraClass camera_class_of(geo::StationType type);

struct CameraParams {
  double detection_probability = 0.9;
  double frame_interval_s = 0.04;    // stream rate
  double processing_time_s = 0.10;   // per processed frame
};

/// Field of view as a lat/lon polygon (ordered ring, not closed).
struct CameraView {
  std::vector<geo::GeoPosition> polygon;
};

bool in_camera_view(const CameraView& view, const geo::GeoPosition& p);

struct CameraFrameResult {
  std::map<CameraClass, int> counts;
  std::vector<std::pair<CameraClass, geo::GeoPosition>> detections;
  TimestampMs frame_at = 0;
};

std::optional<CameraFrameResult> camera_observe(
    const std::vector<std::pair<geo::StationType, geo::GeoPosition>>& objects,
    const CameraView& view, const CameraParams& params, Rng& rng, TimestampMs now);

/// Busy-skip frame scheduler. The device pulls the most recent frame whenever
/// it finishes the previous one; frames superseded while it was busy are
/// skipped. With a saturated stream the processed rate is 1/processing_time.
class CameraScheduler {
 public:
  explicit CameraScheduler(CameraParams params) : params_(params) {}

  /// Announce a frame arriving at `now`. True when a processing cycle starts
  /// during this call (for this frame or a queued one).
  bool offer_frame(TimestampMs now);

  std::uint64_t processed() const { return processed_; }
  std::uint64_t skipped() const { return skipped_; }

 private:
  CameraParams params_;
  std::optional<TimestampMs> free_at_;
  std::optional<TimestampMs> pending_;  // most recent unfetched frame
  std::uint64_t processed_ = 0;
  std::uint64_t skipped_ = 0;
};

// ----- WiFi probing -----

struct WifiProbeParams {
  double probe_probability = 0.6;   // per device per observation window
  double radius_m = 80.0;           // omnidirectional
  double devices_per_person = 1.5;
};

int wifi_probe_count(const std::vector<geo::GeoPosition>& devices,
                     const geo::GeoPosition& sniffer, const WifiProbeParams& params,
                     Rng& rng);

// ----- fusion -----

enum class FusionSource : std::uint8_t { Radar = 0, Camera = 1, CamMsg = 2 };

struct FusionObservation {
  FusionSource source;
  geo::GeoPosition pos;
  TimestampMs at_ms = 0;
  double speed = 0.0;
  bool has_speed = false;
  std::string hint_id;  // empty unless the source carries identity
};

struct FusionParams {
  double gate_distance_m = 3.0;
  TimestampMs gate_time_ms = 1000;
};

struct TrafficStats {
  TimestampMs window_start = 0;
  TimestampMs window_end = 0;
  int object_count = 0;
  double mean_speed = 0.0;     // over observations that carry speed
  int speed_samples = 0;
  std::vector<FusionSource> source_mix;  // sorted, deduplicated
};

/// Greedy association: observations within the distance and time gates merge
/// into one object; counts deduplicate across sources.
TrafficStats fuse_counts(const std::vector<FusionObservation>& observations,
                         TimestampMs window_start, TimestampMs window_end,
                         const FusionParams& params = {});

// ----- edge vs cloud detection latency -----

enum class Deployment : std::uint8_t { Edge = 0, Cloud = 1 };

struct LinkModel {
  double base_latency_s = 0.001;      // propagation + stack
  double bandwidth_bps = 1e9;         // fiber default
};

struct DetectionLatencyParams {
  double capture_s_min = 0.015;
  double capture_s_max = 0.035;
  double edge_processing_s_min = 0.040;   // Jetson, tuned model
  double edge_processing_s_max = 0.070;
  double cloud_processing_s_min = 0.080;  // includes ingest queueing
  double cloud_processing_s_max = 0.140;
  std::size_t frame_bytes = 6'220'800;    // 1920x1080x3
};

inline constexpr std::size_t kEdgeNotificationBytes = 41;

/// Fixed 41-byte detection notification sent cloudward by the edge variant.
std::vector<std::uint8_t> encode_edge_notification(std::uint16_t node_id,
                                                   std::uint32_t frame_seq,
                                                   TimestampMs detected_at,
                                                   const std::map<CameraClass, int>& counts,
                                                   const geo::GeoPosition& first_pos);

struct DelayBreakdown {
  double capture_s = 0.0;
  double processing_s = 0.0;
  double communication_s = 0.0;
  double total() const { return capture_s + processing_s + communication_s; }
};

DelayBreakdown detection_latency(Deployment deployment, const LinkModel& link,
                                 const DetectionLatencyParams& params, Rng& rng);

}  // namespace vanetsim::edge
