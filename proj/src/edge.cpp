#include "vanetsim/edge.hpp"

#include <algorithm>
#include <cmath>

namespace vanetsim::edge {

// ---------------------------------------------------------------- bus

namespace {

std::vector<std::string> split_topic(const std::string& s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t slash = s.find('/', start);
    if (slash == std::string::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, slash - start));
    start = slash + 1;
  }
  return parts;
}

}  // namespace

bool topic_matches(const std::string& pattern, const std::string& topic) {
  if (pattern.empty() || topic.empty()) return false;
  const auto p = split_topic(pattern);
  const auto t = split_topic(topic);
  std::size_t i = 0;
  for (; i < p.size(); ++i) {
    if (p[i] == "#") return true;  // matches the remainder, including none
    if (i >= t.size()) return false;
    if (p[i] == "+") continue;
    if (p[i] != t[i]) return false;
  }
  return i == t.size();
}

int TopicBus::subscribe(const std::string& pattern, Handler handler) {
  const int id = next_id_++;
  subs_.push_back({id, pattern, std::move(handler)});
  return id;
}

void TopicBus::unsubscribe(int id) {
  std::erase_if(subs_, [id](const Subscription& s) { return s.id == id; });
}

void TopicBus::publish(const TopicMessage& message) {
  ++published_;
  for (const auto& sub : subs_) {
    if (topic_matches(sub.pattern, message.topic)) {
      sub.handler(message);
    }
  }
}

// ---------------------------------------------------------------- store

void ShortHorizonStore::insert(const TopicMessage& message) {
  for (const auto& pat : persisted_topics_) {
    if (topic_matches(pat, message.topic)) {
      rows_.push_back(message);
      return;
    }
  }
}

void ShortHorizonStore::compact(TimestampMs now) {
  std::erase_if(rows_, [&](const TopicMessage& m) {
    return now - m.published_at > retention_ms_;
  });
}

std::vector<TopicMessage> ShortHorizonStore::query(const std::string& topic_pattern,
                                                   TimestampMs from_ms,
                                                   TimestampMs to_ms) const {
  std::vector<TopicMessage> out;
  for (const auto& row : rows_) {
    if (row.published_at < from_ms || row.published_at > to_ms) continue;
    if (!topic_matches(topic_pattern, row.topic)) continue;
    out.push_back(row);
  }
  std::stable_sort(out.begin(), out.end(), [](const TopicMessage& a, const TopicMessage& b) {
    return a.published_at < b.published_at;
  });
  return out;
}

void ShortHorizonStore::attach(TopicBus& bus) {
  bus.subscribe("#", [this](const TopicMessage& m) { insert(m); });
}

std::string ShortHorizonStore::export_csv() const {
  static const char* hex = "0123456789abcdef";
  std::string out = "topic,published_at_ms,payload_hex\n";
  for (const auto& row : rows_) {
    out += row.topic;
    out += ',';
    out += std::to_string(row.published_at);
    out += ',';
    for (auto b : row.payload) {
      out.push_back(hex[b >> 4]);
      out.push_back(hex[b & 0xf]);
    }
    out += '\n';
  }
  return out;
}

void CloudBridge::attach(const std::string& node_id, TopicBus& node_bus) {
  // node topics already lead with the node id ("{node_id}/{sensor}/{stream}"),
  // so the mirrored name is "cloud/{node_id}/..."; topics that do not follow
  // the convention get the node id inserted.
  node_bus.subscribe("#", [this, node_id](const TopicMessage& m) {
    TopicMessage mirrored = m;
    if (m.topic.rfind(node_id + "/", 0) == 0) {
      mirrored.topic = "cloud/" + m.topic;
    } else {
      mirrored.topic = "cloud/" + node_id + "/" + m.topic;
    }
    ++bridged_;
    cloud_.publish(mirrored);
  });
}

// ---------------------------------------------------------------- radar

bool in_radar_sector(const RadarSector& sector, const geo::GeoPosition& p) {
  const double d = geo::haversine_distance(sector.origin, p);
  if (d > sector.radius_m) return false;
  if (sector.fov_deg >= 360.0 || d < 1e-9) return true;
  auto br = geo::bearing(sector.origin, p);
  if (!br.ok()) return true;
  double delta = std::fabs(br.value() - sector.boresight_deg);
  if (delta > 180.0) delta = 360.0 - delta;
  return delta <= sector.fov_deg / 2.0;
}

std::optional<RadarClass> radar_class_of(geo::StationType type) {
  switch (type) {
    case geo::StationType::Bus:
    case geo::StationType::GarbageTruck:
      return RadarClass::Heavy;
    case geo::StationType::Car:
    case geo::StationType::EmergencyVehicle:
      return RadarClass::Light;
    case geo::StationType::Cyclist:
      return RadarClass::TwoWheeler;
    case geo::StationType::Pedestrian:
      return std::nullopt;  // below the radar's object-size floor
  }
  return std::nullopt;
}

std::vector<RadarDetection> radar_observe(const std::vector<geo::VehicleState>& ground_truth,
                                          const RadarSector& sector,
                                          const RadarParams& params, Rng& rng) {
  std::vector<RadarDetection> out;
  for (const auto& v : ground_truth) {
    const auto true_cls = radar_class_of(v.station_type);
    if (!true_cls) continue;
    if (!in_radar_sector(sector, v.pos)) continue;
    if (!rng.bernoulli(params.detection_probability)) continue;

    RadarDetection det;
    det.object_id = v.id;
    det.true_cls = *true_cls;
    if (rng.bernoulli(params.classification_accuracy)) {
      det.cls = *true_cls;
    } else {
      // uniform over the two other classes
      const int shift = rng.bernoulli(0.5) ? 1 : 2;
      det.cls = static_cast<RadarClass>((static_cast<int>(*true_cls) + shift) % 3);
    }
    const double jitter_brg = rng.uniform(0.0, 360.0);
    const double jitter_d = std::fabs(rng.normal(0.0, params.position_jitter_m));
    det.pos = geo::offset_position(v.pos, jitter_brg, jitter_d);
    det.speed = v.speed;
    det.direction = v.heading;
    out.push_back(std::move(det));
  }
  return out;
}

// ---------------------------------------------------------------- camera

CameraClass camera_class_of(geo::StationType type) {
  switch (type) {
    case geo::StationType::Pedestrian: return CameraClass::Pedestrian;
    case geo::StationType::Cyclist: return CameraClass::Bicycle;
    case geo::StationType::Car:
    case geo::StationType::EmergencyVehicle: return CameraClass::Car;
    case geo::StationType::Bus:
    case geo::StationType::GarbageTruck: return CameraClass::Truck;
  }
  return CameraClass::Car;
}

bool in_camera_view(const CameraView& view, const geo::GeoPosition& p) {
  const auto& poly = view.polygon;
  if (poly.size() < 3) return false;
  // even-odd ray cast in lon/lat space; fine at field-of-view scale
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const bool crosses = (poly[i].lat > p.lat) != (poly[j].lat > p.lat);
    if (!crosses) continue;
    const double lon_at = poly[j].lon + (poly[i].lon - poly[j].lon) *
                                            (p.lat - poly[j].lat) /
                                            (poly[i].lat - poly[j].lat);
    if (p.lon < lon_at) inside = !inside;
  }
  return inside;
}

bool CameraScheduler::offer_frame(TimestampMs now) {
  const auto proc_ms = static_cast<TimestampMs>(params_.processing_time_s * 1000.0);
  bool started = false;

  // the device fetched the queued most-recent frame the moment it got free
  if (pending_ && free_at_ && *free_at_ <= now) {
    free_at_ = std::max(*free_at_, *pending_) + proc_ms;
    pending_.reset();
    ++processed_;
    started = true;
  }

  if (!free_at_ || *free_at_ <= now) {
    free_at_ = now + proc_ms;
    ++processed_;
    return true;
  }
  // still busy: this frame supersedes any queued one
  if (pending_) ++skipped_;
  pending_ = now;
  return started;
}

std::optional<CameraFrameResult> camera_observe(
    const std::vector<std::pair<geo::StationType, geo::GeoPosition>>& objects,
    const CameraView& view, const CameraParams& params, Rng& rng, TimestampMs now) {
  CameraFrameResult r;
  r.frame_at = now;
  for (const auto& [type, pos] : objects) {
    if (!in_camera_view(view, pos)) continue;
    if (!rng.bernoulli(params.detection_probability)) continue;
    const CameraClass cls = camera_class_of(type);
    r.counts[cls] += 1;
    r.detections.push_back({cls, pos});
  }
  return r;
}

// ---------------------------------------------------------------- wifi

int wifi_probe_count(const std::vector<geo::GeoPosition>& devices,
                     const geo::GeoPosition& sniffer, const WifiProbeParams& params,
                     Rng& rng) {
  int count = 0;
  for (const auto& d : devices) {
    if (geo::haversine_distance(d, sniffer) > params.radius_m) continue;
    if (rng.bernoulli(params.probe_probability)) ++count;
  }
  return count;
}

// ---------------------------------------------------------------- fusion

TrafficStats fuse_counts(const std::vector<FusionObservation>& observations,
                         TimestampMs window_start, TimestampMs window_end,
                         const FusionParams& params) {
  TrafficStats stats;
  stats.window_start = window_start;
  stats.window_end = window_end;

  struct Cluster {
    geo::GeoPosition pos;
    TimestampMs at_ms;
    std::vector<const FusionObservation*> members;
  };
  std::vector<Cluster> clusters;

  for (const auto& obs : observations) {
    if (obs.at_ms < window_start || obs.at_ms > window_end) continue;
    Cluster* home = nullptr;
    for (auto& c : clusters) {
      const bool near_space = geo::haversine_distance(c.pos, obs.pos) <= params.gate_distance_m;
      const bool near_time = std::llabs(c.at_ms - obs.at_ms) <= params.gate_time_ms;
      if (near_space && near_time) {
        home = &c;
        break;
      }
    }
    if (!home) {
      clusters.push_back({obs.pos, obs.at_ms, {}});
      home = &clusters.back();
    }
    home->members.push_back(&obs);
  }

  double speed_sum = 0.0;
  for (const auto& c : clusters) {
    for (const auto* m : c.members) {
      if (m->has_speed) {
        speed_sum += m->speed;
        ++stats.speed_samples;
      }
      if (std::find(stats.source_mix.begin(), stats.source_mix.end(), m->source) ==
          stats.source_mix.end()) {
        stats.source_mix.push_back(m->source);
      }
    }
  }
  stats.object_count = static_cast<int>(clusters.size());
  stats.mean_speed = stats.speed_samples > 0 ? speed_sum / stats.speed_samples : 0.0;
  std::sort(stats.source_mix.begin(), stats.source_mix.end());
  return stats;
}

// ---------------------------------------------------------------- latency

std::vector<std::uint8_t> encode_edge_notification(std::uint16_t node_id,
                                                   std::uint32_t frame_seq,
                                                   TimestampMs detected_at,
                                                   const std::map<CameraClass, int>& counts,
                                                   const geo::GeoPosition& first_pos) {
  std::vector<std::uint8_t> b;
  b.reserve(kEdgeNotificationBytes);
  b.push_back('E');
  b.push_back('N');
  b.push_back(static_cast<std::uint8_t>(node_id));
  b.push_back(static_cast<std::uint8_t>(node_id >> 8));
  for (int k = 0; k < 4; ++k) b.push_back(static_cast<std::uint8_t>(frame_seq >> (8 * k)));
  const auto t = static_cast<std::uint64_t>(detected_at);
  for (int k = 0; k < 8; ++k) b.push_back(static_cast<std::uint8_t>(t >> (8 * k)));
  for (int cls = 0; cls < 5; ++cls) {
    const auto it = counts.find(static_cast<CameraClass>(cls));
    const std::uint16_t n = it == counts.end() ? 0 : static_cast<std::uint16_t>(it->second);
    b.push_back(static_cast<std::uint8_t>(n));
    b.push_back(static_cast<std::uint8_t>(n >> 8));
  }
  const auto lat = static_cast<std::int32_t>(std::llround(first_pos.lat * 1e6));
  const auto lon = static_cast<std::int32_t>(std::llround(first_pos.lon * 1e6));
  for (int k = 0; k < 4; ++k) b.push_back(static_cast<std::uint8_t>(lat >> (8 * k)));
  for (int k = 0; k < 4; ++k) b.push_back(static_cast<std::uint8_t>(lon >> (8 * k)));
  b.push_back(0);  // flags, reserved
  // 2 + 2 + 4 + 8 + 10 + 8 + 1 = 35... padded to the fixed length below
  while (b.size() < kEdgeNotificationBytes) b.push_back(0);
  return b;
}

DelayBreakdown detection_latency(Deployment deployment, const LinkModel& link,
                                 const DetectionLatencyParams& params, Rng& rng) {
  DelayBreakdown d;
  d.capture_s = rng.uniform(params.capture_s_min, params.capture_s_max);
  if (deployment == Deployment::Edge) {
    d.processing_s = rng.uniform(params.edge_processing_s_min, params.edge_processing_s_max);
    d.communication_s =
        link.base_latency_s + kEdgeNotificationBytes * 8.0 / link.bandwidth_bps;
  } else {
    d.processing_s = rng.uniform(params.cloud_processing_s_min, params.cloud_processing_s_max);
    d.communication_s =
        link.base_latency_s + params.frame_bytes * 8.0 / link.bandwidth_bps;
  }
  return d;
}

}  // namespace vanetsim::edge
