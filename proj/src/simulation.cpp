#include "vanetsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>

#include "json.hpp"
#include "vanetsim/edge.hpp"
#include "vanetsim/pipeline.hpp"
#include "vanetsim/rng.hpp"

namespace vanetsim::sim {

namespace {

constexpr const char* kVersion = "0.1.0";

std::int8_t rssi_to_i8(double rssi_dbm) {
  const double clamped = std::clamp(rssi_dbm, -127.0, 0.0);
  return static_cast<std::int8_t>(std::llround(clamped));
}

PdrCellKey cell_of(const geo::GeoPosition& p) {
  // ~11 m cells in latitude; matches the map-tile granularity of the reports
  return {static_cast<std::int32_t>(std::floor(p.lat * 1e4)),
          static_cast<std::int32_t>(std::floor(p.lon * 1e4))};
}

struct SegmentAccumulator {
  double speed_sum = 0.0;
  std::int64_t samples = 0;
};

// Shared platform-side ingest service: the RSUs hand received batches to one
// consumer pool, so batch dedupe is global even when retries arrive through a
// different RSU than the original attempt.
class CloudSink : public pipeline::BatchTransport {
 public:
  explicit CloudSink(crypto::CipherSuite suite)
      : ingest_(std::move(suite), "sink") {}

  bool poa_available() const override { return available_; }
  void set_available(bool v) { available_ = v; }
  void set_vehicle(const std::string& id) { vehicle_ = id; }

  std::optional<pipeline::Ack> send(const std::vector<std::uint8_t>& container) override {
    auto result = ingest_.ingest(container);
    if (!result.ok()) {
      return pipeline::Ack{false, 0, {}};
    }
    for (const auto& p : result.value().payloads) {
      delivered_[{vehicle_, static_cast<int>(p.source), p.seq}] += 1;
      payload_lines_.push_back(p.to_ngsi_json());
    }
    return result.value().ack;
  }

  std::vector<std::string> take_payload_lines() { return std::move(payload_lines_); }

  struct Key {
    std::string vehicle;
    int source;
    std::uint64_t seq;
    auto operator<=>(const Key&) const = default;
  };
  const std::map<Key, int>& delivered() const { return delivered_; }

 private:
  pipeline::RsuIngestor ingest_;
  std::map<Key, int> delivered_;
  std::vector<std::string> payload_lines_;
  bool available_ = false;
  std::string vehicle_;
};

struct VehicleRuntime {
  VehicleSpec spec;
  const RouteSpec* route = nullptr;
  geo::VehicleState state;
  double prev_speed = 0.0;
  std::uint32_t num_id = 0;
  cm::ConnectionManager cm;

  bool has_pipeline = false;
  std::unique_ptr<pipeline::PersistentQueue> queue;
  std::unique_ptr<pipeline::ObuFlusher> flusher;
  pipeline::DcuSimulator dcu;
  std::uint64_t gps_seq = 0;
  std::unique_ptr<pipeline::LoraRedundancy> lora;
  radio::DutyCycleLedger lora_ledger;
  std::vector<std::pair<int, std::uint64_t>> generated;  // (source, seq)

  std::deque<analytics::KinematicSample> track;
  std::vector<geo::VehicleState> window_samples;  // 1 Hz, for behavior analysis
  std::map<std::size_t, SegmentAccumulator> segment_acc;

  explicit VehicleRuntime(const VehicleSpec& s, cm::CmParams cm_params)
      : spec(s), cm(cm_params) {}
};

struct VruRuntime {
  VruSpec spec;
  geo::GeoPosition pos;
  double heading = 0.0;
  double patrol_progress = 0.0;
  int patrol_dir = 1;
  std::uint32_t num_id = 0;
  msg::StationTypeClassifier classifier;
  std::deque<analytics::KinematicSample> track;

  VruRuntime(const VruSpec& s, geo::StationType initial)
      : spec(s), pos(s.pos), heading(s.heading_deg), classifier(initial) {}
};

struct NodeRuntime {
  NodeSpec spec;
  std::uint32_t rsu_num = 0;
  bool is_rsu = false;
  bool has_lora_gw = false;
  edge::TopicBus bus;
  edge::ShortHorizonStore store;
  edge::RadarSector radar_sector;
  edge::CameraView camera_view;
  edge::CameraScheduler camera_sched;
  std::vector<edge::FusionObservation> fusion_buffer;

  explicit NodeRuntime(const NodeSpec& s, const edge::CameraParams& cam_params)
      : spec(s), store(86'400.0), camera_sched(cam_params) {}
};

struct FusionRow {
  std::string node;
  TimestampMs window_start = 0;
  int count = 0;
  double mean_speed = 0.0;
  std::string sources;
};

class Engine {
 public:
  explicit Engine(const Scenario& sc)
      : sc_(sc),
        rng_channel_(Rng(sc.seed).fork(1)),
        rng_sensors_(Rng(sc.seed).fork(2)),
        rng_analytics_(Rng(sc.seed).fork(3)),
        rng_probe_(Rng(sc.seed).fork(4)),
        controller_(sc.sdn_params, sc.channel),
        sink_(sc.null_cipher
                  ? crypto::CipherSuite::null_suite()
                  : crypto::CipherSuite::authenticated(std::vector<std::uint8_t>(16, 0x5A))) {}

  MetricsBundle run();

 private:
  void setup();
  void step(TimestampMs t);
  void move_vehicles(TimestampMs t, double dt);
  void move_vrus(TimestampMs t, double dt);
  void emit_cams(TimestampMs t);
  void emit_vams(TimestampMs t);
  void emit_rsu_beacons(TimestampMs t);
  void relay_obu_info(TimestampMs t);
  void decide_attachments(TimestampMs t);
  void pipeline_step(TimestampMs t);
  void lora_step(TimestampMs t);
  void sensors_step(TimestampMs t);
  void fusion_step(TimestampMs t);
  void analytics_step(TimestampMs t);
  void probes_step(TimestampMs t);
  void finalize();

  double cellular_tier_mbps(cm::Target::Kind kind) const;

  const Scenario& sc_;
  Rng rng_channel_;
  Rng rng_sensors_;
  Rng rng_analytics_;
  Rng rng_probe_;
  sdn::SdnController controller_;
  CloudSink sink_;

  std::vector<std::unique_ptr<VehicleRuntime>> vehicles_;
  std::vector<std::unique_ptr<VruRuntime>> vrus_;
  std::vector<std::unique_ptr<NodeRuntime>> nodes_;
  std::vector<FusionRow> fusion_rows_;
  struct PendingReport {
    msg::ObuInfo info;
    std::uint32_t obu_num = 0;
  };
  std::vector<PendingReport> pending_reports_;
  edge::TopicBus cloud_bus_;
  edge::CloudBridge cloud_bridge_{cloud_bus_};
  MetricsBundle m_;
  std::uint16_t denm_seq_ = 0;
  std::map<std::pair<std::string, std::string>, TimestampMs> collision_cooldown_;
  TimestampMs fusion_window_start_ = 0;
  TimestampMs analytics_window_start_ = 0;
};

double Engine::cellular_tier_mbps(cm::Target::Kind kind) const {
  if (kind == cm::Target::Kind::CellularFiveG) return sc_.channel.five_g.max_throughput_mbps;
  if (kind == cm::Target::Kind::CellularLte) return sc_.channel.lte.max_throughput_mbps;
  return 0.0;
}

void Engine::setup() {
  m_.scenario_name = sc_.name;
  m_.seed = sc_.seed;
  m_.config_md5 = sc_.config_md5;
  m_.cipher_suite = sc_.null_cipher ? "Null" : "AuthenticatedHybrid";
  m_.duration_s = sc_.duration_s;
  m_.tick_ms = sc_.tick_ms;

  edge::CameraParams cam_params;
  std::uint32_t vid = 1000;
  for (const auto& vspec : sc_.vehicles) {
    auto v = std::make_unique<VehicleRuntime>(vspec, sc_.cm_params);
    v->route = sc_.find_route(vspec.route_id);
    v->num_id = vid++;
    v->state.id = vspec.id;
    v->state.station_type = vspec.type;
    double heading = 0.0;
    v->state.pos = geo::route_point_at(v->route->route, vspec.start_offset_m, &heading);
    v->state.heading = heading;
    v->state.speed = vspec.speed_mps;
    v->prev_speed = vspec.speed_mps;
    if (vspec.dcu) {
      v->has_pipeline = true;
      v->queue = std::make_unique<pipeline::PersistentQueue>("", 100'000);
      auto suite = sc_.null_cipher
                       ? crypto::CipherSuite::null_suite()
                       : crypto::CipherSuite::authenticated(std::vector<std::uint8_t>(16, 0x5A));
      v->flusher = std::make_unique<pipeline::ObuFlusher>(*v->queue, suite, "",
                                                          v->num_id);
      v->lora = std::make_unique<pipeline::LoraRedundancy>(
          static_cast<std::uint16_t>(v->num_id), sc_.lora.redundancy_period_s, sc_.lora.phy);
      v->lora_ledger = radio::DutyCycleLedger(sc_.lora.phy.duty_cycle_limit, 3600.0);
    }
    vehicles_.push_back(std::move(v));
  }

  std::uint32_t pid = 2000;
  for (const auto& pspec : sc_.vrus) {
    const geo::StationType initial = pspec.profile == msg::VruProfile::Cyclist
                                         ? geo::StationType::Cyclist
                                         : geo::StationType::Pedestrian;
    auto p = std::make_unique<VruRuntime>(pspec, initial);
    p->num_id = pid++;
    vrus_.push_back(std::move(p));
  }

  for (const auto& nspec : sc_.nodes) {
    auto n = std::make_unique<NodeRuntime>(nspec, cam_params);
    n->rsu_num = nspec.rsu_num;
    n->is_rsu = nspec.has_tech("ItsG5");
    n->has_lora_gw = nspec.has_tech("Lora");
    if (n->is_rsu) {
      controller_.register_rsu(n->rsu_num, nspec.pos, nspec.bridge_attenuation_db);
    }
    n->radar_sector = {nspec.pos, 120.0, 0.0, 360.0};
    // default camera view: ~30 m square south-east of the post
    const double d = 0.00027;  // ~30 m in degrees of latitude
    n->camera_view.polygon = {
        {nspec.pos.lat, nspec.pos.lon, 0.0},
        {nspec.pos.lat, nspec.pos.lon + d, 0.0},
        {nspec.pos.lat - d, nspec.pos.lon + d, 0.0},
        {nspec.pos.lat - d, nspec.pos.lon, 0.0}};
    n->store.attach(n->bus);
    cloud_bridge_.attach(nspec.id, n->bus);  // mirror onto "cloud/{node}/..."
    nodes_.push_back(std::move(n));
  }
}

void Engine::move_vehicles(TimestampMs t, double dt) {
  for (auto& v : vehicles_) {
    // segment speed limits, when present, drive the vehicle speed
    const auto proj = geo::project_to_route(v->route->route, v->state.pos);
    std::size_t seg = 0;
    geo::route_point_at(v->route->route, proj.arclength_m, nullptr, &seg);
    double target_speed = v->spec.speed_mps;
    if (seg < v->route->route.segment_speed_limits.size()) {
      target_speed = std::min(target_speed, v->route->route.segment_speed_limits[seg]);
    }
    v->state.speed = target_speed;
    auto next = geo::advance(v->state, v->route->route, dt);
    if (next.ok()) {
      v->state = next.value();
    } else {
      v->state.timestamp = t;
    }
    v->state.accel = (v->state.speed - v->prev_speed) / dt;
    v->prev_speed = v->state.speed;
  }
}

void Engine::move_vrus(TimestampMs t, double dt) {
  for (auto& p : vrus_) {
    if (p->spec.speed_mps <= 0.0) continue;
    const double step = p->spec.speed_mps * dt;
    p->pos = geo::offset_position(p->pos, p->heading, step);
    p->patrol_progress += step;
    if (p->patrol_progress >= p->spec.patrol_length_m) {
      p->patrol_progress = 0.0;
      p->heading = geo::normalize_heading(p->heading + 180.0);  // walk back
    }
  }
  (void)t;
}

void Engine::emit_cams(TimestampMs t) {
  if (sc_.cadence.obu_cam_interval_ms <= 0 || t % sc_.cadence.obu_cam_interval_ms != 0) {
    return;
  }
  for (auto& v : vehicles_) {
    if (!v->spec.obu) continue;
    msg::Cam cam;
    cam.station_id = v->num_id;
    cam.station_type = v->state.station_type;
    cam.pos = v->state.pos;
    cam.speed = v->state.speed;
    cam.heading = v->state.heading;
    cam.status = 0;
    cam.generation_time = t;
    auto bytes = msg::encode(cam);
    if (!bytes.ok()) continue;
    ++m_.cams_sent;

    // update the kinematic track used by the collision service
    v->track.push_back({t, cam.pos, cam.speed, cam.heading});
    while (v->track.size() > 20) v->track.pop_front();

    const PdrCellKey cell = cell_of(cam.pos);
    auto& pdr = m_.pdr_cells[cell];
    pdr.sent += 1;
    bool received_any = false;

    for (auto& n : nodes_) {
      if (!n->is_rsu) continue;
      const double rssi =
          radio::rssi_at(cam.pos, n->spec.pos, radio::RadioTech::ItsG5, sc_.channel,
                         rng_channel_, n->spec.bridge_attenuation_db);
      const bool delivered =
          rssi > sc_.channel.its_g5.rssi_floor_dbm &&
          rng_channel_.bernoulli(
              radio::delivery_probability(rssi, radio::RadioTech::ItsG5, sc_.channel));
      if (!delivered) continue;
      received_any = true;
      ++m_.cams_received;
      m_.rssi_samples.push_back({t, v->spec.id, n->rsu_num, cam.pos, rssi});

      // the RSU decodes the wire bytes; the OBUInfo relay to the controller
      // happens after the connection-manager stage of this tick
      auto decoded = msg::decode(bytes.value(), msg::MsgKind::Cam);
      if (!decoded.ok()) continue;
      PendingReport report;
      report.info.inner = std::get<msg::Cam>(decoded.value());
      report.info.rssi_dbm = rssi_to_i8(rssi);
      report.info.reporting_rsu = n->rsu_num;
      report.obu_num = v->num_id;
      pending_reports_.push_back(report);

      // fusion: the node heard this CAM directly
      n->fusion_buffer.push_back(
          {edge::FusionSource::CamMsg, cam.pos, t, cam.speed, true, v->spec.id});
    }
    if (received_any) pdr.received += 1;
  }
}

void Engine::emit_vams(TimestampMs t) {
  if (sc_.cadence.vru_vam_interval_ms <= 0 || t % sc_.cadence.vru_vam_interval_ms != 0) {
    return;
  }
  for (auto& p : vrus_) {
    const geo::StationType reported = p->classifier.update(p->spec.speed_mps, t);
    p->track.push_back({t, p->pos, p->spec.speed_mps, p->heading});
    while (p->track.size() > 20) p->track.pop_front();

    if (reported == geo::StationType::Pedestrian || reported == geo::StationType::Cyclist) {
      msg::Vam vam;
      vam.station_id = p->num_id;
      vam.pos = p->pos;
      vam.heading = p->heading;
      vam.speed = p->spec.speed_mps;
      vam.orientation = p->heading;
      vam.direction = p->heading;
      vam.size_weight_class = msg::SizeWeightClass::LightVru;
      vam.vru_profile = p->spec.profile;
      (void)msg::encode(vam);  // wire exercise; VAM consumers read the track
    } else {
      // smartphone-as-OBU: the station type switched to a vehicle class
      msg::Cam cam;
      cam.station_id = p->num_id;
      cam.station_type = reported;
      cam.pos = p->pos;
      cam.speed = p->spec.speed_mps;
      cam.heading = p->heading;
      cam.generation_time = t;
      (void)msg::encode(cam);
    }
  }
}

void Engine::emit_rsu_beacons(TimestampMs t) {
  if (sc_.cadence.rsu_beacon_interval_ms <= 0 ||
      t % sc_.cadence.rsu_beacon_interval_ms != 0) {
    return;
  }
  for (auto& n : nodes_) {
    if (!n->is_rsu) continue;
    for (auto& v : vehicles_) {
      if (!v->spec.obu) continue;
      const double rssi =
          radio::rssi_at(n->spec.pos, v->state.pos, radio::RadioTech::ItsG5, sc_.channel,
                         rng_channel_, n->spec.bridge_attenuation_db);
      const bool delivered =
          rssi > sc_.channel.its_g5.rssi_floor_dbm &&
          rng_channel_.bernoulli(
              radio::delivery_probability(rssi, radio::RadioTech::ItsG5, sc_.channel));
      if (delivered) {
        v->cm.observe_beacon(n->rsu_num, n->spec.pos, radio::RadioTech::ItsG5, rssi, t);
      }
    }
  }
}

void Engine::relay_obu_info(TimestampMs t) {
  for (const auto& report : pending_reports_) {
    auto info_bytes = msg::encode(report.info);
    if (!info_bytes.ok()) continue;
    const msg::Frame control = msg::frame(info_bytes.value(), msg::FrameKind::Control);
    ++m_.obuinfo_frames_sent;

    // the switch pipeline: the control ethertype never enters the data path
    const auto outcome = controller_.route_downlink(control, report.obu_num);
    if (outcome.kind == sdn::RouteOutcome::Kind::ForwardedToRsu ||
        outcome.kind == sdn::RouteOutcome::Kind::ForwardedToCellularGw) {
      ++m_.obuinfo_frames_via_data_rules;  // must never happen
    }
    auto unframed = msg::unframe(control);
    if (!unframed.ok() || unframed.value().first != msg::FrameKind::Control) continue;
    auto parsed = msg::decode(unframed.value().second, msg::MsgKind::ObuInfo);
    if (!parsed.ok()) continue;
    (void)controller_.ingest_obu_info(std::get<msg::ObuInfo>(parsed.value()),
                                      report.info.reporting_rsu, t);
  }
  pending_reports_.clear();
}

void Engine::decide_attachments(TimestampMs t) {
  for (auto& v : vehicles_) {
    if (!v->spec.obu) continue;
    cm::CellularAvailability cell;
    cell.five_g = sc_.cellular.covers_fiveg(v->state.pos);
    cell.lte = sc_.cellular.covers_lte(v->state.pos);
    const auto& decision = v->cm.decide(v->state, t, cell);

    if (sc_.debug_cm_trace) {
      CmDebugSample dbg;
      dbg.t = t;
      dbg.obu = v->spec.id;
      dbg.selected = decision.target;
      for (const auto& poa : v->cm.fresh_candidates(t)) {
        auto s = cm::score_poa(v->state, poa, sc_.cm_params, t);
        if (s.ok()) dbg.scores.push_back({poa.rsu_id, s.value()});
      }
      m_.cm_debug.push_back(std::move(dbg));
    }

    CoverageSample cov;
    cov.t = t;
    cov.obu = v->spec.id;
    cov.pos = v->state.pos;
    cov.tech = decision.target.kind;
    cov.rsu = decision.target.kind == cm::Target::Kind::Rsu ? decision.target.rsu_id : 0;
    cov.fiveg_available = cell.five_g;
    cov.lte_available = cell.lte;
    m_.coverage_trace.push_back(cov);

    controller_.note_attachment(v->num_id, decision.target, t);
  }
}

void Engine::pipeline_step(TimestampMs t) {
  for (auto& v : vehicles_) {
    if (!v->has_pipeline) continue;

    // DCU environment cadence (3 s default)
    pipeline::SensorReading reading;
    reading.temp_c = 15.0 + 3.0 * std::sin(static_cast<double>(t) / 600'000.0);
    reading.humidity_pct = 60.0 + 10.0 * std::sin(static_cast<double>(t) / 900'000.0);
    reading.pressure_hpa = 1013.25;
    if (auto dp = v->dcu.tick(reading, t)) {
      (void)v->queue->enqueue(*dp);
      v->generated.push_back({static_cast<int>(dp->source), dp->seq});
      pipeline::GpsFix fix{v->state.pos, v->state.speed, v->state.heading};
      if (v->lora) {
        v->lora->observe(std::get<pipeline::Environment>(dp->kind), fix, t);
      }

      // the OBU itself queues GPS fixes at the same cadence
      pipeline::DataPoint gps;
      gps.source = pipeline::Source::ObuGps;
      gps.seq = ++v->gps_seq;
      gps.captured_at = t;
      gps.kind = fix;
      (void)v->queue->enqueue(gps);
      v->generated.push_back({static_cast<int>(gps.source), gps.seq});
    }

    if (sc_.cadence.flush_interval_ms > 0 && t % sc_.cadence.flush_interval_ms == 0) {
      const auto kind = v->cm.current().target.kind;
      sink_.set_available(kind == cm::Target::Kind::Rsu ||
                          kind == cm::Target::Kind::CellularFiveG);
      sink_.set_vehicle(v->spec.id);
      (void)v->flusher->flush(sink_);
    }
  }
}

void Engine::lora_step(TimestampMs t) {
  for (auto& v : vehicles_) {
    if (!v->has_pipeline || !v->lora) continue;
    auto frame = v->lora->tick(t, v->lora_ledger);
    if (!frame) continue;

    const auto airtime = radio::lora_airtime_s(frame->size(), sc_.lora.phy);
    const double usage_ms = v->lora_ledger.window_usage_ms(t);
    if (usage_ms > v->lora_ledger.budget_ms()) {
      ++m_.duty_cycle_violations;
    }

    // nearest LoRa gateway hears the frame, channel permitting
    const NodeRuntime* gw = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& n : nodes_) {
      if (!n->has_lora_gw) continue;
      const double d = geo::haversine_distance(v->state.pos, n->spec.pos);
      if (d < best) {
        best = d;
        gw = n.get();
      }
    }
    bool delivered = false;
    if (gw) {
      const double rssi = radio::rssi_at(v->state.pos, gw->spec.pos, radio::RadioTech::Lora,
                                         sc_.channel, rng_channel_, 0.0);
      delivered = rssi > sc_.channel.lora.rssi_floor_dbm &&
                  rng_channel_.bernoulli(radio::delivery_probability(
                      rssi, radio::RadioTech::Lora, sc_.channel));
    }
    m_.lora_rows.push_back(
        {t, v->spec.id, airtime.ok() ? airtime.value() : 0.0, delivered, usage_ms / 1000.0});
  }
}

void Engine::sensors_step(TimestampMs t) {
  if (sc_.cadence.sensor_interval_ms <= 0 || t % sc_.cadence.sensor_interval_ms != 0) {
    return;
  }
  // ground truth pools shared by all sensor heads
  std::vector<geo::VehicleState> vehicle_truth;
  for (const auto& v : vehicles_) vehicle_truth.push_back(v->state);
  for (const auto& p : vrus_) {
    geo::VehicleState s;
    s.id = p->spec.id;
    s.pos = p->pos;
    s.speed = p->spec.speed_mps;
    s.heading = p->heading;
    s.station_type = p->spec.profile == msg::VruProfile::Cyclist
                         ? geo::StationType::Cyclist
                         : geo::StationType::Pedestrian;
    s.timestamp = t;
    vehicle_truth.push_back(s);
  }

  for (auto& n : nodes_) {
    if (n->spec.has_sensor("radar")) {
      const auto detections =
          edge::radar_observe(vehicle_truth, n->radar_sector, edge::RadarParams{}, rng_sensors_);
      edge::TopicMessage msg;
      msg.topic = n->spec.id + "/radar/detections";
      msg.payload.assign(1, static_cast<std::uint8_t>(detections.size()));
      msg.published_at = t;
      n->bus.publish(msg);
      for (const auto& det : detections) {
        n->fusion_buffer.push_back(
            {edge::FusionSource::Radar, det.pos, t, det.speed, true, det.object_id});
      }
    }
    if (n->spec.has_sensor("camera") && n->camera_sched.offer_frame(t)) {
      std::vector<std::pair<geo::StationType, geo::GeoPosition>> objects;
      for (const auto& s : vehicle_truth) objects.push_back({s.station_type, s.pos});
      auto frame = edge::camera_observe(objects, n->camera_view, edge::CameraParams{},
                                        rng_sensors_, t);
      if (frame) {
        int total = 0;
        for (const auto& [cls, cnt] : frame->counts) total += cnt;
        edge::TopicMessage msg;
        msg.topic = n->spec.id + "/camera/counts";
        msg.payload.assign(1, static_cast<std::uint8_t>(total));
        msg.published_at = t;
        n->bus.publish(msg);
        for (const auto& det : frame->detections) {
          n->fusion_buffer.push_back(
              {edge::FusionSource::Camera, det.second, t, 0.0, false, ""});
        }
      }
    }
    if (n->spec.has_sensor("wifi_sniffer") && t % 10'000 == 0) {
      std::vector<geo::GeoPosition> devices;
      for (const auto& p : vrus_) {
        devices.push_back(p->pos);
        devices.push_back(p->pos);  // ~1.5 devices per person, rounded up here
      }
      const int count =
          edge::wifi_probe_count(devices, n->spec.pos, edge::WifiProbeParams{}, rng_sensors_);
      edge::TopicMessage msg;
      msg.topic = n->spec.id + "/wifi/count";
      msg.payload.assign(1, static_cast<std::uint8_t>(count));
      msg.published_at = t;
      n->bus.publish(msg);
    }
    n->store.compact(t);
  }
}

void Engine::fusion_step(TimestampMs t) {
  if (sc_.cadence.fusion_window_ms <= 0) return;
  if (t - fusion_window_start_ < sc_.cadence.fusion_window_ms) return;
  for (auto& n : nodes_) {
    if (n->fusion_buffer.empty()) continue;
    const auto stats =
        edge::fuse_counts(n->fusion_buffer, fusion_window_start_, t, edge::FusionParams{});
    std::string sources;
    for (const auto s : stats.source_mix) {
      if (!sources.empty()) sources += '+';
      sources += s == edge::FusionSource::Radar    ? "radar"
                 : s == edge::FusionSource::Camera ? "camera"
                                                   : "cam";
    }
    fusion_rows_.push_back({n->spec.id, fusion_window_start_, stats.object_count,
                            stats.mean_speed, sources});
    n->fusion_buffer.clear();
  }
  fusion_window_start_ = t;
}

void Engine::analytics_step(TimestampMs t) {
  // 1 Hz sampling for congestion/behavior windows
  if (t % 1000 == 0) {
    for (auto& v : vehicles_) {
      const auto proj = geo::project_to_route(v->route->route, v->state.pos);
      std::size_t seg = 0;
      geo::route_point_at(v->route->route, proj.arclength_m, nullptr, &seg);
      auto& acc = v->segment_acc[seg];
      acc.speed_sum += v->state.speed;
      acc.samples += 1;
      v->window_samples.push_back(v->state);
    }

    // collision checks between every vehicle and every VRU nearby
    for (auto& v : vehicles_) {
      if (v->track.size() < 2) continue;
      for (auto& p : vrus_) {
        if (p->track.size() < 2) continue;
        if (geo::haversine_distance(v->state.pos, p->pos) > 150.0) continue;
        const auto key = std::make_pair(v->spec.id, p->spec.id);
        auto cooldown = collision_cooldown_.find(key);
        if (cooldown != collision_cooldown_.end() && t - cooldown->second < 10'000) continue;

        analytics::KinematicTrack vt{v->spec.id, {v->track.begin(), v->track.end()}};
        analytics::KinematicTrack pt{p->spec.id, {p->track.begin(), p->track.end()}};
        auto pred = analytics::predict_collision(vt, pt, analytics::CollisionParams{}, t);
        if (pred.ok() && pred.value().has_value()) {
          const auto& w = pred.value()->warning;
          m_.collision_rows.push_back(
              {t, w.vehicle_id, w.vru_id, w.time_to_conflict_s, w.min_distance_m});
          collision_cooldown_[key] = t;
        }
      }
    }

    // emergency-vehicle DENM dissemination
    for (auto& v : vehicles_) {
      if (v->state.station_type != geo::StationType::EmergencyVehicle) continue;
      analytics::DisseminationTopology topo;
      for (const auto& n : nodes_) {
        if (n->is_rsu) topo.rsus.push_back({n->rsu_num, n->spec.pos});
      }
      for (const auto& other : vehicles_) {
        if (other->spec.id != v->spec.id) {
          topo.receivers.push_back({other->spec.id, other->state.pos});
        }
      }
      for (const auto& p : vrus_) topo.receivers.push_back({p->spec.id, p->pos});
      auto events = analytics::ev_disseminate(v->state, topo, analytics::HopDelayParams{}, t,
                                              rng_analytics_, ++denm_seq_);
      if (!events.ok()) continue;
      for (const auto& ev : events.value()) {
        for (const auto& d : ev.deliveries) {
          m_.dissemination_events.push_back(
              {t, ev.transmitter, d.receiver_id, d.latency_ms, ev.denm.sequence});
        }
      }
    }
  }

  // close the analytics window
  if (t - analytics_window_start_ >= sc_.cadence.analytics_window_ms && t > 0) {
    for (auto& v : vehicles_) {
      for (const auto& [seg, acc] : v->segment_acc) {
        if (acc.samples == 0) continue;
        const auto& route = v->route->route;
        double seg_len = 1.0;
        if (seg + 1 < route.waypoints.size()) {
          seg_len = std::max(
              geo::haversine_distance(route.waypoints[seg], route.waypoints[seg + 1]), 1.0);
        }
        const double window_ticks =
            static_cast<double>(sc_.cadence.analytics_window_ms) / 1000.0;
        CongestionRow row;
        row.segment_id = v->route->id + "-seg" + std::to_string(seg);
        row.window_start = analytics_window_start_;
        row.mean_speed = acc.speed_sum / static_cast<double>(acc.samples);
        row.count_per_meter = (static_cast<double>(acc.samples) / window_ticks) / seg_len;
        m_.congestion_rows.push_back(row);
      }
      v->segment_acc.clear();

      if (v->window_samples.size() >= 2) {
        const auto proj = geo::project_to_route(v->route->route, v->state.pos);
        std::size_t seg = 0;
        geo::route_point_at(v->route->route, proj.arclength_m, nullptr, &seg);
        geo::RoadSegment segment;
        segment.id = v->route->id + "-seg" + std::to_string(seg);
        segment.speed_limit = seg < v->route->route.segment_speed_limits.size()
                                  ? v->route->route.segment_speed_limits[seg]
                                  : v->route->default_speed_limit_mps;
        segment.friction = v->route->friction;
        auto cat = analytics::classify_driving_behavior(v->window_samples, segment);
        if (cat.ok()) {
          m_.behavior_rows.push_back({v->spec.id, analytics_window_start_, segment.id,
                                      cat.value().speed, cat.value().safety});
        }
        v->window_samples.clear();
      }
    }
    analytics_window_start_ = t;
  }
}

void Engine::probes_step(TimestampMs t) {
  if (sc_.cadence.probe_interval_ms <= 0 || t % sc_.cadence.probe_interval_ms != 0) return;
  for (auto& v : vehicles_) {
    if (!v->spec.obu) continue;
    const auto target = v->cm.current().target;
    if (target.kind == cm::Target::Kind::None) continue;

    // 64-byte UDP-ish probe; the leading byte is an IPv4 version/IHL marker
    msg::Bytes payload(64, 0);
    payload[0] = 0x45;
    payload[1] = static_cast<std::uint8_t>(v->num_id);
    const msg::Frame data = msg::frame(payload, msg::FrameKind::Data);
    ++m_.data_frames_sent;
    if (auto as_obuinfo = msg::decode(data.payload, msg::MsgKind::ObuInfo); as_obuinfo.ok()) {
      ++m_.data_frames_parsed_as_obuinfo;  // must never happen
    }

    const auto outcome = controller_.route_downlink(data, v->num_id);
    ThroughputSample sample;
    sample.t = t;
    sample.obu = v->spec.id;
    if (outcome.kind == sdn::RouteOutcome::Kind::ForwardedToRsu) {
      const NodeSpec* rsu = nullptr;
      double extra = 0.0;
      for (const auto& n : nodes_) {
        if (n->is_rsu && n->rsu_num == outcome.rsu_id) {
          rsu = &n->spec;
          extra = n->spec.bridge_attenuation_db;
          break;
        }
      }
      if (!rsu) continue;
      sample.rsu = outcome.rsu_id;
      const double rssi = radio::rssi_at(rsu->pos, v->state.pos, radio::RadioTech::ItsG5,
                                         sc_.channel, rng_probe_, extra);
      sample.delivered =
          rssi > sc_.channel.its_g5.rssi_floor_dbm &&
          rng_probe_.bernoulli(
              radio::delivery_probability(rssi, radio::RadioTech::ItsG5, sc_.channel));
      sample.mbps = sample.delivered
                        ? radio::link_throughput_mbps(rssi, radio::RadioTech::ItsG5, sc_.channel)
                        : 0.0;
    } else if (outcome.kind == sdn::RouteOutcome::Kind::ForwardedToCellularGw) {
      sample.rsu = 0;
      sample.delivered = true;
      sample.mbps = cellular_tier_mbps(target.kind);
    } else {
      continue;  // black hole counted by the controller
    }
    m_.throughput_trace.push_back(sample);
  }
}

void Engine::step(TimestampMs t) {
  const double dt = static_cast<double>(sc_.tick_ms) / 1000.0;
  move_vehicles(t, dt);
  move_vrus(t, dt);
  emit_cams(t);
  emit_vams(t);
  emit_rsu_beacons(t);
  decide_attachments(t);
  relay_obu_info(t);
  controller_.plan_all(t);
  pipeline_step(t);
  lora_step(t);
  sensors_step(t);
  fusion_step(t);
  analytics_step(t);
  probes_step(t);
}

void Engine::finalize() {
  for (const auto& v : vehicles_) {
    for (const auto& h : v->cm.handovers()) {
      m_.handover_events.push_back({h.at_ms, v->spec.id, h.from, h.to, h.reason});
    }
    if (v->has_pipeline) {
      m_.pipeline_evictions += v->queue->eviction_count();
      for (const auto& [source, seq] : v->generated) {
        const auto it = sink_.delivered().find({v->spec.id, source, seq});
        m_.pipeline_audit.push_back(
            {v->spec.id, source, seq, it == sink_.delivered().end() ? 0 : it->second});
      }
    }
  }
  std::sort(m_.handover_events.begin(), m_.handover_events.end(),
            [](const HandoverRecord& a, const HandoverRecord& b) {
              if (a.t != b.t) return a.t < b.t;
              return a.obu < b.obu;
            });
  for (const auto& swap : controller_.rule_swaps()) {
    std::string action;
    switch (swap.to.kind) {
      case sdn::FlowAction::Kind::ForwardToRsu:
        action = "rsu:" + std::to_string(swap.to.rsu_id);
        break;
      case sdn::FlowAction::Kind::ForwardToCellularGw: action = "cellular"; break;
      case sdn::FlowAction::Kind::Drop: action = "drop"; break;
    }
    m_.rule_swaps.push_back({swap.at_ms, swap.obu_id, action, swap.proactive});
  }
  m_.downlink_black_holes = controller_.black_hole_count();
  m_.cloud_payload_jsonl = sink_.take_payload_lines();
  m_.cloud_bridge_messages = cloud_bridge_.bridged_count();
}

MetricsBundle Engine::run() {
  setup();
  const auto total_ticks =
      static_cast<TimestampMs>(std::llround(sc_.duration_s * 1000.0)) / sc_.tick_ms;
  for (TimestampMs tick = 0; tick < total_ticks; ++tick) {
    step(tick * sc_.tick_ms);
  }
  finalize();
  return std::move(m_);
}

}  // namespace

MetricsBundle run(const Scenario& scenario) {
  Engine engine(scenario);
  return engine.run();
}

// ---------------------------------------------------------------- reports

namespace {

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) {
    f_.open(path, std::ios::binary | std::ios::trunc);
    ok_ = f_.is_open();
    if (ok_) f_ << header << '\n';
  }

  template <typename... Args>
  void row(const char* fmt, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), fmt, args...);
    f_ << buf << '\n';
  }

  bool ok() const { return ok_ && f_.good(); }

 private:
  std::ofstream f_;
  bool ok_ = false;
};

}  // namespace

Status emit_reports(const MetricsBundle& m, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "analytics", ec);
  if (ec) return make_error(Errc::IoError, "cannot create output directory: " + out_dir);

  {
    CsvWriter w(fs::path(out_dir) / "rssi_map.csv", "t_ms,obu,rsu,lat,lon,rssi_dbm");
    for (const auto& s : m.rssi_samples) {
      w.row("%lld,%s,P%u,%.6f,%.6f,%.2f", static_cast<long long>(s.t), s.obu.c_str(), s.rsu,
            s.pos.lat, s.pos.lon, s.rssi_dbm);
    }
    if (!w.ok()) return make_error(Errc::IoError, "rssi_map.csv write failed");
  }
  {
    CsvWriter w(fs::path(out_dir) / "pdr_map.csv", "lat_idx,lon_idx,sent,received,pdr");
    for (const auto& [key, cell] : m.pdr_cells) {
      const double pdr =
          cell.sent > 0 ? static_cast<double>(cell.received) / static_cast<double>(cell.sent)
                        : 0.0;
      w.row("%d,%d,%lld,%lld,%.4f", key.lat_idx, key.lon_idx,
            static_cast<long long>(cell.sent), static_cast<long long>(cell.received), pdr);
    }
    if (!w.ok()) return make_error(Errc::IoError, "pdr_map.csv write failed");
  }
  {
    CsvWriter w(fs::path(out_dir) / "throughput.csv", "t_ms,obu,rsu,mbps,delivered");
    for (const auto& s : m.throughput_trace) {
      w.row("%lld,%s,%u,%.4f,%d", static_cast<long long>(s.t), s.obu.c_str(), s.rsu, s.mbps,
            s.delivered ? 1 : 0);
    }
    if (!w.ok()) return make_error(Errc::IoError, "throughput.csv write failed");
  }
  {
    CsvWriter w(fs::path(out_dir) / "coverage.csv",
                "t_ms,obu,lat,lon,tech,rsu,fiveg_available,lte_available");
    for (const auto& s : m.coverage_trace) {
      w.row("%lld,%s,%.6f,%.6f,%s,%u,%d,%d", static_cast<long long>(s.t), s.obu.c_str(),
            s.pos.lat, s.pos.lon, cm::target_kind_name(s.tech), s.rsu,
            s.fiveg_available ? 1 : 0, s.lte_available ? 1 : 0);
    }
    if (!w.ok()) return make_error(Errc::IoError, "coverage.csv write failed");
  }
  {
    std::ofstream f(fs::path(out_dir) / "handovers.jsonl", std::ios::binary | std::ios::trunc);
    for (const auto& h : m.handover_events) {
      nlohmann::ordered_json j;
      j["t_ms"] = h.t;
      j["obu"] = h.obu;
      j["from"] = cm::target_kind_name(h.from.kind);
      j["from_rsu"] = h.from.rsu_id;
      j["to"] = cm::target_kind_name(h.to.kind);
      j["to_rsu"] = h.to.rsu_id;
      j["reason"] = cm::reason_name(h.reason);
      f << j.dump() << '\n';
    }
    if (!f.good()) return make_error(Errc::IoError, "handovers.jsonl write failed");
  }
  {
    std::ofstream f(fs::path(out_dir) / "rule_swaps.jsonl", std::ios::binary | std::ios::trunc);
    for (const auto& s : m.rule_swaps) {
      nlohmann::ordered_json j;
      j["t_ms"] = s.t;
      j["obu_num"] = s.obu_num;
      j["action"] = s.action;
      j["proactive"] = s.proactive;
      f << j.dump() << '\n';
    }
    if (!f.good()) return make_error(Errc::IoError, "rule_swaps.jsonl write failed");
  }
  {
    std::ofstream f(fs::path(out_dir) / "cloud_payloads.jsonl",
                    std::ios::binary | std::ios::trunc);
    for (const auto& line : m.cloud_payload_jsonl) {
      f << line << '\n';
    }
    if (!f.good()) return make_error(Errc::IoError, "cloud_payloads.jsonl write failed");
  }
  {
    CsvWriter w(fs::path(out_dir) / "pipeline_audit.csv", "vehicle,source,seq,delivered_count");
    for (const auto& r : m.pipeline_audit) {
      w.row("%s,%d,%llu,%d", r.vehicle.c_str(), r.source,
            static_cast<unsigned long long>(r.seq), r.delivered_count);
    }
    if (!w.ok()) return make_error(Errc::IoError, "pipeline_audit.csv write failed");
  }
  {
    CsvWriter w(fs::path(out_dir) / "dissemination.csv",
                "t_ms,transmitter,receiver,latency_ms,denm_sequence");
    for (const auto& d : m.dissemination_events) {
      w.row("%lld,%s,%s,%.3f,%u", static_cast<long long>(d.t),
            analytics::transmitter_name(d.transmitter), d.receiver.c_str(), d.latency_ms,
            d.denm_sequence);
    }
    if (!w.ok()) return make_error(Errc::IoError, "dissemination.csv write failed");
  }
  {
    CsvWriter w(fs::path(out_dir) / "lora.csv",
                "t_ms,vehicle,airtime_s,delivered,window_usage_s");
    for (const auto& r : m.lora_rows) {
      w.row("%lld,%s,%.6f,%d,%.6f", static_cast<long long>(r.t), r.vehicle.c_str(),
            r.airtime_s, r.delivered ? 1 : 0, r.window_usage_s);
    }
    if (!w.ok()) return make_error(Errc::IoError, "lora.csv write failed");
  }
  {
    CsvWriter w(fs::path(out_dir) / "analytics" / "congestion.csv",
                "segment_id,window_start_ms,mean_speed,count_per_meter,level");
    for (const auto& r : m.congestion_rows) {
      w.row("%s,%lld,%.4f,%.6f,%d", r.segment_id.c_str(),
            static_cast<long long>(r.window_start), r.mean_speed, r.count_per_meter, r.level);
    }
    if (!w.ok()) return make_error(Errc::IoError, "congestion.csv write failed");
  }
  {
    CsvWriter w(fs::path(out_dir) / "analytics" / "behavior.csv",
                "vehicle,window_start_ms,segment_id,speed_band,safety_band");
    for (const auto& r : m.behavior_rows) {
      const char* speed = r.speed_band == analytics::SpeedBand::UnderLimit  ? "UnderLimit"
                          : r.speed_band == analytics::SpeedBand::NearLimit ? "NearLimit"
                                                                            : "OverLimit";
      const char* safety =
          r.safety_band == analytics::SafetyBand::WithinSafety ? "WithinSafety"
                                                               : "OutsideSafety";
      w.row("%s,%lld,%s,%s,%s", r.vehicle.c_str(), static_cast<long long>(r.window_start),
            r.segment_id.c_str(), speed, safety);
    }
    if (!w.ok()) return make_error(Errc::IoError, "behavior.csv write failed");
  }
  {
    CsvWriter w(fs::path(out_dir) / "analytics" / "collisions.csv",
                "t_ms,vehicle,vru,time_to_conflict_s,min_distance_m");
    for (const auto& r : m.collision_rows) {
      w.row("%lld,%s,%s,%.3f,%.3f", static_cast<long long>(r.t), r.vehicle.c_str(),
            r.vru.c_str(), r.time_to_conflict_s, r.min_distance_m);
    }
    if (!w.ok()) return make_error(Errc::IoError, "collisions.csv write failed");
  }
  {
    nlohmann::ordered_json j;
    j["name"] = m.scenario_name;
    j["run_id"] = std::to_string(m.seed) + "-" + m.config_md5;
    j["seed"] = m.seed;
    j["config_md5"] = m.config_md5;
    j["cipher_suite"] = m.cipher_suite;
    j["version"] = kVersion;
    j["duration_s"] = m.duration_s;
    j["tick_ms"] = m.tick_ms;
    j["counters"]["cams_sent"] = m.cams_sent;
    j["counters"]["cams_received"] = m.cams_received;
    j["counters"]["obuinfo_frames_sent"] = m.obuinfo_frames_sent;
    j["counters"]["obuinfo_frames_via_data_rules"] = m.obuinfo_frames_via_data_rules;
    j["counters"]["data_frames_sent"] = m.data_frames_sent;
    j["counters"]["data_frames_parsed_as_obuinfo"] = m.data_frames_parsed_as_obuinfo;
    j["counters"]["downlink_black_holes"] = m.downlink_black_holes;
    j["counters"]["pipeline_evictions"] = m.pipeline_evictions;
    j["counters"]["duty_cycle_violations"] = m.duty_cycle_violations;
    j["counters"]["cloud_bridge_messages"] = m.cloud_bridge_messages;
    j["counters"]["cloud_payloads"] = m.cloud_payload_jsonl.size();
    std::ofstream f(fs::path(out_dir) / "run.json", std::ios::binary | std::ios::trunc);
    f << j.dump(2) << '\n';
    if (!f.good()) return make_error(Errc::IoError, "run.json write failed");
  }
  return {};
}

}  // namespace vanetsim::sim
