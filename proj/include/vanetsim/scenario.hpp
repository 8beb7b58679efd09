#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vanetsim/connection_manager.hpp"
#include "vanetsim/core.hpp"
#include "vanetsim/geo.hpp"
#include "vanetsim/messages.hpp"
#include "vanetsim/radio.hpp"
#include "vanetsim/sdn.hpp"

namespace vanetsim::sim {

struct NodeSpec {
  std::string id;           // e.g. "P9"
  std::uint32_t rsu_num = 0;
  geo::GeoPosition pos;
  std::string box_type = "SmartLampPost";  // or "WallBox"
  std::vector<std::string> techs;          // ItsG5 / Wifi / FiveG / Lte / Lora
  std::vector<std::string> sensors;        // radar / camera / wifi_sniffer
  double bridge_attenuation_db = 0.0;

  bool has_tech(const std::string& t) const;
  bool has_sensor(const std::string& s) const;
};

struct RouteSpec {
  std::string id;
  geo::Route route;
  double default_speed_limit_mps = 13.9;  // 50 km/h urban default
  double friction = 0.8;
};

struct VehicleSpec {
  std::string id;
  std::string route_id;
  geo::StationType type = geo::StationType::Bus;
  bool obu = true;
  bool dcu = false;
  double speed_mps = 10.0;
  double start_offset_m = 0.0;
};

struct VruSpec {
  std::string id;
  geo::GeoPosition pos;
  msg::VruProfile profile = msg::VruProfile::Pedestrian;
  double speed_mps = 1.2;
  double heading_deg = 0.0;
  double patrol_length_m = 60.0;  // walks back and forth along the heading
};

struct CellularCoverage {
  bool fiveg_enabled = true;
  bool fiveg_everywhere = true;
  std::vector<std::vector<geo::GeoPosition>> fiveg_polygons;
  bool lte_enabled = true;
  bool lte_everywhere = true;
  std::vector<std::vector<geo::GeoPosition>> lte_polygons;

  bool covers_fiveg(const geo::GeoPosition& p) const;
  bool covers_lte(const geo::GeoPosition& p) const;
};

struct CadenceConfig {
  TimestampMs obu_cam_interval_ms = 1000;
  TimestampMs rsu_beacon_interval_ms = 1000;
  TimestampMs vru_vam_interval_ms = 1000;
  TimestampMs probe_interval_ms = 1000;  // 1 Hz throughput probes
  TimestampMs flush_interval_ms = 1000;
  TimestampMs sensor_interval_ms = 1000;
  TimestampMs fusion_window_ms = 10'000;
  TimestampMs analytics_window_ms = 60'000;
};

struct LoraScenarioConfig {
  radio::LoraConfig phy{};
  double redundancy_period_s = 140.0;
};

struct Scenario {
  std::string name;
  std::string source_path;
  std::string config_md5;
  std::uint64_t seed = 0;
  double duration_s = 600.0;
  TimestampMs tick_ms = 100;

  radio::ChannelParams channel;
  cm::CmParams cm_params;
  sdn::SdnParams sdn_params;
  CellularCoverage cellular;
  CadenceConfig cadence;
  LoraScenarioConfig lora;
  bool null_cipher = true;   // simulation default; flagged in the run manifest
  bool debug_cm_trace = false;  // per-tick candidate scores in the metrics

  std::vector<NodeSpec> nodes;
  std::vector<RouteSpec> routes;
  std::vector<VehicleSpec> vehicles;
  std::vector<VruSpec> vrus;

  const RouteSpec* find_route(const std::string& id) const;
  const NodeSpec* find_node_by_num(std::uint32_t rsu_num) const;
};

/// Parse and validate. ValidationError carries every problem found, one per
/// line in the error detail, not just the first.
Result<Scenario> load_scenario(const std::string& path);

/// Parse from an in-memory document (used by tests).
Result<Scenario> parse_scenario(const std::string& text, const std::string& source_name);

}  // namespace vanetsim::sim
