#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vanetsim/analytics.hpp"
#include "vanetsim/connection_manager.hpp"
#include "vanetsim/core.hpp"
#include "vanetsim/scenario.hpp"
#include "vanetsim/sdn.hpp"

namespace vanetsim::sim {

struct RssiSample {
  TimestampMs t = 0;
  std::string obu;
  std::uint32_t rsu = 0;
  geo::GeoPosition pos;  // transmitter position
  double rssi_dbm = 0.0;
};

struct PdrCellKey {
  std::int32_t lat_idx = 0;
  std::int32_t lon_idx = 0;
  auto operator<=>(const PdrCellKey&) const = default;
};

struct PdrCell {
  std::int64_t sent = 0;
  std::int64_t received = 0;
};

struct ThroughputSample {
  TimestampMs t = 0;
  std::string obu;
  std::uint32_t rsu = 0;
  double mbps = 0.0;
  bool delivered = false;
};

struct CoverageSample {
  TimestampMs t = 0;
  std::string obu;
  geo::GeoPosition pos;
  cm::Target::Kind tech = cm::Target::Kind::None;
  std::uint32_t rsu = 0;
  bool fiveg_available = false;
  bool lte_available = false;
};

struct HandoverRecord {
  TimestampMs t = 0;
  std::string obu;
  cm::Target from;
  cm::Target to;
  cm::Reason reason = cm::Reason::BestScore;
};

struct RuleSwapRecord {
  TimestampMs t = 0;
  std::uint32_t obu_num = 0;
  std::string action;
  bool proactive = false;
};

struct PipelineAuditRow {
  std::string vehicle;
  int source = 0;
  std::uint64_t seq = 0;
  int delivered_count = 0;  // occurrences in the cloud sink
};

struct DisseminationRecord {
  TimestampMs t = 0;
  analytics::Transmitter transmitter = analytics::Transmitter::Ev;
  std::string receiver;
  double latency_ms = 0.0;
  std::uint16_t denm_sequence = 0;
};

struct CongestionRow {
  std::string segment_id;
  TimestampMs window_start = 0;
  double mean_speed = 0.0;
  double count_per_meter = 0.0;
  int level = -1;  // filled after clustering
};

struct BehaviorRow {
  std::string vehicle;
  TimestampMs window_start = 0;
  std::string segment_id;
  analytics::SpeedBand speed_band = analytics::SpeedBand::UnderLimit;
  analytics::SafetyBand safety_band = analytics::SafetyBand::WithinSafety;
};

struct CollisionRow {
  TimestampMs t = 0;
  std::string vehicle;
  std::string vru;
  double time_to_conflict_s = 0.0;
  double min_distance_m = 0.0;
};

struct LoraRow {
  TimestampMs t = 0;
  std::string vehicle;
  double airtime_s = 0.0;
  bool delivered = false;
  double window_usage_s = 0.0;  // trailing-hour airtime after this transmission
};

/// Per-tick connection-manager candidates, recorded when debug_cm_trace is
/// set; feeds the brute-force selection oracle.
struct CmDebugSample {
  TimestampMs t = 0;
  std::string obu;
  cm::Target selected;
  std::vector<std::pair<std::uint32_t, double>> scores;  // (rsu, score), fresh only
};

struct MetricsBundle {
  std::string scenario_name;
  std::uint64_t seed = 0;
  std::string config_md5;
  std::string cipher_suite;
  double duration_s = 0.0;
  TimestampMs tick_ms = 0;

  std::vector<RssiSample> rssi_samples;
  std::map<PdrCellKey, PdrCell> pdr_cells;
  std::vector<ThroughputSample> throughput_trace;
  std::vector<CoverageSample> coverage_trace;
  std::vector<HandoverRecord> handover_events;
  std::vector<RuleSwapRecord> rule_swaps;
  std::vector<PipelineAuditRow> pipeline_audit;
  std::vector<DisseminationRecord> dissemination_events;
  std::vector<CongestionRow> congestion_rows;
  std::vector<BehaviorRow> behavior_rows;
  std::vector<CollisionRow> collision_rows;
  std::vector<LoraRow> lora_rows;
  std::vector<CmDebugSample> cm_debug;
  std::vector<std::string> cloud_payload_jsonl;  // NGSI-LD-shaped sink records
  std::uint64_t cloud_bridge_messages = 0;

  // counters for the control/data separation and pipeline invariants
  std::uint64_t obuinfo_frames_sent = 0;
  std::uint64_t obuinfo_frames_via_data_rules = 0;
  std::uint64_t data_frames_sent = 0;
  std::uint64_t data_frames_parsed_as_obuinfo = 0;
  std::uint64_t downlink_black_holes = 0;
  std::uint64_t pipeline_evictions = 0;
  std::uint64_t duty_cycle_violations = 0;
  std::uint64_t cams_sent = 0;
  std::uint64_t cams_received = 0;
};

/// Run the fixed-tick event loop; fully deterministic for a fixed seed.
MetricsBundle run(const Scenario& scenario);

/// Write the CSV/JSONL report set plus the run manifest into `out_dir`.
Status emit_reports(const MetricsBundle& metrics, const std::string& out_dir);

}  // namespace vanetsim::sim
