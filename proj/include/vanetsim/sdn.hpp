#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "vanetsim/connection_manager.hpp"
#include "vanetsim/core.hpp"
#include "vanetsim/messages.hpp"

namespace vanetsim::sdn {

struct TrackSample {
  TimestampMs timestamp = 0;  // CAM generation time
  geo::GeoPosition pos;
  double speed = 0.0;
  double heading = 0.0;
  double rssi_dbm = -127.0;
  std::uint32_t reporting_rsu = 0;
};

struct ObuTrack {
  std::uint32_t obu_id = 0;
  std::deque<TrackSample> history;  // time-ordered, bounded
  std::size_t capacity = 20;
  cm::Target current_attachment = cm::Target::none();
  TimestampMs attached_since = 0;
};

enum class TrafficClass : std::uint8_t { Control, Data };

struct FlowAction {
  enum class Kind : std::uint8_t { ForwardToRsu, ForwardToCellularGw, Drop };
  Kind kind = Kind::Drop;
  std::uint32_t rsu_id = 0;

  static FlowAction to_rsu(std::uint32_t id) { return {Kind::ForwardToRsu, id}; }
  static FlowAction to_cellular() { return {Kind::ForwardToCellularGw, 0}; }
  static FlowAction drop() { return {Kind::Drop, 0}; }

  bool operator==(const FlowAction&) const = default;
};

struct FlowRule {
  std::uint32_t obu_id = 0;
  TrafficClass traffic_class = TrafficClass::Data;
  FlowAction action;
  TimestampMs installed_at = 0;
  std::uint8_t priority = 100;
};

struct HandoverPlan {
  std::uint32_t obu_id = 0;
  std::uint32_t from_rsu = 0;
  std::uint32_t to_rsu = 0;
  TimestampMs predicted_at = 0;
  TimestampMs execute_by = 0;
};

struct RouteOutcome {
  enum class Kind : std::uint8_t { ForwardedToRsu, ForwardedToCellularGw, Dropped, Control };
  Kind kind = Kind::Dropped;
  std::uint32_t rsu_id = 0;
};

struct SdnParams {
  cm::CmParams cm;                    // "same conditions" as the connection manager
  double prediction_horizon_s = 3.0;  // plan detection horizon
  double apply_lead_s = 0.1;          // rule installs one tick before the switch
  TimestampMs clock_skew_tolerance_ms = 1000;
  TimestampMs apply_grace_ms = 1100;  // in-flight window before a miss reverts
  TimestampMs reapply_backoff_ms = 1000;
  std::size_t history_capacity = 20;
};

struct RuleSwapEvent {
  TimestampMs at_ms = 0;
  std::uint32_t obu_id = 0;
  FlowAction from;
  FlowAction to;
  bool proactive = false;
};

/// Centralized controller. It sees OBUs only through the OBUInfo reports the
/// RSUs relay; its channel knowledge is the deterministic (sigma = 0)
/// path-loss expectation used to score RSUs at projected positions.
///
/// Handover choreography: a HandoverPlan is emitted when the prediction
/// horizon first sees a different winner; the Data rule is installed when the
/// one-tick-ahead projection says the switch is imminent, so the swap lands
/// just before the OBU's own move. Misses revert after a grace window.
class SdnController {
 public:
  SdnController(SdnParams params, radio::ChannelParams channel)
      : params_(std::move(params)), channel_(std::move(channel)) {
    channel_.its_g5.shadowing_sigma_db = 0.0;
  }

  void register_rsu(std::uint32_t rsu_id, const geo::GeoPosition& pos,
                    double extra_loss_db = 0.0);
  bool knows_rsu(std::uint32_t rsu_id) const { return rsus_.count(rsu_id) > 0; }

  /// Ingest one OBUInfo report. Duplicate (obu, generation_time) reports
  /// merge keeping the max-RSSI observation.
  Result<ObuTrack> ingest_obu_info(const msg::ObuInfo& report, std::uint32_t reporting_rsu,
                                   TimestampMs now);

  /// Dead-reckon the track forward by `horizon_s` and re-run the attachment
  /// rule at the projected state. A plan comes back iff the projected winner
  /// is an RSU different from the current attachment.
  Result<std::optional<HandoverPlan>> predict_handover(const ObuTrack& track,
                                                       TimestampMs now,
                                                       double horizon_s) const;
  Result<std::optional<HandoverPlan>> predict_handover(const ObuTrack& track,
                                                       TimestampMs now) const {
    return predict_handover(track, now, params_.prediction_horizon_s);
  }

  /// Atomically repoint the OBU's Data rule to plan.to_rsu.
  Status apply_plan(const HandoverPlan& plan, TimestampMs now);

  /// Attachment as observed on the access side (RSUs are the SDN switches).
  void note_attachment(std::uint32_t obu_id, const cm::Target& target, TimestampMs now);

  /// Route one downlink frame for `obu_id`. Control frames are consumed by
  /// the controller and never forwarded onto the data path; data frames with
  /// no rule drop and count as black holes.
  RouteOutcome route_downlink(const msg::Frame& f, std::uint32_t obu_id);

  /// Per-tick pass: emit plans at the horizon, apply the imminent ones.
  std::vector<HandoverPlan> plan_all(TimestampMs now);

  const std::map<std::uint32_t, FlowRule>& data_rules() const { return data_rules_; }
  const std::map<std::uint32_t, ObuTrack>& tracks() const { return tracks_; }
  std::uint64_t black_hole_count() const { return black_holes_; }
  std::uint64_t control_frames_seen() const { return control_frames_; }
  const std::vector<RuleSwapEvent>& rule_swaps() const { return rule_swaps_; }
  const std::vector<HandoverPlan>& plans_emitted() const { return plans_; }
  const SdnParams& params() const { return params_; }

 private:
  struct RsuEntry {
    geo::GeoPosition pos;
    double extra_loss_db = 0.0;
  };
  struct InFlight {
    std::uint32_t to_rsu = 0;
    TimestampMs installed_at = 0;
  };

  double expected_rssi(const RsuEntry& rsu, const geo::GeoPosition& at) const;
  cm::AttachmentDecision projected_decision(const ObuTrack& track, TimestampMs now,
                                            double horizon_s) const;
  void set_data_rule(std::uint32_t obu_id, const FlowAction& action, TimestampMs now,
                     bool proactive);

  SdnParams params_;
  radio::ChannelParams channel_;
  std::map<std::uint32_t, RsuEntry> rsus_;
  std::map<std::uint32_t, ObuTrack> tracks_;
  std::map<std::uint32_t, FlowRule> data_rules_;  // exactly one Data rule per OBU
  std::map<std::uint32_t, HandoverPlan> pending_;
  std::map<std::uint32_t, InFlight> in_flight_;
  std::map<std::uint32_t, TimestampMs> last_apply_;
  std::vector<RuleSwapEvent> rule_swaps_;
  std::vector<HandoverPlan> plans_;
  std::uint64_t black_holes_ = 0;
  std::uint64_t control_frames_ = 0;
};

}  // namespace vanetsim::sdn
