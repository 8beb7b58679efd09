#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "vanetsim/core.hpp"
#include "vanetsim/geo.hpp"
#include "vanetsim/radio.hpp"

namespace vanetsim::cm {

struct PoAInfo {
  std::uint32_t rsu_id = 0;
  geo::GeoPosition pos;
  radio::RadioTech tech = radio::RadioTech::ItsG5;
  double last_rssi_dbm = -127.0;
  TimestampMs last_seen_ms = 0;
};

struct CmParams {
  double attach_threshold_dbm = -90.0;
  double handover_margin_db = 6.0;
  TimestampMs stale_after_ms = 3000;
  TimestampMs min_dwell_ms = 5000;
  double alignment_weight_db = 8.0;
};

struct Target {
  enum class Kind : std::uint8_t { Rsu, CellularFiveG, CellularLte, None };
  Kind kind = Kind::None;
  std::uint32_t rsu_id = 0;

  static Target rsu(std::uint32_t id) { return {Kind::Rsu, id}; }
  static Target five_g() { return {Kind::CellularFiveG, 0}; }
  static Target lte() { return {Kind::CellularLte, 0}; }
  static Target none() { return {Kind::None, 0}; }

  bool operator==(const Target&) const = default;
};

enum class Reason : std::uint8_t { BestScore, Hysteresis, Fallback, NoCoverage };

const char* reason_name(Reason r);
const char* target_kind_name(Target::Kind k);

struct AttachmentDecision {
  Target target;
  Reason reason = Reason::NoCoverage;

  bool operator==(const AttachmentDecision&) const = default;
};

struct CellularAvailability {
  bool five_g = false;
  bool lte = false;
};

/// RSSI plus a heading-alignment bonus in dB: an RSU dead ahead gains
/// alignment_weight dB, one dead behind loses it. Coincident positions
/// contribute zero alignment. StalePoA when the beacon is too old.
Result<double> score_poa(const geo::VehicleState& v, const PoAInfo& poa,
                         const CmParams& params, TimestampMs now);

/// The pure selection rule. `attached_since` is when the current RSU
/// attachment began (for the dwell check); ignored when current is not an RSU.
AttachmentDecision select_attachment(const geo::VehicleState& v,
                                     const std::vector<PoAInfo>& candidates,
                                     const AttachmentDecision& current,
                                     const CmParams& params, TimestampMs now,
                                     const CellularAvailability& cellular,
                                     TimestampMs attached_since = 0);

struct HandoverEvent {
  TimestampMs at_ms = 0;
  Target from;
  Target to;
  Reason reason = Reason::BestScore;
};

/// Per-OBU stateful manager: feeds on RSU beacons, applies the selection
/// rule each tick, and tracks dwell time and handover history.
class ConnectionManager {
 public:
  explicit ConnectionManager(CmParams params = {}) : params_(params) {}

  void observe_beacon(std::uint32_t rsu_id, const geo::GeoPosition& pos,
                      radio::RadioTech tech, double rssi_dbm, TimestampMs now);

  const AttachmentDecision& decide(const geo::VehicleState& v, TimestampMs now,
                                   const CellularAvailability& cellular);

  const AttachmentDecision& current() const { return current_; }
  const std::vector<HandoverEvent>& handovers() const { return handovers_; }
  std::vector<PoAInfo> fresh_candidates(TimestampMs now) const;
  const CmParams& params() const { return params_; }

 private:
  CmParams params_;
  std::map<std::uint32_t, PoAInfo> table_;
  AttachmentDecision current_{Target::none(), Reason::NoCoverage};
  TimestampMs attached_since_ = 0;
  std::vector<HandoverEvent> handovers_;
};

}  // namespace vanetsim::cm
