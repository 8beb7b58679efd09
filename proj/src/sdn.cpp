#include "vanetsim/sdn.hpp"

#include <algorithm>
#include <cmath>

namespace vanetsim::sdn {

void SdnController::register_rsu(std::uint32_t rsu_id, const geo::GeoPosition& pos,
                                 double extra_loss_db) {
  rsus_[rsu_id] = RsuEntry{pos, extra_loss_db};
}

double SdnController::expected_rssi(const RsuEntry& rsu, const geo::GeoPosition& at) const {
  const auto& tp = channel_.its_g5;
  const double d = std::max(geo::haversine_distance(rsu.pos, at), 1.0);
  const double rssi = tp.tx_power_dbm - tp.reference_loss_db -
                      10.0 * tp.path_loss_exponent * std::log10(d) - rsu.extra_loss_db;
  return std::clamp(rssi, tp.rssi_floor_dbm, tp.tx_power_dbm);
}

Result<ObuTrack> SdnController::ingest_obu_info(const msg::ObuInfo& report,
                                                std::uint32_t reporting_rsu,
                                                TimestampMs now) {
  if (report.inner.generation_time > now + params_.clock_skew_tolerance_ms) {
    return make_error(Errc::ClockSkew, "report stamped in the future");
  }
  ObuTrack& track = tracks_[report.inner.station_id];
  track.obu_id = report.inner.station_id;
  track.capacity = params_.history_capacity;

  TrackSample sample;
  sample.timestamp = report.inner.generation_time;
  sample.pos = report.inner.pos;
  sample.speed = report.inner.speed;
  sample.heading = report.inner.heading;
  sample.rssi_dbm = report.rssi_dbm;
  sample.reporting_rsu = reporting_rsu;

  // The same CAM relayed by several RSUs merges into one observation; the
  // strongest listener wins.
  if (!track.history.empty() && track.history.back().timestamp == sample.timestamp) {
    if (sample.rssi_dbm > track.history.back().rssi_dbm) {
      track.history.back() = sample;
    }
    return track;
  }
  if (!track.history.empty() && sample.timestamp < track.history.back().timestamp) {
    // Late relay of an older CAM: drop it to keep history time-ordered.
    return track;
  }
  track.history.push_back(sample);
  while (track.history.size() > track.capacity) track.history.pop_front();
  return track;
}

cm::AttachmentDecision SdnController::projected_decision(const ObuTrack& track,
                                                         TimestampMs now,
                                                         double horizon_s) const {
  const TrackSample& latest = track.history.back();
  geo::VehicleState projected;
  projected.id = std::to_string(track.obu_id);
  projected.speed = latest.speed;
  projected.heading = latest.heading;
  projected.timestamp = now;
  // Project from the sample time so report latency is part of the horizon.
  const double ahead_s =
      static_cast<double>(now - latest.timestamp) / 1000.0 + horizon_s;
  projected.pos = latest.speed > 0.0
                      ? geo::offset_position(latest.pos, latest.heading,
                                             latest.speed * ahead_s)
                      : latest.pos;

  std::vector<cm::PoAInfo> candidates;
  candidates.reserve(rsus_.size());
  for (const auto& [id, rsu] : rsus_) {
    cm::PoAInfo poa;
    poa.rsu_id = id;
    poa.pos = rsu.pos;
    poa.tech = radio::RadioTech::ItsG5;
    poa.last_rssi_dbm = expected_rssi(rsu, projected.pos);
    poa.last_seen_ms = now;
    candidates.push_back(poa);
  }

  cm::AttachmentDecision current{cm::Target::none(), cm::Reason::NoCoverage};
  if (track.current_attachment.kind == cm::Target::Kind::Rsu) {
    current = {track.current_attachment, cm::Reason::BestScore};
  }
  return cm::select_attachment(projected, candidates, current, params_.cm, now,
                               cm::CellularAvailability{}, track.attached_since);
}

Result<std::optional<HandoverPlan>> SdnController::predict_handover(const ObuTrack& track,
                                                                    TimestampMs now,
                                                                    double horizon_s) const {
  if (track.history.size() < 2) {
    return make_error(Errc::InsufficientHistory, "need >= 2 samples to project");
  }
  const cm::AttachmentDecision projected = projected_decision(track, now, horizon_s);
  if (projected.target.kind != cm::Target::Kind::Rsu) {
    return std::optional<HandoverPlan>{};
  }
  if (track.current_attachment.kind != cm::Target::Kind::Rsu) {
    return std::optional<HandoverPlan>{};  // initial attach is reactive
  }
  if (projected.target.rsu_id == track.current_attachment.rsu_id) {
    return std::optional<HandoverPlan>{};
  }
  HandoverPlan plan;
  plan.obu_id = track.obu_id;
  plan.from_rsu = track.current_attachment.rsu_id;
  plan.to_rsu = projected.target.rsu_id;
  plan.predicted_at = now;
  plan.execute_by = now + static_cast<TimestampMs>(std::llround(horizon_s * 1000.0));
  return std::optional<HandoverPlan>{plan};
}

void SdnController::set_data_rule(std::uint32_t obu_id, const FlowAction& action,
                                  TimestampMs now, bool proactive) {
  auto it = data_rules_.find(obu_id);
  const FlowAction from = it != data_rules_.end() ? it->second.action : FlowAction::drop();
  if (from == action) return;

  FlowRule rule;
  rule.obu_id = obu_id;
  rule.traffic_class = TrafficClass::Data;
  rule.action = action;
  rule.installed_at = now;
  data_rules_[obu_id] = rule;  // replaces the previous rule in the same step
  rule_swaps_.push_back({now, obu_id, from, action, proactive});
}

Status SdnController::apply_plan(const HandoverPlan& plan, TimestampMs now) {
  if (!rsus_.count(plan.to_rsu)) {
    return make_error(Errc::UnknownRsu, "plan targets unregistered RSU");
  }
  set_data_rule(plan.obu_id, FlowAction::to_rsu(plan.to_rsu), now, true);
  in_flight_[plan.obu_id] = InFlight{plan.to_rsu, now};
  last_apply_[plan.obu_id] = now;
  return {};
}

void SdnController::note_attachment(std::uint32_t obu_id, const cm::Target& target,
                                    TimestampMs now) {
  auto& track = tracks_[obu_id];
  track.obu_id = obu_id;
  track.capacity = params_.history_capacity;
  if (track.current_attachment != target) {
    track.current_attachment = target;
    track.attached_since = now;
  }

  FlowAction desired = FlowAction::drop();
  switch (target.kind) {
    case cm::Target::Kind::Rsu: desired = FlowAction::to_rsu(target.rsu_id); break;
    case cm::Target::Kind::CellularFiveG:
    case cm::Target::Kind::CellularLte: desired = FlowAction::to_cellular(); break;
    case cm::Target::Kind::None: return;  // keep the last rule until coverage returns
  }

  auto rule_it = data_rules_.find(obu_id);
  const bool rule_matches = rule_it != data_rules_.end() && rule_it->second.action == desired;
  if (rule_matches) {
    in_flight_.erase(obu_id);
    return;
  }
  // A proactively installed rule gets a grace window before a miss reverts it.
  auto fl = in_flight_.find(obu_id);
  if (fl != in_flight_.end() && now - fl->second.installed_at <= params_.apply_grace_ms) {
    return;
  }
  in_flight_.erase(obu_id);
  set_data_rule(obu_id, desired, now, false);
}

RouteOutcome SdnController::route_downlink(const msg::Frame& f, std::uint32_t obu_id) {
  if (f.ethertype == msg::kEthertypeControl) {
    ++control_frames_;
    return {RouteOutcome::Kind::Control, 0};
  }
  auto it = data_rules_.find(obu_id);
  if (it == data_rules_.end() || it->second.action.kind == FlowAction::Kind::Drop) {
    ++black_holes_;
    return {RouteOutcome::Kind::Dropped, 0};
  }
  if (it->second.action.kind == FlowAction::Kind::ForwardToCellularGw) {
    return {RouteOutcome::Kind::ForwardedToCellularGw, 0};
  }
  return {RouteOutcome::Kind::ForwardedToRsu, it->second.action.rsu_id};
}

std::vector<HandoverPlan> SdnController::plan_all(TimestampMs now) {
  std::vector<HandoverPlan> applied;
  for (auto& [obu_id, track] : tracks_) {
    // Emit a plan when the detection horizon first sees a different winner.
    auto horizon = predict_handover(track, now, params_.prediction_horizon_s);
    if (horizon.ok() && horizon.value().has_value()) {
      const HandoverPlan& plan = *horizon.value();
      auto fl = in_flight_.find(obu_id);
      const bool already_installed =
          fl != in_flight_.end() && fl->second.to_rsu == plan.to_rsu;
      auto pending = pending_.find(obu_id);
      if (!already_installed &&
          (pending == pending_.end() || pending->second.to_rsu != plan.to_rsu)) {
        pending_[obu_id] = plan;
        plans_.push_back(plan);
      }
    }

    auto pending = pending_.find(obu_id);
    if (pending == pending_.end()) continue;
    const HandoverPlan& plan = pending->second;
    if (track.current_attachment.kind == cm::Target::Kind::Rsu &&
        track.current_attachment.rsu_id == plan.to_rsu) {
      pending_.erase(pending);  // the OBU got there on its own
      continue;
    }

    auto last = last_apply_.find(obu_id);
    if (last != last_apply_.end() && now - last->second < params_.reapply_backoff_ms) {
      continue;
    }

    // Install when the switch is imminent (one tick ahead) or overdue.
    bool imminent = now >= plan.execute_by;
    if (!imminent) {
      auto next_tick = predict_handover(track, now, params_.apply_lead_s);
      imminent = next_tick.ok() && next_tick.value().has_value() &&
                 next_tick.value()->to_rsu == plan.to_rsu;
    }
    if (imminent && apply_plan(plan, now).ok()) {
      applied.push_back(plan);
      pending_.erase(obu_id);
    }
  }
  return applied;
}

}  // namespace vanetsim::sdn
