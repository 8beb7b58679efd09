#include "vanetsim/connection_manager.hpp"

#include <algorithm>

namespace vanetsim::cm {

const char* reason_name(Reason r) {
  switch (r) {
    case Reason::BestScore: return "BestScore";
    case Reason::Hysteresis: return "Hysteresis";
    case Reason::Fallback: return "Fallback";
    case Reason::NoCoverage: return "NoCoverage";
  }
  return "?";
}

const char* target_kind_name(Target::Kind k) {
  switch (k) {
    case Target::Kind::Rsu: return "Rsu";
    case Target::Kind::CellularFiveG: return "FiveG";
    case Target::Kind::CellularLte: return "Lte";
    case Target::Kind::None: return "None";
  }
  return "?";
}

Result<double> score_poa(const geo::VehicleState& v, const PoAInfo& poa,
                         const CmParams& params, TimestampMs now) {
  if (now - poa.last_seen_ms >= params.stale_after_ms) {
    return make_error(Errc::StalePoA, "beacon older than stale_after");
  }
  double alignment = 0.0;
  if (auto a = geo::heading_alignment(v, poa.pos); a.ok()) {
    alignment = a.value();
  }
  return poa.last_rssi_dbm + params.alignment_weight_db * alignment;
}

AttachmentDecision select_attachment(const geo::VehicleState& v,
                                     const std::vector<PoAInfo>& candidates,
                                     const AttachmentDecision& current,
                                     const CmParams& params, TimestampMs now,
                                     const CellularAvailability& cellular,
                                     TimestampMs attached_since) {
  struct Scored {
    std::uint32_t rsu_id;
    double score;
  };
  std::vector<Scored> eligible;
  std::optional<Scored> current_scored;
  for (const auto& poa : candidates) {
    if (poa.tech != radio::RadioTech::ItsG5) continue;
    auto s = score_poa(v, poa, params, now);
    if (!s.ok()) continue;  // stale
    if (s.value() < params.attach_threshold_dbm) continue;
    eligible.push_back({poa.rsu_id, s.value()});
    if (current.target.kind == Target::Kind::Rsu && poa.rsu_id == current.target.rsu_id) {
      current_scored = eligible.back();
    }
  }

  if (!eligible.empty()) {
    const auto best = *std::min_element(
        eligible.begin(), eligible.end(), [](const Scored& a, const Scored& b) {
          if (a.score != b.score) return a.score > b.score;
          return a.rsu_id < b.rsu_id;  // tie-break: lowest id wins
        });

    if (current_scored) {
      if (best.rsu_id == current_scored->rsu_id) {
        return {Target::rsu(best.rsu_id), Reason::BestScore};
      }
      const bool beats_margin =
          best.score >= current_scored->score + params.handover_margin_db;
      const bool dwell_elapsed = now - attached_since >= params.min_dwell_ms;
      if (beats_margin && dwell_elapsed) {
        return {Target::rsu(best.rsu_id), Reason::BestScore};
      }
      return {Target::rsu(current_scored->rsu_id), Reason::Hysteresis};
    }
    return {Target::rsu(best.rsu_id), Reason::BestScore};
  }

  if (cellular.five_g) return {Target::five_g(), Reason::Fallback};
  if (cellular.lte) return {Target::lte(), Reason::Fallback};
  return {Target::none(), Reason::NoCoverage};
}

void ConnectionManager::observe_beacon(std::uint32_t rsu_id, const geo::GeoPosition& pos,
                                       radio::RadioTech tech, double rssi_dbm,
                                       TimestampMs now) {
  PoAInfo& poa = table_[rsu_id];
  poa.rsu_id = rsu_id;
  poa.pos = pos;
  poa.tech = tech;
  poa.last_rssi_dbm = rssi_dbm;
  poa.last_seen_ms = now;
}

std::vector<PoAInfo> ConnectionManager::fresh_candidates(TimestampMs now) const {
  std::vector<PoAInfo> out;
  for (const auto& [id, poa] : table_) {
    if (now - poa.last_seen_ms < params_.stale_after_ms) out.push_back(poa);
  }
  return out;
}

const AttachmentDecision& ConnectionManager::decide(const geo::VehicleState& v,
                                                    TimestampMs now,
                                                    const CellularAvailability& cellular) {
  std::vector<PoAInfo> candidates;
  candidates.reserve(table_.size());
  for (const auto& [id, poa] : table_) candidates.push_back(poa);

  const AttachmentDecision next =
      select_attachment(v, candidates, current_, params_, now, cellular, attached_since_);
  if (next.target != current_.target) {
    handovers_.push_back({now, current_.target, next.target, next.reason});
    attached_since_ = now;
  }
  current_ = next;
  return current_;
}

}  // namespace vanetsim::cm
