#include "vanetsim/radio.hpp"

#include <algorithm>
#include <cmath>

namespace vanetsim::radio {

const char* radio_tech_name(RadioTech t) {
  switch (t) {
    case RadioTech::ItsG5: return "ItsG5";
    case RadioTech::Wifi: return "Wifi";
    case RadioTech::Lte: return "Lte";
    case RadioTech::FiveG: return "FiveG";
    case RadioTech::Lora: return "Lora";
  }
  return "?";
}

const TechParams& tech_params(const ChannelParams& p, RadioTech t) {
  switch (t) {
    case RadioTech::ItsG5: return p.its_g5;
    case RadioTech::Wifi: return p.wifi;
    case RadioTech::Lte: return p.lte;
    case RadioTech::FiveG: return p.five_g;
    case RadioTech::Lora: return p.lora;
  }
  return p.its_g5;
}

TechParams& tech_params(ChannelParams& p, RadioTech t) {
  return const_cast<TechParams&>(tech_params(static_cast<const ChannelParams&>(p), t));
}

double rssi_at(const geo::GeoPosition& tx, const geo::GeoPosition& rx, RadioTech tech,
               const ChannelParams& params, Rng& rng, double extra_loss_db) {
  const TechParams& tp = tech_params(params, tech);
  const double d = std::max(geo::haversine_distance(tx, rx), 1.0);
  double rssi = tp.tx_power_dbm - tp.reference_loss_db -
                10.0 * tp.path_loss_exponent * std::log10(d) - extra_loss_db;
  if (tp.shadowing_sigma_db > 0.0) {
    rssi += rng.normal(0.0, tp.shadowing_sigma_db);
  }
  return std::clamp(rssi, tp.rssi_floor_dbm, tp.tx_power_dbm);
}

double delivery_probability(double rssi_dbm, RadioTech tech, const ChannelParams& params) {
  const TechParams& tp = tech_params(params, tech);
  return 1.0 / (1.0 + std::exp(-(rssi_dbm - tp.pdr_p50_dbm) / tp.pdr_k_db));
}

double link_throughput_mbps(double rssi_dbm, RadioTech tech, const ChannelParams& params) {
  const TechParams& tp = tech_params(params, tech);
  if (rssi_dbm <= tp.rssi_floor_dbm) return 0.0;
  return tp.max_throughput_mbps * delivery_probability(rssi_dbm, tech, params);
}

Result<double> lora_airtime_s(std::size_t payload_len, const LoraConfig& cfg) {
  if (payload_len < 1 || payload_len > 255) {
    return make_error(Errc::PayloadTooLarge, "payload must be 1..255 bytes");
  }
  const int sf = cfg.spreading_factor;
  const double t_sym = std::pow(2.0, sf) / cfg.bandwidth_hz;
  const int de = (sf >= 11 && cfg.bandwidth_hz == 125000.0) ? 1 : 0;
  const int ih = cfg.explicit_header ? 0 : 1;
  const int crc_bits = cfg.payload_crc ? 16 : 0;
  const double num = 8.0 * static_cast<double>(payload_len) - 4.0 * sf + 28.0 + crc_bits -
                     20.0 * ih;
  const double den = 4.0 * (sf - 2 * de);
  const double blocks = std::max(std::ceil(num / den), 0.0);
  const double n_payload = 8.0 + blocks * (static_cast<int>(cfg.coding_rate) + 4);
  return (cfg.preamble_symbols + 4.25 + n_payload) * t_sym;
}

DutyCycleLedger::Gate DutyCycleLedger::gate(double airtime_s, TimestampMs now) const {
  const double airtime_ms = airtime_s * 1000.0;
  if (window_usage_ms(now) + airtime_ms <= budget_ms()) {
    return {true, now};
  }
  // Slide the window start forward past recorded transmissions until enough
  // budget ages out; candidate starts are just after each entry exits.
  for (const auto& e : entries_) {
    const TimestampMs candidate =
        e.start_ms + static_cast<TimestampMs>(window_ms_) + 1;
    if (candidate <= now) continue;
    double usage = 0.0;
    for (const auto& f : entries_) {
      if (static_cast<double>(f.start_ms) > static_cast<double>(candidate) - window_ms_) {
        usage += f.airtime_ms;
      }
    }
    if (usage + airtime_ms <= budget_ms()) {
      return {false, candidate};
    }
  }
  // Unreachable with a positive budget, but keep the gate total.
  return {false, now + static_cast<TimestampMs>(window_ms_)};
}

void DutyCycleLedger::record(TimestampMs start_ms, double airtime_s) {
  entries_.push_back({start_ms, airtime_s * 1000.0});
}

double DutyCycleLedger::window_usage_ms(TimestampMs now) const {
  double usage = 0.0;
  for (const auto& e : entries_) {
    if (static_cast<double>(e.start_ms) > static_cast<double>(now) - window_ms_) {
      usage += e.airtime_ms;
    }
  }
  return usage;
}

}  // namespace vanetsim::radio
