#pragma once

#include <cstdint>
#include <vector>

#include "vanetsim/core.hpp"
#include "vanetsim/geo.hpp"
#include "vanetsim/rng.hpp"

namespace vanetsim::radio {

enum class RadioTech : std::uint8_t { ItsG5 = 0, Wifi = 1, Lte = 2, FiveG = 3, Lora = 4 };

const char* radio_tech_name(RadioTech t);

/// Log-distance path-loss parameters plus the PDR sigmoid, one set per
/// technology. Defaults reproduce a 300-500 m ITS-G5 urban coverage radius;
/// the calibration rationale lives in docs/channel-defaults.md.
struct TechParams {
  double tx_power_dbm = 23.0;
  double path_loss_exponent = 2.7;   // [1.6, 6]
  double reference_loss_db = 47.0;   // at 1 m
  double shadowing_sigma_db = 3.0;
  double rssi_floor_dbm = -110.0;
  double max_range_hint_m = 600.0;
  double max_throughput_mbps = 11.0;
  double pdr_p50_dbm = -92.0;
  double pdr_k_db = 3.0;
};

struct ChannelParams {
  TechParams its_g5{};
  TechParams wifi{.tx_power_dbm = 20.0, .path_loss_exponent = 3.0, .reference_loss_db = 46.0,
                  .max_range_hint_m = 150.0, .max_throughput_mbps = 54.0};
  TechParams lte{.tx_power_dbm = 43.0, .path_loss_exponent = 3.5, .reference_loss_db = 34.0,
                 .max_range_hint_m = 2000.0, .max_throughput_mbps = 30.0, .pdr_p50_dbm = -105.0};
  TechParams five_g{.tx_power_dbm = 40.0, .path_loss_exponent = 3.2, .reference_loss_db = 42.0,
                    .max_range_hint_m = 1200.0, .max_throughput_mbps = 80.0,
                    .pdr_p50_dbm = -100.0};
  TechParams lora{.tx_power_dbm = 14.0, .path_loss_exponent = 2.9, .reference_loss_db = 40.0,
                  .shadowing_sigma_db = 4.0, .rssi_floor_dbm = -137.0,
                  .max_range_hint_m = 8000.0, .max_throughput_mbps = 0.005,
                  .pdr_p50_dbm = -123.0, .pdr_k_db = 4.0};
};

const TechParams& tech_params(const ChannelParams& p, RadioTech t);
TechParams& tech_params(ChannelParams& p, RadioTech t);

/// Log-distance path loss with log-normal shadowing, clamped to
/// [rssi_floor, tx_power]. `extra_loss_db` models obstructions such as a
/// node mounted under a bridge.
double rssi_at(const geo::GeoPosition& tx, const geo::GeoPosition& rx, RadioTech tech,
               const ChannelParams& params, Rng& rng, double extra_loss_db = 0.0);

/// Logistic delivery probability as a function of RSSI.
double delivery_probability(double rssi_dbm, RadioTech tech, const ChannelParams& params);

/// Expected link throughput: max throughput scaled by delivery probability,
/// zero at or below the sensitivity floor.
double link_throughput_mbps(double rssi_dbm, RadioTech tech, const ChannelParams& params);

// ----- LoRa airtime and EU duty cycle -----

enum class CodingRate : std::uint8_t { CR4_5 = 1, CR4_6 = 2, CR4_7 = 3, CR4_8 = 4 };

struct LoraConfig {
  int spreading_factor = 10;      // 7..12
  CodingRate coding_rate = CodingRate::CR4_5;
  double bandwidth_hz = 125000.0;
  int preamble_symbols = 8;
  bool explicit_header = true;
  bool payload_crc = true;
  double duty_cycle_limit = 0.01;  // fraction of any sliding window
};

/// Standard LoRa PHY airtime; low-data-rate optimization engages at
/// SF >= 11 on 125 kHz. PayloadTooLarge outside [1, 255] bytes.
Result<double> lora_airtime_s(std::size_t payload_len, const LoraConfig& cfg);

struct Transmission {
  TimestampMs start_ms = 0;
  double airtime_ms = 0.0;
};

/// Sliding-window airtime ledger for one band. Entries must be recorded in
/// time order; the gate keeps total airtime in any trailing window at or
/// below duty_cycle_limit * window.
class DutyCycleLedger {
 public:
  explicit DutyCycleLedger(double duty_cycle_limit = 0.01, double window_s = 3600.0)
      : limit_(duty_cycle_limit), window_ms_(window_s * 1000.0) {}

  struct Gate {
    bool allowed = false;
    TimestampMs defer_until_ms = 0;  // earliest compliant start when !allowed
  };

  /// Decide whether a transmission of `airtime_s` may start at `now`.
  Gate gate(double airtime_s, TimestampMs now) const;

  /// Record an actually started transmission.
  void record(TimestampMs start_ms, double airtime_s);

  double window_usage_ms(TimestampMs now) const;
  double budget_ms() const { return limit_ * window_ms_; }
  const std::vector<Transmission>& transmissions() const { return entries_; }

 private:
  double limit_;
  double window_ms_;
  std::vector<Transmission> entries_;
};

}  // namespace vanetsim::radio
