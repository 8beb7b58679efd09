#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "vanetsim/core.hpp"
#include "vanetsim/geo.hpp"

namespace vanetsim::msg {

using Bytes = std::vector<std::uint8_t>;

enum class MsgKind : std::uint8_t {
  Cam = 0x01,
  Denm = 0x02,
  Vam = 0x03,
  ObuInfo = 0x04,
};

struct Cam {
  std::uint32_t station_id = 0;
  geo::StationType station_type = geo::StationType::Car;
  geo::GeoPosition pos;
  double speed = 0.0;    // m/s
  double heading = 0.0;  // degrees [0, 360)
  std::uint8_t status = 0;  // scenario-defined bitfield, opaque to the codec
  TimestampMs generation_time = 0;

  bool operator==(const Cam&) const = default;
};

struct DenmEventType {
  enum class Tag : std::uint8_t {
    Accident = 0,
    QueueEnd = 1,
    EmergencyVehicleApproaching = 2,
    CollisionRisk = 3,
    Other = 4,
  };
  Tag tag = Tag::Other;
  std::uint8_t other_code = 0;  // meaningful only when tag == Other

  static DenmEventType accident() { return {Tag::Accident, 0}; }
  static DenmEventType queue_end() { return {Tag::QueueEnd, 0}; }
  static DenmEventType ev_approaching() { return {Tag::EmergencyVehicleApproaching, 0}; }
  static DenmEventType collision_risk() { return {Tag::CollisionRisk, 0}; }
  static DenmEventType other(std::uint8_t code) { return {Tag::Other, code}; }

  bool operator==(const DenmEventType&) const = default;
};

struct Denm {
  std::uint32_t originator_id = 0;
  DenmEventType event_type;
  geo::GeoPosition event_pos;
  TimestampMs detection_time = 0;
  std::uint32_t validity_duration_s = 0;  // > 0
  std::uint16_t sequence = 0;

  bool operator==(const Denm&) const = default;
};

enum class SizeWeightClass : std::uint8_t { LightVru = 0, HeavyVru = 1 };
enum class VruProfile : std::uint8_t {
  Pedestrian = 0,
  Cyclist = 1,
  Motorcyclist = 2,
  Animal = 3,
};

struct Vam {
  std::uint32_t station_id = 0;
  geo::GeoPosition pos;  // altitude travels in pos.alt
  double heading = 0.0;
  double speed = 0.0;
  double orientation = 0.0;  // degrees [0, 360)
  double direction = 0.0;    // degrees [0, 360)
  SizeWeightClass size_weight_class = SizeWeightClass::LightVru;
  VruProfile vru_profile = VruProfile::Pedestrian;

  bool operator==(const Vam&) const = default;

  double altitude() const { return pos.alt; }
};

struct ObuInfo {
  Cam inner;
  std::int8_t rssi_dbm = -90;  // [-127, 0]
  std::uint32_t reporting_rsu = 0;

  bool operator==(const ObuInfo&) const = default;
};

using Message = std::variant<Cam, Denm, Vam, ObuInfo>;

MsgKind message_kind(const Message& m);

// Fixed little-endian layouts, documented in docs/wire-format.md.
inline constexpr std::size_t kCamWireSize = 27;
inline constexpr std::size_t kDenmWireSize = 27;
inline constexpr std::size_t kVamWireSize = 27;
inline constexpr std::size_t kObuInfoWireSize = 32;

Result<Bytes> encode(const Cam& m);
Result<Bytes> encode(const Denm& m);
Result<Bytes> encode(const Vam& m);
Result<Bytes> encode(const ObuInfo& m);
Result<Bytes> encode(const Message& m);

/// Total decoder: any byte sequence yields a message or a distinguishable
/// error (Truncated / UnknownKind / FieldOutOfRange), never a crash.
Result<Message> decode(std::span<const std::uint8_t> bytes,
                       std::optional<MsgKind> expected_kind = std::nullopt);

// ----- link-layer framing -----

enum class FrameKind : std::uint8_t { Control, Data };

inline constexpr std::uint16_t kEthertypeControl = 0xBBBB;
inline constexpr std::uint16_t kEthertypeData = 0x0800;

struct Frame {
  std::uint16_t ethertype = 0;
  Bytes payload;

  bool operator==(const Frame&) const = default;
};

Frame frame(Bytes msg_bytes, FrameKind kind);
Result<std::pair<FrameKind, Bytes>> unframe(const Frame& f);

// ----- station-type classification (smartphone-as-OBU switch) -----

struct StationTypeParams {
  double vehicle_speed_threshold_mps = 3.0;
  TimestampMs hysteresis_window_ms = 5000;
};

/// Single-shot rule: a Pedestrian moving faster than the threshold is
/// reported as a Car; vehicle types always pass through.
geo::StationType classify_station_type(double speed_mps, geo::StationType current,
                                       const StationTypeParams& params = {});

/// Stateful variant: the promotion (and demotion) only happens once the
/// speed condition has held for the hysteresis window, so jog-speed noise
/// does not flap the station type.
class StationTypeClassifier {
 public:
  explicit StationTypeClassifier(geo::StationType initial, StationTypeParams params = {})
      : params_(params), reported_(initial), base_(initial) {}

  geo::StationType update(double speed_mps, TimestampMs now);
  geo::StationType current() const { return reported_; }

 private:
  StationTypeParams params_;
  geo::StationType reported_;
  geo::StationType base_;  // the original VRU identity to demote back to
  std::optional<TimestampMs> condition_since_;
};

}  // namespace vanetsim::msg
