#include "vanetsim/messages.hpp"

#include <cfenv>
#include <cmath>

namespace vanetsim::msg {

namespace {

// ----- little-endian field writers/readers -----

void put_u16(Bytes& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(Bytes& b, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) b.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_i32(Bytes& b, std::int32_t v) { put_u32(b, static_cast<std::uint32_t>(v)); }

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[at + k]) << (8 * k);
  return v;
}

std::int32_t get_i32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::int32_t>(get_u32(b, at));
}

// ----- fixed-point scaling (round half even via the default FP mode) -----

std::int64_t scale_round(double v, double factor) {
  return static_cast<std::int64_t>(std::nearbyint(v * factor));
}

struct FieldCheck {
  Status status;
  FieldCheck& require(bool cond, const char* what) {
    if (status.ok() && !cond) {
      status = make_error(Errc::InvariantViolation, what);
    }
    return *this;
  }
};

Status check_position(const geo::GeoPosition& p) {
  FieldCheck c;
  c.require(geo::position_valid(p), "position out of range");
  c.require(std::abs(p.alt) <= 21'000'000.0, "altitude exceeds wire range");
  return c.status;
}

Status check_angle(double deg, const char* what) {
  FieldCheck c;
  c.require(std::isfinite(deg) && deg >= 0.0 && deg < 360.0, what);
  return c.status;
}

Status check_speed(double mps) {
  FieldCheck c;
  c.require(std::isfinite(mps) && mps >= 0.0 && mps <= 655.35, "speed out of range");
  return c.status;
}

Status check_time(TimestampMs t, const char* what) {
  FieldCheck c;
  c.require(t >= 0 && t <= 0xFFFFFFFFll, what);
  return c.status;
}

void put_position(Bytes& b, const geo::GeoPosition& p) {
  put_i32(b, static_cast<std::int32_t>(scale_round(p.lat, 1e6)));
  put_i32(b, static_cast<std::int32_t>(scale_round(p.lon, 1e6)));
  put_i32(b, static_cast<std::int32_t>(scale_round(p.alt, 100.0)));
}

geo::GeoPosition get_position(std::span<const std::uint8_t> b, std::size_t at) {
  geo::GeoPosition p;
  p.lat = get_i32(b, at) / 1e6;
  p.lon = get_i32(b, at + 4) / 1e6;
  p.alt = get_i32(b, at + 8) / 100.0;
  return p;
}

void put_cam_body(Bytes& out, const Cam& m) {
  put_u32(out, m.station_id);
  out.push_back(static_cast<std::uint8_t>(m.station_type));
  put_position(out, m.pos);
  put_u16(out, static_cast<std::uint16_t>(scale_round(m.speed, 100.0)));
  put_u16(out, static_cast<std::uint16_t>(scale_round(m.heading, 10.0) % 3600));
  out.push_back(m.status);
  put_u32(out, static_cast<std::uint32_t>(m.generation_time));
}

Status check_cam(const Cam& m) {
  if (auto s = check_position(m.pos); !s.ok()) return s;
  if (auto s = check_speed(m.speed); !s.ok()) return s;
  if (auto s = check_angle(m.heading, "heading out of [0,360)"); !s.ok()) return s;
  if (auto s = check_time(m.generation_time, "generation_time out of wire range"); !s.ok())
    return s;
  if (static_cast<std::uint8_t>(m.station_type) > 5) {
    return make_error(Errc::InvariantViolation, "unknown station type");
  }
  return {};
}

Result<Cam> parse_cam_body(std::span<const std::uint8_t> b, std::size_t at) {
  Cam m;
  m.station_id = get_u32(b, at);
  const std::uint8_t st = b[at + 4];
  if (st > 5) return make_error(Errc::FieldOutOfRange, "station type");
  m.station_type = static_cast<geo::StationType>(st);
  m.pos = get_position(b, at + 5);
  if (!geo::position_valid(m.pos)) return make_error(Errc::FieldOutOfRange, "position");
  m.speed = get_u16(b, at + 17) / 100.0;
  const std::uint16_t hd = get_u16(b, at + 19);
  if (hd >= 3600) return make_error(Errc::FieldOutOfRange, "heading");
  m.heading = hd / 10.0;
  m.status = b[at + 21];
  m.generation_time = get_u32(b, at + 22);
  return m;
}

}  // namespace

MsgKind message_kind(const Message& m) {
  return std::visit(
      [](const auto& v) -> MsgKind {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Cam>) return MsgKind::Cam;
        if constexpr (std::is_same_v<T, Denm>) return MsgKind::Denm;
        if constexpr (std::is_same_v<T, Vam>) return MsgKind::Vam;
        if constexpr (std::is_same_v<T, ObuInfo>) return MsgKind::ObuInfo;
      },
      m);
}

Result<Bytes> encode(const Cam& m) {
  if (auto s = check_cam(m); !s.ok()) return s.error();
  Bytes out;
  out.reserve(kCamWireSize);
  out.push_back(static_cast<std::uint8_t>(MsgKind::Cam));
  put_cam_body(out, m);
  return out;
}

Result<Bytes> encode(const Denm& m) {
  if (auto s = check_position(m.event_pos); !s.ok()) return s.error();
  if (auto s = check_time(m.detection_time, "detection_time out of wire range"); !s.ok())
    return s.error();
  if (m.validity_duration_s == 0 || m.validity_duration_s > 0xFFFF) {
    return make_error(Errc::InvariantViolation, "validity_duration out of (0, 65535]");
  }
  if (m.event_type.tag != DenmEventType::Tag::Other && m.event_type.other_code != 0) {
    return make_error(Errc::InvariantViolation, "other_code set on named event type");
  }
  Bytes out;
  out.reserve(kDenmWireSize);
  out.push_back(static_cast<std::uint8_t>(MsgKind::Denm));
  put_u32(out, m.originator_id);
  out.push_back(static_cast<std::uint8_t>(m.event_type.tag));
  out.push_back(m.event_type.other_code);
  put_position(out, m.event_pos);
  put_u32(out, static_cast<std::uint32_t>(m.detection_time));
  put_u16(out, static_cast<std::uint16_t>(m.validity_duration_s));
  put_u16(out, m.sequence);
  return out;
}

Result<Bytes> encode(const Vam& m) {
  if (auto s = check_position(m.pos); !s.ok()) return s.error();
  if (auto s = check_speed(m.speed); !s.ok()) return s.error();
  for (const auto& [angle, what] :
       {std::pair{m.heading, "heading out of [0,360)"},
        std::pair{m.orientation, "orientation out of [0,360)"},
        std::pair{m.direction, "direction out of [0,360)"}}) {
    if (auto s = check_angle(angle, what); !s.ok()) return s.error();
  }
  Bytes out;
  out.reserve(kVamWireSize);
  out.push_back(static_cast<std::uint8_t>(MsgKind::Vam));
  put_u32(out, m.station_id);
  put_position(out, m.pos);
  put_u16(out, static_cast<std::uint16_t>(scale_round(m.heading, 10.0) % 3600));
  put_u16(out, static_cast<std::uint16_t>(scale_round(m.speed, 100.0)));
  put_u16(out, static_cast<std::uint16_t>(scale_round(m.orientation, 10.0) % 3600));
  put_u16(out, static_cast<std::uint16_t>(scale_round(m.direction, 10.0) % 3600));
  out.push_back(static_cast<std::uint8_t>(m.size_weight_class));
  out.push_back(static_cast<std::uint8_t>(m.vru_profile));
  return out;
}

Result<Bytes> encode(const ObuInfo& m) {
  if (m.rssi_dbm > 0 || m.rssi_dbm < -127) {
    return make_error(Errc::InvariantViolation, "rssi out of [-127, 0]");
  }
  if (auto s = check_cam(m.inner); !s.ok()) return s.error();
  Bytes out;
  out.reserve(kObuInfoWireSize);
  out.push_back(static_cast<std::uint8_t>(MsgKind::ObuInfo));
  put_cam_body(out, m.inner);
  out.push_back(static_cast<std::uint8_t>(m.rssi_dbm));
  put_u32(out, m.reporting_rsu);
  return out;
}

Result<Bytes> encode(const Message& m) {
  return std::visit([](const auto& v) { return encode(v); }, m);
}

Result<Message> decode(std::span<const std::uint8_t> bytes,
                       std::optional<MsgKind> expected_kind) {
  if (bytes.empty()) return make_error(Errc::Truncated, "empty input");
  const std::uint8_t tag = bytes[0];
  if (tag < 0x01 || tag > 0x04) return make_error(Errc::UnknownKind, "unknown tag byte");
  const MsgKind kind = static_cast<MsgKind>(tag);
  if (expected_kind && kind != *expected_kind) {
    return make_error(Errc::UnknownKind, "kind does not match expectation");
  }

  const std::size_t want = kind == MsgKind::Cam    ? kCamWireSize
                           : kind == MsgKind::Denm ? kDenmWireSize
                           : kind == MsgKind::Vam  ? kVamWireSize
                                                   : kObuInfoWireSize;
  if (bytes.size() < want) return make_error(Errc::Truncated, "short message body");
  if (bytes.size() > want) return make_error(Errc::FieldOutOfRange, "trailing bytes");

  switch (kind) {
    case MsgKind::Cam: {
      auto cam = parse_cam_body(bytes, 1);
      if (!cam.ok()) return cam.error();
      return Message{cam.value()};
    }
    case MsgKind::Denm: {
      Denm m;
      m.originator_id = get_u32(bytes, 1);
      const std::uint8_t et = bytes[5];
      if (et > 4) return make_error(Errc::FieldOutOfRange, "event type tag");
      m.event_type.tag = static_cast<DenmEventType::Tag>(et);
      m.event_type.other_code = bytes[6];
      if (m.event_type.tag != DenmEventType::Tag::Other && m.event_type.other_code != 0) {
        return make_error(Errc::FieldOutOfRange, "other_code on named event");
      }
      m.event_pos = get_position(bytes, 7);
      if (!geo::position_valid(m.event_pos)) {
        return make_error(Errc::FieldOutOfRange, "event position");
      }
      m.detection_time = get_u32(bytes, 19);
      m.validity_duration_s = get_u16(bytes, 23);
      if (m.validity_duration_s == 0) {
        return make_error(Errc::FieldOutOfRange, "zero validity duration");
      }
      m.sequence = get_u16(bytes, 25);
      return Message{m};
    }
    case MsgKind::Vam: {
      Vam m;
      m.station_id = get_u32(bytes, 1);
      m.pos = get_position(bytes, 5);
      if (!geo::position_valid(m.pos)) return make_error(Errc::FieldOutOfRange, "position");
      const std::uint16_t hd = get_u16(bytes, 17);
      const std::uint16_t ori = get_u16(bytes, 21);
      const std::uint16_t dir = get_u16(bytes, 23);
      if (hd >= 3600 || ori >= 3600 || dir >= 3600) {
        return make_error(Errc::FieldOutOfRange, "angle field");
      }
      m.heading = hd / 10.0;
      m.speed = get_u16(bytes, 19) / 100.0;
      m.orientation = ori / 10.0;
      m.direction = dir / 10.0;
      const std::uint8_t swc = bytes[25];
      const std::uint8_t prof = bytes[26];
      if (swc > 1) return make_error(Errc::FieldOutOfRange, "size/weight class");
      if (prof > 3) return make_error(Errc::FieldOutOfRange, "vru profile");
      m.size_weight_class = static_cast<SizeWeightClass>(swc);
      m.vru_profile = static_cast<VruProfile>(prof);
      return Message{m};
    }
    case MsgKind::ObuInfo: {
      ObuInfo m;
      auto cam = parse_cam_body(bytes, 1);
      if (!cam.ok()) return cam.error();
      m.inner = cam.value();
      const std::int8_t rssi = static_cast<std::int8_t>(bytes[27]);
      if (rssi > 0 || rssi < -127) return make_error(Errc::FieldOutOfRange, "rssi");
      m.rssi_dbm = rssi;
      m.reporting_rsu = get_u32(bytes, 28);
      return Message{m};
    }
  }
  return make_error(Errc::UnknownKind, "unreachable");
}

Frame frame(Bytes msg_bytes, FrameKind kind) {
  Frame f;
  f.ethertype = kind == FrameKind::Control ? kEthertypeControl : kEthertypeData;
  f.payload = std::move(msg_bytes);
  return f;
}

Result<std::pair<FrameKind, Bytes>> unframe(const Frame& f) {
  if (f.ethertype == kEthertypeControl) return std::pair{FrameKind::Control, f.payload};
  if (f.ethertype == kEthertypeData) return std::pair{FrameKind::Data, f.payload};
  return make_error(Errc::UnknownEthertype, "ethertype not handled");
}

geo::StationType classify_station_type(double speed_mps, geo::StationType current,
                                       const StationTypeParams& params) {
  if (current != geo::StationType::Pedestrian && current != geo::StationType::Cyclist) {
    return current;
  }
  if (current == geo::StationType::Pedestrian &&
      speed_mps > params.vehicle_speed_threshold_mps) {
    return geo::StationType::Car;
  }
  return current;
}

geo::StationType StationTypeClassifier::update(double speed_mps, TimestampMs now) {
  const geo::StationType target = classify_station_type(speed_mps, base_, params_);
  if (target == reported_) {
    condition_since_.reset();
    return reported_;
  }
  if (!condition_since_) condition_since_ = now;
  if (now - *condition_since_ >= params_.hysteresis_window_ms) {
    reported_ = target;
    condition_since_.reset();
  }
  return reported_;
}

}  // namespace vanetsim::msg
