#include <fstream>
#include <set>
#include <string>

#include "doctest.h"
#include "vanetsim/crypto.hpp"
#include "vanetsim/messages.hpp"
#include "vanetsim/rng.hpp"

using namespace vanetsim;
using msg::Bytes;

namespace {

// Generators produce messages on the wire-representable grid (micro-degree
// positions, centi-m/s speeds, deci-degree angles) so roundtrip equality is
// exact.
double grid_lat(Rng& rng) { return static_cast<double>(rng.uniform_int(-90'000'000, 90'000'000)) / 1e6; }
double grid_lon(Rng& rng) { return static_cast<double>(rng.uniform_int(-180'000'000, 180'000'000)) / 1e6; }
double grid_alt(Rng& rng) { return static_cast<double>(rng.uniform_int(-10'000, 500'000)) / 100.0; }
double grid_speed(Rng& rng) { return static_cast<double>(rng.uniform_int(0, 65'535)) / 100.0; }
double grid_angle(Rng& rng) { return static_cast<double>(rng.uniform_int(0, 3'599)) / 10.0; }

msg::Cam random_cam(Rng& rng) {
  msg::Cam m;
  m.station_id = static_cast<std::uint32_t>(rng.uniform_int(0, 0xFFFFFFFFll));
  m.station_type = static_cast<geo::StationType>(rng.uniform_int(0, 5));
  m.pos = {grid_lat(rng), grid_lon(rng), grid_alt(rng)};
  m.speed = grid_speed(rng);
  m.heading = grid_angle(rng);
  m.status = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  m.generation_time = rng.uniform_int(0, 0xFFFFFFFFll);
  return m;
}

msg::Denm random_denm(Rng& rng) {
  msg::Denm m;
  m.originator_id = static_cast<std::uint32_t>(rng.uniform_int(0, 0xFFFFFFFFll));
  const int tag = static_cast<int>(rng.uniform_int(0, 4));
  m.event_type = tag == 4
                     ? msg::DenmEventType::other(static_cast<std::uint8_t>(rng.uniform_int(0, 255)))
                     : msg::DenmEventType{static_cast<msg::DenmEventType::Tag>(tag), 0};
  m.event_pos = {grid_lat(rng), grid_lon(rng), grid_alt(rng)};
  m.detection_time = rng.uniform_int(0, 0xFFFFFFFFll);
  m.validity_duration_s = static_cast<std::uint32_t>(rng.uniform_int(1, 0xFFFF));
  m.sequence = static_cast<std::uint16_t>(rng.uniform_int(0, 0xFFFF));
  return m;
}

msg::Vam random_vam(Rng& rng) {
  msg::Vam m;
  m.station_id = static_cast<std::uint32_t>(rng.uniform_int(0, 0xFFFFFFFFll));
  m.pos = {grid_lat(rng), grid_lon(rng), grid_alt(rng)};
  m.heading = grid_angle(rng);
  m.speed = grid_speed(rng);
  m.orientation = grid_angle(rng);
  m.direction = grid_angle(rng);
  m.size_weight_class = static_cast<msg::SizeWeightClass>(rng.uniform_int(0, 1));
  m.vru_profile = static_cast<msg::VruProfile>(rng.uniform_int(0, 3));
  return m;
}

msg::ObuInfo random_obuinfo(Rng& rng) {
  msg::ObuInfo m;
  m.inner = random_cam(rng);
  m.rssi_dbm = static_cast<std::int8_t>(rng.uniform_int(-127, 0));
  m.reporting_rsu = static_cast<std::uint32_t>(rng.uniform_int(0, 0xFFFFFFFFll));
  return m;
}

}  // namespace

TEST_CASE("cam encoding is deterministic and within the size budget") {
  msg::Cam cam;
  cam.station_id = 1001;
  cam.station_type = geo::StationType::Bus;
  cam.pos = {40.6405, -8.6538, 4.0};
  cam.speed = 11.25;
  cam.heading = 271.5;
  cam.status = 0b00000101;
  cam.generation_time = 123456;

  const auto a = msg::encode(cam);
  const auto b = msg::encode(cam);
  REQUIRE(a.ok());
  CHECK(a.value() == b.value());
  CHECK(a.value().size() == msg::kCamWireSize);
  CHECK(a.value().size() <= 128);
  CHECK(a.value()[0] == 0x01);
}

TEST_CASE("cam lat/lon encode as micro-degrees with round-half-even") {
  msg::Cam cam;
  cam.pos = {40.6405, -8.6538, 0.0};
  cam.generation_time = 0;
  const auto bytes = msg::encode(cam).value();
  auto read_i32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes[at + k]) << (8 * k);
    return static_cast<std::int32_t>(v);
  };
  // offsets per docs/wire-format.md: lat at 6, lon at 10
  CHECK(read_i32(6) == 40'640'500);
  CHECK(read_i32(10) == -8'653'800);
}

namespace {

std::string load_golden_hex(const std::string& name) {
  for (const char* prefix : {"tests/golden/", "../tests/golden/"}) {
    std::ifstream f(prefix + name);
    if (f) {
      std::string line;
      std::getline(f, line);
      return line;
    }
  }
  return {};
}

std::string to_hex(const Bytes& bytes) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (auto b : bytes) {
    s.push_back(hex[b >> 4]);
    s.push_back(hex[b & 0xf]);
  }
  return s;
}

}  // namespace

TEST_CASE("golden fixtures: encodings and digests are frozen") {
  msg::Cam cam;
  cam.station_id = 1001;
  cam.station_type = geo::StationType::Bus;
  cam.pos = {40.6405, -8.6538, 4.0};
  cam.speed = 11.25;
  cam.heading = 271.5;
  cam.status = 0b00000101;
  cam.generation_time = 123456;

  msg::Denm denm;
  denm.originator_id = 77;
  denm.event_type = msg::DenmEventType::ev_approaching();
  denm.event_pos = {40.6431, -8.6489, 0.0};
  denm.detection_time = 98765;
  denm.validity_duration_s = 30;
  denm.sequence = 513;

  msg::Vam vam;
  vam.station_id = 2002;
  vam.pos = {40.64286, -8.6545, 1.5};
  vam.heading = 12.3;
  vam.speed = 1.35;
  vam.orientation = 12.3;
  vam.direction = 12.3;

  msg::ObuInfo info;
  info.inner = cam;
  info.rssi_dbm = -72;
  info.reporting_rsu = 22;

  const struct {
    const char* file;
    Bytes bytes;
    const char* md5;
  } fixtures[] = {
      {"cam.hex", msg::encode(cam).value(), "4de9f50c8d32563e725b5e16437a70ad"},
      {"denm.hex", msg::encode(denm).value(), "12200dcc56b428f813d34a809ee903cd"},
      {"vam.hex", msg::encode(vam).value(), "11ee1a7b4cd0d9a382ed83cafb0a7bcb"},
      {"obuinfo.hex", msg::encode(info).value(), "db5b54bc8c9f07b56796e94600ee66b0"},
  };
  for (const auto& fx : fixtures) {
    CAPTURE(fx.file);
    const std::string golden = load_golden_hex(fx.file);
    REQUIRE(!golden.empty());
    CHECK(to_hex(fx.bytes) == golden);
    CHECK(crypto::digest_hex(crypto::md5(fx.bytes)) == fx.md5);
  }
}

TEST_CASE("roundtrip identity per kind") {
  Rng rng(23);
  for (int i = 0; i < 500; ++i) {
    const msg::Cam cam = random_cam(rng);
    auto back = msg::decode(msg::encode(cam).value());
    REQUIRE(back.ok());
    CHECK(std::get<msg::Cam>(back.value()) == cam);

    const msg::Denm denm = random_denm(rng);
    auto back2 = msg::decode(msg::encode(denm).value());
    REQUIRE(back2.ok());
    CHECK(std::get<msg::Denm>(back2.value()) == denm);

    const msg::Vam vam = random_vam(rng);
    auto back3 = msg::decode(msg::encode(vam).value());
    REQUIRE(back3.ok());
    CHECK(std::get<msg::Vam>(back3.value()) == vam);

    const msg::ObuInfo info = random_obuinfo(rng);
    auto back4 = msg::decode(msg::encode(info).value());
    REQUIRE(back4.ok());
    CHECK(std::get<msg::ObuInfo>(back4.value()) == info);
  }
}

TEST_CASE("encode is injective on a generated corpus") {
  Rng rng(29);
  std::set<Bytes> seen;
  for (int i = 0; i < 1000; ++i) {
    seen.insert(msg::encode(random_cam(rng)).value());
    seen.insert(msg::encode(random_denm(rng)).value());
  }
  CHECK(seen.size() == 2000);  // collisions would shrink the set
}

TEST_CASE("decoder handles degenerate and mutated inputs") {
  CHECK(msg::decode({}).error().code == Errc::Truncated);

  const Bytes junk = {0x09, 0x01, 0x02};
  CHECK(msg::decode(junk).error().code == Errc::UnknownKind);

  Rng rng(31);
  const msg::Cam cam = random_cam(rng);
  Bytes bytes = msg::encode(cam).value();

  SUBCASE("flipped kind tag never yields a silently wrong message") {
    for (int tag = 0; tag < 256; ++tag) {
      Bytes mutated = bytes;
      mutated[0] = static_cast<std::uint8_t>(tag);
      auto r = msg::decode(mutated);
      if (tag == 0x01) {
        REQUIRE(r.ok());
        CHECK(std::get<msg::Cam>(r.value()) == cam);
      } else {
        // different tag means different expected length or invalid kind
        CHECK(!r.ok());
      }
    }
  }

  SUBCASE("truncation reported") {
    bytes.resize(bytes.size() - 3);
    CHECK(msg::decode(bytes).error().code == Errc::Truncated);
  }

  SUBCASE("trailing bytes reported") {
    bytes.push_back(0);
    CHECK(msg::decode(bytes).error().code == Errc::FieldOutOfRange);
  }

  SUBCASE("expected kind mismatch") {
    CHECK(msg::decode(bytes, msg::MsgKind::Denm).error().code == Errc::UnknownKind);
  }
}

TEST_CASE("decoder survives a byte-sequence fuzz sweep") {
  Rng rng(37);
  for (int i = 0; i < 20'000; ++i) {
    const std::size_t len = static_cast<std::size_t>(rng.uniform_int(0, 256));
    Bytes junk(len);
    for (auto& b : junk) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    (void)msg::decode(junk);  // must not crash; result value is irrelevant
  }
}

TEST_CASE("encode rejects out-of-range fields") {
  msg::Cam cam;
  cam.pos = {91.0, 0.0, 0.0};
  CHECK(msg::encode(cam).error().code == Errc::InvariantViolation);

  msg::Cam cam2;
  cam2.heading = 360.0;
  CHECK(msg::encode(cam2).error().code == Errc::InvariantViolation);

  msg::Denm denm;
  denm.validity_duration_s = 0;
  CHECK(msg::encode(denm).error().code == Errc::InvariantViolation);

  msg::ObuInfo info;
  info.rssi_dbm = 1;
  CHECK(msg::encode(info).error().code == Errc::InvariantViolation);
}

TEST_CASE("framing carries the control and data ethertypes") {
  const Bytes cam_bytes = {0x01, 0x02, 0x03};
  const msg::Frame control = msg::frame(cam_bytes, msg::FrameKind::Control);
  CHECK(control.ethertype == 0xBBBB);

  const Bytes udp_bytes = {0x45, 0x00};
  const msg::Frame data = msg::frame(udp_bytes, msg::FrameKind::Data);
  CHECK(data.ethertype == 0x0800);

  auto c = msg::unframe(control);
  REQUIRE(c.ok());
  CHECK(c.value().first == msg::FrameKind::Control);
  CHECK(c.value().second == cam_bytes);

  msg::Frame ipv6;
  ipv6.ethertype = 0x86DD;
  CHECK(msg::unframe(ipv6).error().code == Errc::UnknownEthertype);
}

TEST_CASE("station type classification") {
  CHECK(msg::classify_station_type(1.2, geo::StationType::Pedestrian) ==
        geo::StationType::Pedestrian);
  // 8.0 m/s is well above the 3.0 m/s walking-compatible threshold
  CHECK(msg::classify_station_type(8.0, geo::StationType::Pedestrian) ==
        geo::StationType::Car);
  CHECK(msg::classify_station_type(8.0, geo::StationType::Bus) == geo::StationType::Bus);
}

TEST_CASE("station type hysteresis prevents flapping") {
  msg::StationTypeClassifier c(geo::StationType::Pedestrian);

  // brief jog spikes shorter than the window never promote
  CHECK(c.update(4.0, 0) == geo::StationType::Pedestrian);
  CHECK(c.update(4.0, 2000) == geo::StationType::Pedestrian);
  CHECK(c.update(1.0, 4000) == geo::StationType::Pedestrian);
  CHECK(c.update(1.0, 6000) == geo::StationType::Pedestrian);

  // sustained vehicle speed promotes after the window
  CHECK(c.update(9.0, 10'000) == geo::StationType::Pedestrian);
  CHECK(c.update(9.0, 13'000) == geo::StationType::Pedestrian);
  CHECK(c.update(9.0, 15'000) == geo::StationType::Car);

  // and sustained walking speed demotes back
  CHECK(c.update(1.0, 20'000) == geo::StationType::Car);
  CHECK(c.update(1.0, 25'000) == geo::StationType::Pedestrian);
}
