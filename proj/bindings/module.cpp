#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vanetsim/analytics.hpp"
#include "vanetsim/connection_manager.hpp"
#include "vanetsim/geo.hpp"
#include "vanetsim/messages.hpp"
#include "vanetsim/radio.hpp"
#include "vanetsim/scenario.hpp"
#include "vanetsim/simulation.hpp"

namespace py = pybind11;
using namespace vanetsim;

namespace {

geo::GeoPosition make_pos(double lat, double lon, double alt) { return {lat, lon, alt}; }

py::bytes encode_cam(std::uint32_t station_id, int station_type, double lat, double lon,
                     double alt, double speed, double heading, int status,
                     long long generation_time) {
  msg::Cam cam;
  cam.station_id = station_id;
  cam.station_type = static_cast<geo::StationType>(station_type);
  cam.pos = {lat, lon, alt};
  cam.speed = speed;
  cam.heading = heading;
  cam.status = static_cast<std::uint8_t>(status);
  cam.generation_time = generation_time;
  auto bytes = msg::encode(cam);
  if (!bytes.ok()) {
    throw py::value_error(std::string("encode failed: ") + bytes.error().detail);
  }
  return py::bytes(reinterpret_cast<const char*>(bytes.value().data()),
                   bytes.value().size());
}

py::dict decode_message(py::bytes data) {
  std::string raw = data;
  auto decoded = msg::decode(
      std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
  if (!decoded.ok()) {
    throw py::value_error(std::string(errc_name(decoded.error().code)) + ": " +
                          decoded.error().detail);
  }
  py::dict out;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, msg::Cam>) {
          out["kind"] = "cam";
          out["station_id"] = m.station_id;
          out["lat"] = m.pos.lat;
          out["lon"] = m.pos.lon;
          out["speed"] = m.speed;
          out["heading"] = m.heading;
          out["generation_time"] = m.generation_time;
        } else if constexpr (std::is_same_v<T, msg::Denm>) {
          out["kind"] = "denm";
          out["originator_id"] = m.originator_id;
          out["event_tag"] = static_cast<int>(m.event_type.tag);
          out["lat"] = m.event_pos.lat;
          out["lon"] = m.event_pos.lon;
          out["validity_duration_s"] = m.validity_duration_s;
          out["sequence"] = m.sequence;
        } else if constexpr (std::is_same_v<T, msg::Vam>) {
          out["kind"] = "vam";
          out["station_id"] = m.station_id;
          out["lat"] = m.pos.lat;
          out["lon"] = m.pos.lon;
          out["speed"] = m.speed;
          out["vru_profile"] = static_cast<int>(m.vru_profile);
        } else {
          out["kind"] = "obuinfo";
          out["station_id"] = m.inner.station_id;
          out["rssi_dbm"] = static_cast<int>(m.rssi_dbm);
          out["reporting_rsu"] = m.reporting_rsu;
        }
      },
      decoded.value());
  return out;
}

py::dict run_scenario(const std::string& path, const std::string& out_dir, long long seed,
                      double duration) {
  auto scenario = sim::load_scenario(path);
  if (!scenario.ok()) {
    throw py::value_error("scenario: " + scenario.error().detail);
  }
  auto sc = std::move(scenario.value());
  if (seed >= 0) sc.seed = static_cast<std::uint64_t>(seed);
  if (duration > 0) sc.duration_s = duration;
  const auto metrics = sim::run(sc);
  if (!out_dir.empty()) {
    if (auto st = sim::emit_reports(metrics, out_dir); !st.ok()) {
      throw py::value_error("reports: " + st.error().detail);
    }
  }
  py::dict out;
  out["seed"] = metrics.seed;
  out["cams_sent"] = metrics.cams_sent;
  out["cams_received"] = metrics.cams_received;
  out["handovers"] = metrics.handover_events.size();
  out["throughput_samples"] = metrics.throughput_trace.size();
  out["black_holes"] = metrics.downlink_black_holes;
  out["duty_cycle_violations"] = metrics.duty_cycle_violations;
  out["obuinfo_frames_via_data_rules"] = metrics.obuinfo_frames_via_data_rules;
  out["data_frames_parsed_as_obuinfo"] = metrics.data_frames_parsed_as_obuinfo;
  return out;
}

py::list sample_ev_dissemination(int trials, std::uint64_t seed) {
  Rng rng(seed);
  analytics::HopDelayParams params;
  py::list out;
  for (int i = 0; i < trials; ++i) {
    const double tx1 = rng.uniform(params.tx_delay_min_ms, params.tx_delay_max_ms);
    const double p1 = rng.uniform(params.processing_min_ms, params.processing_max_ms);
    const double tx2 = rng.uniform(params.tx_delay_min_ms, params.tx_delay_max_ms);
    const double p2 = rng.uniform(params.processing_min_ms, params.processing_max_ms);
    const double tx3 = rng.uniform(params.tx_delay_min_ms, params.tx_delay_max_ms);
    py::dict row;
    row["ev"] = tx1;
    row["detecting_rsu"] = tx1 + p1 + tx2;
    row["upcoming_rsu"] = tx1 + p1 + tx2 + p2 + tx3;
    out.append(row);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_vanetsim, m) {
  m.doc() = "vehicular network simulator core bindings";

  m.def("haversine_distance",
        [](double lat1, double lon1, double lat2, double lon2) {
          return geo::haversine_distance(make_pos(lat1, lon1, 0), make_pos(lat2, lon2, 0));
        },
        py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"),
        "great-circle distance in meters");

  m.def("bearing",
        [](double lat1, double lon1, double lat2, double lon2) {
          auto b = geo::bearing(make_pos(lat1, lon1, 0), make_pos(lat2, lon2, 0));
          if (!b.ok()) throw py::value_error(b.error().detail);
          return b.value();
        },
        py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"),
        "initial great-circle bearing in degrees [0, 360)");

  m.def("lora_airtime",
        [](std::size_t payload_len, int sf, double bw_hz, int preamble) {
          radio::LoraConfig cfg;
          cfg.spreading_factor = sf;
          cfg.bandwidth_hz = bw_hz;
          cfg.preamble_symbols = preamble;
          auto t = radio::lora_airtime_s(payload_len, cfg);
          if (!t.ok()) throw py::value_error(t.error().detail);
          return t.value();
        },
        py::arg("payload_len"), py::arg("sf") = 10, py::arg("bw_hz") = 125000.0,
        py::arg("preamble") = 8, "LoRa airtime in seconds (CR 4/5, explicit header)");

  m.def("delivery_probability",
        [](double rssi) {
          return radio::delivery_probability(rssi, radio::RadioTech::ItsG5,
                                             radio::ChannelParams{});
        },
        py::arg("rssi_dbm"), "ITS-G5 packet delivery probability at an RSSI");

  m.def("encode_cam", &encode_cam, py::arg("station_id"), py::arg("station_type"),
        py::arg("lat"), py::arg("lon"), py::arg("alt") = 0.0, py::arg("speed") = 0.0,
        py::arg("heading") = 0.0, py::arg("status") = 0, py::arg("generation_time") = 0);
  m.def("decode_message", &decode_message, py::arg("data"),
        "decode wire bytes into a dict (raises ValueError on malformed input)");

  m.def("run_scenario", &run_scenario, py::arg("path"), py::arg("out_dir") = "",
        py::arg("seed") = -1, py::arg("duration") = 0.0,
        "run a scenario file; returns summary counters");

  m.def("sample_ev_dissemination", &sample_ev_dissemination, py::arg("trials") = 1000,
        py::arg("seed") = 7, "per-stage latency draws of the DENM fan-out hop model");

  m.attr("__version__") = "0.1.0";
}
