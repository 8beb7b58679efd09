#include "vanetsim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vanetsim/crypto.hpp"

namespace vanetsim::sim {

// ---------------------------------------------------------------- toml subset

// The scenario format is TOML-style key/value with GeoJSON route geometry
// embedded in multiline strings. The subset here covers tables, arrays of
// tables, scalars, single-line arrays, and multiline strings.
namespace {

struct TomlValue {
  enum class Kind { String, Number, Boolean, Array, Table };
  Kind kind = Kind::Table;
  std::string str;
  double num = 0.0;
  bool boolean = false;
  std::vector<TomlValue> array;
  std::map<std::string, TomlValue> table;

  const TomlValue* find(const std::string& key) const {
    auto it = table.find(key);
    return it == table.end() ? nullptr : &it->second;
  }
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_str) {
      if (c == quote && (i == 0 || line[i - 1] != '\\')) in_str = false;
    } else if (c == '"' || c == '\'') {
      in_str = true;
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

std::vector<std::string> split_path(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, '.')) parts.push_back(trim(part));
  return parts;
}

class TomlParser {
 public:
  explicit TomlParser(const std::string& text) : in_(text) {}

  Result<TomlValue> parse() {
    TomlValue root;
    TomlValue* current = &root;
    std::string line;
    while (next_line(line)) {
      const std::string t = trim(strip_comment(line));
      if (t.empty()) continue;
      if (t.size() >= 4 && t.substr(0, 2) == "[[" && t.substr(t.size() - 2) == "]]") {
        const auto path = split_path(t.substr(2, t.size() - 4));
        TomlValue* parent = descend(root, path, /*last_is_leaf=*/true);
        if (!parent) return make_error(Errc::ParseError, "bad table path: " + t);
        if (parent->kind != TomlValue::Kind::Array) {
          parent->kind = TomlValue::Kind::Array;
        }
        parent->array.emplace_back();
        parent->array.back().kind = TomlValue::Kind::Table;
        current = &parent->array.back();
        continue;
      }
      if (t.front() == '[' && t.back() == ']') {
        const auto path = split_path(t.substr(1, t.size() - 2));
        TomlValue* tbl = descend(root, path, /*last_is_leaf=*/false);
        if (!tbl) return make_error(Errc::ParseError, "bad table path: " + t);
        current = tbl;
        continue;
      }
      const std::size_t eq = t.find('=');
      if (eq == std::string::npos) {
        return make_error(Errc::ParseError, "expected key = value at line " +
                                                std::to_string(line_no_) + ": " + t);
      }
      const std::string key = trim(t.substr(0, eq));
      std::string rhs = trim(t.substr(eq + 1));
      auto value = parse_value(rhs);
      if (!value.ok()) return value.error();
      current->table[key] = std::move(value.value());
    }
    return root;
  }

 private:
  bool next_line(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    return true;
  }

  TomlValue* descend(TomlValue& root, const std::vector<std::string>& path,
                     bool last_is_leaf) {
    TomlValue* cur = &root;
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (path[i].empty()) return nullptr;
      const bool last = i + 1 == path.size();
      TomlValue& child = cur->table[path[i]];
      if (last && last_is_leaf) return &child;
      if (child.kind == TomlValue::Kind::Array) {
        if (child.array.empty()) return nullptr;
        cur = &child.array.back();
      } else {
        child.kind = TomlValue::Kind::Table;
        cur = &child;
      }
    }
    return cur;
  }

  Result<TomlValue> parse_value(std::string rhs) {
    TomlValue v;
    if (rhs.rfind("\"\"\"", 0) == 0 || rhs.rfind("'''", 0) == 0) {
      const std::string delim = rhs.substr(0, 3);
      std::string body = rhs.substr(3);
      std::string acc;
      // closing delimiter may be on the same line
      std::size_t end = body.find(delim);
      while (end == std::string::npos) {
        acc += body;
        acc += '\n';
        std::string line;
        if (!next_line(line)) {
          return make_error(Errc::ParseError, "unterminated multiline string");
        }
        body = line;
        end = body.find(delim);
      }
      acc += body.substr(0, end);
      v.kind = TomlValue::Kind::String;
      v.str = acc;
      return v;
    }
    if (!rhs.empty() && rhs.front() == '"') {
      std::string out;
      bool closed = false;
      for (std::size_t i = 1; i < rhs.size(); ++i) {
        const char c = rhs[i];
        if (c == '\\' && i + 1 < rhs.size()) {
          const char n = rhs[++i];
          out += n == 'n' ? '\n' : n == 't' ? '\t' : n;
        } else if (c == '"') {
          closed = true;
          break;
        } else {
          out += c;
        }
      }
      if (!closed) return make_error(Errc::ParseError, "unterminated string");
      v.kind = TomlValue::Kind::String;
      v.str = out;
      return v;
    }
    if (!rhs.empty() && rhs.front() == '[') {
      if (rhs.back() != ']') return make_error(Errc::ParseError, "unterminated array");
      v.kind = TomlValue::Kind::Array;
      std::string inner = rhs.substr(1, rhs.size() - 2);
      std::string item;
      bool in_str = false;
      for (std::size_t i = 0; i <= inner.size(); ++i) {
        const char c = i < inner.size() ? inner[i] : ',';
        if (c == '"') in_str = !in_str;
        if (c == ',' && !in_str) {
          const std::string it = trim(item);
          if (!it.empty()) {
            auto elem = parse_value(it);
            if (!elem.ok()) return elem.error();
            v.array.push_back(std::move(elem.value()));
          }
          item.clear();
        } else {
          item += c;
        }
      }
      return v;
    }
    if (rhs == "true" || rhs == "false") {
      v.kind = TomlValue::Kind::Boolean;
      v.boolean = rhs == "true";
      return v;
    }
    char* endp = nullptr;
    const double num = std::strtod(rhs.c_str(), &endp);
    if (endp == rhs.c_str() || trim(endp).size() > 0) {
      return make_error(Errc::ParseError, "bad value: " + rhs);
    }
    v.kind = TomlValue::Kind::Number;
    v.num = num;
    return v;
  }

  std::istringstream in_;
  int line_no_ = 0;
};

// ---------------------------------------------------------------- mapping

class Reader {
 public:
  explicit Reader(const TomlValue& root) : root_(root) {}

  double num(const TomlValue* t, const std::string& key, double fallback) {
    const TomlValue* v = t ? t->find(key) : nullptr;
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::Number) {
      error(key + ": expected a number");
      return fallback;
    }
    return v->num;
  }

  bool boolean(const TomlValue* t, const std::string& key, bool fallback) {
    const TomlValue* v = t ? t->find(key) : nullptr;
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::Boolean) {
      error(key + ": expected a boolean");
      return fallback;
    }
    return v->boolean;
  }

  std::string str(const TomlValue* t, const std::string& key, const std::string& fallback) {
    const TomlValue* v = t ? t->find(key) : nullptr;
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::String) {
      error(key + ": expected a string");
      return fallback;
    }
    return v->str;
  }

  std::vector<std::string> str_list(const TomlValue* t, const std::string& key) {
    std::vector<std::string> out;
    const TomlValue* v = t ? t->find(key) : nullptr;
    if (!v) return out;
    if (v->kind != TomlValue::Kind::Array) {
      error(key + ": expected an array");
      return out;
    }
    for (const auto& e : v->array) {
      if (e.kind == TomlValue::Kind::String) out.push_back(e.str);
    }
    return out;
  }

  void error(std::string msg) { errors_.push_back(std::move(msg)); }
  const std::vector<std::string>& errors() const { return errors_; }
  const TomlValue& root() const { return root_; }

 private:
  const TomlValue& root_;
  std::vector<std::string> errors_;
};

void read_tech_params(Reader& r, const TomlValue* t, radio::TechParams& tp) {
  if (!t) return;
  tp.tx_power_dbm = r.num(t, "tx_power_dbm", tp.tx_power_dbm);
  tp.path_loss_exponent = r.num(t, "path_loss_exponent", tp.path_loss_exponent);
  tp.reference_loss_db = r.num(t, "reference_loss_db", tp.reference_loss_db);
  tp.shadowing_sigma_db = r.num(t, "shadowing_sigma_db", tp.shadowing_sigma_db);
  tp.rssi_floor_dbm = r.num(t, "rssi_floor_dbm", tp.rssi_floor_dbm);
  tp.max_range_hint_m = r.num(t, "max_range_hint_m", tp.max_range_hint_m);
  tp.max_throughput_mbps = r.num(t, "max_throughput_mbps", tp.max_throughput_mbps);
  tp.pdr_p50_dbm = r.num(t, "pdr_p50_dbm", tp.pdr_p50_dbm);
  tp.pdr_k_db = r.num(t, "pdr_k_db", tp.pdr_k_db);
}

geo::StationType station_type_from(const std::string& s, Reader& r) {
  if (s == "Bus") return geo::StationType::Bus;
  if (s == "Car") return geo::StationType::Car;
  if (s == "GarbageTruck") return geo::StationType::GarbageTruck;
  if (s == "EmergencyVehicle") return geo::StationType::EmergencyVehicle;
  if (s == "Pedestrian") return geo::StationType::Pedestrian;
  if (s == "Cyclist") return geo::StationType::Cyclist;
  r.error("unknown station type: " + s);
  return geo::StationType::Car;
}

Result<geo::Route> parse_geojson_route(const std::string& text, bool loop,
                                       std::vector<double>* speed_limits) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) return make_error(Errc::ParseError, "route geojson does not parse");
  const nlohmann::json* geom = &j;
  if (j.contains("geometry")) {
    if (j.contains("properties") && j["properties"].contains("speed_limits_mps")) {
      for (const auto& v : j["properties"]["speed_limits_mps"]) {
        speed_limits->push_back(v.get<double>());
      }
    }
    geom = &j["geometry"];
  }
  if (!geom->contains("type") || (*geom)["type"] != "LineString" ||
      !geom->contains("coordinates")) {
    return make_error(Errc::ParseError, "route geometry must be a GeoJSON LineString");
  }
  geo::Route route;
  route.loop = loop;
  for (const auto& c : (*geom)["coordinates"]) {
    if (!c.is_array() || c.size() < 2) {
      return make_error(Errc::ParseError, "bad coordinate in LineString");
    }
    geo::GeoPosition p;
    p.lon = c[0].get<double>();  // GeoJSON order: [lon, lat]
    p.lat = c[1].get<double>();
    if (c.size() > 2) p.alt = c[2].get<double>();
    route.waypoints.push_back(p);
  }
  return route;
}

std::vector<std::vector<geo::GeoPosition>> parse_polygons(Reader& r, const TomlValue* t,
                                                          const std::string& key) {
  std::vector<std::vector<geo::GeoPosition>> out;
  const TomlValue* v = t ? t->find(key) : nullptr;
  if (!v) return out;
  if (v->kind != TomlValue::Kind::String) {
    r.error(key + ": expected a GeoJSON string");
    return out;
  }
  nlohmann::json j = nlohmann::json::parse(v->str, nullptr, false);
  if (j.is_discarded()) {
    r.error(key + ": polygon geojson does not parse");
    return out;
  }
  // Accept a MultiPolygon-ish array of rings: [[[lon,lat],...], ...]
  for (const auto& ring : j) {
    std::vector<geo::GeoPosition> poly;
    for (const auto& c : ring) {
      geo::GeoPosition p;
      p.lon = c[0].get<double>();
      p.lat = c[1].get<double>();
      poly.push_back(p);
    }
    if (poly.size() >= 3) out.push_back(std::move(poly));
  }
  return out;
}

bool point_in_polygon(const std::vector<geo::GeoPosition>& poly, const geo::GeoPosition& p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const bool crosses = (poly[i].lat > p.lat) != (poly[j].lat > p.lat);
    if (!crosses) continue;
    const double lon_at = poly[j].lon + (poly[i].lon - poly[j].lon) * (p.lat - poly[j].lat) /
                                            (poly[i].lat - poly[j].lat);
    if (p.lon < lon_at) inside = !inside;
  }
  return inside;
}

}  // namespace

// ---------------------------------------------------------------- scenario

bool NodeSpec::has_tech(const std::string& t) const {
  return std::find(techs.begin(), techs.end(), t) != techs.end();
}

bool NodeSpec::has_sensor(const std::string& s) const {
  return std::find(sensors.begin(), sensors.end(), s) != sensors.end();
}

bool CellularCoverage::covers_fiveg(const geo::GeoPosition& p) const {
  if (!fiveg_enabled) return false;
  if (fiveg_everywhere) return true;
  for (const auto& poly : fiveg_polygons) {
    if (point_in_polygon(poly, p)) return true;
  }
  return false;
}

bool CellularCoverage::covers_lte(const geo::GeoPosition& p) const {
  if (!lte_enabled) return false;
  if (lte_everywhere) return true;
  for (const auto& poly : lte_polygons) {
    if (point_in_polygon(poly, p)) return true;
  }
  return false;
}

const RouteSpec* Scenario::find_route(const std::string& id) const {
  for (const auto& r : routes) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

const NodeSpec* Scenario::find_node_by_num(std::uint32_t rsu_num) const {
  for (const auto& n : nodes) {
    if (n.rsu_num == rsu_num) return &n;
  }
  return nullptr;
}

Result<Scenario> parse_scenario(const std::string& text, const std::string& source_name) {
  TomlParser parser(text);
  auto doc = parser.parse();
  if (!doc.ok()) return doc.error();
  const TomlValue& root = doc.value();
  Reader r(root);

  Scenario sc;
  sc.source_path = source_name;
  {
    const auto digest = crypto::md5(
        std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    sc.config_md5 = crypto::digest_hex(digest);
  }
  sc.name = r.str(&root, "name", "unnamed");

  const TomlValue* seed = root.find("seed");
  if (!seed || seed->kind != TomlValue::Kind::Number) {
    r.error("seed: required for deterministic runs");
  } else {
    sc.seed = static_cast<std::uint64_t>(seed->num);
  }
  sc.duration_s = r.num(&root, "duration_s", sc.duration_s);
  sc.tick_ms = static_cast<TimestampMs>(r.num(&root, "tick_ms", 100));
  if (sc.tick_ms <= 0) r.error("tick_ms: must be positive");
  if (sc.duration_s <= 0) r.error("duration_s: must be positive");

  if (const TomlValue* ch = root.find("channel")) {
    read_tech_params(r, ch->find("itsg5"), sc.channel.its_g5);
    read_tech_params(r, ch->find("wifi"), sc.channel.wifi);
    read_tech_params(r, ch->find("lte"), sc.channel.lte);
    read_tech_params(r, ch->find("fiveg"), sc.channel.five_g);
    read_tech_params(r, ch->find("lora"), sc.channel.lora);
  }
  for (const auto& [name, tp] :
       {std::pair<const char*, const radio::TechParams*>{"itsg5", &sc.channel.its_g5},
        {"wifi", &sc.channel.wifi},
        {"lte", &sc.channel.lte},
        {"fiveg", &sc.channel.five_g},
        {"lora", &sc.channel.lora}}) {
    if (tp->path_loss_exponent < 1.6 || tp->path_loss_exponent > 6.0) {
      r.error(std::string("channel.") + name + ": path_loss_exponent must be in [1.6, 6]");
    }
    if (tp->shadowing_sigma_db < 0.0) {
      r.error(std::string("channel.") + name + ": shadowing_sigma_db must be >= 0");
    }
  }

  if (const TomlValue* cmv = root.find("cm")) {
    sc.cm_params.attach_threshold_dbm =
        r.num(cmv, "attach_threshold_dbm", sc.cm_params.attach_threshold_dbm);
    sc.cm_params.handover_margin_db =
        r.num(cmv, "handover_margin_db", sc.cm_params.handover_margin_db);
    sc.cm_params.stale_after_ms = static_cast<TimestampMs>(
        r.num(cmv, "stale_after_ms", static_cast<double>(sc.cm_params.stale_after_ms)));
    sc.cm_params.min_dwell_ms = static_cast<TimestampMs>(
        r.num(cmv, "min_dwell_ms", static_cast<double>(sc.cm_params.min_dwell_ms)));
    sc.cm_params.alignment_weight_db =
        r.num(cmv, "alignment_weight_db", sc.cm_params.alignment_weight_db);
    if (sc.cm_params.handover_margin_db < 0) r.error("cm.handover_margin_db: must be >= 0");
    if (sc.cm_params.min_dwell_ms < 0) r.error("cm.min_dwell_ms: must be >= 0");
  }
  sc.sdn_params.cm = sc.cm_params;

  if (const TomlValue* sd = root.find("sdn")) {
    sc.sdn_params.prediction_horizon_s =
        r.num(sd, "prediction_horizon_s", sc.sdn_params.prediction_horizon_s);
    sc.sdn_params.apply_lead_s = r.num(sd, "apply_lead_s", sc.sdn_params.apply_lead_s);
    sc.sdn_params.apply_grace_ms = static_cast<TimestampMs>(
        r.num(sd, "apply_grace_ms", static_cast<double>(sc.sdn_params.apply_grace_ms)));
  }

  if (const TomlValue* cell = root.find("cellular")) {
    sc.cellular.fiveg_enabled = r.boolean(cell, "fiveg_enabled", true);
    sc.cellular.fiveg_everywhere = r.boolean(cell, "fiveg_everywhere", true);
    sc.cellular.fiveg_polygons = parse_polygons(r, cell, "fiveg_polygons");
    if (!sc.cellular.fiveg_polygons.empty()) sc.cellular.fiveg_everywhere = false;
    sc.cellular.lte_enabled = r.boolean(cell, "lte_enabled", true);
    sc.cellular.lte_everywhere = r.boolean(cell, "lte_everywhere", true);
    sc.cellular.lte_polygons = parse_polygons(r, cell, "lte_polygons");
    if (!sc.cellular.lte_polygons.empty()) sc.cellular.lte_everywhere = false;
  }

  if (const TomlValue* cad = root.find("cadence")) {
    auto ms = [&](const char* key, TimestampMs fallback) {
      return static_cast<TimestampMs>(r.num(cad, key, static_cast<double>(fallback)));
    };
    sc.cadence.obu_cam_interval_ms = ms("obu_cam_interval_ms", sc.cadence.obu_cam_interval_ms);
    sc.cadence.rsu_beacon_interval_ms =
        ms("rsu_beacon_interval_ms", sc.cadence.rsu_beacon_interval_ms);
    sc.cadence.vru_vam_interval_ms = ms("vru_vam_interval_ms", sc.cadence.vru_vam_interval_ms);
    sc.cadence.probe_interval_ms = ms("probe_interval_ms", sc.cadence.probe_interval_ms);
    sc.cadence.flush_interval_ms = ms("flush_interval_ms", sc.cadence.flush_interval_ms);
    sc.cadence.sensor_interval_ms = ms("sensor_interval_ms", sc.cadence.sensor_interval_ms);
    sc.cadence.fusion_window_ms = ms("fusion_window_ms", sc.cadence.fusion_window_ms);
    sc.cadence.analytics_window_ms =
        ms("analytics_window_ms", sc.cadence.analytics_window_ms);
  }

  if (const TomlValue* lr = root.find("lora")) {
    sc.lora.phy.spreading_factor =
        static_cast<int>(r.num(lr, "spreading_factor", sc.lora.phy.spreading_factor));
    const std::string cr = r.str(lr, "coding_rate", "4/5");
    if (cr == "4/5") sc.lora.phy.coding_rate = radio::CodingRate::CR4_5;
    else if (cr == "4/6") sc.lora.phy.coding_rate = radio::CodingRate::CR4_6;
    else if (cr == "4/7") sc.lora.phy.coding_rate = radio::CodingRate::CR4_7;
    else if (cr == "4/8") sc.lora.phy.coding_rate = radio::CodingRate::CR4_8;
    else r.error("lora.coding_rate: expected 4/5, 4/6, 4/7 or 4/8");
    sc.lora.phy.bandwidth_hz = r.num(lr, "bandwidth_hz", sc.lora.phy.bandwidth_hz);
    sc.lora.phy.preamble_symbols =
        static_cast<int>(r.num(lr, "preamble_symbols", sc.lora.phy.preamble_symbols));
    sc.lora.phy.duty_cycle_limit =
        r.num(lr, "duty_cycle_limit", sc.lora.phy.duty_cycle_limit);
    sc.lora.redundancy_period_s =
        r.num(lr, "redundancy_period_s", sc.lora.redundancy_period_s);
    if (sc.lora.phy.spreading_factor < 7 || sc.lora.phy.spreading_factor > 12) {
      r.error("lora.spreading_factor: must be 7..12");
    }
    if (sc.lora.phy.duty_cycle_limit <= 0.0 || sc.lora.phy.duty_cycle_limit > 1.0) {
      r.error("lora.duty_cycle_limit: must be in (0, 1]");
    }
  }

  sc.null_cipher = r.boolean(&root, "null_cipher", true);
  sc.debug_cm_trace = r.boolean(&root, "debug_cm_trace", false);

  if (const TomlValue* nodes = root.find("nodes")) {
    for (const auto& n : nodes->array) {
      NodeSpec spec;
      spec.id = r.str(&n, "id", "");
      if (spec.id.empty()) r.error("node missing id");
      spec.rsu_num = static_cast<std::uint32_t>(r.num(&n, "rsu_num", 0));
      spec.pos.lat = r.num(&n, "lat", 0.0);
      spec.pos.lon = r.num(&n, "lon", 0.0);
      spec.pos.alt = r.num(&n, "alt", 0.0);
      if (!geo::position_valid(spec.pos)) r.error("node " + spec.id + ": invalid position");
      spec.box_type = r.str(&n, "box_type", "SmartLampPost");
      if (spec.box_type != "SmartLampPost" && spec.box_type != "WallBox") {
        r.error("node " + spec.id + ": box_type must be SmartLampPost or WallBox");
      }
      spec.techs = r.str_list(&n, "techs");
      for (const auto& t : spec.techs) {
        if (t != "ItsG5" && t != "Wifi" && t != "FiveG" && t != "Lte" && t != "Lora") {
          r.error("node " + spec.id + ": unknown tech " + t);
        }
      }
      spec.sensors = r.str_list(&n, "sensors");
      for (const auto& s : spec.sensors) {
        if (s != "radar" && s != "camera" && s != "wifi_sniffer") {
          r.error("node " + spec.id + ": unknown sensor " + s);
        }
      }
      spec.bridge_attenuation_db = r.num(&n, "bridge_attenuation_db", 0.0);
      sc.nodes.push_back(std::move(spec));
    }
  }

  if (const TomlValue* routes = root.find("routes")) {
    for (const auto& rt : routes->array) {
      RouteSpec spec;
      spec.id = r.str(&rt, "id", "");
      if (spec.id.empty()) r.error("route missing id");
      const bool loop = r.boolean(&rt, "loop", false);
      spec.default_speed_limit_mps =
          r.num(&rt, "speed_limit_mps", spec.default_speed_limit_mps);
      spec.friction = r.num(&rt, "friction", spec.friction);
      const std::string gj = r.str(&rt, "geojson", "");
      if (gj.empty()) {
        r.error("route " + spec.id + ": missing geojson LineString");
      } else {
        std::vector<double> limits;
        auto parsed = parse_geojson_route(gj, loop, &limits);
        if (!parsed.ok()) {
          r.error("route " + spec.id + ": " + parsed.error().detail);
        } else {
          spec.route = parsed.value();
          if (spec.route.waypoints.size() < 2) {
            r.error("route " + spec.id + ": needs >= 2 waypoints");
          }
          for (std::size_t i = 0; i + 1 < spec.route.waypoints.size(); ++i) {
            if (spec.route.waypoints[i] == spec.route.waypoints[i + 1]) {
              r.error("route " + spec.id + ": consecutive duplicate waypoint " +
                      std::to_string(i));
            }
          }
          if (!limits.empty() && limits.size() + 1 != spec.route.waypoints.size()) {
            r.error("route " + spec.id + ": speed_limits_mps must have one entry per segment");
          }
          spec.route.segment_speed_limits = limits;
        }
      }
      sc.routes.push_back(std::move(spec));
    }
  }

  if (const TomlValue* vehicles = root.find("vehicles")) {
    for (const auto& vv : vehicles->array) {
      VehicleSpec spec;
      spec.id = r.str(&vv, "id", "");
      if (spec.id.empty()) r.error("vehicle missing id");
      spec.route_id = r.str(&vv, "route", "");
      spec.type = station_type_from(r.str(&vv, "type", "Bus"), r);
      spec.obu = r.boolean(&vv, "obu", true);
      spec.dcu = r.boolean(&vv, "dcu", false);
      spec.speed_mps = r.num(&vv, "speed_mps", spec.speed_mps);
      spec.start_offset_m = r.num(&vv, "start_offset_m", 0.0);
      if (spec.speed_mps < 0) r.error("vehicle " + spec.id + ": negative speed");
      sc.vehicles.push_back(std::move(spec));
    }
  }

  if (const TomlValue* vrus = root.find("vrus")) {
    for (const auto& pv : vrus->array) {
      VruSpec spec;
      spec.id = r.str(&pv, "id", "");
      if (spec.id.empty()) r.error("vru missing id");
      spec.pos.lat = r.num(&pv, "lat", 0.0);
      spec.pos.lon = r.num(&pv, "lon", 0.0);
      if (!geo::position_valid(spec.pos)) r.error("vru " + spec.id + ": invalid position");
      const std::string prof = r.str(&pv, "profile", "Pedestrian");
      if (prof == "Pedestrian") spec.profile = msg::VruProfile::Pedestrian;
      else if (prof == "Cyclist") spec.profile = msg::VruProfile::Cyclist;
      else if (prof == "Motorcyclist") spec.profile = msg::VruProfile::Motorcyclist;
      else if (prof == "Animal") spec.profile = msg::VruProfile::Animal;
      else r.error("vru " + spec.id + ": unknown profile " + prof);
      spec.speed_mps = r.num(&pv, "speed_mps", spec.speed_mps);
      spec.heading_deg = r.num(&pv, "heading_deg", 0.0);
      spec.patrol_length_m = r.num(&pv, "patrol_length_m", spec.patrol_length_m);
      sc.vrus.push_back(std::move(spec));
    }
  }

  // Cross-reference checks; every problem is reported, not just the first.
  {
    std::map<std::string, int> node_ids, route_ids, vehicle_ids;
    for (const auto& n : sc.nodes) node_ids[n.id]++;
    for (const auto& rt : sc.routes) route_ids[rt.id]++;
    for (const auto& v : sc.vehicles) vehicle_ids[v.id]++;
    for (const auto& [id, n] : node_ids) {
      if (n > 1) r.error("duplicate node id: " + id);
    }
    for (const auto& [id, n] : route_ids) {
      if (n > 1) r.error("duplicate route id: " + id);
    }
    for (const auto& [id, n] : vehicle_ids) {
      if (n > 1) r.error("duplicate vehicle id: " + id);
    }
    for (const auto& v : sc.vehicles) {
      if (!sc.find_route(v.route_id)) {
        r.error("vehicle " + v.id + ": unknown route " + v.route_id);
      }
    }
    std::map<std::uint32_t, int> rsu_nums;
    for (const auto& n : sc.nodes) {
      if (n.has_tech("ItsG5")) rsu_nums[n.rsu_num]++;
    }
    for (const auto& [num, cnt] : rsu_nums) {
      if (cnt > 1) r.error("duplicate rsu_num: " + std::to_string(num));
    }
  }

  if (!r.errors().empty()) {
    std::string joined;
    for (const auto& e : r.errors()) {
      joined += e;
      joined += '\n';
    }
    return make_error(Errc::ValidationError, joined);
  }
  return sc;
}

Result<Scenario> load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return make_error(Errc::IoError, "cannot open scenario file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str(), path);
}

}  // namespace vanetsim::sim
