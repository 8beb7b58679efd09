#include "vanetsim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace vanetsim::pipeline {

namespace {

void put_u16(Bytes& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(Bytes& b, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) b.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}
void put_u64(Bytes& b, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) b.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}
void put_i32(Bytes& b, std::int32_t v) { put_u32(b, static_cast<std::uint32_t>(v)); }
void put_i16(Bytes& b, std::int16_t v) { put_u16(b, static_cast<std::uint16_t>(v)); }

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}
std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[at + k]) << (8 * k);
  return v;
}
std::uint64_t get_u64(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[at + k]) << (8 * k);
  return v;
}

std::int64_t scale_round(double v, double f) {
  return static_cast<std::int64_t>(std::llround(v * f));
}

}  // namespace

// ---------------------------------------------------------------- datapoints

Bytes serialize_datapoint(const DataPoint& dp) {
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(dp.source));
  out.push_back(static_cast<std::uint8_t>(dp.kind.index()));
  put_u64(out, dp.seq);
  put_u64(out, static_cast<std::uint64_t>(dp.captured_at));
  if (const auto* env = std::get_if<Environment>(&dp.kind)) {
    put_i16(out, static_cast<std::int16_t>(scale_round(env->temp_c, 100.0)));
    put_u16(out, static_cast<std::uint16_t>(scale_round(env->humidity_pct, 100.0)));
    put_u16(out, static_cast<std::uint16_t>(scale_round(env->pressure_hpa, 10.0)));
    out.push_back(env->quality_flags);
  } else if (const auto* fix = std::get_if<GpsFix>(&dp.kind)) {
    put_i32(out, static_cast<std::int32_t>(scale_round(fix->pos.lat, 1e6)));
    put_i32(out, static_cast<std::int32_t>(scale_round(fix->pos.lon, 1e6)));
    put_i32(out, static_cast<std::int32_t>(scale_round(fix->pos.alt, 100.0)));
    put_u16(out, static_cast<std::uint16_t>(scale_round(fix->speed, 100.0)));
    put_u16(out, static_cast<std::uint16_t>(scale_round(fix->heading, 10.0) % 3600));
  } else {
    const auto& ev = std::get<Event>(dp.kind);
    put_u16(out, ev.code);
    put_u16(out, static_cast<std::uint16_t>(ev.detail.size()));
    out.insert(out.end(), ev.detail.begin(), ev.detail.end());
  }
  return out;
}

Result<DataPoint> deserialize_datapoint(std::span<const std::uint8_t> bytes,
                                        std::size_t* consumed) {
  if (bytes.size() < 18) return make_error(Errc::Truncated, "datapoint header");
  DataPoint dp;
  const std::uint8_t src = bytes[0];
  const std::uint8_t kind = bytes[1];
  if (src > 2) return make_error(Errc::FieldOutOfRange, "source");
  if (kind > 2) return make_error(Errc::FieldOutOfRange, "kind");
  dp.source = static_cast<Source>(src);
  dp.seq = get_u64(bytes, 2);
  dp.captured_at = static_cast<TimestampMs>(get_u64(bytes, 10));
  std::size_t used = 18;
  switch (kind) {
    case 0: {
      if (bytes.size() < used + 7) return make_error(Errc::Truncated, "environment body");
      Environment env;
      env.temp_c = static_cast<std::int16_t>(get_u16(bytes, used)) / 100.0;
      env.humidity_pct = get_u16(bytes, used + 2) / 100.0;
      env.pressure_hpa = get_u16(bytes, used + 4) / 10.0;
      env.quality_flags = bytes[used + 6];
      dp.kind = env;
      used += 7;
      break;
    }
    case 1: {
      if (bytes.size() < used + 16) return make_error(Errc::Truncated, "gps body");
      GpsFix fix;
      fix.pos.lat = static_cast<std::int32_t>(get_u32(bytes, used)) / 1e6;
      fix.pos.lon = static_cast<std::int32_t>(get_u32(bytes, used + 4)) / 1e6;
      fix.pos.alt = static_cast<std::int32_t>(get_u32(bytes, used + 8)) / 100.0;
      fix.speed = get_u16(bytes, used + 12) / 100.0;
      fix.heading = get_u16(bytes, used + 14) / 10.0;
      dp.kind = fix;
      used += 16;
      break;
    }
    default: {
      if (bytes.size() < used + 4) return make_error(Errc::Truncated, "event body");
      Event ev;
      ev.code = get_u16(bytes, used);
      const std::uint16_t len = get_u16(bytes, used + 2);
      used += 4;
      if (bytes.size() < used + len) return make_error(Errc::Truncated, "event detail");
      ev.detail.assign(bytes.begin() + used, bytes.begin() + used + len);
      dp.kind = ev;
      used += len;
      break;
    }
  }
  if (consumed) *consumed = used;
  return dp;
}

// ---------------------------------------------------------------- queue

namespace {
constexpr std::uint8_t kRecPush = 0;
constexpr std::uint8_t kRecRemove = 1;
constexpr std::uint8_t kRecEvict = 2;
}  // namespace

PersistentQueue::PersistentQueue(std::string backing_path, std::size_t capacity)
    : path_(std::move(backing_path)), capacity_(capacity) {
  if (!path_.empty()) load();
}

Status PersistentQueue::append_record(std::uint8_t type,
                                      std::span<const std::uint8_t> payload) {
  if (path_.empty()) return {};
  std::ofstream f(path_, std::ios::binary | std::ios::app);
  if (!f) return make_error(Errc::StorageFailure, "cannot open queue log");
  const std::uint32_t len = static_cast<std::uint32_t>(payload.size());
  f.put(static_cast<char>(type));
  f.write(reinterpret_cast<const char*>(&len), 4);
  f.write(reinterpret_cast<const char*>(payload.data()),
          static_cast<std::streamsize>(payload.size()));
  f.flush();
  if (!f) return make_error(Errc::StorageFailure, "queue log write failed");
  return {};
}

void PersistentQueue::load() {
  live_.clear();
  std::ifstream f(path_, std::ios::binary);
  if (!f) return;  // fresh queue
  std::vector<char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::size_t at = 0;
  auto remaining = [&] { return buf.size() - at; };
  while (remaining() >= 5) {
    const std::uint8_t type = static_cast<std::uint8_t>(buf[at]);
    std::uint32_t len = 0;
    std::memcpy(&len, buf.data() + at + 1, 4);
    if (remaining() < 5ull + len) break;  // torn tail from an abrupt stop
    const std::span<const std::uint8_t> payload(
        reinterpret_cast<const std::uint8_t*>(buf.data() + at + 5), len);
    at += 5ull + len;

    if (type == kRecPush) {
      if (payload.size() < 8) continue;
      const std::uint64_t qid = get_u64(payload, 0);
      auto dp = deserialize_datapoint(payload.subspan(8));
      if (!dp.ok()) continue;
      live_.push_back({qid, dp.value()});
      next_qid_ = std::max(next_qid_, qid + 1);
    } else if (type == kRecRemove || type == kRecEvict) {
      for (std::size_t i = 0; i + 8 <= payload.size(); i += 8) {
        const std::uint64_t qid = get_u64(payload, i);
        std::erase_if(live_, [qid](const Entry& e) { return e.qid == qid; });
        if (type == kRecEvict) ++evictions_;
      }
    }
  }
  std::sort(live_.begin(), live_.end(),
            [](const Entry& a, const Entry& b) { return a.qid < b.qid; });
}

Status PersistentQueue::enqueue(const DataPoint& dp) {
  if (live_.size() >= capacity_ && !live_.empty()) {
    // Bounded buffer: the eldest entry goes, and the eviction is counted.
    Bytes rec;
    put_u64(rec, live_.front().qid);
    if (auto s = append_record(kRecEvict, rec); !s.ok()) return s;
    live_.erase(live_.begin());
    ++evictions_;
  }
  Entry e{next_qid_++, dp};
  Bytes rec;
  put_u64(rec, e.qid);
  const Bytes body = serialize_datapoint(dp);
  rec.insert(rec.end(), body.begin(), body.end());
  if (auto s = append_record(kRecPush, rec); !s.ok()) return s;
  live_.push_back(std::move(e));
  return {};
}

std::optional<DataPoint> PersistentQueue::pop() {
  if (live_.empty()) return std::nullopt;
  Entry e = live_.back();
  Bytes rec;
  put_u64(rec, e.qid);
  if (auto s = append_record(kRecRemove, rec); !s.ok()) return std::nullopt;
  live_.pop_back();
  return e.dp;
}

std::optional<DataPoint> PersistentQueue::peek() const {
  if (live_.empty()) return std::nullopt;
  return live_.back().dp;
}

std::vector<PersistentQueue::Entry> PersistentQueue::snapshot() const { return live_; }

Status PersistentQueue::remove_batch(const std::vector<std::uint64_t>& qids) {
  Bytes rec;
  for (auto q : qids) put_u64(rec, q);
  if (auto s = append_record(kRecRemove, rec); !s.ok()) return s;
  for (auto q : qids) {
    std::erase_if(live_, [q](const Entry& e) { return e.qid == q; });
  }
  return {};
}

Status PersistentQueue::compact() {
  if (path_.empty()) return {};
  const std::string tmp = path_ + ".compact";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) return make_error(Errc::StorageFailure, "cannot open compaction file");
    for (const auto& e : live_) {
      Bytes rec;
      put_u64(rec, e.qid);
      const Bytes body = serialize_datapoint(e.dp);
      rec.insert(rec.end(), body.begin(), body.end());
      const std::uint32_t len = static_cast<std::uint32_t>(rec.size());
      f.put(static_cast<char>(kRecPush));
      f.write(reinterpret_cast<const char*>(&len), 4);
      f.write(reinterpret_cast<const char*>(rec.data()),
              static_cast<std::streamsize>(rec.size()));
    }
    f.flush();
    if (!f) return make_error(Errc::StorageFailure, "compaction write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path_, ec);
  if (ec) return make_error(Errc::StorageFailure, "compaction rename failed");
  return {};
}

// ---------------------------------------------------------------- batches

Result<TransferBatch> build_batch(const std::vector<PersistentQueue::Entry>& entries,
                                  std::uint64_t batch_id, crypto::CipherSuite& suite) {
  if (entries.empty()) {
    return make_error(Errc::InvariantViolation, "batch must contain entries");
  }
  // the digest-protected body repeats the batch id so a corrupted header id
  // cannot sneak a delivered batch past the dedupe table
  Bytes plain;
  put_u32(plain, static_cast<std::uint32_t>(entries.size()));
  put_u64(plain, batch_id);
  for (const auto& e : entries) {
    const Bytes body = serialize_datapoint(e.dp);
    plain.insert(plain.end(), body.begin(), body.end());
  }
  const Bytes compressed = crypto::compress(plain);
  const crypto::Digest16 digest = crypto::md5(compressed);
  auto sealed = crypto::seal(compressed, suite);
  if (!sealed.ok()) {
    return make_error(Errc::CryptoFailure, "seal failed: " + sealed.error().detail);
  }

  TransferBatch batch;
  batch.batch_id = batch_id;
  batch.count = static_cast<std::uint32_t>(entries.size());
  batch.digest = digest;
  Bytes& c = batch.container;
  c.push_back('V');
  c.push_back('B');
  c.push_back(0x01);
  c.push_back(static_cast<std::uint8_t>(suite.kind));
  put_u64(c, batch_id);
  put_u32(c, batch.count);
  c.insert(c.end(), digest.begin(), digest.end());
  c.insert(c.end(), sealed.value().begin(), sealed.value().end());
  return batch;
}

// ---------------------------------------------------------------- flusher

ObuFlusher::ObuFlusher(PersistentQueue& queue, crypto::CipherSuite suite,
                       std::string state_path, std::uint64_t flusher_id)
    : queue_(queue), suite_(std::move(suite)), state_path_(std::move(state_path)),
      flusher_id_(flusher_id) {
  if (!state_path_.empty()) load_pending();
}

Status ObuFlusher::persist_pending() {
  if (state_path_.empty() || !pending_) return {};
  Bytes rec;
  put_u64(rec, next_batch_seq_);
  put_u64(rec, pending_->batch_id);
  rec.insert(rec.end(), pending_->digest.begin(), pending_->digest.end());
  put_u32(rec, static_cast<std::uint32_t>(pending_->qids.size()));
  for (auto q : pending_->qids) put_u64(rec, q);
  put_u32(rec, static_cast<std::uint32_t>(pending_->container.size()));
  rec.insert(rec.end(), pending_->container.begin(), pending_->container.end());

  const std::string tmp = state_path_ + ".tmp";
  std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
  if (!f) return make_error(Errc::StorageFailure, "cannot write pending state");
  f.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
  f.flush();
  if (!f) return make_error(Errc::StorageFailure, "pending state write failed");
  f.close();
  std::error_code ec;
  std::filesystem::rename(tmp, state_path_, ec);
  if (ec) return make_error(Errc::StorageFailure, "pending state rename failed");
  return {};
}

Status ObuFlusher::clear_pending() {
  pending_.reset();
  if (state_path_.empty()) return {};
  // Keep the batch counter so a later batch never reuses an id.
  Bytes rec;
  put_u64(rec, next_batch_seq_);
  const std::string tmp = state_path_ + ".tmp";
  std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
  if (!f) return make_error(Errc::StorageFailure, "cannot write state");
  f.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
  f.flush();
  f.close();
  std::error_code ec;
  std::filesystem::rename(tmp, state_path_, ec);
  if (ec) return make_error(Errc::StorageFailure, "state rename failed");
  return {};
}

void ObuFlusher::load_pending() {
  std::ifstream f(state_path_, std::ios::binary);
  if (!f) return;
  std::vector<char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < 8) return;
  const std::span<const std::uint8_t> b(reinterpret_cast<const std::uint8_t*>(buf.data()),
                                        buf.size());
  next_batch_seq_ = get_u64(b, 0);
  if (b.size() < 8 + 8 + 16 + 4) return;  // counter only, no pending batch
  Pending p;
  p.batch_id = get_u64(b, 8);
  std::copy(b.begin() + 16, b.begin() + 32, p.digest.begin());
  const std::uint32_t nqids = get_u32(b, 32);
  std::size_t at = 36;
  if (b.size() < at + 8ull * nqids + 4) return;
  for (std::uint32_t i = 0; i < nqids; ++i) {
    p.qids.push_back(get_u64(b, at));
    at += 8;
  }
  const std::uint32_t clen = get_u32(b, at);
  at += 4;
  if (b.size() < at + clen) return;
  p.container.assign(b.begin() + at, b.begin() + at + clen);
  pending_ = std::move(p);
}

Result<TransferResult> ObuFlusher::flush(BatchTransport& link) {
  if (!link.poa_available()) {
    return TransferResult{TransferOutcome::NoPoA, 0};
  }

  if (!pending_) {
    const auto entries = queue_.snapshot();
    if (entries.empty()) {
      return TransferResult{TransferOutcome::Delivered, 0};
    }
    const std::uint64_t batch_id = (flusher_id_ << 32) | next_batch_seq_;
    ++next_batch_seq_;
    auto batch = build_batch(entries, batch_id, suite_);
    if (!batch.ok()) return batch.error();

    Pending p;
    p.batch_id = batch.value().batch_id;
    p.digest = batch.value().digest;
    p.container = std::move(batch.value().container);
    for (const auto& e : entries) p.qids.push_back(e.qid);
    pending_ = std::move(p);
    if (auto s = persist_pending(); !s.ok()) return s.error();
  }

  const auto response = link.send(pending_->container);
  if (!response.has_value()) {
    return TransferResult{TransferOutcome::IntegrityRetry, 0};  // timeout; retry later
  }
  if (!response->ok || response->digest != pending_->digest ||
      response->batch_id != pending_->batch_id) {
    return TransferResult{TransferOutcome::IntegrityRetry, 0};
  }

  const auto count = static_cast<std::uint32_t>(pending_->qids.size());
  if (auto s = queue_.remove_batch(pending_->qids); !s.ok()) return s.error();
  if (auto s = clear_pending(); !s.ok()) return s.error();
  return TransferResult{TransferOutcome::Delivered, count};
}

// ---------------------------------------------------------------- ingestion

PlatformPayload datapoint_to_payload(const DataPoint& dp, const std::string& entity_prefix) {
  PlatformPayload p;
  p.source = dp.source;
  p.seq = dp.seq;
  p.tenant = "mobility";
  if (const auto* env = std::get_if<Environment>(&dp.kind)) {
    p.entity_id = entity_prefix + ":environment";
    p.entity_type = "WeatherObserved";
    p.attributes.push_back({"temperature", env->temp_c, "", "CEL", dp.captured_at});
    p.attributes.push_back({"relativeHumidity", env->humidity_pct, "", "P1", dp.captured_at});
    p.attributes.push_back({"atmosphericPressure", env->pressure_hpa, "", "HPA", dp.captured_at});
  } else if (const auto* fix = std::get_if<GpsFix>(&dp.kind)) {
    p.entity_id = entity_prefix + ":vehicle";
    p.entity_type = "Vehicle";
    p.attributes.push_back({"latitude", fix->pos.lat, "", "DD", dp.captured_at});
    p.attributes.push_back({"longitude", fix->pos.lon, "", "DD", dp.captured_at});
    p.attributes.push_back({"speed", fix->speed, "", "MTS", dp.captured_at});
    p.attributes.push_back({"heading", fix->heading, "", "DD", dp.captured_at});
  } else {
    const auto& ev = std::get<Event>(dp.kind);
    p.entity_id = entity_prefix + ":eventlog";
    p.entity_type = "DeviceEvent";
    p.attributes.push_back({"code", static_cast<double>(ev.code), "", "", dp.captured_at});
    p.attributes.push_back({"detail", 0.0, ev.detail, "", dp.captured_at});
  }
  return p;
}

std::string PlatformPayload::to_ngsi_json() const {
  nlohmann::ordered_json j;
  j["id"] = "urn:ngsi-ld:" + entity_type + ":" + entity_id;
  j["type"] = entity_type;
  for (const auto& a : attributes) {
    nlohmann::ordered_json attr;
    attr["type"] = "Property";
    if (a.text.empty()) {
      attr["value"] = a.value;
    } else {
      attr["value"] = a.text;
    }
    if (!a.unit.empty()) attr["unitCode"] = a.unit;
    attr["observedAt"] = a.observed_at;
    j[a.name] = attr;
  }
  j["tenant"] = tenant;
  j["source"] = static_cast<int>(source);
  j["seq"] = seq;
  return j.dump();
}

Result<IngestResult> RsuIngestor::ingest(std::span<const std::uint8_t> container) {
  if (container.size() < 32 || container[0] != 'V' || container[1] != 'B' ||
      container[2] != 0x01) {
    return make_error(Errc::IntegrityFailure, "bad container header");
  }
  const std::uint8_t suite_id = container[3];
  if (suite_id != static_cast<std::uint8_t>(suite_.kind)) {
    return make_error(Errc::DecryptFailure, "suite mismatch");
  }
  const std::uint64_t batch_id = get_u64(container, 4);
  const std::uint32_t count = get_u32(container, 12);
  crypto::Digest16 claimed;
  std::copy(container.begin() + 16, container.begin() + 32, claimed.begin());

  IngestResult out;
  out.ack.batch_id = batch_id;

  auto opened = crypto::open(container.subspan(32), suite_);
  if (!opened.ok()) {
    return make_error(Errc::DecryptFailure, "open failed: " + opened.error().detail);
  }
  const crypto::Digest16 actual = crypto::md5(opened.value());
  if (actual != claimed) {
    return make_error(Errc::IntegrityFailure, "digest mismatch");
  }

  if (seen_.count(batch_id)) {
    out.ack = ack_cache_[batch_id];  // replay: re-ack, no re-emission
    out.duplicate = true;
    return out;
  }

  auto plain = crypto::decompress(opened.value());
  if (!plain.ok()) return make_error(Errc::IntegrityFailure, "decompress failed");
  const auto& body = plain.value();
  if (body.size() < 12) return make_error(Errc::IntegrityFailure, "short batch body");
  const std::uint32_t n = get_u32(body, 0);
  if (n != count) return make_error(Errc::IntegrityFailure, "count mismatch");
  if (get_u64(body, 4) != batch_id) {
    return make_error(Errc::IntegrityFailure, "batch id mismatch");
  }
  std::size_t at = 12;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::size_t used = 0;
    auto dp = deserialize_datapoint(std::span(body).subspan(at), &used);
    if (!dp.ok()) return make_error(Errc::IntegrityFailure, "datapoint decode failed");
    at += used;
    out.payloads.push_back(datapoint_to_payload(dp.value(), entity_prefix_));
  }

  out.ack.ok = true;
  out.ack.digest = actual;
  seen_.insert(batch_id);
  ack_cache_[batch_id] = out.ack;
  return out;
}

// ---------------------------------------------------------------- DCU

std::optional<DataPoint> DcuSimulator::tick(const SensorReading& sensors, TimestampMs now) {
  if (last_emit_ && now - *last_emit_ < cadence_ms_) return std::nullopt;
  last_emit_ = now;
  DataPoint dp;
  dp.source = Source::Dcu;
  dp.seq = ++seq_;
  dp.captured_at = now;
  Environment env;
  env.temp_c = sensors.temp_c;
  env.pressure_hpa = sensors.pressure_hpa;
  env.humidity_pct = sensors.humidity_pct;
  if (env.humidity_pct < 0.0 || env.humidity_pct > 100.0) {
    env.humidity_pct = std::clamp(env.humidity_pct, 0.0, 100.0);
    env.quality_flags |= 0x01;
  }
  dp.kind = env;
  return dp;
}

// ---------------------------------------------------------------- LoRa

Bytes encode_lora_frame(std::uint16_t device_id, const Environment& env, const GpsFix& fix,
                        TimestampMs captured_at) {
  Bytes b;
  b.reserve(24);
  b.push_back(0x4C);  // 'L'
  b.push_back(0x01);  // layout version
  put_u16(b, device_id);
  put_i32(b, static_cast<std::int32_t>(scale_round(fix.pos.lat, 1e6)));
  put_i32(b, static_cast<std::int32_t>(scale_round(fix.pos.lon, 1e6)));
  put_i16(b, static_cast<std::int16_t>(scale_round(env.temp_c, 100.0)));
  b.push_back(static_cast<std::uint8_t>(scale_round(env.humidity_pct, 1.0)));
  put_u16(b, static_cast<std::uint16_t>(scale_round(env.pressure_hpa, 10.0)));
  put_u16(b, static_cast<std::uint16_t>(scale_round(fix.speed, 100.0)));
  b.push_back(static_cast<std::uint8_t>(scale_round(fix.heading, 1.0 / 2.0)));  // 2-degree steps
  put_u32(b, static_cast<std::uint32_t>(captured_at));
  return b;
}

Result<LoraFrameView> decode_lora_frame(std::span<const std::uint8_t> frame) {
  if (frame.size() < 24) return make_error(Errc::Truncated, "lora frame");
  if (frame[0] != 0x4C || frame[1] != 0x01) {
    return make_error(Errc::UnknownKind, "lora frame magic/version");
  }
  LoraFrameView v;
  v.device_id = get_u16(frame, 2);
  v.fix.pos.lat = static_cast<std::int32_t>(get_u32(frame, 4)) / 1e6;
  v.fix.pos.lon = static_cast<std::int32_t>(get_u32(frame, 8)) / 1e6;
  v.env.temp_c = static_cast<std::int16_t>(get_u16(frame, 12)) / 100.0;
  v.env.humidity_pct = frame[14];
  v.env.pressure_hpa = get_u16(frame, 15) / 10.0;
  v.fix.speed = get_u16(frame, 17) / 100.0;
  v.fix.heading = frame[19] * 2.0;
  v.captured_at = static_cast<TimestampMs>(get_u32(frame, 20));
  return v;
}

void LoraRedundancy::observe(const Environment& env, const GpsFix& fix,
                             TimestampMs captured_at) {
  LoraFrameView v;
  v.device_id = device_id_;
  v.env = env;
  v.fix = fix;
  v.captured_at = captured_at;
  latest_ = v;
}

std::optional<Bytes> LoraRedundancy::tick(TimestampMs now, radio::DutyCycleLedger& ledger) {
  if (!latest_) return std::nullopt;
  if (!next_due_) next_due_ = now;  // first measurement transmits immediately
  if (now < *next_due_) return std::nullopt;

  Bytes frame = encode_lora_frame(device_id_, latest_->env, latest_->fix,
                                  latest_->captured_at);
  const auto airtime = radio::lora_airtime_s(frame.size(), cfg_);
  if (!airtime.ok()) return std::nullopt;
  const auto gate = ledger.gate(airtime.value(), now);
  if (!gate.allowed) {
    next_due_ = gate.defer_until_ms;  // deferral shifts the cadence
    return std::nullopt;
  }
  ledger.record(now, airtime.value());
  next_due_ = now + period_ms_;
  return frame;
}

}  // namespace vanetsim::pipeline
