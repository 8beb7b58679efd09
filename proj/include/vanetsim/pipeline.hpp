#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "vanetsim/core.hpp"
#include "vanetsim/crypto.hpp"
#include "vanetsim/geo.hpp"
#include "vanetsim/radio.hpp"

namespace vanetsim::pipeline {

using Bytes = std::vector<std::uint8_t>;

// ----- datapoints -----

enum class Source : std::uint8_t { Dcu = 0, ObuGps = 1, ObuEventLog = 2 };

struct Environment {
  double temp_c = 0.0;
  double humidity_pct = 0.0;  // clamped to [0, 100]
  double pressure_hpa = 1013.25;
  std::uint8_t quality_flags = 0;  // bit 0: humidity was clamped

  bool operator==(const Environment&) const = default;
};

struct GpsFix {
  geo::GeoPosition pos;
  double speed = 0.0;
  double heading = 0.0;

  bool operator==(const GpsFix&) const = default;
};

struct Event {
  std::uint16_t code = 0;
  std::string detail;

  bool operator==(const Event&) const = default;
};

struct DataPoint {
  Source source = Source::Dcu;
  std::uint64_t seq = 0;  // strictly increasing per source
  TimestampMs captured_at = 0;
  std::variant<Environment, GpsFix, Event> kind;

  bool operator==(const DataPoint&) const = default;
};

Bytes serialize_datapoint(const DataPoint& dp);
Result<DataPoint> deserialize_datapoint(std::span<const std::uint8_t> bytes,
                                        std::size_t* consumed = nullptr);

// ----- durable LIFO queue -----

/// File-backed LIFO queue. Every mutation is appended to the backing log and
/// flushed before the call returns, so reopening the file after an abrupt
/// stop reconstructs exactly the acknowledged state. At capacity the eldest
/// entry is evicted (and counted).
class PersistentQueue {
 public:
  /// backing_path empty -> memory-only (used by unit tests that don't
  /// exercise durability).
  explicit PersistentQueue(std::string backing_path, std::size_t capacity = 100'000);

  Status enqueue(const DataPoint& dp);
  std::optional<DataPoint> pop();      // LIFO
  std::optional<DataPoint> peek() const;

  struct Entry {
    std::uint64_t qid;
    DataPoint dp;
  };
  /// Snapshot of live entries, oldest first. qids identify entries for
  /// remove_batch so entries enqueued after a snapshot stay untouched.
  std::vector<Entry> snapshot() const;
  Status remove_batch(const std::vector<std::uint64_t>& qids);

  std::size_t size() const { return live_.size(); }
  bool empty() const { return live_.empty(); }
  std::uint64_t eviction_count() const { return evictions_; }

  /// Rewrite the backing log to contain only live entries.
  Status compact();

 private:
  Status append_record(std::uint8_t type, std::span<const std::uint8_t> payload);
  void load();

  std::string path_;
  std::size_t capacity_;
  std::vector<Entry> live_;  // oldest first; LIFO pops from the back
  std::uint64_t next_qid_ = 1;
  std::uint64_t evictions_ = 0;
};

// ----- transfer batches -----

struct TransferBatch {
  std::uint64_t batch_id = 0;
  std::uint32_t count = 0;
  crypto::Digest16 digest{};  // MD5 of the compressed (pre-encryption) bytes
  Bytes container;            // full wire bytes including header
};

/// Container: "VB" 0x01, suite id, batch_id u64, count u32, digest 16,
/// sealed payload. Layout pinned in docs/batch-container.md.
Result<TransferBatch> build_batch(const std::vector<PersistentQueue::Entry>& entries,
                                  std::uint64_t batch_id, crypto::CipherSuite& suite);

struct Ack {
  bool ok = false;
  std::uint64_t batch_id = 0;
  crypto::Digest16 digest{};
};

/// What the OBU sees from one transfer attempt. A link returns no Ack on
/// timeout/interruption.
class BatchTransport {
 public:
  virtual ~BatchTransport() = default;
  virtual bool poa_available() const = 0;
  virtual std::optional<Ack> send(const Bytes& container) = 0;
};

enum class TransferOutcome : std::uint8_t { Delivered, NoPoA, IntegrityRetry };

struct TransferResult {
  TransferOutcome outcome = TransferOutcome::NoPoA;
  std::uint32_t delivered_count = 0;
};

/// OBU-side flusher: drains the queue into a compressed/encrypted batch,
/// deletes exactly the batched entries on a digest-verified ack, and keeps
/// the sealed bytes durably until then so a retry after a crash re-sends the
/// identical batch (same batch_id) instead of minting duplicates.
class ObuFlusher {
 public:
  ObuFlusher(PersistentQueue& queue, crypto::CipherSuite suite, std::string state_path,
             std::uint64_t flusher_id = 0);

  Result<TransferResult> flush(BatchTransport& link);

  std::uint64_t batches_built() const { return next_batch_seq_ - 1; }
  bool has_pending() const { return pending_.has_value(); }

 private:
  struct Pending {
    std::uint64_t batch_id;
    crypto::Digest16 digest;
    Bytes container;
    std::vector<std::uint64_t> qids;
  };

  Status persist_pending();
  Status clear_pending();
  void load_pending();

  PersistentQueue& queue_;
  crypto::CipherSuite suite_;
  std::string state_path_;  // empty -> memory-only
  std::uint64_t flusher_id_;
  std::uint64_t next_batch_seq_ = 1;
  std::optional<Pending> pending_;
};

// ----- RSU-side ingestion -----

struct PlatformPayload {
  std::string entity_id;
  std::string entity_type;
  struct Attribute {
    std::string name;
    double value = 0.0;
    std::string text;  // for non-numeric attributes
    std::string unit;
    TimestampMs observed_at = 0;
  };
  std::vector<Attribute> attributes;
  std::string tenant;
  Source source = Source::Dcu;  // provenance for the delivery audit
  std::uint64_t seq = 0;

  std::string to_ngsi_json() const;  // NGSI-LD-shaped JSON object, one line
};

struct IngestResult {
  std::vector<PlatformPayload> payloads;
  Ack ack;
  bool duplicate = false;
};

/// Decrypt -> verify digest -> decompress -> decode -> map to platform
/// payloads. Duplicate batch ids re-ack without re-emitting.
class RsuIngestor {
 public:
  RsuIngestor(crypto::CipherSuite suite, std::string entity_prefix)
      : suite_(std::move(suite)), entity_prefix_(std::move(entity_prefix)) {}

  Result<IngestResult> ingest(std::span<const std::uint8_t> container);

  const std::set<std::uint64_t>& seen_batches() const { return seen_; }

 private:
  crypto::CipherSuite suite_;
  std::string entity_prefix_;
  std::set<std::uint64_t> seen_;
  std::map<std::uint64_t, Ack> ack_cache_;
};

PlatformPayload datapoint_to_payload(const DataPoint& dp, const std::string& entity_prefix);

// ----- DCU cadence -----

struct SensorReading {
  double temp_c = 15.0;
  double humidity_pct = 60.0;
  double pressure_hpa = 1013.25;
};

/// Emits one Environment datapoint whenever `cadence_s` has elapsed.
/// Humidity outside [0,100] clamps and sets the quality flag.
class DcuSimulator {
 public:
  explicit DcuSimulator(double cadence_s = 3.0) : cadence_ms_(static_cast<TimestampMs>(cadence_s * 1000.0)) {}

  std::optional<DataPoint> tick(const SensorReading& sensors, TimestampMs now);

  std::uint64_t last_seq() const { return seq_; }

 private:
  TimestampMs cadence_ms_;
  std::optional<TimestampMs> last_emit_;
  std::uint64_t seq_ = 0;
};

// ----- LoRa redundancy path -----

/// 24-byte latest-measurement frame, layout pinned in docs/lora-payload.md.
Bytes encode_lora_frame(std::uint16_t device_id, const Environment& env,
                        const GpsFix& fix, TimestampMs captured_at);

struct LoraFrameView {
  std::uint16_t device_id = 0;
  Environment env;
  GpsFix fix;
  TimestampMs captured_at = 0;
};
Result<LoraFrameView> decode_lora_frame(std::span<const std::uint8_t> frame);

/// Emits the latest measurement every `period_s` (default 140 s), gated by
/// the duty-cycle ledger; a deferral shifts the next emission.
class LoraRedundancy {
 public:
  explicit LoraRedundancy(std::uint16_t device_id, double period_s = 140.0,
                          radio::LoraConfig cfg = {})
      : device_id_(device_id),
        period_ms_(static_cast<TimestampMs>(period_s * 1000.0)),
        cfg_(cfg) {}

  void observe(const Environment& env, const GpsFix& fix, TimestampMs captured_at);

  std::optional<Bytes> tick(TimestampMs now, radio::DutyCycleLedger& ledger);

  const radio::LoraConfig& config() const { return cfg_; }

 private:
  std::uint16_t device_id_;
  TimestampMs period_ms_;
  radio::LoraConfig cfg_;
  std::optional<TimestampMs> next_due_;
  std::optional<LoraFrameView> latest_;
};

}  // namespace vanetsim::pipeline
