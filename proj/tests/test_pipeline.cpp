#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "vanetsim/pipeline.hpp"
#include "vanetsim/rng.hpp"

using namespace vanetsim;
using pipeline::Ack;
using pipeline::DataPoint;
using pipeline::Environment;
using pipeline::PersistentQueue;
using pipeline::Source;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("vanetsim-test-" + std::to_string(Rng(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

DataPoint env_point(std::uint64_t seq, TimestampMs at, double temp = 20.0) {
  DataPoint dp;
  dp.source = Source::Dcu;
  dp.seq = seq;
  dp.captured_at = at;
  Environment env;
  env.temp_c = temp;
  env.humidity_pct = 55.0;
  env.pressure_hpa = 1013.2;
  dp.kind = env;
  return dp;
}

// In-memory transport with programmable failure modes.
class FaultyLink : public pipeline::BatchTransport {
 public:
  explicit FaultyLink(pipeline::RsuIngestor& ingest) : ingest_(ingest) {}

  bool poa_available() const override { return available; }

  std::optional<Ack> send(const std::vector<std::uint8_t>& container) override {
    ++sends;
    if (drop_request) return std::nullopt;  // lost before the RSU
    auto data = container;
    if (corrupt_byte >= 0 && static_cast<std::size_t>(corrupt_byte) < data.size()) {
      data[static_cast<std::size_t>(corrupt_byte)] ^= 0x01;
    }
    auto result = ingest_.ingest(data);
    if (!result.ok()) return Ack{false, 0, {}};
    if (!result.value().duplicate) {
      for (const auto& p : result.value().payloads) {
        delivered.push_back({static_cast<int>(p.source), p.seq});
      }
    }
    if (drop_ack) return std::nullopt;  // ack lost on the way back
    return result.value().ack;
  }

  pipeline::RsuIngestor& ingest_;
  bool available = true;
  bool drop_request = false;
  bool drop_ack = false;
  int corrupt_byte = -1;
  int sends = 0;
  std::vector<std::pair<int, std::uint64_t>> delivered;
};

}  // namespace

TEST_CASE("datapoint serialization roundtrip") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    DataPoint dp;
    const int kind = static_cast<int>(rng.uniform_int(0, 2));
    dp.source = static_cast<Source>(rng.uniform_int(0, 2));
    dp.seq = static_cast<std::uint64_t>(rng.uniform_int(1, 1'000'000));
    dp.captured_at = rng.uniform_int(0, 10'000'000);
    if (kind == 0) {
      Environment env;
      env.temp_c = static_cast<double>(rng.uniform_int(-4000, 6000)) / 100.0;
      env.humidity_pct = static_cast<double>(rng.uniform_int(0, 10'000)) / 100.0;
      env.pressure_hpa = static_cast<double>(rng.uniform_int(9000, 10'800)) / 10.0;
      dp.kind = env;
    } else if (kind == 1) {
      pipeline::GpsFix fix;
      fix.pos = {static_cast<double>(rng.uniform_int(-90'000'000, 90'000'000)) / 1e6,
                 static_cast<double>(rng.uniform_int(-180'000'000, 180'000'000)) / 1e6,
                 static_cast<double>(rng.uniform_int(0, 10'000)) / 100.0};
      fix.speed = static_cast<double>(rng.uniform_int(0, 5000)) / 100.0;
      fix.heading = static_cast<double>(rng.uniform_int(0, 3599)) / 10.0;
      dp.kind = fix;
    } else {
      pipeline::Event ev;
      ev.code = static_cast<std::uint16_t>(rng.uniform_int(0, 0xFFFF));
      ev.detail = "door_open";
      dp.kind = ev;
    }
    auto bytes = pipeline::serialize_datapoint(dp);
    auto back = pipeline::deserialize_datapoint(bytes);
    REQUIRE(back.ok());
    CHECK(back.value() == dp);
  }
}

TEST_CASE("queue is LIFO") {
  PersistentQueue q("", 100);
  REQUIRE(q.enqueue(env_point(1, 100)).ok());
  REQUIRE(q.enqueue(env_point(2, 200)).ok());
  auto top = q.pop();
  REQUIRE(top.has_value());
  CHECK(top->seq == 2);  // last in, first out
  CHECK(q.pop()->seq == 1);
  CHECK(!q.pop().has_value());
}

TEST_CASE("queue survives an abrupt stop after enqueue") {
  TempDir dir;
  const std::string path = dir.file("obu.queue");
  {
    PersistentQueue q(path, 100);
    REQUIRE(q.enqueue(env_point(1, 100)).ok());
    REQUIRE(q.enqueue(env_point(2, 200)).ok());
    // no clean shutdown: the object goes away as a simulated power-off
  }
  PersistentQueue reopened(path, 100);
  CHECK(reopened.size() == 2);
  CHECK(reopened.pop()->seq == 2);
}

TEST_CASE("queue ignores a torn trailing record") {
  TempDir dir;
  const std::string path = dir.file("obu.queue");
  {
    PersistentQueue q(path, 100);
    REQUIRE(q.enqueue(env_point(1, 100)).ok());
  }
  {
    // simulate a crash mid-write: append garbage that looks like a record head
    std::ofstream f(path, std::ios::binary | std::ios::app);
    const char partial[] = {0, 50, 0, 0, 0, 1, 2};
    f.write(partial, sizeof(partial));
  }
  PersistentQueue reopened(path, 100);
  CHECK(reopened.size() == 1);
  CHECK(reopened.pop()->seq == 1);
}

TEST_CASE("queue evicts the eldest entry at capacity") {
  PersistentQueue q("", 3);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    REQUIRE(q.enqueue(env_point(s, s * 100)).ok());
  }
  CHECK(q.size() == 3);
  CHECK(q.eviction_count() == 2);
  CHECK(q.pop()->seq == 5);
  CHECK(q.pop()->seq == 4);
  CHECK(q.pop()->seq == 3);  // 1 and 2 were evicted
}

TEST_CASE("remove_batch deletes exactly the batched entries") {
  PersistentQueue q("", 100);
  REQUIRE(q.enqueue(env_point(1, 100)).ok());
  REQUIRE(q.enqueue(env_point(2, 200)).ok());
  const auto snapshot = q.snapshot();
  REQUIRE(snapshot.size() == 2);

  // a new datapoint arrives while the batch is in flight
  REQUIRE(q.enqueue(env_point(3, 300)).ok());

  std::vector<std::uint64_t> qids;
  for (const auto& e : snapshot) qids.push_back(e.qid);
  REQUIRE(q.remove_batch(qids).ok());
  CHECK(q.size() == 1);
  CHECK(q.pop()->seq == 3);
}

TEST_CASE("dcu cadence") {
  pipeline::DcuSimulator dcu(3.0);
  pipeline::SensorReading sensors;

  SUBCASE("two ticks one second apart emit once") {
    CHECK(dcu.tick(sensors, 0).has_value());
    CHECK(!dcu.tick(sensors, 1000).has_value());
  }

  SUBCASE("ticks at the cadence emit seq 1,2,3") {
    const auto a = dcu.tick(sensors, 0);
    const auto b = dcu.tick(sensors, 3000);
    const auto c = dcu.tick(sensors, 6000);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    REQUIRE(c.has_value());
    CHECK(a->seq == 1);
    CHECK(b->seq == 2);
    CHECK(c->seq == 3);
  }

  SUBCASE("out-of-range humidity clamps with a quality flag") {
    sensors.humidity_pct = 140.0;
    const auto dp = dcu.tick(sensors, 0);
    REQUIRE(dp.has_value());
    const auto& env = std::get<Environment>(dp->kind);
    CHECK(env.humidity_pct == 100.0);
    CHECK((env.quality_flags & 0x01) == 0x01);
  }
}

TEST_CASE("flush delivers, deletes on ack, and retries on faults") {
  auto suite = crypto::CipherSuite::null_suite();
  pipeline::RsuIngestor ingest(suite, "bus1");
  FaultyLink link(ingest);

  PersistentQueue q("", 1000);
  pipeline::ObuFlusher flusher(q, suite, "", 1);

  SUBCASE("no PoA leaves the queue untouched") {
    REQUIRE(q.enqueue(env_point(1, 100)).ok());
    link.available = false;
    auto r = flusher.flush(link);
    REQUIRE(r.ok());
    CHECK(r.value().outcome == pipeline::TransferOutcome::NoPoA);
    CHECK(q.size() == 1);
  }

  SUBCASE("happy path empties the queue") {
    for (std::uint64_t s = 1; s <= 10; ++s) REQUIRE(q.enqueue(env_point(s, s)).ok());
    auto r = flusher.flush(link);
    REQUIRE(r.ok());
    CHECK(r.value().outcome == pipeline::TransferOutcome::Delivered);
    CHECK(r.value().delivered_count == 10);
    CHECK(q.empty());
    CHECK(link.delivered.size() == 10);
  }

  SUBCASE("corrupted container keeps the queue and retries clean") {
    for (std::uint64_t s = 1; s <= 10; ++s) REQUIRE(q.enqueue(env_point(s, s)).ok());
    link.corrupt_byte = 40;  // inside the sealed payload
    auto r = flusher.flush(link);
    REQUIRE(r.ok());
    CHECK(r.value().outcome == pipeline::TransferOutcome::IntegrityRetry);
    CHECK(q.size() == 10);
    CHECK(link.delivered.empty());

    link.corrupt_byte = -1;
    auto retry = flusher.flush(link);
    REQUIRE(retry.ok());
    CHECK(retry.value().outcome == pipeline::TransferOutcome::Delivered);
    CHECK(q.empty());
  }

  SUBCASE("lost ack retries the identical batch and dedupe prevents doubles") {
    for (std::uint64_t s = 1; s <= 5; ++s) REQUIRE(q.enqueue(env_point(s, s)).ok());
    link.drop_ack = true;
    auto r = flusher.flush(link);
    REQUIRE(r.ok());
    CHECK(r.value().outcome == pipeline::TransferOutcome::IntegrityRetry);
    CHECK(q.size() == 5);           // cannot delete without the ack
    CHECK(link.delivered.size() == 5);  // but the RSU did emit the payloads

    link.drop_ack = false;
    auto retry = flusher.flush(link);
    REQUIRE(retry.ok());
    CHECK(retry.value().outcome == pipeline::TransferOutcome::Delivered);
    CHECK(q.empty());
    CHECK(link.delivered.size() == 5);  // replay re-acked without re-emission
  }
}

TEST_CASE("rsu ingest error taxonomy") {
  Rng rng(5);
  std::vector<std::uint8_t> key(16);
  for (auto& b : key) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  auto suite = crypto::CipherSuite::authenticated(key);
  pipeline::RsuIngestor ingest(suite, "bus1");

  PersistentQueue q("", 100);
  REQUIRE(q.enqueue(env_point(1, 100)).ok());
  REQUIRE(q.enqueue(env_point(2, 200)).ok());
  auto batch = pipeline::build_batch(q.snapshot(), 77, suite);
  REQUIRE(batch.ok());

  SUBCASE("valid batch emits payloads and an ack with the digest") {
    auto r = ingest.ingest(batch.value().container);
    REQUIRE(r.ok());
    CHECK(r.value().payloads.size() == 2);
    CHECK(r.value().ack.ok);
    CHECK(r.value().ack.digest == batch.value().digest);
    CHECK(r.value().ack.batch_id == 77);
    CHECK(r.value().payloads[0].entity_type == "WeatherObserved");
  }

  SUBCASE("tampered ciphertext is a decrypt failure with no payloads") {
    auto bad = batch.value().container;
    bad[40] ^= 0x01;
    auto r = ingest.ingest(bad);
    REQUIRE(!r.ok());
    CHECK(r.error().code == Errc::DecryptFailure);
  }

  SUBCASE("claimed digest mismatch is an integrity failure") {
    auto bad = batch.value().container;
    bad[16] ^= 0x01;  // digest field inside the clear header
    auto r = ingest.ingest(bad);
    REQUIRE(!r.ok());
    // either the MAC or the digest catches it depending on suite; under the
    // authenticated suite the tag covers only the sealed payload, so the
    // header digest flip must surface as IntegrityFailure
    CHECK(r.error().code == Errc::IntegrityFailure);
  }

  SUBCASE("replayed batch id re-acks without re-emission") {
    auto first = ingest.ingest(batch.value().container);
    REQUIRE(first.ok());
    auto replay = ingest.ingest(batch.value().container);
    REQUIRE(replay.ok());
    CHECK(replay.value().duplicate);
    CHECK(replay.value().payloads.empty());
    CHECK(replay.value().ack.ok);
    CHECK(replay.value().ack.digest == first.value().ack.digest);
  }
}

TEST_CASE("bit-flip sweep: ingest fails iff a container byte was altered") {
  auto suite = crypto::CipherSuite::null_suite();
  PersistentQueue q("", 10);
  REQUIRE(q.enqueue(env_point(1, 100)).ok());
  REQUIRE(q.enqueue(env_point(2, 200)).ok());
  auto batch = pipeline::build_batch(q.snapshot(), 5, suite);
  REQUIRE(batch.ok());

  {
    pipeline::RsuIngestor clean(suite, "bus1");
    auto r = clean.ingest(batch.value().container);
    REQUIRE(r.ok());  // unaltered bytes pass
    CHECK(r.value().payloads.size() == 2);
  }
  for (std::size_t i = 0; i < batch.value().container.size(); ++i) {
    for (int bit = 0; bit < 8; ++bit) {
      auto mutated = batch.value().container;
      mutated[i] ^= static_cast<std::uint8_t>(1u << bit);
      pipeline::RsuIngestor ingest(suite, "bus1");
      auto r = ingest.ingest(mutated);
      if (r.ok()) {
        // the only tolerable alteration is one that still decodes to the
        // same content; with this layout nothing qualifies except the
        // count/batch-id fields, which are cross-checked, so any success
        // here is a failed sweep
        CHECK_MESSAGE(false, "byte ", i, " bit ", bit, " accepted after a flip");
      }
    }
  }
}

TEST_CASE("flusher pending state survives a crash and reuses the batch id") {
  TempDir dir;
  auto suite = crypto::CipherSuite::null_suite();
  pipeline::RsuIngestor ingest(suite, "bus1");
  FaultyLink link(ingest);

  const std::string qpath = dir.file("q.log");
  const std::string spath = dir.file("flusher.state");

  {
    PersistentQueue q(qpath, 100);
    pipeline::ObuFlusher flusher(q, suite, spath, 9);
    for (std::uint64_t s = 1; s <= 4; ++s) REQUIRE(q.enqueue(env_point(s, s)).ok());
    link.drop_ack = true;  // batch reaches the RSU, ack lost, then the OBU dies
    auto r = flusher.flush(link);
    REQUIRE(r.ok());
    CHECK(r.value().outcome == pipeline::TransferOutcome::IntegrityRetry);
    CHECK(link.delivered.size() == 4);
  }

  // reboot: a new flusher instance must retransmit the identical container
  {
    PersistentQueue q(qpath, 100);
    CHECK(q.size() == 4);
    pipeline::ObuFlusher flusher(q, suite, spath, 9);
    CHECK(flusher.has_pending());
    link.drop_ack = false;
    auto r = flusher.flush(link);
    REQUIRE(r.ok());
    CHECK(r.value().outcome == pipeline::TransferOutcome::Delivered);
    CHECK(q.empty());
    CHECK(link.delivered.size() == 4);  // dedupe swallowed the replay
  }
}

TEST_CASE("lora frame carries the latest measurement in 24 bytes") {
  Environment env;
  env.temp_c = 21.57;
  env.humidity_pct = 63.0;
  env.pressure_hpa = 1009.8;
  pipeline::GpsFix fix;
  fix.pos = {40.6405, -8.6538, 0.0};
  fix.speed = 8.25;
  fix.heading = 270.0;

  const auto frame = pipeline::encode_lora_frame(321, env, fix, 123'000);
  CHECK(frame.size() == 24);

  auto view = pipeline::decode_lora_frame(frame);
  REQUIRE(view.ok());
  CHECK(view.value().device_id == 321);
  CHECK(view.value().env.temp_c == doctest::Approx(21.57));
  CHECK(view.value().env.humidity_pct == doctest::Approx(63.0));
  CHECK(view.value().env.pressure_hpa == doctest::Approx(1009.8));
  CHECK(view.value().fix.pos.lat == doctest::Approx(40.6405));
  CHECK(view.value().fix.speed == doctest::Approx(8.25));
  CHECK(view.value().captured_at == 123'000);
}

TEST_CASE("lora redundancy emits every 140 s, latest value wins") {
  pipeline::LoraRedundancy redundancy(1, 140.0);
  radio::DutyCycleLedger ledger(0.01, 3600.0);

  Environment env;
  pipeline::GpsFix fix;
  fix.pos = {40.6405, -8.6538, 0.0};

  std::vector<TimestampMs> emitted;
  TimestampMs latest_in_frame = -1;
  for (TimestampMs t = 0; t <= 600'000; t += 100) {
    if (t % 3000 == 0) {
      env.temp_c = 20.0 + static_cast<double>(t) / 100'000.0;
      redundancy.observe(env, fix, t);
    }
    if (auto frame = redundancy.tick(t, ledger)) {
      emitted.push_back(t);
      latest_in_frame = pipeline::decode_lora_frame(*frame).value().captured_at;
      CHECK(latest_in_frame == (t / 3000) * 3000);  // newest observation, not the oldest
    }
  }
  // ten minutes -> emissions at ~0, 140, 280, 420, 560 s
  REQUIRE(emitted.size() == 5);
  CHECK(emitted[0] == 0);
  CHECK(emitted[1] == 140'000);
  CHECK(emitted[2] == 280'000);
  CHECK(emitted[3] == 420'000);
  CHECK(emitted[4] == 560'000);
}

TEST_CASE("lora redundancy defers when the duty ledger is saturated") {
  pipeline::LoraRedundancy redundancy(1, 140.0);
  radio::DutyCycleLedger ledger(0.01, 3600.0);
  for (int i = 0; i < 36; ++i) ledger.record(i * 1000, 1.0);  // budget exhausted

  Environment env;
  pipeline::GpsFix fix;
  redundancy.observe(env, fix, 0);
  CHECK(!redundancy.tick(40'000, ledger).has_value());

  // the deferral shifted next_due to the gate's earliest compliant start
  bool emitted_before_clearance = false;
  TimestampMs emitted_at = -1;
  for (TimestampMs t = 41'000; t <= 4'000'000 && emitted_at < 0; t += 1000) {
    if (redundancy.tick(t, ledger)) emitted_at = t;
  }
  REQUIRE(emitted_at > 0);
  CHECK(!emitted_before_clearance);
  // oldest recorded transmission exits the window after ~1 hour
  CHECK(emitted_at > 3'600'000);
}

TEST_CASE("exactly-once over randomized interruption schedules") {
  // Compressed version of the acceptance criterion: a handful of schedules
  // here, the full 200+50 sweep lives in the acceptance suite.
  Rng rng(71);
  for (int schedule = 0; schedule < 10; ++schedule) {
    auto suite = crypto::CipherSuite::null_suite();
    pipeline::RsuIngestor ingest(suite, "bus");
    FaultyLink link(ingest);
    PersistentQueue q("", 10'000);
    pipeline::ObuFlusher flusher(q, suite, "", 1);

    std::uint64_t seq = 0;
    const int steps = 200;
    for (int i = 0; i < steps; ++i) {
      if (rng.bernoulli(0.7)) {
        REQUIRE(q.enqueue(env_point(++seq, i * 100)).ok());
      }
      link.available = rng.bernoulli(0.6);
      link.drop_request = rng.bernoulli(0.15);
      link.drop_ack = rng.bernoulli(0.15);
      link.corrupt_byte = rng.bernoulli(0.1) ? 20 : -1;
      (void)flusher.flush(link);
    }
    // drain with a clean link
    link.available = true;
    link.drop_request = false;
    link.drop_ack = false;
    link.corrupt_byte = -1;
    for (int i = 0; i < 5; ++i) (void)flusher.flush(link);

    std::set<std::uint64_t> seen;
    for (const auto& [src, s] : link.delivered) {
      CHECK(seen.insert(s).second);  // no duplicates
    }
    CHECK(seen.size() == seq);  // no losses
  }
}
