#include "doctest.h"

#include <fstream>
#include <thread>

#include "agrotelem/gateway.hpp"
#include "agrotelem/platform_service.hpp"
#include "agrotelem/wire_protocol.hpp"
#include "test_util.hpp"

using namespace agrotelem;
using namespace std::chrono_literals;

namespace {

constexpr std::uint32_t kT0 = 1690000000u;

Payload data_frame(std::uint8_t station, std::uint16_t seq, std::uint32_t ts, std::size_t readings = 5) {
  Frame f;
  f.station = StationId{station};
  f.seq = seq;
  f.timestamp = ts;
  for (std::size_t i = 0; i < readings; ++i) {
    f.readings.push_back({kAllKinds[i], static_cast<std::uint16_t>(500 + seq % 100)});
  }
  return encode_frame(f);
}

GatewayConfig config_in(const testutil::TempDir& dir) {
  GatewayConfig cfg;
  cfg.log_path = dir / "gw.log";
  cfg.cursor_path = dir / "gw.cursor";
  cfg.sync = false;
  return cfg;
}

// Records how many points each ingest body carried.
class BatchRecorder : public PlatformClient {
 public:
  explicit BatchRecorder(PlatformService& svc) : inner_(svc) {}
  HttpResult post(const std::string& path, const std::string& body) override {
    if (path == "/api/v1/ingest") sizes.push_back(decode_ingest_body(body).size());
    return inner_.post(path, body);
  }
  HttpResult get(const std::string& path) override { return inner_.get(path); }
  std::vector<std::size_t> sizes;

 private:
  InProcessClient inner_;
};

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("dedupe window") {
  DedupeWindow w;
  CHECK(w.accept(10));
  CHECK_FALSE(w.accept(10));
  CHECK(w.accept(9));
  CHECK_FALSE(w.accept(9));
  CHECK(w.accept(12));
  CHECK(w.accept(11));
  CHECK(w.seen(11));
  CHECK_FALSE(w.seen(13));

  SUBCASE("wrap-around") {
    DedupeWindow v;
    CHECK(v.accept(65534));
    CHECK(v.accept(65535));
    CHECK(v.accept(0));
    CHECK(v.accept(1));
    CHECK_FALSE(v.accept(65535));
    CHECK_FALSE(v.accept(0));
  }
  SUBCASE("a full lap later the same seq is new again") {
    DedupeWindow v;
    for (std::uint32_t s = 0; s < 70000; ++s) CHECK(v.accept(static_cast<std::uint16_t>(s)));
    CHECK_FALSE(v.accept(static_cast<std::uint16_t>(69999)));
    CHECK_FALSE(v.accept(static_cast<std::uint16_t>(69999 - 30000)));
  }
}

TEST_CASE("on_frame: log before ack, duplicates acked but not logged, corrupt frames dropped") {
  testutil::TempDir dir;
  PlatformService svc;
  InProcessClient client(svc);
  Gateway gw(config_in(dir), client);

  const auto first = gw.on_frame(data_frame(1, 7, kT0), 0ms);
  REQUIRE(first.ack);
  CHECK(decode_frame(*first.ack) == make_ack(StationId{1}, 7, kT0));
  CHECK(first.appended == 5);
  CHECK(gw.log_size() > 0);
  const auto log_text = read_all(dir / "gw.log");
  CHECK(log_text.rfind("7,2023-07-22T04:26:40Z,1,GardenAirTemp,", 0) == 0);

  const auto again = gw.on_frame(data_frame(1, 7, kT0), 1ms);
  CHECK(again.ack);
  CHECK(again.duplicate);
  CHECK(again.appended == 0);
  CHECK(read_all(dir / "gw.log") == log_text);

  // Same seq from another station is a different frame.
  CHECK(gw.on_frame(data_frame(2, 7, kT0), 2ms).appended == 5);

  auto corrupt = data_frame(1, 8, kT0);
  corrupt[11] ^= 0x40;
  const auto bad = gw.on_frame(corrupt, 3ms);
  CHECK_FALSE(bad.ack);
  CHECK(bad.error == DecodeErrorKind::CrcMismatch);

  const auto ack_frame = gw.on_frame(encode_frame(make_ack(StationId{1}, 9, kT0)), 4ms);
  CHECK_FALSE(ack_frame.ack);

  const auto c = gw.counters();
  CHECK(c.frames_received == 5);
  CHECK(c.crc_errors == 1);
  CHECK(c.rejected_frames == 1);
  CHECK(c.duplicate_frames == 1);
  CHECK(c.acks_sent == 3);
  CHECK(c.records_logged == 10);
}

TEST_CASE("quantized value outside the physical range is rejected") {
  testutil::TempDir dir;
  PlatformService svc;
  InProcessClient client(svc);
  Gateway gw(config_in(dir), client);
  Frame f;
  f.station = StationId{1};
  f.timestamp = kT0;
  f.readings.push_back({FactorKind::GardenAirHumidity, 20000});  // 200 %RH
  const auto d = gw.on_frame(encode_frame(f), 0ms);
  CHECK_FALSE(d.ack);
  CHECK(gw.counters().rejected_frames == 1);
  CHECK(gw.log_size() == 0);
}

TEST_CASE("flush uploads in batches of at most 100") {
  testutil::TempDir dir;
  PlatformService svc;
  BatchRecorder client(svc);
  Gateway gw(config_in(dir), client);
  for (std::uint16_t i = 0; i < 50; ++i) gw.on_frame(data_frame(1, i, kT0 + 300u * i), 0ms);

  const auto r = gw.flush_pending(0ms);
  CHECK(r.attempted);
  CHECK(r.caught_up);
  CHECK(r.batches == 3);
  CHECK(r.accepted == 250);
  CHECK(client.sizes == std::vector<std::size_t>{100, 100, 50});
  CHECK(svc.point_count() == 250);
  CHECK(gw.cursor().offset == gw.log_size());
  CHECK_FALSE(gw.has_pending());

  // Nothing new: no request at all.
  gw.flush_pending(1ms);
  CHECK(client.sizes.size() == 3);
}

TEST_CASE("platform down: cursor stays, backoff doubles up to the cap") {
  testutil::TempDir dir;
  PlatformService svc;
  testutil::SwitchableClient client(svc);
  auto cfg = config_in(dir);
  cfg.backoff_cap = 5000ms;
  Gateway gw(cfg, client);
  gw.on_frame(data_frame(1, 0, kT0), 0ms);
  client.up = false;

  auto r = gw.flush_pending(0ms);
  CHECK(r.failed_status == 0);
  CHECK(gw.cursor().offset == 0);
  CHECK(gw.next_upload_attempt() == 1000ms);
  CHECK_FALSE(gw.flush_pending(999ms).attempted);

  std::vector<SimTime> gaps;
  SimTime now = 1000ms;
  for (int i = 0; i < 5; ++i) {
    gw.flush_pending(now);
    const auto next = *gw.next_upload_attempt();
    gaps.push_back(next - now);
    now = next;
  }
  CHECK(gaps == std::vector<SimTime>{2000ms, 4000ms, 5000ms, 5000ms, 5000ms});
  CHECK(gw.counters().upload_failures == 6);
  CHECK(svc.point_count() == 0);

  client.up = true;
  r = gw.flush_pending(now);
  CHECK(r.caught_up);
  CHECK(svc.point_count() == 5);
  CHECK_FALSE(gw.next_upload_attempt());
}

TEST_CASE("outage then recovery delivers every record exactly once") {
  testutil::TempDir dir;
  std::int64_t clock = 0;
  PlatformService svc([&] { return clock; });
  InProcessClient client(svc);
  Gateway gw(config_in(dir), client);
  svc.set_outage_until(10'000);
  for (std::uint16_t i = 0; i < 30; ++i) {
    clock = i * 1000;
    gw.on_frame(data_frame(1, i, kT0 + 300u * i), SimTime(clock));
    gw.flush_pending(SimTime(clock));
  }
  clock = 60'000;
  gw.flush_pending(SimTime(clock));
  CHECK(svc.point_count() == 150);
  CHECK(svc.stats().duplicates == 0);
  CHECK(svc.stats().unavailable > 0);
}

TEST_CASE("recover") {
  testutil::TempDir dir;
  PlatformService svc;
  InProcessClient client(svc);
  const auto cfg = config_in(dir);

  SUBCASE("clean restart keeps the cursor and the dedupe state") {
    UploadCursor saved;
    {
      Gateway gw(cfg, client);
      for (std::uint16_t i = 0; i < 10; ++i) gw.on_frame(data_frame(1, i, kT0 + 300u * i), 0ms);
      gw.flush_pending(0ms);
      saved = gw.cursor();
    }
    Gateway gw(cfg, client);
    CHECK(gw.cursor() == saved);
    CHECK(gw.counters().cursor_resets == 0);
    const auto d = gw.on_frame(data_frame(1, 9, kT0 + 2700), 0ms);
    CHECK(d.duplicate);
    CHECK(d.ack);
  }

  SUBCASE("crash between platform acceptance and cursor save") {
    struct Crash {};
    {
      Gateway gw(cfg, client);
      for (std::uint16_t i = 0; i < 50; ++i) gw.on_frame(data_frame(1, i, kT0 + 300u * i), 0ms);
      int batches = 0;
      gw.set_crash_hook([&](const UploadCursor&) {
        if (++batches == 2) throw Crash{};
      });
      CHECK_THROWS_AS(gw.flush_pending(0ms), Crash);
      CHECK(svc.point_count() == 200);
    }
    Gateway gw(cfg, client);
    CHECK(gw.cursor().offset > 0);
    const auto r = gw.flush_pending(0ms);
    CHECK(r.caught_up);
    CHECK(r.duplicates == 100);
    CHECK(svc.point_count() == 250);
    const auto series = svc.query(StationId{1}, FactorKind::GardenAirTemp, 0, kT0 * 2);
    CHECK(series.size() == 50);
  }

  SUBCASE("missing cursor re-uploads from zero, platform absorbs the replay") {
    {
      Gateway gw(cfg, client);
      for (std::uint16_t i = 0; i < 4; ++i) gw.on_frame(data_frame(1, i, kT0 + 300u * i), 0ms);
      gw.flush_pending(0ms);
    }
    std::filesystem::remove(cfg.cursor_path);
    Gateway gw(cfg, client);
    CHECK(gw.cursor().offset == 0);
    const auto r = gw.flush_pending(0ms);
    CHECK(r.duplicates == 20);
    CHECK(svc.point_count() == 20);
  }

  SUBCASE("corrupt or mismatched cursor resets to zero") {
    {
      Gateway gw(cfg, client);
      gw.on_frame(data_frame(1, 0, kT0), 0ms);
      gw.flush_pending(0ms);
    }
    {
      std::ofstream(cfg.cursor_path) << "garbage";
      Gateway gw(cfg, client);
      CHECK(gw.cursor().offset == 0);
      CHECK(gw.counters().cursor_resets == 1);
    }
    {
      std::ofstream(cfg.cursor_path) << "17,abcd\n";
      Gateway gw(cfg, client);
      CHECK(gw.cursor().offset == 0);
      CHECK(gw.counters().cursor_resets == 1);
    }
  }

  SUBCASE("torn tail is truncated on open") {
    {
      Gateway gw(cfg, client);
      gw.on_frame(data_frame(1, 0, kT0), 0ms);
    }
    const auto clean = read_all(cfg.log_path);
    std::ofstream(cfg.log_path, std::ios::app) << "1,2023-07-22T04:3";
    Gateway gw(cfg, client);
    CHECK(read_all(cfg.log_path) == clean);
    CHECK(gw.log().truncated_on_open() > 0);
    gw.flush_pending(0ms);
    CHECK(svc.point_count() == 5);
  }
}

TEST_CASE("cursor store round-trip and format") {
  testutil::TempDir dir;
  CursorStore store(dir / "c", false);
  CHECK_FALSE(store.load());
  store.save({1234, 0x0a0b});
  CHECK(read_all(dir / "c") == "1234,0a0b\n");
  CHECK(store.load() == UploadCursor{1234, 0x0a0b});
  std::ofstream(dir / "c") << "12;zz\n";
  CHECK_THROWS_AS(store.load(), CorruptCursor);
}

TEST_CASE("frames arriving while a flush runs are neither lost nor doubled") {
  testutil::TempDir dir;
  PlatformService svc;
  InProcessClient client(svc);
  auto cfg = config_in(dir);
  cfg.batch_size = 7;
  Gateway gw(cfg, client);

  std::atomic<bool> done{false};
  std::thread rx([&] {
    for (std::uint32_t i = 0; i < 2000; ++i) {
      gw.on_frame(data_frame(static_cast<std::uint8_t>(1 + i % 3), static_cast<std::uint16_t>(i / 3),
                             kT0 + 300u * (i / 3), 2),
                  0ms);
    }
    done = true;
  });
  std::thread up([&] {
    while (!done) gw.flush_pending(0ms);
  });
  rx.join();
  up.join();
  gw.flush_pending(0ms);
  CHECK(svc.point_count() == 4000);
  CHECK(svc.stats().duplicates == 0);
  CHECK(gw.cursor().offset == gw.log_size());
}
