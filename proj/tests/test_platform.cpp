#include "doctest.h"

#include <thread>

#include "agrotelem/platform_http.hpp"
#include "agrotelem/platform_service.hpp"
#include "json.hpp"

using namespace agrotelem;
using json = nlohmann::json;

namespace {

constexpr EpochSeconds kT0 = 1690000000;

std::vector<IngestPoint> fresh_batch(std::size_t n, EpochSeconds t0 = kT0) {
  std::vector<IngestPoint> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({StationId{1}, FactorKind::GardenAirHumidity, t0 + static_cast<EpochSeconds>(60 * i),
                   40.0 + static_cast<double>(i % 50) * 0.25, static_cast<std::int64_t>(i)});
  }
  return out;
}

}  // namespace

TEST_CASE("ingest is idempotent") {
  PlatformService svc;
  const auto batch = fresh_batch(100);
  auto r = svc.ingest(batch);
  CHECK(r.accepted == 100);
  CHECK(r.duplicates == 0);
  const auto digest = svc.state_digest();
  r = svc.ingest(batch);
  CHECK(r.accepted == 0);
  CHECK(r.duplicates == 100);
  CHECK(svc.state_digest() == digest);
  CHECK(svc.point_count() == 100);

  // Same timestamp, different seq: a distinct point.
  auto other = batch[0];
  other.seq = 999;
  CHECK(svc.ingest(std::span(&other, 1)).accepted == 1);
}

TEST_CASE("one invalid item rejects the whole batch") {
  PlatformService svc;
  svc.ingest(fresh_batch(10));
  const auto digest = svc.state_digest();
  auto batch = fresh_batch(20, kT0 + 100000);
  batch[13].value = 250.0;
  try {
    svc.ingest(batch);
    FAIL("expected 400");
  } catch (const PlatformError& e) {
    CHECK(e.status() == 400);
  }
  CHECK(svc.state_digest() == digest);

  const auto res = svc.handle("POST", "/api/v1/ingest", {}, encode_ingest_body(batch));
  CHECK(res.status == 400);
  CHECK(res.body.find("points[13]") != std::string::npos);
  CHECK(svc.point_count() == 10);

  CHECK_THROWS_AS(svc.ingest(fresh_batch(1001)), PlatformError);
  CHECK(svc.handle("POST", "/api/v1/ingest", {}, "{not json").status == 400);
  CHECK(svc.handle("POST", "/api/v1/ingest", {},
                   R"({"points":[{"station":1,"kind":"Nope","timestamp":1,"value":1,"seq":1}]})")
            .status == 400);
  CHECK(svc.handle("POST", "/api/v1/ingest", {},
                   R"({"points":[{"station":0,"kind":"GardenUv","timestamp":1,"value":1,"seq":1}]})")
            .status == 400);
}

TEST_CASE("ingest body round-trip") {
  const auto batch = fresh_batch(5);
  CHECK(decode_ingest_body(encode_ingest_body(batch)) == batch);
  const auto j = json::parse(encode_ingest_body(batch));
  CHECK(j["points"][0]["kind"] == "GardenAirHumidity");
  CHECK(j["points"][0]["station"] == 1);
}

TEST_CASE("query range is inclusive on both ends") {
  PlatformService svc;
  std::vector<IngestPoint> pts;
  for (EpochSeconds t : {10, 15, 20, 30, 35}) pts.push_back({StationId{2}, FactorKind::GardenUv, t, 1.5, t});
  svc.ingest(pts);
  const auto got = svc.query(StationId{2}, FactorKind::GardenUv, 15, 30);
  REQUIRE(got.size() == 3);
  CHECK(got[0].timestamp == 15);
  CHECK(got[2].timestamp == 30);
  CHECK(svc.query(StationId{2}, FactorKind::GardenUv, 31, 34).empty());
  CHECK(svc.query(StationId{3}, FactorKind::GardenUv, 0, 100).empty());
  CHECK_THROWS_AS(svc.query(StationId{2}, FactorKind::GardenUv, 30, 15), PlatformError);
}

TEST_CASE("CSV export") {
  PlatformService svc;
  CHECK(svc.export_csv(StationId{1}, FactorKind::GardenLuminosity, 0, 100) == "timestamp,value\n");

  std::vector<IngestPoint> pts{{StationId{1}, FactorKind::GardenLuminosity, 100, 40000.0, 1},
                               {StationId{1}, FactorKind::GardenLuminosity, 200, 0.1 + 0.2, 2},
                               {StationId{1}, FactorKind::GardenLuminosity, 300, 2.0 / 3.0, 3}};
  svc.ingest(pts);
  const auto csv = svc.export_csv(StationId{1}, FactorKind::GardenLuminosity, 0, 1000);
  CHECK(csv.rfind("timestamp,value\n100,40000\n", 0) == 0);
  const auto parsed = parse_series_csv(csv);
  REQUIRE(parsed.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(parsed[i].first == pts[i].timestamp);
    CHECK(parsed[i].second == pts[i].value);  // exact
  }
}

TEST_CASE("outage answers 503 for ingest only") {
  std::int64_t now = 0;
  PlatformService svc([&] { return now; });
  svc.ingest(fresh_batch(3));
  svc.set_outage_until(5000);
  CHECK(svc.in_outage());
  const auto body = encode_ingest_body(fresh_batch(3, kT0 + 1000));
  CHECK(svc.handle("POST", "/api/v1/ingest", {}, body).status == 503);
  CHECK(svc.handle("GET", "/api/v1/series/1/GardenAirHumidity", {}, "").status == 200);
  CHECK(json::parse(svc.handle("GET", "/healthz", {}, "").body)["status"] == "degraded");
  now = 5000;
  CHECK(svc.handle("POST", "/api/v1/ingest", {}, body).status == 200);
  CHECK(svc.point_count() == 6);
}

TEST_CASE("router") {
  PlatformService svc;
  svc.ingest(fresh_batch(4));
  CHECK(svc.handle("GET", "/healthz", {}, "").status == 200);
  CHECK(svc.handle("POST", "/healthz", {}, "").status == 405);
  CHECK(svc.handle("GET", "/api/v1/ingest", {}, "").status == 405);
  CHECK(svc.handle("GET", "/nope", {}, "").status == 404);
  CHECK(svc.handle("GET", "/api/v1/series/1/Bogus", {}, "").status == 404);
  CHECK(svc.handle("GET", "/api/v1/series/0/GardenUv", {}, "").status == 404);
  CHECK(svc.handle("GET", "/api/v1/series/x/GardenUv", {}, "").status == 404);
  CHECK(svc.handle("GET", "/api/v1/series/1/GardenUv/extra", {}, "").status == 404);
  CHECK(svc.handle("GET", "/api/v1/series/1/GardenUv", {{"from", "abc"}}, "").status == 400);
  CHECK(svc.handle("GET", "/api/v1/series/1/GardenUv", {{"from", "9"}, {"to", "3"}}, "").status == 400);

  const auto res = svc.handle("GET", "/api/v1/series/1/GardenAirHumidity",
                              {{"from", std::to_string(kT0 + 60)}, {"to", std::to_string(kT0 + 120)}}, "");
  CHECK(res.status == 200);
  const auto j = json::parse(res.body);
  CHECK(j["points"].size() == 2);
  CHECK(j["points"][0]["timestamp"] == kT0 + 60);

  CHECK(svc.handle("POST", "/admin/outage", {}, "{}").status == 400);
  CHECK(svc.handle("POST", "/admin/outage", {}, R"({"until_ms": 0})").status == 200);

  InProcessClient client(svc);
  CHECK(client.get("/api/v1/series/1/GardenAirHumidity/export.csv?from=0&to=" + std::to_string(kT0)).body ==
        "timestamp,value\n" + std::to_string(kT0) + ",40\n");
}

TEST_CASE("snapshot round-trip") {
  PlatformService a;
  a.ingest(fresh_batch(30));
  PlatformService b;
  b.load_snapshot_json(a.snapshot_json());
  CHECK(b.snapshot_json() == a.snapshot_json());
  CHECK(b.state_digest() == a.state_digest());
  CHECK_THROWS(b.load_snapshot_json("[]"));
}

TEST_CASE("real HTTP server on an ephemeral port") {
  PlatformService svc;
  PlatformServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread t([&] { server.listen_after_bind(); });

  HttpPlatformClient client("http://127.0.0.1:" + std::to_string(port));
  const auto body = encode_ingest_body(fresh_batch(10));
  auto r = client.post_ingest(body);
  CHECK(r.status == 200);
  CHECK(decode_ingest_result(r.body).accepted == 10);
  r = client.post_ingest(body);
  CHECK(decode_ingest_result(r.body).duplicates == 10);
  CHECK(client.get("/healthz").status == 200);
  CHECK(client.get("/api/v1/series/1/Bogus").status == 404);
  const auto csv = client.get("/api/v1/series/1/GardenAirHumidity/export.csv?from=0&to=" +
                              std::to_string(kT0 + 120));
  CHECK(csv.status == 200);
  CHECK(parse_series_csv(csv.body).size() == 3);
  CHECK(client.post_outage(std::numeric_limits<std::int64_t>::max()).status == 200);
  CHECK(client.post_ingest(body).status == 503);

  server.stop();
  t.join();

  HttpPlatformClient dead("http://127.0.0.1:" + std::to_string(port));
  CHECK(dead.get("/healthz").status == 0);
}
