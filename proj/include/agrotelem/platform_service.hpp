#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "agrotelem/domain.hpp"

namespace agrotelem {

inline constexpr std::size_t kMaxIngestBatch = 1000;

// One item of POST /api/v1/ingest.
struct IngestPoint {
  StationId station;
  FactorKind kind = FactorKind::GardenAirTemp;
  EpochSeconds timestamp = 0;
  double value = 0.0;
  std::int64_t seq = 0;

  friend bool operator==(const IngestPoint&, const IngestPoint&) = default;
};

struct IngestResult {
  std::size_t accepted = 0;
  std::size_t duplicates = 0;
};

struct SeriesPoint {
  EpochSeconds timestamp = 0;
  double value = 0.0;
  std::int64_t seq = 0;

  friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

// Carries the HTTP status the failure maps to (400, 404, 503).
class PlatformError : public std::runtime_error {
 public:
  PlatformError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

// JSON bodies, e.g.
// {"points":[{"station":1,"kind":"GardenAirHumidity","timestamp":1690000000,"value":55.25,"seq":17}]}
std::string encode_ingest_body(std::span<const IngestPoint> points);
// Throws PlatformError(400) on malformed JSON or any invalid item.
std::vector<IngestPoint> decode_ingest_body(std::string_view body);
std::string encode_ingest_result(const IngestResult& r);
IngestResult decode_ingest_result(std::string_view body);

// `timestamp,value` header followed by one row per point. Values use the
// shortest text that parses back to the same double.
std::string format_series_csv(std::span<const SeriesPoint> points);
std::vector<std::pair<EpochSeconds, double>> parse_series_csv(std::string_view csv);

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// In-memory stand-in for the cloud IoT platform: idempotent batch ingest keyed
// on (station, kind, timestamp, seq) and per-series range queries.
class PlatformService {
 public:
  // Returns "now" in milliseconds on the same scale as outage deadlines.
  using Clock = std::function<std::int64_t()>;

  PlatformService();
  explicit PlatformService(Clock clock);

  // All-or-nothing: any invalid item rejects the batch with 400 and stores
  // nothing. Throws PlatformError(503) while an outage is active.
  IngestResult ingest(std::span<const IngestPoint> batch);

  // Points with from <= timestamp <= to, ascending by (timestamp, seq).
  // Throws PlatformError(400) when from > to.
  std::vector<SeriesPoint> query(StationId station, FactorKind kind, EpochSeconds from,
                                 EpochSeconds to) const;

  std::string export_csv(StationId station, FactorKind kind, EpochSeconds from,
                         EpochSeconds to) const;

  // Ingest answers 503 while clock() < until_ms. 0 clears the outage.
  void set_outage_until(std::int64_t until_ms);
  bool in_outage() const;

  std::size_t point_count() const;
  // Deterministic JSON of the whole store, ordered by station, kind, timestamp, seq.
  std::string snapshot_json() const;
  void load_snapshot_json(std::string_view json);
  std::uint64_t state_digest() const;

  struct Stats {
    std::uint64_t batches = 0;
    std::uint64_t accepted = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t rejected_batches = 0;
    std::uint64_t unavailable = 0;
  };
  Stats stats() const;

  // Transport-independent router shared by the HTTP server and the
  // in-process client. `params` are the decoded query-string parameters.
  HttpResponse handle(std::string_view method, std::string_view path,
                      const std::map<std::string, std::string>& params, std::string_view body);

 private:
  using SeriesKey = std::pair<std::uint8_t, FactorKind>;
  using PointKey = std::pair<EpochSeconds, std::int64_t>;
  using Series = std::map<PointKey, double>;

  bool in_outage_locked() const;

  Clock clock_;
  mutable std::shared_mutex mu_;
  std::map<SeriesKey, Series> store_;
  std::int64_t outage_until_ms_ = 0;
  Stats stats_;
};

}  // namespace agrotelem
