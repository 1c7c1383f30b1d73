#include "agrotelem/platform_service.hpp"

#include <charconv>
#include <chrono>
#include <limits>
#include <mutex>

#include "json.hpp"
#include "text_util.hpp"

namespace agrotelem {

using nlohmann::json;

namespace {

PlatformError bad_request(const std::string& what) { return PlatformError(400, what); }

IngestPoint parse_point(const json& item, std::size_t index) {
  const std::string where = "points[" + std::to_string(index) + "]";
  if (!item.is_object()) throw bad_request(where + ": not an object");
  auto require = [&](const char* field) -> const json& {
    auto it = item.find(field);
    if (it == item.end()) throw bad_request(where + ": missing '" + field + "'");
    return *it;
  };
  const json& station = require("station");
  const json& kind = require("kind");
  const json& timestamp = require("timestamp");
  const json& value = require("value");
  const json& seq = require("seq");

  if (!station.is_number_integer() || station.get<std::int64_t>() < 1 ||
      station.get<std::int64_t>() > 255) {
    throw bad_request(where + ".station: expected integer 1..255");
  }
  if (!kind.is_string()) throw bad_request(where + ".kind: expected string");
  const auto parsed_kind = parse_kind(kind.get<std::string>());
  if (!parsed_kind) throw bad_request(where + ".kind: unknown kind '" + kind.get<std::string>() + "'");
  if (!timestamp.is_number_integer() || timestamp.get<std::int64_t>() < 0) {
    throw bad_request(where + ".timestamp: expected non-negative integer");
  }
  if (!value.is_number()) throw bad_request(where + ".value: expected number");
  if (!seq.is_number_integer() || seq.get<std::int64_t>() < 0) {
    throw bad_request(where + ".seq: expected non-negative integer");
  }

  IngestPoint p;
  p.station = StationId(static_cast<std::uint8_t>(station.get<int>()));
  p.kind = *parsed_kind;
  p.timestamp = timestamp.get<std::int64_t>();
  p.value = value.get<double>();
  p.seq = seq.get<std::int64_t>();
  try {
    validate_sample(Sample{p.station, p.kind, p.timestamp, p.value});
  } catch (const SampleError& e) {
    throw bad_request(where + ": " + e.what());
  }
  return p;
}

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

HttpResponse json_response(int status, const json& body) {
  return {status, "application/json", body.dump()};
}

HttpResponse error_response(int status, std::string_view message) {
  return json_response(status, json{{"error", message}});
}

std::int64_t parse_bound(const std::map<std::string, std::string>& params, const char* name,
                         std::int64_t fallback) {
  auto it = params.find(name);
  if (it == params.end() || it->second.empty()) return fallback;
  auto v = detail::parse_int<std::int64_t>(it->second);
  if (!v) throw bad_request(std::string("query parameter '") + name + "' must be an integer");
  return *v;
}

}  // namespace

std::string encode_ingest_body(std::span<const IngestPoint> points) {
  json arr = json::array();
  for (const auto& p : points) {
    arr.push_back({{"station", p.station.value()},
                   {"kind", kind_name(p.kind)},
                   {"timestamp", p.timestamp},
                   {"value", p.value},
                   {"seq", p.seq}});
  }
  return json{{"points", std::move(arr)}}.dump();
}

std::vector<IngestPoint> decode_ingest_body(std::string_view body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw bad_request("malformed JSON");
  if (!doc.is_object() || !doc.contains("points") || !doc["points"].is_array()) {
    throw bad_request("expected an object with a 'points' array");
  }
  const auto& arr = doc["points"];
  if (arr.size() > kMaxIngestBatch) {
    throw bad_request("batch of " + std::to_string(arr.size()) + " exceeds " +
                      std::to_string(kMaxIngestBatch) + " points");
  }
  std::vector<IngestPoint> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(parse_point(arr[i], i));
  return out;
}

std::string encode_ingest_result(const IngestResult& r) {
  return json{{"accepted", r.accepted}, {"duplicates", r.duplicates}}.dump();
}

IngestResult decode_ingest_result(std::string_view body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("accepted") ||
      !doc.contains("duplicates")) {
    throw std::runtime_error("malformed ingest response");
  }
  return {doc["accepted"].get<std::size_t>(), doc["duplicates"].get<std::size_t>()};
}

std::string format_series_csv(std::span<const SeriesPoint> points) {
  std::string out = "timestamp,value\n";
  for (const auto& p : points) {
    out += std::to_string(p.timestamp);
    out += ',';
    out += shortest(p.value);
    out += '\n';
  }
  return out;
}

std::vector<std::pair<EpochSeconds, double>> parse_series_csv(std::string_view csv) {
  std::vector<std::pair<EpochSeconds, double>> out;
  bool header = true;
  for (auto line : detail::split(csv, '\n')) {
    line = detail::trim(line);
    if (line.empty()) continue;
    if (header) {
      if (line != "timestamp,value") throw std::runtime_error("missing CSV header");
      header = false;
      continue;
    }
    const auto f = detail::split(line, ',');
    auto ts = f.size() == 2 ? detail::parse_int<EpochSeconds>(f[0]) : std::nullopt;
    auto v = f.size() == 2 ? detail::parse_double(f[1]) : std::nullopt;
    if (!ts || !v) throw std::runtime_error("bad CSV row: " + std::string(line));
    out.emplace_back(*ts, *v);
  }
  if (header) throw std::runtime_error("missing CSV header");
  return out;
}

PlatformService::PlatformService()
    : PlatformService([] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
      }) {}

PlatformService::PlatformService(Clock clock) : clock_(std::move(clock)) {}

bool PlatformService::in_outage_locked() const { return clock_() < outage_until_ms_; }

IngestResult PlatformService::ingest(std::span<const IngestPoint> batch) {
  if (batch.size() > kMaxIngestBatch) {
    std::unique_lock lock(mu_);
    ++stats_.rejected_batches;
    throw bad_request("batch exceeds " + std::to_string(kMaxIngestBatch) + " points");
  }
  // Validate everything before touching the store.
  std::string invalid;
  for (std::size_t i = 0; i < batch.size() && invalid.empty(); ++i) {
    try {
      validate_sample(Sample{batch[i].station, batch[i].kind, batch[i].timestamp, batch[i].value});
      if (batch[i].seq < 0 || batch[i].timestamp < 0) throw bad_request("negative seq/timestamp");
    } catch (const std::exception& e) {
      invalid = "points[" + std::to_string(i) + "]: " + e.what();
    }
  }

  std::unique_lock lock(mu_);
  if (in_outage_locked()) {
    ++stats_.unavailable;
    throw PlatformError(503, "platform unavailable (outage injected)");
  }
  if (!invalid.empty()) {
    ++stats_.rejected_batches;
    throw bad_request(invalid);
  }
  IngestResult r;
  for (const auto& p : batch) {
    auto& series = store_[{p.station.value(), p.kind}];
    if (series.emplace(PointKey{p.timestamp, p.seq}, p.value).second) {
      ++r.accepted;
    } else {
      ++r.duplicates;
    }
  }
  ++stats_.batches;
  stats_.accepted += r.accepted;
  stats_.duplicates += r.duplicates;
  return r;
}

std::vector<SeriesPoint> PlatformService::query(StationId station, FactorKind kind,
                                                EpochSeconds from, EpochSeconds to) const {
  if (from > to) throw bad_request("from must be <= to");
  std::shared_lock lock(mu_);
  std::vector<SeriesPoint> out;
  auto it = store_.find({station.value(), kind});
  if (it == store_.end()) return out;
  const auto& series = it->second;
  auto lo = series.lower_bound({from, std::numeric_limits<std::int64_t>::min()});
  auto hi = series.upper_bound({to, std::numeric_limits<std::int64_t>::max()});
  for (; lo != hi; ++lo) out.push_back({lo->first.first, lo->second, lo->first.second});
  return out;
}

std::string PlatformService::export_csv(StationId station, FactorKind kind, EpochSeconds from,
                                        EpochSeconds to) const {
  return format_series_csv(query(station, kind, from, to));
}

void PlatformService::set_outage_until(std::int64_t until_ms) {
  std::unique_lock lock(mu_);
  outage_until_ms_ = until_ms;
}

bool PlatformService::in_outage() const {
  std::shared_lock lock(mu_);
  return in_outage_locked();
}

std::size_t PlatformService::point_count() const {
  std::shared_lock lock(mu_);
  std::size_t n = 0;
  for (const auto& [key, series] : store_) n += series.size();
  return n;
}

std::string PlatformService::snapshot_json() const {
  std::shared_lock lock(mu_);
  json arr = json::array();
  for (const auto& [key, series] : store_) {
    if (series.empty()) continue;
    json points = json::array();
    for (const auto& [pk, value] : series) {
      points.push_back({{"timestamp", pk.first}, {"value", value}, {"seq", pk.second}});
    }
    arr.push_back({{"station", key.first}, {"kind", kind_name(key.second)}, {"points", points}});
  }
  return json{{"series", std::move(arr)}}.dump();
}

void PlatformService::load_snapshot_json(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.contains("series") || !doc["series"].is_array()) {
    throw std::runtime_error("malformed platform snapshot");
  }
  std::map<SeriesKey, Series> loaded;
  for (const auto& s : doc["series"]) {
    const auto kind = parse_kind(s.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("snapshot: unknown kind");
    auto& series = loaded[{s.at("station").get<std::uint8_t>(), *kind}];
    for (const auto& p : s.at("points")) {
      series.emplace(PointKey{p.at("timestamp").get<EpochSeconds>(), p.at("seq").get<std::int64_t>()},
                     p.at("value").get<double>());
    }
  }
  std::unique_lock lock(mu_);
  store_ = std::move(loaded);
}

std::uint64_t PlatformService::state_digest() const { return fnv1a(snapshot_json()); }

PlatformService::Stats PlatformService::stats() const {
  std::shared_lock lock(mu_);
  return stats_;
}

HttpResponse PlatformService::handle(std::string_view method, std::string_view path,
                                     const std::map<std::string, std::string>& params,
                                     std::string_view body) {
  try {
    if (path == "/healthz") {
      if (method != "GET") return error_response(405, "method not allowed");
      return json_response(200, json{{"status", in_outage() ? "degraded" : "ok"}});
    }
    if (path == "/api/v1/ingest") {
      if (method != "POST") return error_response(405, "method not allowed");
      const auto points = decode_ingest_body(body);
      return {200, "application/json", encode_ingest_result(ingest(points))};
    }
    if (path == "/admin/outage") {
      if (method != "POST") return error_response(405, "method not allowed");
      json doc = json::parse(body, nullptr, false);
      if (doc.is_discarded() || !doc.is_object() || !doc.contains("until_ms") ||
          !doc["until_ms"].is_number_integer()) {
        return error_response(400, "expected {\"until_ms\": <integer>}");
      }
      set_outage_until(doc["until_ms"].get<std::int64_t>());
      return json_response(200, json{{"outage_until_ms", doc["until_ms"]}});
    }

    constexpr std::string_view kSeriesPrefix = "/api/v1/series/";
    if (path.starts_with(kSeriesPrefix)) {
      const auto parts = detail::split(path.substr(kSeriesPrefix.size()), '/');
      const bool csv = parts.size() == 3 && parts[2] == "export.csv";
      if (parts.size() != 2 && !csv) return error_response(404, "not found");
      if (method != "GET") return error_response(405, "method not allowed");
      const auto station = detail::parse_int<int>(parts[0]);
      if (!station || *station < 1 || *station > 255) {
        return error_response(404, "unknown station '" + std::string(parts[0]) + "'");
      }
      const auto kind = parse_kind(parts[1]);
      if (!kind) return error_response(404, "unknown kind '" + std::string(parts[1]) + "'");
      const auto from = parse_bound(params, "from", std::numeric_limits<std::int64_t>::min());
      const auto to = parse_bound(params, "to", std::numeric_limits<std::int64_t>::max());
      const StationId sid(static_cast<std::uint8_t>(*station));
      if (csv) return {200, "text/csv", export_csv(sid, *kind, from, to)};

      json points = json::array();
      for (const auto& p : query(sid, *kind, from, to)) {
        points.push_back({{"timestamp", p.timestamp}, {"value", p.value}, {"seq", p.seq}});
      }
      return json_response(
          200, json{{"station", *station}, {"kind", parts[1]}, {"points", std::move(points)}});
    }
    return error_response(404, "not found");
  } catch (const PlatformError& e) {
    return error_response(e.status(), e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

}  // namespace agrotelem
