#include "agrotelem/simulation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "agrotelem/platform_http.hpp"
#include "agrotelem/platform_service.hpp"
#include "json.hpp"

namespace agrotelem {

using nlohmann::json;

namespace {

// ---- config parsing ---------------------------------------------------------

class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
    std::string where = path_;
    if (!field.empty()) where += where.empty() ? field : "." + field;
    throw ConfigError((where.empty() ? std::string("config") : where) + ": " + msg);
  }

  std::string child(const std::string& field) const {
    return path_.empty() ? field : path_ + "." + field;
  }

  const json* find(const std::string& field) {
    seen_.insert(field);
    auto it = obj_.find(field);
    if (it == obj_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::optional<std::int64_t> integer(const std::string& field) {
    const json* v = find(field);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) fail(field, "expected an integer");
    return v->get<std::int64_t>();
  }

  std::optional<double> number(const std::string& field) {
    const json* v = find(field);
    if (!v) return std::nullopt;
    if (!v->is_number()) fail(field, "expected a number");
    return v->get<double>();
  }

  std::optional<std::string> string(const std::string& field) {
    const json* v = find(field);
    if (!v) return std::nullopt;
    if (!v->is_string()) fail(field, "expected a string");
    return v->get<std::string>();
  }

  std::optional<bool> boolean(const std::string& field) {
    const json* v = find(field);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) fail(field, "expected true or false");
    return v->get<bool>();
  }

  bool present(const std::string& field) const { return obj_.contains(field); }

  // Rejects keys that were never looked up (typos).
  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) fail(key, "unknown field");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::vector<SignalModel> parse_models(const json& arr, const std::string& path, std::uint64_t seed) {
  if (!arr.is_array()) throw ConfigError(path + ": expected an array");
  std::vector<SignalModel> models;
  std::set<FactorKind> kinds;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Fields f(arr[i], path + "[" + std::to_string(i) + "]");
    SignalModel m;
    const auto kind_name_str = f.string("kind");
    if (!kind_name_str) f.fail("kind", "required");
    const auto kind = parse_kind(*kind_name_str);
    if (!kind) f.fail("kind", "unknown kind '" + *kind_name_str + "'");
    if (!kinds.insert(*kind).second) f.fail("kind", "duplicate kind '" + *kind_name_str + "'");
    m.kind = *kind;
    m.baseline = f.number("baseline").value_or(0.0);
    m.diurnal_amplitude = f.number("diurnal_amplitude").value_or(0.0);
    m.phase_hours = f.number("phase").value_or(0.0);
    m.noise_sd = f.number("noise_sd").value_or(0.0);
    m.seed = seed;
    f.finish();
    try {
      check_model(m);
    } catch (const std::invalid_argument& e) {
      f.fail("", e.what());
    }
    models.push_back(m);
  }
  return models;
}

RemoteSetup parse_remote(const json& obj, const std::string& path) {
  Fields f(obj, path);
  RemoteSetup r;
  const auto station = f.integer("station");
  if (!station) f.fail("station", "required");
  if (*station < 1 || *station > 255) f.fail("station", "must be in 1..255");
  r.config.station = StationId(static_cast<std::uint8_t>(*station));
  if (auto v = f.integer("seed")) r.seed = static_cast<std::uint64_t>(*v);
  if (auto v = f.integer("sample_period_s")) {
    if (*v <= 0) f.fail("sample_period_s", "must be > 0");
    r.config.sample_period = std::chrono::seconds(*v);
  }
  if (auto v = f.integer("max_retries")) {
    if (*v < 0) f.fail("max_retries", "must be >= 0 (null for unbounded)");
    r.config.max_retries = static_cast<int>(*v);
  }
  if (auto v = f.integer("ack_timeout_ms")) {
    if (*v <= 0) f.fail("ack_timeout_ms", "must be > 0");
    r.config.ack_timeout = SimTime(*v);
  }
  if (auto v = f.integer("buffer_capacity")) {
    if (*v < 1) f.fail("buffer_capacity", "must be >= 1");
    r.config.buffer_capacity = static_cast<std::size_t>(*v);
  }
  if (auto v = f.integer("first_seq")) {
    if (*v < 0 || *v > 65535) f.fail("first_seq", "must be in 0..65535");
    r.config.first_seq = static_cast<std::uint16_t>(*v);
  }
  if (const json* m = f.find("models")) r.models = parse_models(*m, f.child("models"), r.seed);
  f.finish();
  return r;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---- run --------------------------------------------------------------------

struct SimulatedCrash {};

struct LedgerKey {
  std::uint8_t station;
  FactorKind kind;
  EpochSeconds timestamp;
  auto operator<=>(const LedgerKey&) const = default;
};

double canonical_value(FactorKind kind, double generated) {
  const double v = dequantize(kind, quantize(kind, generated));
  return std::stod(format_value(kind, v));
}

}  // namespace

SimulationConfig parse_simulation_config(std::string_view text,
                                         const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(line_col(text, e.byte > 0 ? e.byte - 1 : 0) + ": invalid JSON (" +
                      std::string(e.what()) + ")");
  }

  SimulationConfig cfg;
  cfg.remotes.clear();
  Fields top(doc, "");
  if (auto v = top.integer("start_epoch")) {
    if (*v < 0) top.fail("start_epoch", "must be >= 0");
    cfg.start_epoch = *v;
  }
  const auto duration = top.integer("duration_s");
  if (!duration) top.fail("duration_s", "required");
  if (*duration <= 0) top.fail("duration_s", "must be > 0");
  cfg.duration = std::chrono::seconds(*duration);
  if (auto v = top.integer("drain_limit_s")) {
    if (*v < 0) top.fail("drain_limit_s", "must be >= 0");
    cfg.drain_limit = std::chrono::seconds(*v);
  }

  const json* remotes = top.find("remotes");
  if (!remotes || !remotes->is_array() || remotes->empty()) {
    top.fail("remotes", "expected a non-empty array");
  }
  for (std::size_t i = 0; i < remotes->size(); ++i) {
    cfg.remotes.push_back(parse_remote((*remotes)[i], "remotes[" + std::to_string(i) + "]"));
  }

  if (const json* ch = top.find("channel")) {
    Fields f(*ch, "channel");
    cfg.channel.loss_probability = f.number("loss_probability").value_or(0.0);
    cfg.channel.duplicate_probability = f.number("duplicate_probability").value_or(0.0);
    cfg.channel.max_delay = SimTime(f.integer("max_delay_ms").value_or(0));
    cfg.channel.seed = static_cast<std::uint64_t>(f.integer("seed").value_or(0));
    f.finish();
    try {
      check_channel_config(cfg.channel);
    } catch (const std::invalid_argument& e) {
      f.fail("", e.what());
    }
  }

  if (const json* gw = top.find("gateway")) {
    Fields f(*gw, "gateway");
    if (auto v = f.string("log_path")) cfg.gateway.log_path = *v;
    if (auto v = f.string("cursor_path")) cfg.gateway.cursor_path = *v;
    if (auto v = f.integer("batch_size")) {
      if (*v < 1 || *v > static_cast<std::int64_t>(kMaxIngestBatch)) {
        f.fail("batch_size", "must be in 1.." + std::to_string(kMaxIngestBatch));
      }
      cfg.gateway.batch_size = static_cast<std::size_t>(*v);
    }
    if (auto v = f.integer("flush_period_s")) {
      if (*v <= 0) f.fail("flush_period_s", "must be > 0");
      cfg.flush_period = std::chrono::seconds(*v);
    }
    if (auto v = f.boolean("fsync")) cfg.gateway.sync = *v;
    if (auto v = f.boolean("reset_storage")) cfg.reset_storage = *v;
    f.finish();
  }
  cfg.gateway.log_path = resolve(base_dir, cfg.gateway.log_path);
  cfg.gateway.cursor_path = resolve(base_dir, cfg.gateway.cursor_path);

  if (const json* pl = top.find("platform")) {
    Fields f(*pl, "platform");
    if (auto v = f.string("url")) cfg.platform_url = *v;
    if (auto v = f.string("snapshot_path")) cfg.snapshot_path = resolve(base_dir, *v);
    if (const json* outages = f.find("outages")) {
      if (!outages->is_array()) f.fail("outages", "expected an array");
      for (std::size_t i = 0; i < outages->size(); ++i) {
        Fields o((*outages)[i], "platform.outages[" + std::to_string(i) + "]");
        const auto from = o.integer("from_s");
        const auto until = o.integer("until_s");
        if (!from || !until) o.fail("", "from_s and until_s are required");
        if (*from < 0 || *until <= *from) o.fail("", "need 0 <= from_s < until_s");
        o.finish();
        cfg.outages.push_back({std::chrono::seconds(*from), std::chrono::seconds(*until)});
      }
    }
    f.finish();
  }

  if (auto v = top.string("report_path")) cfg.report_path = resolve(base_dir, *v);

  if (const json* hooks = top.find("test_hooks")) {
    Fields f(*hooks, "test_hooks");
    if (auto v = f.integer("gateway_crash_after_batch")) {
      if (*v < 1) f.fail("gateway_crash_after_batch", "must be >= 1");
      cfg.crash_after_batch = static_cast<std::uint64_t>(*v);
    }
    f.finish();
  }
  top.finish();
  check_simulation_config(cfg);
  return cfg;
}

SimulationConfig load_simulation_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_simulation_config(ss.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void check_simulation_config(const SimulationConfig& cfg) {
  if (cfg.duration.count() <= 0) throw ConfigError("duration_s: must be > 0");
  if (cfg.remotes.empty()) throw ConfigError("remotes: at least one remote station is required");
  std::set<std::uint8_t> ids;
  for (std::size_t i = 0; i < cfg.remotes.size(); ++i) {
    const auto& r = cfg.remotes[i];
    const std::string where = "remotes[" + std::to_string(i) + "]";
    try {
      check_remote_config(r.config);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
    if (!ids.insert(r.config.station.value()).second) {
      throw ConfigError(where + ".station: duplicate station id");
    }
  }
  try {
    check_channel_config(cfg.channel);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("channel: ") + e.what());
  }
  if (cfg.platform_url != "inprocess" && !cfg.outages.empty()) {
    throw ConfigError("platform.outages: outage injection needs the in-process platform");
  }
  if (cfg.platform_url != "inprocess" && cfg.snapshot_path) {
    throw ConfigError("platform.snapshot_path: snapshots need the in-process platform");
  }
  const auto last = cfg.start_epoch + (cfg.duration + cfg.drain_limit).count();
  if (last > EpochSeconds{UINT32_MAX}) {
    throw ConfigError("start_epoch: run extends past the 32-bit wire timestamp range");
  }
}

SimulationConfig default_simulation_config() {
  SimulationConfig cfg;
  RemoteSetup r;
  r.config.station = StationId{1};
  r.seed = 1;
  cfg.remotes.push_back(r);
  return cfg;
}

void override_seeds(SimulationConfig& cfg, std::uint64_t seed) {
  cfg.channel.seed = seed;
  for (auto& r : cfg.remotes) {
    r.seed = seed + r.config.station.value();
    for (auto& m : r.models) m.seed = r.seed;
  }
}

SimulationResult run_simulation(const SimulationConfig& cfg) {
  check_simulation_config(cfg);

  for (const auto& p : {cfg.gateway.log_path, cfg.gateway.cursor_path}) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  }
  if (cfg.reset_storage) {
    std::filesystem::remove(cfg.gateway.log_path);
    std::filesystem::remove(cfg.gateway.cursor_path);
  }

  SimTime now{0};
  std::unique_ptr<PlatformService> service;
  std::unique_ptr<PlatformClient> client;
  if (cfg.platform_url == "inprocess") {
    service = std::make_unique<PlatformService>([&now] { return now.count(); });
    client = std::make_unique<InProcessClient>(*service);
  } else {
    client = std::make_unique<HttpPlatformClient>(cfg.platform_url);
  }

  std::vector<RemoteStation> remotes;
  std::vector<std::unique_ptr<RadioChannel>> links;
  for (std::size_t i = 0; i < cfg.remotes.size(); ++i) {
    const auto& setup = cfg.remotes[i];
    auto models = setup.models;
    if (models.empty()) {
      models = default_garden_models(setup.seed);
      auto compost = default_compost_models(setup.seed);
      models.insert(models.end(), compost.begin(), compost.end());
    }
    remotes.emplace_back(setup.config, std::move(models), cfg.start_epoch);
    auto ch = cfg.channel;
    ch.seed = cfg.channel.seed + i;  // one independent link per remote
    links.push_back(std::make_unique<RadioChannel>(ch));
  }

  SimulationReport report;
  std::uint64_t batches_accepted = 0;
  bool crashed = false;
  auto make_gateway = [&] {
    auto gw = std::make_unique<Gateway>(cfg.gateway, *client);
    if (cfg.crash_after_batch && !crashed) {
      gw->set_crash_hook([&](const UploadCursor&) {
        if (++batches_accepted == *cfg.crash_after_batch) {
          crashed = true;
          throw SimulatedCrash{};
        }
      });
    }
    return gw;
  };
  auto gateway = make_gateway();
  GatewayCounters carried;  // counters of gateway instances lost to crashes

  std::map<LedgerKey, double> ledger;

  const SimTime sampling_end = cfg.duration;
  const SimTime hard_end = cfg.duration + cfg.drain_limit;
  std::vector<SimTime> next_cycle(remotes.size(), SimTime{0});
  SimTime next_flush{0};
  std::size_t next_outage = 0;

  auto deliver_due = [&] {
    bool progressed = true;
    while (progressed) {
      progressed = false;
      for (std::size_t i = 0; i < remotes.size(); ++i) {
        auto& link = *links[i];
        if (auto t = link.next_delivery(Endpoint::Base); t && *t <= now) {
          gateway->service_link(link, now);
          progressed = true;
        }
        if (auto t = link.next_delivery(Endpoint::Remote); t && *t <= now) {
          remotes[i].poll_acks(link, now);
          progressed = true;
        }
      }
    }
  };

  auto drained = [&] {
    for (std::size_t i = 0; i < remotes.size(); ++i) {
      if (remotes[i].has_sendable() || links[i]->in_flight() > 0) return false;
    }
    return !gateway->has_pending();
  };

  while (true) {
    while (next_outage < cfg.outages.size() && cfg.outages[next_outage].from <= now) {
      client->post_outage(cfg.outages[next_outage].until.count());
      ++report.outages_injected;
      ++next_outage;
    }

    deliver_due();

    for (std::size_t i = 0; i < remotes.size(); ++i) {
      if (next_cycle[i] > now) continue;
      if (now < sampling_end) {
        remotes[i].run_cycle(*links[i], now);
        for (const auto& s : remotes[i].last_samples()) {
          ledger[{s.station.value(), s.kind, s.timestamp}] = canonical_value(s.kind, s.value);
        }
      } else {
        remotes[i].retransmit(*links[i], now);
      }
      next_cycle[i] += remotes[i].config().sample_period;
    }

    deliver_due();

    if (next_flush <= now) {
      UploadReport up;
      try {
        up = gateway->flush_pending(now);
      } catch (const SimulatedCrash&) {
        const auto c = gateway->counters();
        carried.upload_batches += c.upload_batches;
        carried.records_uploaded += c.records_uploaded;
        carried.upload_duplicates += c.upload_duplicates;
        carried.upload_failures += c.upload_failures;
        carried.frames_received += c.frames_received;
        carried.crc_errors += c.crc_errors;
        carried.decode_errors += c.decode_errors;
        carried.rejected_frames += c.rejected_frames;
        carried.duplicate_frames += c.duplicate_frames;
        carried.acks_sent += c.acks_sent;
        carried.records_logged += c.records_logged;
        carried.cursor_resets += c.cursor_resets;
        gateway.reset();
        gateway = make_gateway();
        ++report.gateway_restarts;
        up = gateway->flush_pending(now);
      }
      if (up.failed_status) {
        next_flush = gateway->next_upload_attempt().value_or(now + cfg.flush_period);
      } else {
        next_flush = now + cfg.flush_period;
      }
    }

    if (now >= sampling_end && drained()) {
      report.drained = true;
      break;
    }
    if (now >= hard_end) break;

    // Advance to the next event.
    SimTime next = hard_end;
    for (std::size_t i = 0; i < remotes.size(); ++i) {
      if (now < sampling_end || remotes[i].has_sendable()) next = std::min(next, next_cycle[i]);
      if (auto t = links[i]->next_delivery()) next = std::min(next, *t);
    }
    if (gateway->has_pending() || now < sampling_end) next = std::min(next, next_flush);
    if (next_outage < cfg.outages.size()) next = std::min(next, cfg.outages[next_outage].from);
    now = std::max(next, now + SimTime{1});
  }

  // ---- report ----
  report.duration_s = cfg.duration.count();
  report.simulated_end_s = std::chrono::duration_cast<std::chrono::seconds>(now).count();
  bool unbounded = true;
  for (std::size_t i = 0; i < remotes.size(); ++i) {
    const auto& c = remotes[i].counters();
    report.cycles += c.cycles;
    report.samples_generated += c.samples;
    report.frames_built += c.frames_built;
    report.frames_sent += c.frames_sent;
    report.retries += c.retries;
    report.acks_received += c.acks;
    report.stray_acks += c.stray_acks;
    report.evictions += c.evictions;
    const auto s = links[i]->stats();
    report.channel.transmissions += s.transmissions;
    report.channel.lost += s.lost;
    report.channel.duplicated += s.duplicated;
    report.channel.delivered += s.delivered;
    if (remotes[i].config().max_retries) unbounded = false;
  }
  auto g = gateway->counters();
  g.frames_received += carried.frames_received;
  g.crc_errors += carried.crc_errors;
  g.decode_errors += carried.decode_errors;
  g.rejected_frames += carried.rejected_frames;
  g.duplicate_frames += carried.duplicate_frames;
  g.acks_sent += carried.acks_sent;
  g.records_logged += carried.records_logged;
  g.upload_batches += carried.upload_batches;
  g.records_uploaded += carried.records_uploaded;
  g.upload_duplicates += carried.upload_duplicates;
  g.upload_failures += carried.upload_failures;
  g.cursor_resets += carried.cursor_resets;
  report.gateway = g;
  report.duplicates_absorbed = g.duplicate_frames + g.upload_duplicates;
  report.completeness_required = cfg.channel.loss_probability < 1.0 && unbounded;

  // Compare the generation ledger with what the platform holds.
  std::map<LedgerKey, std::vector<double>> seen;
  for (const auto& setup : cfg.remotes) {
    for (auto kind : kAllKinds) {
      const auto res = client->get("/api/v1/series/" + std::to_string(setup.config.station.value()) +
                                   "/" + std::string(kind_name(kind)));
      if (res.status != 200) continue;
      const auto doc = json::parse(res.body, nullptr, false);
      if (doc.is_discarded()) continue;
      for (const auto& p : doc["points"]) {
        seen[{setup.config.station.value(), kind, p["timestamp"].get<EpochSeconds>()}].push_back(
            p["value"].get<double>());
        ++report.platform_points;
      }
    }
  }
  for (const auto& [key, expected] : ledger) {
    auto it = seen.find(key);
    if (it == seen.end()) {
      ++report.missing;
      continue;
    }
    if (it->second.size() == 1 && it->second.front() == expected) {
      ++report.samples_delivered;
    } else {
      ++report.value_mismatches;
    }
  }
  for (const auto& [key, values] : seen) {
    if (!ledger.count(key)) report.unexpected_points += values.size();
  }
  report.completeness = ledger.empty() ? 1.0
                                       : static_cast<double>(report.samples_delivered) /
                                             static_cast<double>(ledger.size());

  SimulationResult result;
  if (service) {
    result.platform_snapshot = service->snapshot_json();
    report.platform_digest = hex64(service->state_digest());
  }
  result.report = report;

  if (cfg.snapshot_path) {
    std::ofstream out(*cfg.snapshot_path, std::ios::binary);
    out << result.platform_snapshot << '\n';
  }
  if (cfg.report_path) {
    std::ofstream out(*cfg.report_path, std::ios::binary);
    out << report.to_json() << '\n';
  }
  return result;
}

int SimulationReport::exit_code() const {
  if (completeness_required && completeness < 1.0) return 1;
  if (unexpected_points > 0 || value_mismatches > 0) return 1;
  return 0;
}

std::string SimulationReport::to_json() const {
  nlohmann::ordered_json j;
  j["duration_s"] = duration_s;
  j["simulated_end_s"] = simulated_end_s;
  j["drained"] = drained;
  j["cycles"] = cycles;
  j["samples_generated"] = samples_generated;
  j["frames_built"] = frames_built;
  j["frames_sent"] = frames_sent;
  j["retries"] = retries;
  j["acks_received"] = acks_received;
  j["stray_acks"] = stray_acks;
  j["evictions"] = evictions;
  j["channel"] = {{"transmissions", channel.transmissions},
                  {"lost", channel.lost},
                  {"duplicated", channel.duplicated},
                  {"delivered", channel.delivered}};
  nlohmann::ordered_json gw;
  gw["frames_received"] = gateway.frames_received;
  gw["crc_errors"] = gateway.crc_errors;
  gw["decode_errors"] = gateway.decode_errors;
  gw["rejected_frames"] = gateway.rejected_frames;
  gw["duplicate_frames"] = gateway.duplicate_frames;
  gw["acks_sent"] = gateway.acks_sent;
  gw["records_logged"] = gateway.records_logged;
  gw["upload_batches"] = gateway.upload_batches;
  gw["records_uploaded"] = gateway.records_uploaded;
  gw["upload_duplicates"] = gateway.upload_duplicates;
  gw["upload_failures"] = gateway.upload_failures;
  gw["cursor_resets"] = gateway.cursor_resets;
  gw["restarts"] = gateway_restarts;
  j["gateway"] = gw;
  j["outages_injected"] = outages_injected;
  j["crc_errors"] = gateway.crc_errors;
  j["records_logged"] = gateway.records_logged;
  j["records_uploaded"] = gateway.records_uploaded;
  j["duplicates_absorbed"] = duplicates_absorbed;
  j["platform_points"] = platform_points;
  j["samples_delivered"] = samples_delivered;
  j["missing"] = missing;
  j["unexpected_points"] = unexpected_points;
  j["value_mismatches"] = value_mismatches;
  j["completeness"] = completeness;
  j["completeness_required"] = completeness_required;
  j["platform_digest"] = platform_digest;
  return j.dump(2);
}

std::string SimulationReport::to_text() const {
  std::ostringstream o;
  o << "simulated " << duration_s << " s (+" << (simulated_end_s - duration_s) << " s drain"
    << (drained ? "" : ", NOT drained") << ")\n";
  o << "  samples generated   " << samples_generated << " over " << cycles << " cycles\n";
  o << "  frames built/sent   " << frames_built << " / " << frames_sent << " (retries " << retries
    << ", evictions " << evictions << ")\n";
  o << "  channel             " << channel.transmissions << " tx, " << channel.lost << " lost, "
    << channel.duplicated << " duplicated\n";
  o << "  gateway             " << gateway.records_logged << " records logged, "
    << gateway.crc_errors << " crc errors, " << gateway.duplicate_frames << " duplicate frames\n";
  o << "  upload              " << gateway.records_uploaded << " records in " << gateway.upload_batches
    << " batches, " << gateway.upload_failures << " failures, " << gateway_restarts
    << " gateway restarts\n";
  o << "  duplicates absorbed " << duplicates_absorbed << '\n';
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", completeness);
  o << "  completeness        " << buf << " (" << samples_delivered << "/" << samples_generated
    << ", missing " << missing << ", unexpected " << unexpected_points << ")\n";
  return o.str();
}

}  // namespace agrotelem
