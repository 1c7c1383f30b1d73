#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "agrotelem/gateway.hpp"
#include "agrotelem/radio_link.hpp"
#include "agrotelem/sensor_sim.hpp"
#include "agrotelem/station_remote.hpp"

namespace agrotelem {

// Bad configuration; the message names the JSON line/column or field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RemoteSetup {
  RemoteConfig config;
  std::uint64_t seed = 1;
  std::vector<SignalModel> models;  // empty: default garden + compost sets
};

struct OutageWindow {
  SimTime from{0};
  SimTime until{0};
};

struct SimulationConfig {
  EpochSeconds start_epoch = 1689984000;  // 2023-07-22T00:00:00Z
  std::chrono::seconds duration{86400};
  std::chrono::seconds drain_limit{86400};
  std::vector<RemoteSetup> remotes;
  ChannelConfig channel;
  GatewayConfig gateway;
  std::chrono::seconds flush_period{60};
  bool reset_storage = true;
  std::string platform_url = "inprocess";
  std::vector<OutageWindow> outages;
  std::optional<std::filesystem::path> report_path;
  std::optional<std::filesystem::path> snapshot_path;
  // Test hook: the gateway "crashes" after the platform accepts this batch
  // (1-based) and before its cursor is persisted, then restarts.
  std::optional<std::uint64_t> crash_after_batch;
};

// Relative paths in the document resolve against `base_dir`. Throws ConfigError.
SimulationConfig parse_simulation_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir = {});
SimulationConfig load_simulation_config(const std::filesystem::path& path);

// Throws ConfigError.
void check_simulation_config(const SimulationConfig& cfg);

// One remote (station 1, 300 s period, unbounded retries), perfect channel,
// one simulated day.
SimulationConfig default_simulation_config();

// Replaces the channel seed and every remote's sensor seed.
void override_seeds(SimulationConfig& cfg, std::uint64_t seed);

struct SimulationReport {
  std::int64_t duration_s = 0;
  std::int64_t simulated_end_s = 0;
  bool drained = false;

  std::uint64_t cycles = 0;
  std::uint64_t samples_generated = 0;
  std::uint64_t frames_built = 0;
  std::uint64_t frames_sent = 0;
  std::uint64_t retries = 0;
  std::uint64_t acks_received = 0;
  std::uint64_t stray_acks = 0;
  std::uint64_t evictions = 0;

  RadioChannel::Stats channel;
  GatewayCounters gateway;
  std::uint64_t gateway_restarts = 0;
  std::uint64_t outages_injected = 0;

  std::uint64_t platform_points = 0;
  std::uint64_t duplicates_absorbed = 0;  // gateway dedupe hits + platform idempotent hits
  std::uint64_t samples_delivered = 0;    // ledger samples found exactly once with the right value
  std::uint64_t missing = 0;
  std::uint64_t unexpected_points = 0;
  std::uint64_t value_mismatches = 0;
  double completeness = 0.0;
  bool completeness_required = false;  // loss < 1 and every remote retries without bound
  std::string platform_digest;          // hex; empty when the platform is remote

  // 0 when the run meets its completeness contract, 1 otherwise.
  int exit_code() const;
  std::string to_json() const;
  std::string to_text() const;
};

struct SimulationResult {
  SimulationReport report;
  std::string platform_snapshot;  // in-process platform only
};

// Deterministic: the same config produces the same report and snapshot.
SimulationResult run_simulation(const SimulationConfig& cfg);

}  // namespace agrotelem
