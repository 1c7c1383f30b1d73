#pragma once

#include <bitset>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>

#include "agrotelem/durable_log.hpp"
#include "agrotelem/platform_http.hpp"
#include "agrotelem/radio_link.hpp"
#include "agrotelem/wire_protocol.hpp"

namespace agrotelem {

// Receiver-side duplicate filter for one station's 16-bit seq space.
// Seqs up to 2^15 - 1 ahead of the newest seen seq count as new; anything at or
// behind it is checked against the seen set. Positions are recycled as the
// newest seq advances, so no seq within the last 2^15 is ever accepted twice.
class DedupeWindow {
 public:
  // True if `seq` has not been seen; marks it seen.
  bool accept(std::uint16_t seq);
  bool seen(std::uint16_t seq) const;

 private:
  std::bitset<65536> seen_;
  std::optional<std::uint16_t> newest_;
};

struct GatewayConfig {
  std::filesystem::path log_path = "gateway.log";
  std::filesystem::path cursor_path = "gateway.cursor";
  std::size_t batch_size = 100;
  SimTime backoff_base{1000};
  SimTime backoff_cap{300000};
  bool sync = true;
};

struct GatewayCounters {
  std::uint64_t frames_received = 0;
  std::uint64_t crc_errors = 0;
  std::uint64_t decode_errors = 0;    // every decode failure other than CRC
  std::uint64_t rejected_frames = 0;  // decodable but unusable (ACK type, base id, bad value)
  std::uint64_t duplicate_frames = 0;
  std::uint64_t acks_sent = 0;
  std::uint64_t records_logged = 0;
  std::uint64_t upload_batches = 0;
  std::uint64_t records_uploaded = 0;  // accepted by the platform
  std::uint64_t upload_duplicates = 0; // absorbed by platform idempotency
  std::uint64_t upload_failures = 0;
  std::uint64_t cursor_resets = 0;

  friend bool operator==(const GatewayCounters&, const GatewayCounters&) = default;
};

struct AckDecision {
  std::optional<Payload> ack;  // encoded ACK to send back, if any
  std::optional<DecodeErrorKind> error;
  bool duplicate = false;
  std::size_t appended = 0;
};

struct UploadReport {
  bool attempted = false;  // false while backing off
  std::size_t batches = 0;
  std::size_t records = 0;
  std::size_t accepted = 0;
  std::size_t duplicates = 0;
  std::optional<int> failed_status;  // UploadFailed(status); 0 = transport error
  bool caught_up = false;
};

// Base station: ACKs and logs radio frames, then uploads the log to the
// platform in batches. The log is written before an ACK is issued and the
// upload cursor only moves after the platform acknowledges a batch.
class Gateway {
 public:
  // Opens (or creates) the log and cursor files and runs recover().
  Gateway(GatewayConfig cfg, PlatformClient& platform);

  // Never throws for bad input; decode failures are counted.
  AckDecision on_frame(std::span<const std::uint8_t> bytes, SimTime now);

  // Receives everything due on `link` and transmits the resulting ACKs.
  void service_link(RadioChannel& link, SimTime now);

  UploadReport flush_pending(SimTime now);

  // Reloads the cursor (resetting to 0 if missing or corrupt) and rebuilds the
  // dedupe windows from the log.
  void recover();

  // Invoked after the platform accepted a batch and before the cursor is
  // persisted. Throwing from it models a crash at that point.
  void set_crash_hook(std::function<void(const UploadCursor& next)> hook);

  UploadCursor cursor() const;
  std::uint64_t log_size() const { return log_.size(); }
  bool has_pending() const;
  std::optional<SimTime> next_upload_attempt() const;
  GatewayCounters counters() const;
  const DurableLog& log() const { return log_; }
  const GatewayConfig& config() const { return cfg_; }

 private:
  GatewayConfig cfg_;
  PlatformClient& platform_;
  DurableLog log_;
  CursorStore cursor_store_;

  mutable std::mutex rx_mu_;
  std::map<std::uint8_t, DedupeWindow> windows_;

  mutable std::mutex upload_mu_;
  UploadCursor cursor_;
  int consecutive_failures_ = 0;
  std::optional<SimTime> retry_at_;
  std::function<void(const UploadCursor&)> crash_hook_;

  mutable std::mutex counters_mu_;
  GatewayCounters counters_;
};

}  // namespace agrotelem
