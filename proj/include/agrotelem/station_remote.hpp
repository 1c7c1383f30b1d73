#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "agrotelem/domain.hpp"
#include "agrotelem/radio_link.hpp"
#include "agrotelem/sensor_sim.hpp"
#include "agrotelem/wire_protocol.hpp"

namespace agrotelem {

struct RemoteConfig {
  StationId station{1};
  std::chrono::seconds sample_period{300};
  std::optional<int> max_retries;  // nullopt: retry until acked or evicted
  SimTime ack_timeout{500};
  std::size_t buffer_capacity = 1024;
  std::uint16_t first_seq = 0;
};

// Throws std::invalid_argument.
void check_remote_config(const RemoteConfig& cfg);

struct RemoteCounters {
  std::uint64_t cycles = 0;
  std::uint64_t samples = 0;
  std::uint64_t frames_built = 0;
  std::uint64_t frames_sent = 0;  // every transmission, first copies and retries
  std::uint64_t retries = 0;
  std::uint64_t acks = 0;
  std::uint64_t stray_acks = 0;
  std::uint64_t evictions = 0;

  friend bool operator==(const RemoteCounters&, const RemoteCounters&) = default;
};

// Remote station: samples every sensor once per cycle, packs the readings into
// one DATA frame per physical unit and keeps each frame buffered until the base
// acknowledges its seq. Unacked frames are resent on later cycles.
class RemoteStation {
 public:
  // `epoch_origin` is the wall-clock instant that simulated time 0 maps to.
  RemoteStation(RemoteConfig cfg, std::vector<SignalModel> models, EpochSeconds epoch_origin);

  // Samples, frames and transmits. Returns the frames put on the air this
  // cycle, oldest first. Throws std::logic_error if called before the sample
  // period has elapsed since the previous cycle.
  std::vector<Frame> run_cycle(RadioChannel& link, SimTime now);

  // Transmits buffered frames without sampling (used to drain at shutdown).
  std::vector<Frame> retransmit(RadioChannel& link, SimTime now);

  void on_ack(const Frame& ack);

  // Drains the remote-side inbox, applying every decodable ACK.
  void poll_acks(RadioChannel& link, SimTime now);

  // Frames still eligible for (re)transmission.
  bool has_sendable() const;

  const std::vector<Sample>& last_samples() const { return last_samples_; }
  std::vector<std::uint16_t> buffered_seqs() const;
  std::size_t buffered() const { return buffer_.size(); }
  const RemoteCounters& counters() const { return counters_; }
  const RemoteConfig& config() const { return cfg_; }
  std::optional<SimTime> last_cycle() const { return last_cycle_; }

 private:
  struct Pending {
    Frame frame;
    Payload bytes;
    std::uint32_t transmissions = 0;
    std::optional<SimTime> last_sent;
  };

  bool exhausted(const Pending& p) const;
  void enqueue(Frame frame);
  std::vector<Frame> transmit_buffered(RadioChannel& link, SimTime now);

  RemoteConfig cfg_;
  std::vector<SignalModel> models_;
  EpochSeconds epoch_origin_;
  std::uint16_t next_seq_;
  std::optional<SimTime> last_cycle_;
  std::deque<Pending> buffer_;
  std::vector<Sample> last_samples_;
  RemoteCounters counters_;
};

}  // namespace agrotelem
