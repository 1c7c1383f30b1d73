#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace agrotelem {

// Simulated time since the start of a run. Never wall-clock.
using SimTime = std::chrono::milliseconds;

using Payload = std::vector<std::uint8_t>;

struct ChannelConfig {
  double loss_probability = 0.0;
  double duplicate_probability = 0.0;
  SimTime max_delay{0};
  std::uint64_t seed = 0;
};

// Throws std::invalid_argument.
void check_channel_config(const ChannelConfig& cfg);

enum class Endpoint : std::uint8_t { Remote = 0, Base = 1 };

constexpr Endpoint peer_of(Endpoint e) {
  return e == Endpoint::Remote ? Endpoint::Base : Endpoint::Remote;
}

class PayloadTooLarge : public std::length_error {
 public:
  explicit PayloadTooLarge(std::size_t size);
};

// Uniform double in [0, 1) from the top 53 bits of one engine output.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Each transmission consumes exactly four draws from one mt19937_64 stream, in
// this order: loss, duplicate, first-copy delay, second-copy delay.
//   lost       iff draw0 < loss_probability
//   duplicated iff not lost and draw1 < duplicate_probability
//   delay_i    = floor(draw_i * (max_delay + 1)) ms
struct TransmissionFate {
  int copies = 0;
  SimTime delay[2]{};
};

TransmissionFate draw_fate(std::mt19937_64& rng, const ChannelConfig& cfg);

// Two-endpoint lossy link. Internally serialized, so the remote and the base
// side may be driven from different threads.
class RadioChannel {
 public:
  explicit RadioChannel(ChannelConfig cfg);

  // Throws PayloadTooLarge if bytes exceed the 32-byte radio payload.
  void transmit(Endpoint from, std::span<const std::uint8_t> bytes, SimTime now);

  // Earliest due payload addressed to `at`, ties broken by enqueue order.
  std::optional<Payload> poll(Endpoint at, SimTime now);

  std::optional<SimTime> next_delivery(Endpoint at) const;
  std::optional<SimTime> next_delivery() const;
  std::size_t in_flight() const;

  struct Stats {
    std::uint64_t transmissions = 0;
    std::uint64_t lost = 0;
    std::uint64_t duplicated = 0;
    std::uint64_t delivered = 0;
  };
  Stats stats() const;

  const ChannelConfig& config() const { return cfg_; }

 private:
  struct InFlight {
    SimTime due;
    std::uint64_t order;
    Payload bytes;
  };
  struct Later {
    bool operator()(const InFlight& a, const InFlight& b) const {
      return a.due != b.due ? a.due > b.due : a.order > b.order;
    }
  };
  using Queue = std::priority_queue<InFlight, std::vector<InFlight>, Later>;

  ChannelConfig cfg_;
  mutable std::mutex mu_;
  std::mt19937_64 rng_;
  std::uint64_t next_order_ = 0;
  Queue inbox_[2];
  Stats stats_;
};

}  // namespace agrotelem
