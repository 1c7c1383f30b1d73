#include "agrotelem/radio_link.hpp"

#include <cmath>
#include <string>

#include "agrotelem/wire_protocol.hpp"

namespace agrotelem {

PayloadTooLarge::PayloadTooLarge(std::size_t size)
    : std::length_error("payload of " + std::to_string(size) + " bytes exceeds " +
                        std::to_string(kMaxPayload)) {}

void check_channel_config(const ChannelConfig& cfg) {
  auto prob_ok = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };
  if (!prob_ok(cfg.loss_probability)) {
    throw std::invalid_argument("loss_probability must be in [0, 1]");
  }
  if (!prob_ok(cfg.duplicate_probability)) {
    throw std::invalid_argument("duplicate_probability must be in [0, 1]");
  }
  if (cfg.max_delay.count() < 0) throw std::invalid_argument("max_delay_ms must be >= 0");
}

TransmissionFate draw_fate(std::mt19937_64& rng, const ChannelConfig& cfg) {
  const double u_loss = uniform01(rng);
  const double u_dup = uniform01(rng);
  const double u_d0 = uniform01(rng);
  const double u_d1 = uniform01(rng);
  const auto span = static_cast<double>(cfg.max_delay.count() + 1);

  TransmissionFate fate;
  if (u_loss < cfg.loss_probability) return fate;
  fate.copies = u_dup < cfg.duplicate_probability ? 2 : 1;
  fate.delay[0] = SimTime(static_cast<SimTime::rep>(u_d0 * span));
  fate.delay[1] = SimTime(static_cast<SimTime::rep>(u_d1 * span));
  return fate;
}

RadioChannel::RadioChannel(ChannelConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
  check_channel_config(cfg_);
}

void RadioChannel::transmit(Endpoint from, std::span<const std::uint8_t> bytes, SimTime now) {
  if (bytes.size() > kMaxPayload) throw PayloadTooLarge(bytes.size());
  std::lock_guard lock(mu_);
  ++stats_.transmissions;
  const auto fate = draw_fate(rng_, cfg_);
  if (fate.copies == 0) {
    ++stats_.lost;
    return;
  }
  if (fate.copies == 2) ++stats_.duplicated;
  auto& q = inbox_[static_cast<int>(peer_of(from))];
  for (int i = 0; i < fate.copies; ++i) {
    q.push({now + fate.delay[i], next_order_++, Payload(bytes.begin(), bytes.end())});
  }
}

std::optional<Payload> RadioChannel::poll(Endpoint at, SimTime now) {
  std::lock_guard lock(mu_);
  auto& q = inbox_[static_cast<int>(at)];
  if (q.empty() || q.top().due > now) return std::nullopt;
  // priority_queue::top is const; the element is popped right after the copy.
  Payload out = q.top().bytes;
  q.pop();
  ++stats_.delivered;
  return out;
}

std::optional<SimTime> RadioChannel::next_delivery(Endpoint at) const {
  std::lock_guard lock(mu_);
  const auto& q = inbox_[static_cast<int>(at)];
  if (q.empty()) return std::nullopt;
  return q.top().due;
}

std::optional<SimTime> RadioChannel::next_delivery() const {
  auto a = next_delivery(Endpoint::Remote);
  auto b = next_delivery(Endpoint::Base);
  if (a && b) return std::min(*a, *b);
  return a ? a : b;
}

std::size_t RadioChannel::in_flight() const {
  std::lock_guard lock(mu_);
  return inbox_[0].size() + inbox_[1].size();
}

RadioChannel::Stats RadioChannel::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

}  // namespace agrotelem
