#include "agrotelem/station_remote.hpp"

#include <algorithm>
#include <stdexcept>

namespace agrotelem {

void check_remote_config(const RemoteConfig& cfg) {
  if (cfg.station.is_base()) throw std::invalid_argument("station: 0 is reserved for the base");
  if (cfg.sample_period.count() <= 0) throw std::invalid_argument("sample_period_s must be > 0");
  if (cfg.max_retries && *cfg.max_retries < 0) {
    throw std::invalid_argument("max_retries must be >= 0");
  }
  if (cfg.ack_timeout.count() <= 0) throw std::invalid_argument("ack_timeout_ms must be > 0");
  if (cfg.buffer_capacity < 1) throw std::invalid_argument("buffer_capacity must be >= 1");
}

RemoteStation::RemoteStation(RemoteConfig cfg, std::vector<SignalModel> models,
                             EpochSeconds epoch_origin)
    : cfg_(cfg), models_(std::move(models)), epoch_origin_(epoch_origin), next_seq_(cfg.first_seq) {
  check_remote_config(cfg_);
  if (models_.empty()) throw std::invalid_argument("remote station needs at least one sensor");
  for (const auto& m : models_) check_model(m);
  // Garden readings first, then compost, each in configuration order.
  std::stable_sort(models_.begin(), models_.end(), [](const SignalModel& a, const SignalModel& b) {
    return unit_of(a.kind) < unit_of(b.kind);
  });
}

std::vector<Frame> RemoteStation::run_cycle(RadioChannel& link, SimTime now) {
  if (last_cycle_ && now < *last_cycle_ + cfg_.sample_period) {
    throw std::logic_error("run_cycle called before the sample period elapsed");
  }
  last_cycle_ = now;
  ++counters_.cycles;

  const EpochSeconds ts =
      epoch_origin_ + std::chrono::duration_cast<std::chrono::seconds>(now).count();
  if (ts < 0 || ts > EpochSeconds{UINT32_MAX}) {
    throw std::out_of_range("timestamp does not fit the 32-bit wire field");
  }

  last_samples_.clear();
  Frame current;
  auto flush = [&] {
    if (!current.readings.empty()) enqueue(std::move(current));
    current = Frame{};
  };
  for (const auto& model : models_) {
    const Sample s{cfg_.station, model.kind, ts, generate(model, ts)};
    last_samples_.push_back(s);
    ++counters_.samples;
    if (!current.readings.empty() &&
        (unit_of(current.readings.back().kind) != unit_of(s.kind) ||
         current.readings.size() == kMaxReadings)) {
      flush();
    }
    current.station = cfg_.station;
    current.timestamp = static_cast<std::uint32_t>(ts);
    current.readings.push_back({s.kind, quantize(s.kind, s.value)});
  }
  flush();

  return transmit_buffered(link, now);
}

std::vector<Frame> RemoteStation::retransmit(RadioChannel& link, SimTime now) {
  return transmit_buffered(link, now);
}

void RemoteStation::enqueue(Frame frame) {
  frame.type = MsgType::Data;
  frame.seq = next_seq_++;
  ++counters_.frames_built;
  if (buffer_.size() >= cfg_.buffer_capacity) {
    buffer_.pop_front();
    ++counters_.evictions;
  }
  Payload bytes = encode_frame(frame);
  buffer_.push_back({std::move(frame), std::move(bytes), 0, std::nullopt});
}

bool RemoteStation::exhausted(const Pending& p) const {
  return cfg_.max_retries && p.transmissions >= 1u + static_cast<unsigned>(*cfg_.max_retries);
}

std::vector<Frame> RemoteStation::transmit_buffered(RadioChannel& link, SimTime now) {
  std::vector<Frame> sent;
  for (auto& p : buffer_) {
    if (exhausted(p)) continue;
    // Still waiting for the ACK of the previous copy.
    if (p.last_sent && now - *p.last_sent < cfg_.ack_timeout) continue;
    link.transmit(Endpoint::Remote, p.bytes, now);
    if (p.transmissions > 0) ++counters_.retries;
    ++p.transmissions;
    p.last_sent = now;
    ++counters_.frames_sent;
    sent.push_back(p.frame);
  }
  return sent;
}

void RemoteStation::on_ack(const Frame& ack) {
  if (ack.type != MsgType::Ack || ack.station != cfg_.station) {
    ++counters_.stray_acks;
    return;
  }
  auto it = std::find_if(buffer_.begin(), buffer_.end(),
                         [&](const Pending& p) { return p.frame.seq == ack.seq; });
  if (it == buffer_.end()) {
    ++counters_.stray_acks;
    return;
  }
  buffer_.erase(it);
  ++counters_.acks;
}

void RemoteStation::poll_acks(RadioChannel& link, SimTime now) {
  while (auto bytes = link.poll(Endpoint::Remote, now)) {
    try {
      on_ack(decode_frame(*bytes));
    } catch (const DecodeError&) {
      ++counters_.stray_acks;
    }
  }
}

bool RemoteStation::has_sendable() const {
  return std::any_of(buffer_.begin(), buffer_.end(),
                     [&](const Pending& p) { return !exhausted(p); });
}

std::vector<std::uint16_t> RemoteStation::buffered_seqs() const {
  std::vector<std::uint16_t> out;
  out.reserve(buffer_.size());
  for (const auto& p : buffer_) out.push_back(p.frame.seq);
  return out;
}

}  // namespace agrotelem
