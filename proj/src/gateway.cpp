#include "agrotelem/gateway.hpp"

#include <algorithm>

namespace agrotelem {

bool DedupeWindow::accept(std::uint16_t seq) {
  if (!newest_) {
    newest_ = seq;
    seen_.set(seq);
    return true;
  }
  const auto diff = static_cast<std::int16_t>(static_cast<std::uint16_t>(seq - *newest_));
  if (diff > 0) {
    for (std::uint16_t s = static_cast<std::uint16_t>(*newest_ + 1); s != seq; ++s) seen_.reset(s);
    seen_.set(seq);
    newest_ = seq;
    return true;
  }
  if (seen_.test(seq)) return false;
  seen_.set(seq);
  return true;
}

bool DedupeWindow::seen(std::uint16_t seq) const {
  if (!newest_) return false;
  const auto diff = static_cast<std::int16_t>(static_cast<std::uint16_t>(seq - *newest_));
  return diff <= 0 && seen_.test(seq);
}

Gateway::Gateway(GatewayConfig cfg, PlatformClient& platform)
    : cfg_(std::move(cfg)),
      platform_(platform),
      log_(cfg_.log_path, cfg_.sync),
      cursor_store_(cfg_.cursor_path, cfg_.sync) {
  if (cfg_.batch_size < 1 || cfg_.batch_size > kMaxIngestBatch) {
    throw std::invalid_argument("batch_size must be in 1.." + std::to_string(kMaxIngestBatch));
  }
  if (cfg_.backoff_base.count() <= 0 || cfg_.backoff_cap < cfg_.backoff_base) {
    throw std::invalid_argument("backoff must satisfy 0 < base <= cap");
  }
  recover();
}

void Gateway::recover() {
  std::scoped_lock lock(rx_mu_, upload_mu_);

  UploadCursor c;
  bool reset = false;
  try {
    if (auto loaded = cursor_store_.load()) {
      const auto tail = log_.line_ending_at(loaded->offset);
      if (tail && crc16(*tail) == loaded->tail_checksum) {
        c = *loaded;
      } else {
        reset = true;
      }
    }
  } catch (const CorruptCursor&) {
    reset = true;
  }
  if (reset) c = UploadCursor{};
  cursor_ = c;
  consecutive_failures_ = 0;
  retry_at_.reset();

  windows_.clear();
  std::uint64_t offset = 0;
  while (true) {
    auto chunk = log_.read_from(offset, 4096);
    if (chunk.end == offset) break;
    for (const auto& r : chunk.records) windows_[r.sample.station.value()].accept(r.seq);
    offset = chunk.end;
  }

  if (reset) {
    std::lock_guard cl(counters_mu_);
    ++counters_.cursor_resets;
  }
}

void Gateway::set_crash_hook(std::function<void(const UploadCursor&)> hook) {
  std::lock_guard lock(upload_mu_);
  crash_hook_ = std::move(hook);
}

AckDecision Gateway::on_frame(std::span<const std::uint8_t> bytes, SimTime /*now*/) {
  AckDecision decision;
  auto count = [&](auto member) {
    std::lock_guard cl(counters_mu_);
    ++(counters_.*member);
  };
  count(&GatewayCounters::frames_received);

  Frame frame;
  try {
    frame = decode_frame(bytes);
  } catch (const DecodeError& e) {
    decision.error = e.kind();
    count(e.kind() == DecodeErrorKind::CrcMismatch ? &GatewayCounters::crc_errors
                                                   : &GatewayCounters::decode_errors);
    return decision;
  }
  if (frame.type != MsgType::Data || frame.station.is_base()) {
    count(&GatewayCounters::rejected_frames);
    return decision;
  }

  std::vector<LogRecord> records;
  records.reserve(frame.readings.size());
  for (const auto& r : frame.readings) {
    const Sample s{frame.station, r.kind, EpochSeconds{frame.timestamp}, dequantize(r.kind, r.raw)};
    if (!physical_range(s.kind).contains(s.value)) {
      count(&GatewayCounters::rejected_frames);
      return decision;
    }
    records.push_back({frame.seq, s});
  }

  {
    std::lock_guard lock(rx_mu_);
    auto& window = windows_[frame.station.value()];
    if (window.seen(frame.seq)) {
      decision.duplicate = true;
    } else {
      log_.append(records);  // durable before the ACK leaves
      window.accept(frame.seq);
      decision.appended = records.size();
    }
  }

  {
    std::lock_guard cl(counters_mu_);
    if (decision.duplicate) ++counters_.duplicate_frames;
    counters_.records_logged += decision.appended;
    ++counters_.acks_sent;
  }
  decision.ack = encode_frame(make_ack(frame.station, frame.seq, frame.timestamp));
  return decision;
}

void Gateway::service_link(RadioChannel& link, SimTime now) {
  while (auto bytes = link.poll(Endpoint::Base, now)) {
    auto decision = on_frame(*bytes, now);
    if (decision.ack) link.transmit(Endpoint::Base, *decision.ack, now);
  }
}

UploadReport Gateway::flush_pending(SimTime now) {
  std::lock_guard lock(upload_mu_);
  UploadReport report;
  if (retry_at_ && now < *retry_at_) return report;
  report.attempted = true;

  while (true) {
    auto chunk = log_.read_from(cursor_.offset, cfg_.batch_size);
    if (chunk.end == cursor_.offset) {
      report.caught_up = true;
      break;
    }
    const UploadCursor next{chunk.end, crc16(chunk.last_line)};

    if (!chunk.records.empty()) {
      std::vector<IngestPoint> points;
      points.reserve(chunk.records.size());
      for (const auto& r : chunk.records) {
        points.push_back({r.sample.station, r.sample.kind, r.sample.timestamp, r.sample.value, r.seq});
      }
      const auto res = platform_.post_ingest(encode_ingest_body(points));
      IngestResult accepted;
      bool ok = res.status == 200;
      if (ok) {
        try {
          accepted = decode_ingest_result(res.body);
        } catch (const std::exception&) {
          ok = false;
        }
      }
      if (!ok) {
        ++consecutive_failures_;
        const auto shift = std::min(consecutive_failures_ - 1, 30);
        const auto delay = std::min(cfg_.backoff_base * (std::int64_t{1} << shift), cfg_.backoff_cap);
        retry_at_ = now + delay;
        report.failed_status = res.status;
        std::lock_guard cl(counters_mu_);
        ++counters_.upload_failures;
        break;
      }
      if (crash_hook_) crash_hook_(next);

      ++report.batches;
      report.records += chunk.records.size();
      report.accepted += accepted.accepted;
      report.duplicates += accepted.duplicates;
      std::lock_guard cl(counters_mu_);
      ++counters_.upload_batches;
      counters_.records_uploaded += accepted.accepted;
      counters_.upload_duplicates += accepted.duplicates;
    }
    cursor_store_.save(next);
    cursor_ = next;
    consecutive_failures_ = 0;
    retry_at_.reset();
  }
  return report;
}

UploadCursor Gateway::cursor() const {
  std::lock_guard lock(upload_mu_);
  return cursor_;
}

bool Gateway::has_pending() const {
  std::lock_guard lock(upload_mu_);
  return cursor_.offset < log_.size();
}

std::optional<SimTime> Gateway::next_upload_attempt() const {
  std::lock_guard lock(upload_mu_);
  return retry_at_;
}

GatewayCounters Gateway::counters() const {
  std::lock_guard lock(counters_mu_);
  return counters_;
}

}  // namespace agrotelem
