#include "agrotelem/wire_protocol.hpp"

#include <array>
#include <cmath>

namespace agrotelem {

namespace {

constexpr std::array<std::uint16_t, 256> make_crc_table() {
  std::array<std::uint16_t, 256> table{};
  for (unsigned i = 0; i < 256; ++i) {
    std::uint16_t crc = static_cast<std::uint16_t>(i << 8);
    for (int bit = 0; bit < 8; ++bit) {
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(crc << 1);
    }
    table[i] = crc;
  }
  return table;
}

constexpr auto kCrcTable = make_crc_table();

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xFF));
  }
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

// Byte offsets within a frame.
constexpr std::size_t kOffVersion = 0;
constexpr std::size_t kOffStation = 1;
constexpr std::size_t kOffType = 2;
constexpr std::size_t kOffSeq = 3;
constexpr std::size_t kOffTimestamp = 5;
constexpr std::size_t kOffCount = 9;
constexpr std::size_t kOffReadings = 10;

}  // namespace

std::uint16_t crc16(std::span<const std::uint8_t> bytes) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t b : bytes) {
    crc = static_cast<std::uint16_t>((crc << 8) ^ kCrcTable[((crc >> 8) ^ b) & 0xFF]);
  }
  return crc;
}

std::uint16_t crc16(std::string_view text) {
  return crc16(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

QuantizationRule quantization_rule(FactorKind kind) {
  switch (kind) {
    case FactorKind::GardenAirTemp:
    case FactorKind::CompostTemp:
      return {-40.0, 0.01};
    case FactorKind::GardenLuminosity:
      return {0.0, 2.0};
    case FactorKind::GardenAirHumidity:
    case FactorKind::GardenSoilMoisture:
    case FactorKind::GardenUv:
    case FactorKind::CompostHumidity:
      return {0.0, 0.01};
  }
  throw std::invalid_argument("unknown factor kind");
}

std::uint16_t quantize(FactorKind kind, double value) {
  const auto range = physical_range(kind);
  if (!std::isfinite(value) || !range.contains(value)) {
    throw SampleError(SampleErrorKind::OutOfRange,
                      std::string(kind_name(kind)) + " value " + std::to_string(value) +
                          " cannot be quantized");
  }
  const auto rule = quantization_rule(kind);
  return static_cast<std::uint16_t>(std::lround((value - rule.offset) / rule.scale));
}

double dequantize(FactorKind kind, std::uint16_t raw) {
  const auto rule = quantization_rule(kind);
  return rule.offset + raw * rule.scale;
}

Frame make_ack(StationId station, std::uint16_t seq, std::uint32_t timestamp) {
  Frame f;
  f.station = station;
  f.type = MsgType::Ack;
  f.seq = seq;
  f.timestamp = timestamp;
  return f;
}

std::string_view decode_error_name(DecodeErrorKind kind) {
  switch (kind) {
    case DecodeErrorKind::CrcMismatch: return "CrcMismatch";
    case DecodeErrorKind::BadVersion: return "BadVersion";
    case DecodeErrorKind::BadLength: return "BadLength";
    case DecodeErrorKind::BadKind: return "BadKind";
    case DecodeErrorKind::BadType: return "BadType";
  }
  return "Unknown";
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  const std::size_t count = f.readings.size();
  if (f.type == MsgType::Data && (count < 1 || count > kMaxReadings)) {
    throw std::invalid_argument("DATA frame must carry 1.." + std::to_string(kMaxReadings) +
                                " readings");
  }
  if (f.type == MsgType::Ack && count != 0) {
    throw std::invalid_argument("ACK frame must not carry readings");
  }

  std::vector<std::uint8_t> out;
  out.reserve(encoded_length(count));
  out.push_back(f.version);
  out.push_back(f.station.value());
  out.push_back(static_cast<std::uint8_t>(f.type));
  put_u16(out, f.seq);
  put_u32(out, f.timestamp);
  out.push_back(static_cast<std::uint8_t>(count));
  for (const auto& r : f.readings) {
    out.push_back(static_cast<std::uint8_t>(r.kind));
    put_u16(out, r.raw);
  }
  put_u16(out, crc16(out));
  return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameOverhead || bytes.size() > kMaxPayload) {
    throw DecodeError(DecodeErrorKind::BadLength);
  }
  const std::size_t count = bytes[kOffCount];
  if (count > kMaxReadings || bytes.size() != encoded_length(count)) {
    throw DecodeError(DecodeErrorKind::BadLength);
  }
  const std::size_t body = bytes.size() - 2;
  if (crc16(bytes.first(body)) != get_u16(bytes, body)) {
    throw DecodeError(DecodeErrorKind::CrcMismatch);
  }
  if (bytes[kOffVersion] != kProtocolVersion) throw DecodeError(DecodeErrorKind::BadVersion);

  Frame f;
  f.version = bytes[kOffVersion];
  f.station = StationId(bytes[kOffStation]);
  switch (bytes[kOffType]) {
    case 0: f.type = MsgType::Data; break;
    case 1: f.type = MsgType::Ack; break;
    default: throw DecodeError(DecodeErrorKind::BadType);
  }
  if ((f.type == MsgType::Data) == (count == 0)) throw DecodeError(DecodeErrorKind::BadLength);
  f.seq = get_u16(bytes, kOffSeq);
  f.timestamp = get_u32(bytes, kOffTimestamp);
  f.readings.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = kOffReadings + i * kReadingSize;
    const auto kind = kind_from_byte(bytes[at]);
    if (!kind) throw DecodeError(DecodeErrorKind::BadKind);
    f.readings.push_back({*kind, get_u16(bytes, at + 1)});
  }
  return f;
}

}  // namespace agrotelem
