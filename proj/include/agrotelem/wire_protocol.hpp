#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agrotelem/domain.hpp"

namespace agrotelem {

// nRF24L01 hardware payload limit.
inline constexpr std::size_t kMaxPayload = 32;
inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kFrameOverhead = 12;
inline constexpr std::size_t kReadingSize = 3;
inline constexpr std::size_t kMaxReadings = 6;

constexpr std::size_t encoded_length(std::size_t count) {
  return kFrameOverhead + kReadingSize * count;
}
static_assert(encoded_length(kMaxReadings) <= kMaxPayload);
static_assert(encoded_length(kMaxReadings + 1) > kMaxPayload);

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
std::uint16_t crc16(std::span<const std::uint8_t> bytes);
std::uint16_t crc16(std::string_view text);

struct QuantizationRule {
  double offset;
  double scale;
};

QuantizationRule quantization_rule(FactorKind kind);

// Throws SampleError(OutOfRange) when value is outside the kind's physical range.
std::uint16_t quantize(FactorKind kind, double value);
double dequantize(FactorKind kind, std::uint16_t raw);

enum class MsgType : std::uint8_t { Data = 0, Ack = 1 };

struct Reading {
  FactorKind kind = FactorKind::GardenAirTemp;
  std::uint16_t raw = 0;

  friend bool operator==(const Reading&, const Reading&) = default;
};

struct Frame {
  std::uint8_t version = kProtocolVersion;
  StationId station;
  MsgType type = MsgType::Data;
  std::uint16_t seq = 0;
  std::uint32_t timestamp = 0;
  std::vector<Reading> readings;

  friend bool operator==(const Frame&, const Frame&) = default;
};

Frame make_ack(StationId station, std::uint16_t seq, std::uint32_t timestamp);

enum class DecodeErrorKind { CrcMismatch, BadVersion, BadLength, BadKind, BadType };

std::string_view decode_error_name(DecodeErrorKind kind);

class DecodeError : public std::runtime_error {
 public:
  explicit DecodeError(DecodeErrorKind kind)
      : std::runtime_error(std::string(decode_error_name(kind))), kind_(kind) {}
  DecodeErrorKind kind() const { return kind_; }

 private:
  DecodeErrorKind kind_;
};

// Throws std::invalid_argument if the frame violates its invariants
// (DATA needs 1..6 readings, ACK needs none).
std::vector<std::uint8_t> encode_frame(const Frame& frame);

// Throws DecodeError. Never reads outside `bytes`.
Frame decode_frame(std::span<const std::uint8_t> bytes);

}  // namespace agrotelem
