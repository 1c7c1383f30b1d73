#include "doctest.h"

#include <random>

#include "agrotelem/wire_protocol.hpp"
#include "oracles.hpp"

using namespace agrotelem;

namespace {

// Rewrites the trailing CRC so a deliberately malformed body reaches later checks.
void reseal(std::vector<std::uint8_t>& bytes) {
  const std::size_t body = bytes.size() - 2;
  const auto crc = oracle::crc16_bitwise(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + body));
  bytes[body] = static_cast<std::uint8_t>(crc >> 8);
  bytes[body + 1] = static_cast<std::uint8_t>(crc & 0xFF);
}

DecodeErrorKind decode_error_of(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_frame(bytes);
  } catch (const DecodeError& e) {
    return e.kind();
  }
  FAIL("frame decoded unexpectedly");
  return DecodeErrorKind::BadLength;
}

Frame sample_frame(std::size_t count) {
  Frame f;
  f.station = StationId{7};
  f.seq = 0xBEEF;
  f.timestamp = 1690000000u;
  for (std::size_t i = 0; i < count; ++i) f.readings.push_back({kAllKinds[i], static_cast<std::uint16_t>(1000 * i + 7)});
  return f;
}

}  // namespace

TEST_CASE("crc16 check values") {
  CHECK(crc16(std::string_view("123456789")) == 0x29B1);
  CHECK(oracle::crc16_bitwise("123456789") == 0x29B1);
  CHECK(crc16(std::string_view("")) == 0xFFFF);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::uint8_t> data(rng() % 64);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng());
    CHECK(crc16(data) == oracle::crc16_bitwise(data));
  }
}

TEST_CASE("quantization examples") {
  CHECK(quantize(FactorKind::GardenAirTemp, 21.57) == 6157);
  CHECK(quantize(FactorKind::GardenAirTemp, -40.0) == 0);
  CHECK(quantize(FactorKind::GardenAirHumidity, 0.0) == 0);
  CHECK(quantize(FactorKind::GardenLuminosity, 100000.0) == 50000);
  CHECK(quantize(FactorKind::GardenLuminosity, 131070.0) == 65535);
  CHECK(quantize(FactorKind::CompostTemp, 90.0) == 13000);
  CHECK(dequantize(FactorKind::GardenAirTemp, 6157) == doctest::Approx(21.57));
  CHECK_THROWS_AS(quantize(FactorKind::GardenAirHumidity, 100.5), SampleError);
  CHECK_THROWS_AS(quantize(FactorKind::GardenAirTemp, -40.01), SampleError);
  CHECK_THROWS_AS(quantize(FactorKind::GardenUv, std::numeric_limits<double>::infinity()), SampleError);
}

TEST_CASE("quantization error is at most half a step across every range") {
  for (auto kind : kAllKinds) {
    const auto range = physical_range(kind);
    const auto rule = quantization_rule(kind);
    for (int i = 0; i <= 5000; ++i) {
      const double v = range.min + (range.max - range.min) * i / 5000.0;
      const double back = dequantize(kind, quantize(kind, v));
      CHECK(std::fabs(back - v) <= rule.scale / 2 + 1e-9);
    }
  }
}

TEST_CASE("frame layout") {
  const auto bytes = encode_frame(sample_frame(6));
  CHECK(bytes.size() == 30);
  CHECK(bytes[0] == 1);
  CHECK(bytes[1] == 7);
  CHECK(bytes[2] == 0);
  CHECK(bytes[3] == 0xBE);
  CHECK(bytes[4] == 0xEF);
  // 1690000000 = 0x64BB5A80
  CHECK(bytes[5] == 0x64);
  CHECK(bytes[6] == 0xBB);
  CHECK(bytes[7] == 0x5A);
  CHECK(bytes[8] == 0x80);
  CHECK(bytes[9] == 6);
  CHECK(bytes[10] == 0);
  CHECK(bytes[11] == 0);
  CHECK(bytes[12] == 7);
  const std::uint16_t crc = static_cast<std::uint16_t>(bytes[28] << 8 | bytes[29]);
  CHECK(crc == oracle::crc16_bitwise(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 2)));

  const auto ack = encode_frame(make_ack(StationId{7}, 5, 9));
  CHECK(ack.size() == 12);
  CHECK(decode_frame(ack) == make_ack(StationId{7}, 5, 9));
}

TEST_CASE("encode rejects invalid frames") {
  CHECK_THROWS_AS(encode_frame(sample_frame(0)), std::invalid_argument);
  auto seven = sample_frame(6);
  seven.readings.push_back({FactorKind::GardenUv, 1});
  CHECK_THROWS_AS(encode_frame(seven), std::invalid_argument);
  auto ack = make_ack(StationId{1}, 1, 1);
  ack.readings.push_back({FactorKind::GardenUv, 1});
  CHECK_THROWS_AS(encode_frame(ack), std::invalid_argument);
}

TEST_CASE("decode errors") {
  const auto good = encode_frame(sample_frame(3));

  SUBCASE("every single bit flip is detected") {
    for (std::size_t i = 0; i < good.size() * 8; ++i) {
      auto bad = good;
      bad[i / 8] ^= static_cast<std::uint8_t>(1u << (i % 8));
      if (i / 8 == 9) {
        CHECK(decode_error_of(bad) == DecodeErrorKind::BadLength);  // count byte
      } else {
        CHECK(decode_error_of(bad) == DecodeErrorKind::CrcMismatch);
      }
    }
  }
  SUBCASE("version") {
    auto bad = good;
    bad[0] = 2;
    reseal(bad);
    CHECK(decode_error_of(bad) == DecodeErrorKind::BadVersion);
  }
  SUBCASE("type") {
    auto bad = good;
    bad[2] = 9;
    reseal(bad);
    CHECK(decode_error_of(bad) == DecodeErrorKind::BadType);
  }
  SUBCASE("kind") {
    auto bad = good;
    bad[10] = 7;
    reseal(bad);
    CHECK(decode_error_of(bad) == DecodeErrorKind::BadKind);
  }
  SUBCASE("ack with readings") {
    auto bad = good;
    bad[2] = 1;
    reseal(bad);
    CHECK(decode_error_of(bad) == DecodeErrorKind::BadLength);
  }
  SUBCASE("data with no readings") {
    auto bad = encode_frame(make_ack(StationId{1}, 1, 1));
    bad[2] = 0;
    reseal(bad);
    CHECK(decode_error_of(bad) == DecodeErrorKind::BadLength);
  }
  SUBCASE("truncation and padding") {
    for (std::size_t n = 0; n < good.size(); ++n) {
      CHECK_THROWS_AS(decode_frame(std::span(good.data(), n)), DecodeError);
    }
    auto longer = good;
    longer.push_back(0);
    CHECK(decode_error_of(longer) == DecodeErrorKind::BadLength);
    std::vector<std::uint8_t> huge(40, 0);
    CHECK(decode_error_of(huge) == DecodeErrorKind::BadLength);
  }
}

TEST_CASE("random frames round-trip") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 5000; ++i) {
    Frame f;
    f.station = StationId(static_cast<std::uint8_t>(1 + rng() % 255));
    f.seq = static_cast<std::uint16_t>(rng());
    f.timestamp = static_cast<std::uint32_t>(rng());
    const auto n = 1 + rng() % kMaxReadings;
    for (std::size_t j = 0; j < n; ++j) {
      f.readings.push_back({kAllKinds[rng() % kAllKinds.size()], static_cast<std::uint16_t>(rng())});
    }
    const auto bytes = encode_frame(f);
    CHECK(bytes.size() == encoded_length(n));
    CHECK(bytes.size() <= kMaxPayload);
    CHECK(decode_frame(bytes) == f);
  }
}

TEST_CASE("worked example from docs/protocol.md") {
  Frame f;
  f.station = StationId{1};
  f.seq = 42;
  f.timestamp = 1690000000u;
  f.readings = {{FactorKind::GardenAirTemp, quantize(FactorKind::GardenAirTemp, 21.57)},
                {FactorKind::GardenAirHumidity, quantize(FactorKind::GardenAirHumidity, 55.25)},
                {FactorKind::GardenSoilMoisture, quantize(FactorKind::GardenSoilMoisture, 35.0)},
                {FactorKind::GardenUv, quantize(FactorKind::GardenUv, 3.2)},
                {FactorKind::GardenLuminosity, quantize(FactorKind::GardenLuminosity, 100000.0)}};
  const std::vector<std::uint8_t> data{0x01, 0x01, 0x00, 0x00, 0x2a, 0x64, 0xbb, 0x5a, 0x80,
                                       0x05, 0x00, 0x18, 0x0d, 0x01, 0x15, 0x95, 0x02, 0x0d,
                                       0xac, 0x03, 0x01, 0x40, 0x04, 0xc3, 0x50, 0x03, 0x37};
  CHECK(encode_frame(f) == data);
  const std::vector<std::uint8_t> ack{0x01, 0x01, 0x01, 0x00, 0x2a, 0x64, 0xbb, 0x5a, 0x80, 0x00, 0x6c, 0x05};
  CHECK(encode_frame(make_ack(StationId{1}, 42, 1690000000u)) == ack);
}
