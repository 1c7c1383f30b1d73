#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace agrotelem {

// Environmental factors measured at the garden and compost units.
// The numeric values double as the kind byte on the wire.
enum class FactorKind : std::uint8_t {
  GardenAirTemp = 0,
  GardenAirHumidity = 1,
  GardenSoilMoisture = 2,
  GardenUv = 3,
  GardenLuminosity = 4,
  CompostTemp = 5,
  CompostHumidity = 6,
};

enum class Unit : std::uint8_t { Garden, Compost };

inline constexpr std::array<FactorKind, 7> kAllKinds = {
    FactorKind::GardenAirTemp,      FactorKind::GardenAirHumidity,
    FactorKind::GardenSoilMoisture, FactorKind::GardenUv,
    FactorKind::GardenLuminosity,   FactorKind::CompostTemp,
    FactorKind::CompostHumidity,
};

struct PhysicalRange {
  double min;
  double max;

  constexpr bool contains(double v) const { return v >= min && v <= max; }
  constexpr double clamp(double v) const { return v < min ? min : (v > max ? max : v); }
};

std::string_view kind_name(FactorKind kind);
std::optional<FactorKind> parse_kind(std::string_view name);
std::optional<FactorKind> kind_from_byte(std::uint8_t b);

Unit unit_of(FactorKind kind);
PhysicalRange physical_range(FactorKind kind);
std::string_view unit_symbol(FactorKind kind);

// Decimal places used by the canonical text form.
int canonical_decimals(FactorKind kind);

// 0 is the base station; remotes are 1..255.
class StationId {
 public:
  constexpr StationId() = default;
  constexpr explicit StationId(std::uint8_t v) : value_(v) {}

  static constexpr StationId base() { return StationId{0}; }

  constexpr std::uint8_t value() const { return value_; }
  constexpr bool is_base() const { return value_ == 0; }

  friend constexpr auto operator<=>(StationId, StationId) = default;

 private:
  std::uint8_t value_ = 0;
};

// Seconds since the Unix epoch, UTC.
using EpochSeconds = std::int64_t;

struct Sample {
  StationId station;
  FactorKind kind = FactorKind::GardenAirTemp;
  EpochSeconds timestamp = 0;
  double value = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

enum class SampleErrorKind { OutOfRange, ReservedStation };

class SampleError : public std::runtime_error {
 public:
  SampleError(SampleErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  SampleErrorKind kind() const { return kind_; }

 private:
  SampleErrorKind kind_;
};

// A sample known to satisfy the range and station invariants.
class ValidSample {
 public:
  const Sample& get() const { return sample_; }
  operator const Sample&() const { return sample_; }

  friend bool operator==(const ValidSample&, const ValidSample&) = default;

 private:
  friend ValidSample validate_sample(const Sample& s);
  explicit ValidSample(const Sample& s) : sample_(s) {}
  Sample sample_;
};

// Throws SampleError.
ValidSample validate_sample(const Sample& s);

std::string format_iso8601(EpochSeconds t);
std::optional<EpochSeconds> parse_iso8601(std::string_view text);

// Value with the kind's canonical precision ("55.25", lux "100000.0").
std::string format_value(FactorKind kind, double value);

// `ISO8601Z,station,kind,value`
std::string to_canonical_line(const Sample& s);
std::optional<Sample> parse_canonical_line(std::string_view line);

}  // namespace agrotelem
