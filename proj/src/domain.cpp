#include "agrotelem/domain.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>

#include "text_util.hpp"

namespace agrotelem {

namespace {

struct KindInfo {
  FactorKind kind;
  std::string_view name;
  Unit unit;
  PhysicalRange range;
  std::string_view symbol;
  int decimals;
};

// Compost temperature extends to 90 °C because active compost self-heats.
constexpr std::array<KindInfo, 7> kKindTable = {{
    {FactorKind::GardenAirTemp, "GardenAirTemp", Unit::Garden, {-40.0, 60.0}, "degC", 2},
    {FactorKind::GardenAirHumidity, "GardenAirHumidity", Unit::Garden, {0.0, 100.0}, "%RH", 2},
    {FactorKind::GardenSoilMoisture, "GardenSoilMoisture", Unit::Garden, {0.0, 100.0}, "%vol", 2},
    {FactorKind::GardenUv, "GardenUv", Unit::Garden, {0.0, 15.0}, "UVI", 2},
    {FactorKind::GardenLuminosity, "GardenLuminosity", Unit::Garden, {0.0, 131070.0}, "lux", 1},
    {FactorKind::CompostTemp, "CompostTemp", Unit::Compost, {-40.0, 90.0}, "degC", 2},
    {FactorKind::CompostHumidity, "CompostHumidity", Unit::Compost, {0.0, 100.0}, "%RH", 2},
}};

const KindInfo& info(FactorKind kind) { return kKindTable[static_cast<std::size_t>(kind)]; }

}  // namespace

std::string_view kind_name(FactorKind kind) { return info(kind).name; }

std::optional<FactorKind> parse_kind(std::string_view name) {
  for (const auto& k : kKindTable) {
    if (k.name == name) return k.kind;
  }
  return std::nullopt;
}

std::optional<FactorKind> kind_from_byte(std::uint8_t b) {
  if (b >= kKindTable.size()) return std::nullopt;
  return static_cast<FactorKind>(b);
}

Unit unit_of(FactorKind kind) { return info(kind).unit; }
PhysicalRange physical_range(FactorKind kind) { return info(kind).range; }
std::string_view unit_symbol(FactorKind kind) { return info(kind).symbol; }
int canonical_decimals(FactorKind kind) { return info(kind).decimals; }

ValidSample validate_sample(const Sample& s) {
  if (s.station.is_base()) {
    throw SampleError(SampleErrorKind::ReservedStation,
                      "station 0 is reserved for the base station");
  }
  const auto range = physical_range(s.kind);
  if (!std::isfinite(s.value) || !range.contains(s.value)) {
    throw SampleError(SampleErrorKind::OutOfRange,
                      std::string(kind_name(s.kind)) + " value " + std::to_string(s.value) +
                          " outside [" + format_value(s.kind, range.min) + ", " +
                          format_value(s.kind, range.max) + "]");
  }
  return ValidSample(s);
}

std::string format_iso8601(EpochSeconds t) {
  std::time_t tt = static_cast<std::time_t>(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

std::optional<EpochSeconds> parse_iso8601(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SSZ
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':' || text[19] != 'Z') {
    return std::nullopt;
  }
  auto field = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    return detail::parse_int<int>(text.substr(pos, len));
  };
  auto year = field(0, 4), mon = field(5, 2), day = field(8, 2);
  auto hour = field(11, 2), min = field(14, 2), sec = field(17, 2);
  if (!year || !mon || !day || !hour || !min || !sec) return std::nullopt;
  if (*mon < 1 || *mon > 12 || *day < 1 || *day > 31 || *hour > 23 || *min > 59 || *sec > 60) {
    return std::nullopt;
  }
  std::tm tm{};
  tm.tm_year = *year - 1900;
  tm.tm_mon = *mon - 1;
  tm.tm_mday = *day;
  tm.tm_hour = *hour;
  tm.tm_min = *min;
  tm.tm_sec = *sec;
  const EpochSeconds t = static_cast<EpochSeconds>(timegm(&tm));
  if (format_iso8601(t) != text) return std::nullopt;  // rejects Feb 30 and friends
  return t;
}

std::string format_value(FactorKind kind, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", canonical_decimals(kind), value);
  return buf;
}

std::string to_canonical_line(const Sample& s) {
  std::string out = format_iso8601(s.timestamp);
  out += ',';
  out += std::to_string(s.station.value());
  out += ',';
  out += kind_name(s.kind);
  out += ',';
  out += format_value(s.kind, s.value);
  return out;
}

std::optional<Sample> parse_canonical_line(std::string_view line) {
  const auto fields = detail::split(line, ',');
  if (fields.size() != 4) return std::nullopt;
  auto ts = parse_iso8601(fields[0]);
  auto station = detail::parse_int<int>(fields[1]);
  auto kind = parse_kind(fields[2]);
  auto value = detail::parse_double(fields[3]);
  if (!ts || !station || !kind || !value || *station < 0 || *station > 255) return std::nullopt;
  return Sample{StationId(static_cast<std::uint8_t>(*station)), *kind, *ts, *value};
}

}  // namespace agrotelem
