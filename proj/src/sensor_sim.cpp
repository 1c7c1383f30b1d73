#include "agrotelem/sensor_sim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace agrotelem {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// (0, 1], never zero so the log below is finite.
double to_unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

constexpr double kSecondsPerDay = 86400.0;

}  // namespace

void check_model(const SignalModel& m) {
  const std::string name(kind_name(m.kind));
  if (!std::isfinite(m.baseline) || !std::isfinite(m.diurnal_amplitude) ||
      !std::isfinite(m.phase_hours) || !std::isfinite(m.noise_sd)) {
    throw std::invalid_argument(name + ": model parameters must be finite");
  }
  if (m.noise_sd < 0.0) throw std::invalid_argument(name + ": noise_sd must be >= 0");
  if (m.diurnal_amplitude < 0.0) {
    throw std::invalid_argument(name + ": diurnal_amplitude must be >= 0");
  }
  if (m.phase_hours < 0.0 || m.phase_hours >= 24.0) {
    throw std::invalid_argument(name + ": phase must be in [0, 24) hours");
  }
}

double hashed_gaussian(std::uint64_t seed, FactorKind kind, EpochSeconds timestamp) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(kind));
  h = splitmix64(h ^ static_cast<std::uint64_t>(timestamp));
  const double u1 = to_unit_open(h);
  const double u2 = to_unit_open(splitmix64(h));
  // Box-Muller, cosine branch only.
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double generate(const SignalModel& m, EpochSeconds timestamp) {
  const double secs = std::fmod(static_cast<double>(timestamp), kSecondsPerDay);
  const double hour = (secs < 0 ? secs + kSecondsPerDay : secs) / 3600.0;
  double v = m.baseline +
             m.diurnal_amplitude * std::sin(2.0 * std::numbers::pi * (hour - m.phase_hours) / 24.0);
  if (m.noise_sd > 0.0) v += m.noise_sd * hashed_gaussian(m.seed, m.kind, timestamp);
  return physical_range(m.kind).clamp(v);
}

// Defaults are plausible summer values, not measurements. A phase of 6 h puts
// the sinusoid's peak at 12:00 UTC.
std::vector<SignalModel> default_garden_models(std::uint64_t seed) {
  return {
      {FactorKind::GardenAirTemp, 18.0, 6.0, 9.0, 0.3, seed},
      {FactorKind::GardenAirHumidity, 65.0, 15.0, 21.0, 1.5, seed},
      {FactorKind::GardenSoilMoisture, 35.0, 2.0, 21.0, 0.5, seed},
      {FactorKind::GardenUv, 2.0, 4.0, 6.0, 0.1, seed},
      {FactorKind::GardenLuminosity, 20000.0, 40000.0, 6.0, 500.0, seed},
  };
}

std::vector<SignalModel> default_compost_models(std::uint64_t seed) {
  return {
      {FactorKind::CompostTemp, 45.0, 3.0, 10.0, 0.5, seed},
      {FactorKind::CompostHumidity, 55.0, 5.0, 22.0, 1.0, seed},
  };
}

}  // namespace agrotelem
