#pragma once

#include <cstdint>
#include <vector>

#include "agrotelem/domain.hpp"

namespace agrotelem {

// Diurnal sinusoid plus reproducible Gaussian noise, clamped to the kind's range:
//   baseline + diurnal_amplitude * sin(2π (hour_of_day - phase_hours) / 24) + noise
struct SignalModel {
  FactorKind kind = FactorKind::GardenAirTemp;
  double baseline = 0.0;
  double diurnal_amplitude = 0.0;
  double phase_hours = 0.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const SignalModel&, const SignalModel&) = default;
};

// Throws std::invalid_argument if amplitude/noise are negative, phase is outside
// [0, 24) or any field is non-finite.
void check_model(const SignalModel& model);

// Standard normal deviate that depends only on (seed, kind, timestamp).
double hashed_gaussian(std::uint64_t seed, FactorKind kind, EpochSeconds timestamp);

double generate(const SignalModel& model, EpochSeconds timestamp);

std::vector<SignalModel> default_garden_models(std::uint64_t seed);
std::vector<SignalModel> default_compost_models(std::uint64_t seed);

}  // namespace agrotelem
