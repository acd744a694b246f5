#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edfa/numerics.hpp"

namespace edfa {

// Equally spaced channel centers from f_start to f_stop inclusive.
struct FrequencyGrid {
  std::size_t n_channels = 83;
  double f_start_thz = 191.5;
  double f_stop_thz = 196.25;

  double spacing_thz() const;
  double frequency(std::size_t k) const;
  std::vector<double> frequencies() const;
  // Throws std::invalid_argument unless n_channels >= 2 and f_stop > f_start.
  void validate() const;

  bool operator==(const FrequencyGrid&) const = default;
};

// Per-channel powers in dBm on a grid.
struct PsdProfile {
  FrequencyGrid grid;
  std::vector<double> powers_dbm;

  double total_power_mw() const { return edfa::total_power_mw(powers_dbm); }
  double total_power_dbm() const { return edfa::total_power_dbm(powers_dbm); }
};

// Parameters shared by every unit of one amplifier make. Device-to-device
// spread is controlled by sigma_dev; the tilt and high-frequency spreads are
// tied to it through fixed ratios so a single knob sets the inter-device gap.
struct MakeParams {
  // Scales the fixed three-sinusoid ripple (peak-to-peak <= 1.9 dB at 1.0).
  double ripple_scale = 1.0;
  // Gain slope b runs linearly from 1 - tilt at f_start to 1 + tilt at f_stop.
  double tilt = 0.08;
  // Per-channel gain offset spread, dB.
  double sigma_dev = 0.0;
  // Per-channel slope spread as a multiple of sigma_dev (dB/dB per dB).
  double tilt_sigma_ratio = 0.01;
  // High-frequency slope spread as a multiple of sigma_dev (dB/THz per dB).
  double hf_sigma_ratio = 3.0;
  double hf_start_thz = 195.5;
  double shb_gamma = 0.0;
  double noise_sigma = 0.0;

  double tilt_sigma() const { return sigma_dev * tilt_sigma_ratio; }
  double hf_sigma() const { return sigma_dev * hf_sigma_ratio; }
  // Throws std::invalid_argument for negative spreads.
  void validate() const;

  bool operator==(const MakeParams&) const = default;
};

// One physical unit of the make. Immutable once built.
struct AmplifierDevice {
  std::string device_id;
  std::uint64_t seed = 0;
  FrequencyGrid grid;
  std::vector<double> a;  // gain offset, dB
  std::vector<double> b;  // gain slope, dB per dB of average gain
  double hf_slope_dev = 0.0;
  double shb_gamma = 0.0;
  double noise_sigma = 0.0;

  bool operator==(const AmplifierDevice&) const = default;
};

// Ripple and tilt curves of the make before any device perturbation.
std::vector<double> base_gain_offset(const FrequencyGrid& grid, const MakeParams& make);
std::vector<double> base_gain_slope(const FrequencyGrid& grid, const MakeParams& make);

AmplifierDevice make_device(const FrequencyGrid& grid, const MakeParams& make,
                            std::string device_id, std::uint64_t seed);

inline constexpr double kMinInputPowerDbm = -15.0;
inline constexpr double kMaxInputPowerDbm = 10.0;

// Noise-free output spectrum with total power pinned to p_out_dbm.
PsdProfile amplify(const AmplifierDevice& device, const PsdProfile& psd_in, double p_out_dbm);

struct Measurement {
  PsdProfile clean;     // label before measurement noise
  PsdProfile measured;  // clean + N(0, noise_sigma^2) per channel
};

// amplify() followed by the device's measurement noise drawn from rng.
Measurement measure(const AmplifierDevice& device, const PsdProfile& psd_in, double p_out_dbm,
                    SeededRng& rng);

// Output minus input per channel, dB.
std::vector<double> device_gain_profile(const AmplifierDevice& device, const PsdProfile& psd_in,
                                        double p_out_dbm);

}  // namespace edfa
