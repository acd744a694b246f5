#include "edfa/oracle.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace edfa {

double FrequencyGrid::spacing_thz() const {
  return (f_stop_thz - f_start_thz) / static_cast<double>(n_channels - 1);
}

double FrequencyGrid::frequency(std::size_t k) const {
  return f_start_thz + static_cast<double>(k) * spacing_thz();
}

std::vector<double> FrequencyGrid::frequencies() const {
  std::vector<double> f(n_channels);
  for (std::size_t k = 0; k < n_channels; ++k) f[k] = frequency(k);
  return f;
}

void FrequencyGrid::validate() const {
  if (n_channels < 2) throw std::invalid_argument("FrequencyGrid: need at least 2 channels");
  if (!(f_stop_thz > f_start_thz) || !std::isfinite(f_start_thz) || !std::isfinite(f_stop_thz)) {
    throw std::invalid_argument("FrequencyGrid: f_stop must exceed f_start");
  }
}

void MakeParams::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("MakeParams: ") + name + " must be >= 0");
    }
  };
  check(sigma_dev, "sigma_dev");
  check(tilt_sigma_ratio, "tilt_sigma_ratio");
  check(hf_sigma_ratio, "hf_sigma_ratio");
  check(noise_sigma, "noise_sigma");
  check(shb_gamma, "shb_gamma");
  check(ripple_scale, "ripple_scale");
  if (!std::isfinite(tilt) || !std::isfinite(hf_start_thz)) {
    throw std::invalid_argument("MakeParams: tilt and hf_start_thz must be finite");
  }
}

std::vector<double> base_gain_offset(const FrequencyGrid& grid, const MakeParams& make) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double band = grid.f_stop_thz - grid.f_start_thz;
  std::vector<double> a(grid.n_channels);
  for (std::size_t k = 0; k < grid.n_channels; ++k) {
    const double x = (grid.frequency(k) - grid.f_start_thz) / band;
    a[k] = make.ripple_scale * (0.50 * std::sin(two_pi * 0.8 * x + 0.3) +
                                0.30 * std::sin(two_pi * 1.9 * x + 1.1) +
                                0.15 * std::sin(two_pi * 3.3 * x + 2.0));
  }
  return a;
}

std::vector<double> base_gain_slope(const FrequencyGrid& grid, const MakeParams& make) {
  const double band = grid.f_stop_thz - grid.f_start_thz;
  std::vector<double> b(grid.n_channels);
  for (std::size_t k = 0; k < grid.n_channels; ++k) {
    const double x = (grid.frequency(k) - grid.f_start_thz) / band;
    b[k] = 1.0 + make.tilt * (2.0 * x - 1.0);
  }
  return b;
}

AmplifierDevice make_device(const FrequencyGrid& grid, const MakeParams& make,
                            std::string device_id, std::uint64_t seed) {
  grid.validate();
  make.validate();

  AmplifierDevice dev;
  dev.device_id = std::move(device_id);
  dev.seed = seed;
  dev.grid = grid;
  dev.shb_gamma = make.shb_gamma;
  dev.noise_sigma = make.noise_sigma;
  dev.a = base_gain_offset(grid, make);
  dev.b = base_gain_slope(grid, make);

  // Separate streams so that changing one spread leaves the other draws intact.
  const SeededRng root(seed);
  SeededRng rng_a = root.child("gain-offset");
  SeededRng rng_b = root.child("gain-slope");
  SeededRng rng_hf = root.child("hf-slope");
  for (std::size_t k = 0; k < grid.n_channels; ++k) {
    dev.a[k] += gaussian(rng_a, 0.0, make.sigma_dev);
    dev.b[k] += gaussian(rng_b, 0.0, make.tilt_sigma());
  }
  dev.hf_slope_dev = gaussian(rng_hf, 0.0, make.hf_sigma());
  for (std::size_t k = 0; k < grid.n_channels; ++k) {
    const double f = grid.frequency(k);
    if (f > make.hf_start_thz) dev.a[k] += dev.hf_slope_dev * (f - make.hf_start_thz);
  }
  return dev;
}

namespace {

void check_input(const AmplifierDevice& device, const PsdProfile& psd_in, double p_out_dbm) {
  if (psd_in.powers_dbm.empty()) throw std::invalid_argument("amplify: empty input profile");
  if (psd_in.powers_dbm.size() != device.a.size()) {
    throw std::invalid_argument("amplify: profile has " + std::to_string(psd_in.powers_dbm.size()) +
                                " channels, device " + device.device_id + " has " +
                                std::to_string(device.a.size()));
  }
  for (double p : psd_in.powers_dbm) {
    if (!std::isfinite(p)) throw std::invalid_argument("amplify: non-finite channel power");
  }
  if (!std::isfinite(p_out_dbm)) throw std::invalid_argument("amplify: non-finite output target");
  const double p_in = psd_in.total_power_dbm();
  if (p_in < kMinInputPowerDbm || p_in > kMaxInputPowerDbm) {
    throw std::invalid_argument("amplify: total input power " + std::to_string(p_in) +
                                " dBm outside [-15, 10] dBm");
  }
}

}  // namespace

PsdProfile amplify(const AmplifierDevice& device, const PsdProfile& psd_in, double p_out_dbm) {
  check_input(device, psd_in, p_out_dbm);
  const auto& in = psd_in.powers_dbm;
  const std::size_t n = in.size();

  const double in_mw = psd_in.total_power_mw();
  const double g_avg = p_out_dbm - mw_to_dbm(in_mw);

  PsdProfile out{psd_in.grid, std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const double fraction = dbm_to_mw(in[k]) / in_mw;
    const double gain = device.a[k] + device.b[k] * g_avg - device.shb_gamma * fraction;
    out.powers_dbm[k] = in[k] + gain;
  }
  const double correction = p_out_dbm - out.total_power_dbm();
  for (double& p : out.powers_dbm) p += correction;
  return out;
}

Measurement measure(const AmplifierDevice& device, const PsdProfile& psd_in, double p_out_dbm,
                    SeededRng& rng) {
  Measurement m;
  m.clean = amplify(device, psd_in, p_out_dbm);
  m.measured = m.clean;
  if (device.noise_sigma > 0.0) {
    for (double& p : m.measured.powers_dbm) p += gaussian(rng, 0.0, device.noise_sigma);
  }
  return m;
}

std::vector<double> device_gain_profile(const AmplifierDevice& device, const PsdProfile& psd_in,
                                        double p_out_dbm) {
  PsdProfile out = amplify(device, psd_in, p_out_dbm);
  for (std::size_t k = 0; k < out.powers_dbm.size(); ++k) out.powers_dbm[k] -= psd_in.powers_dbm[k];
  return std::move(out.powers_dbm);
}

}  // namespace edfa
