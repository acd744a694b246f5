#include "edfa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace edfa {

void WalkConfig::validate() const {
  if (!(p0_max_dbm >= p0_min_dbm) || !std::isfinite(p0_min_dbm) || !std::isfinite(p0_max_dbm)) {
    throw std::invalid_argument("WalkConfig: p0 range must be finite with max >= min");
  }
  if (sigma_w_set.empty()) throw std::invalid_argument("WalkConfig: sigma_w_set is empty");
  for (double s : sigma_w_set) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("WalkConfig: sigma_w values must be >= 0");
    }
  }
  if (!(max_excursion_db > 0.0)) throw std::invalid_argument("WalkConfig: max_excursion must be > 0");
  if (smoothing_windows.empty()) throw std::invalid_argument("WalkConfig: smoothing_windows is empty");
  for (std::size_t w : smoothing_windows) {
    if (w == 0 || w % 2 == 0) {
      throw std::invalid_argument("WalkConfig: smoothing window " + std::to_string(w) +
                                  " is not odd");
    }
  }
  if (n_profiles_per_pair == 0) throw std::invalid_argument("WalkConfig: n_profiles_per_pair must be >= 1");
}

std::vector<PowerPair> default_power_grid() {
  return {{5.0, 15.0},  {6.9, 18.0},  {8.8, 21.0},  {1.7, 15.0},  {3.6, 18.0},  {5.5, 21.0},
          {-1.5, 15.0}, {0.4, 18.0},  {2.3, 21.0},  {-4.8, 15.0}, {-2.9, 18.0}, {-1.0, 21.0}};
}

void validate_power_grid(std::span<const PowerPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("power grid is empty");
  constexpr double tol = 1e-9;
  for (const auto& p : pairs) {
    const double g = p.gain_db();
    if (!std::isfinite(g) || g < kMinGainDb - tol || g > kMaxGainDb + tol) {
      std::ostringstream msg;
      msg << "power pair (p_in=" << p.p_in_dbm << " dBm, p_out=" << p.p_out_dbm
          << " dBm) has gain " << g << " dB outside [" << kMinGainDb << ", " << kMaxGainDb << "]";
      throw std::invalid_argument(msg.str());
    }
    if (p.p_in_dbm < kMinInputPowerDbm || p.p_in_dbm > kMaxInputPowerDbm) {
      std::ostringstream msg;
      msg << "power pair (p_in=" << p.p_in_dbm << " dBm, p_out=" << p.p_out_dbm
          << " dBm) has input power outside the amplifier range";
      throw std::invalid_argument(msg.str());
    }
  }
}

std::vector<std::string> Dataset::device_ids() const {
  std::vector<std::string> ids;
  for (const auto& d : metadata.devices) ids.push_back(d.device_id);
  return ids;
}

const AmplifierDevice& Dataset::device(const std::string& id) const {
  for (const auto& d : metadata.devices) {
    if (d.device_id == id) return d;
  }
  throw std::invalid_argument("dataset has no device '" + id + "'");
}

std::vector<Sample> Dataset::select(Split split, const std::string& device_id) const {
  std::vector<Sample> out;
  for (const auto& s : samples) {
    if (s.split == split && (device_id.empty() || s.device_id == device_id)) out.push_back(s);
  }
  return out;
}

NormalizedPsd normalize(const PsdProfile& profile) {
  if (profile.powers_dbm.empty()) throw std::invalid_argument("normalize: empty profile");
  bool any_finite = false;
  for (double p : profile.powers_dbm) {
    if (std::isnan(p) || p == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("normalize: NaN or +inf channel power");
    }
    any_finite = any_finite || std::isfinite(p);
  }
  if (!any_finite) throw std::invalid_argument("normalize: every channel is -inf");

  NormalizedPsd out;
  out.total_dbm = profile.total_power_dbm();
  out.norm_db.resize(profile.powers_dbm.size());
  for (std::size_t k = 0; k < out.norm_db.size(); ++k) {
    out.norm_db[k] = profile.powers_dbm[k] - out.total_dbm;
  }
  return out;
}

PsdProfile denormalize(std::span<const double> norm_db, double total_dbm,
                       const FrequencyGrid& grid) {
  PsdProfile p{grid, std::vector<double>(norm_db.begin(), norm_db.end())};
  for (double& v : p.powers_dbm) v += total_dbm;
  return p;
}

PsdProfile random_walk_profile(SeededRng& rng, double p0_dbm, double sigma_w_db,
                               const FrequencyGrid& grid) {
  PsdProfile p{grid, std::vector<double>(grid.n_channels)};
  p.powers_dbm[0] = p0_dbm;
  for (std::size_t k = 1; k < grid.n_channels; ++k) {
    p.powers_dbm[k] = p.powers_dbm[k - 1] + gaussian(rng, 0.0, sigma_w_db);
  }
  return p;
}

double median(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

PsdProfile clip_excursion(const PsdProfile& profile, double max_excursion_db) {
  if (!(max_excursion_db > 0.0)) throw std::invalid_argument("clip_excursion: max_excursion must be > 0");
  const double center = median(profile.powers_dbm);
  const double lo = center - 0.5 * max_excursion_db;
  const double hi = center + 0.5 * max_excursion_db;
  PsdProfile out = profile;
  for (double& p : out.powers_dbm) p = std::clamp(p, lo, hi);
  return out;
}

double excursion_db(const PsdProfile& profile) {
  const auto [lo, hi] = std::minmax_element(profile.powers_dbm.begin(), profile.powers_dbm.end());
  return *hi - *lo;
}

PsdProfile shape_profile(SeededRng& rng, const WalkConfig& config, const FrequencyGrid& grid,
                         double p_in_total_dbm) {
  const double p0 = rng.uniform(config.p0_min_dbm, config.p0_max_dbm);
  const double sigma = config.sigma_w_set[rng.below(config.sigma_w_set.size())];
  const std::size_t window = config.smoothing_windows[rng.below(config.smoothing_windows.size())];

  PsdProfile p = clip_excursion(random_walk_profile(rng, p0, sigma, grid), config.max_excursion_db);
  p.powers_dbm = moving_average(p.powers_dbm, window);
  const double shift = p_in_total_dbm - p.total_power_dbm();
  for (double& v : p.powers_dbm) v += shift;
  return p;
}

PsdProfile dataset_input_profile(std::uint64_t seed, const std::string& stream_key,
                                 std::size_t pair_index, std::size_t profile_index,
                                 const WalkConfig& walk, const FrequencyGrid& grid,
                                 const PowerPair& pair) {
  SeededRng rng = SeededRng(seed).child(
      "profile/" + stream_key + "/" + std::to_string(pair_index), profile_index);
  return shape_profile(rng, walk, grid, pair.p_in_dbm);
}

Dataset build_dataset(std::span<const AmplifierDevice> devices, const FrequencyGrid& grid,
                      const WalkConfig& walk, std::span<const PowerPair> power_grid,
                      std::uint64_t seed, const BuildOptions& options) {
  grid.validate();
  walk.validate();
  validate_power_grid(power_grid);
  if (devices.empty()) throw std::invalid_argument("build_dataset: no devices");
  if (!(options.train_fraction >= 0.0 && options.train_fraction <= 1.0)) {
    throw std::invalid_argument("build_dataset: train_fraction must lie in [0, 1]");
  }
  std::set<std::string> ids;
  for (const auto& d : devices) {
    if (!ids.insert(d.device_id).second) {
      throw std::invalid_argument("build_dataset: duplicate device id '" + d.device_id + "'");
    }
    if (d.a.size() != grid.n_channels || d.b.size() != grid.n_channels) {
      throw std::invalid_argument("build_dataset: device " + d.device_id +
                                  " does not match the frequency grid");
    }
  }
  for (std::size_t w : walk.smoothing_windows) {
    if (w > grid.n_channels) {
      throw std::invalid_argument("build_dataset: smoothing window " + std::to_string(w) +
                                  " exceeds channel count");
    }
  }

  Dataset ds;
  ds.metadata.grid = grid;
  ds.metadata.walk = walk;
  ds.metadata.devices.assign(devices.begin(), devices.end());
  ds.metadata.power_grid.assign(power_grid.begin(), power_grid.end());
  ds.metadata.seed = seed;
  ds.metadata.profile_mode = options.profile_mode;
  ds.metadata.train_fraction = options.train_fraction;
  ds.metadata.clean_labels = options.clean_labels;

  const SeededRng root(seed);
  const std::size_t per_device = power_grid.size() * walk.n_profiles_per_pair;
  ds.samples.reserve(devices.size() * per_device);

  for (const auto& dev : devices) {
    const std::string key = options.profile_mode == ProfileMode::shared ? "shared" : dev.device_id;
    const std::size_t first = ds.samples.size();
    for (std::size_t i = 0; i < power_grid.size(); ++i) {
      const PowerPair& pair = power_grid[i];
      for (std::size_t n = 0; n < walk.n_profiles_per_pair; ++n) {
        const PsdProfile in = dataset_input_profile(seed, key, i, n, walk, grid, pair);
        SeededRng noise_rng =
            root.child("noise/" + dev.device_id + "/" + std::to_string(i), n);
        const Measurement m = measure(dev, in, pair.p_out_dbm, noise_rng);
        const PsdProfile& label = options.clean_labels ? m.clean : m.measured;

        Sample s;
        s.device_id = dev.device_id;
        s.p_in_dbm = pair.p_in_dbm;
        s.p_out_dbm = pair.p_out_dbm;
        s.gain_db = pair.gain_db();
        s.psd_in_norm_db = normalize(in).norm_db;
        s.psd_out_norm_db = normalize(label).norm_db;
        ds.samples.push_back(std::move(s));
      }
    }

    // Fisher-Yates over this device's samples; the shuffled prefix is train.
    std::vector<std::size_t> order(per_device);
    for (std::size_t j = 0; j < per_device; ++j) order[j] = first + j;
    SeededRng split_rng = root.child("split/" + dev.device_id);
    for (std::size_t j = per_device; j > 1; --j) {
      std::swap(order[j - 1], order[split_rng.below(j)]);
    }
    const auto n_train = static_cast<std::size_t>(
        std::floor(options.train_fraction * static_cast<double>(per_device) + 0.5));
    for (std::size_t j = 0; j < per_device; ++j) {
      ds.samples[order[j]].split = j < n_train ? Split::train : Split::test;
    }
  }
  return ds;
}

const char* to_string(Split split) { return split == Split::train ? "train" : "test"; }

const char* to_string(ProfileMode mode) {
  return mode == ProfileMode::shared ? "shared" : "per_device";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + s + "'");
}

ProfileMode profile_mode_from_string(const std::string& s) {
  if (s == "per_device") return ProfileMode::per_device;
  if (s == "shared") return ProfileMode::shared;
  throw std::invalid_argument("unknown profile mode '" + s + "'");
}

}  // namespace edfa
