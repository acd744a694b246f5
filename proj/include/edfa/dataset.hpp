#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "edfa/numerics.hpp"
#include "edfa/oracle.hpp"

namespace edfa {

// Random-walk input spectrum generator settings.
struct WalkConfig {
  double p0_min_dbm = -35.0;
  double p0_max_dbm = -20.0;
  std::vector<double> sigma_w_set = {0.1, 0.25, 0.5, 1.0, 2.0, 3.0};
  double max_excursion_db = 20.0;
  std::vector<std::size_t> smoothing_windows = {1, 3, 5, 9, 15};
  std::size_t n_profiles_per_pair = 200;

  // Throws std::invalid_argument on an empty set, negative sigma, even
  // window, non-positive excursion or an inverted p0 range.
  void validate() const;

  bool operator==(const WalkConfig&) const = default;
};

struct PowerPair {
  double p_in_dbm = 0.0;
  double p_out_dbm = 0.0;

  double gain_db() const { return p_out_dbm - p_in_dbm; }
  bool operator==(const PowerPair&) const = default;
};

inline constexpr double kMinGainDb = 10.0;
inline constexpr double kMaxGainDb = 22.0;
inline constexpr double kTrainFraction = 0.76;

// Twelve (P_in, P_out) pairs: gains 10..22 dB in ~1.1 dB steps, cycled over
// P_out = 15, 18, 21 dBm.
std::vector<PowerPair> default_power_grid();

// Throws std::invalid_argument naming the first pair whose gain falls outside
// [kMinGainDb, kMaxGainDb].
void validate_power_grid(std::span<const PowerPair> pairs);

enum class Split { train, test };

struct Sample {
  std::string device_id;
  double p_in_dbm = 0.0;
  double p_out_dbm = 0.0;
  std::vector<double> psd_in_norm_db;
  std::vector<double> psd_out_norm_db;
  double gain_db = 0.0;
  Split split = Split::train;

  bool operator==(const Sample&) const = default;
};

// Whether each device sees its own input profiles or all devices share one set.
enum class ProfileMode { per_device, shared };

struct DatasetMetadata {
  FrequencyGrid grid;
  WalkConfig walk;
  std::vector<AmplifierDevice> devices;
  std::vector<PowerPair> power_grid;
  std::uint64_t seed = 0;
  ProfileMode profile_mode = ProfileMode::per_device;
  double train_fraction = kTrainFraction;
  bool clean_labels = false;
  std::string config_hash;

  bool operator==(const DatasetMetadata&) const = default;
};

struct Dataset {
  DatasetMetadata metadata;
  std::vector<Sample> samples;

  std::vector<std::string> device_ids() const;
  const AmplifierDevice& device(const std::string& id) const;
  // Samples of one device (or all devices when id is empty) in one split.
  std::vector<Sample> select(Split split, const std::string& device_id = {}) const;
};

struct NormalizedPsd {
  std::vector<double> norm_db;
  double total_dbm = 0.0;
};

// Per-channel dB relative to the total power. Channels at -inf are allowed
// as long as one channel is finite.
NormalizedPsd normalize(const PsdProfile& profile);
PsdProfile denormalize(std::span<const double> norm_db, double total_dbm,
                       const FrequencyGrid& grid);

// p_{k+1} = p_k + w_k with w_k ~ N(0, sigma_w^2), starting at p0.
PsdProfile random_walk_profile(SeededRng& rng, double p0_dbm, double sigma_w_db,
                               const FrequencyGrid& grid);

double median(std::span<const double> values);

// Clamps powers to median +/- max_excursion / 2.
PsdProfile clip_excursion(const PsdProfile& profile, double max_excursion_db);

double excursion_db(const PsdProfile& profile);

// Walk, clip, smooth, then shift to the requested total input power.
PsdProfile shape_profile(SeededRng& rng, const WalkConfig& config, const FrequencyGrid& grid,
                         double p_in_total_dbm);

struct BuildOptions {
  ProfileMode profile_mode = ProfileMode::per_device;
  double train_fraction = kTrainFraction;
  // With measurement noise on, store the pre-noise spectrum as the label.
  bool clean_labels = false;
};

Dataset build_dataset(std::span<const AmplifierDevice> devices, const FrequencyGrid& grid,
                      const WalkConfig& walk, std::span<const PowerPair> power_grid,
                      std::uint64_t seed, const BuildOptions& options = {});

// Input profile used for one (device, pair, index) slot. build_dataset uses
// exactly this stream, so labels can be regenerated independently.
PsdProfile dataset_input_profile(std::uint64_t seed, const std::string& stream_key,
                                 std::size_t pair_index, std::size_t profile_index,
                                 const WalkConfig& walk, const FrequencyGrid& grid,
                                 const PowerPair& pair);

const char* to_string(Split split);
const char* to_string(ProfileMode mode);
Split split_from_string(const std::string& s);
ProfileMode profile_mode_from_string(const std::string& s);

}  // namespace edfa
