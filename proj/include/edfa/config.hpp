#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edfa/dataset.hpp"
#include "edfa/eval.hpp"
#include "edfa/io.hpp"
#include "edfa/model.hpp"
#include "edfa/oracle.hpp"

namespace edfa {

struct CalibrationConfig {
  double target_gap_db2 = 0.04;
  std::size_t n_mc = 200;

  bool operator==(const CalibrationConfig&) const = default;
};

struct DeviceSpec {
  std::string id;
  std::uint64_t seed = 0;

  bool operator==(const DeviceSpec&) const = default;
};

// Everything needed to regenerate a dataset and train on it. Seeds not given
// explicitly are derived from global_seed with labelled child streams.
struct ExperimentConfig {
  std::uint64_t global_seed = 2020;
  FrequencyGrid grid;
  MakeParams make;
  // When set, make.sigma_dev is replaced by the calibrated value.
  std::optional<CalibrationConfig> calibration = CalibrationConfig{};
  std::vector<DeviceSpec> devices;
  WalkConfig walk;
  std::vector<PowerPair> power_grid = default_power_grid();
  ProfileMode profile_mode = ProfileMode::per_device;
  double train_fraction = kTrainFraction;
  bool clean_labels = false;
  std::uint64_t dataset_seed = 0;
  TrainConfig train;
  std::string output_dir = "out";

  // Default desk setup: devices A1, A2, A3 with derived seeds.
  static ExperimentConfig defaults(std::uint64_t global_seed = 2020);

  // Throws FieldError naming the offending field.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

Json to_json(const ExperimentConfig& config);
// Missing fields take defaults; device, dataset and training seeds missing
// from the file are derived from global_seed.
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_config(const std::string& path);

// fnv1a of the canonical JSON text.
std::string config_hash(const ExperimentConfig& config);

struct PreparedDevices {
  MakeParams make;  // sigma_dev after calibration
  std::optional<CalibrationResult> calibration;
  std::vector<AmplifierDevice> devices;
};

PreparedDevices prepare_devices(const ExperimentConfig& config);

struct GeneratedDataset {
  Dataset dataset;
  PreparedDevices devices;
};

GeneratedDataset generate_dataset(const ExperimentConfig& config);

}  // namespace edfa
