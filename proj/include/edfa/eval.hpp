#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edfa/dataset.hpp"
#include "edfa/model.hpp"
#include "edfa/oracle.hpp"

namespace edfa {

enum class Scenario { intra, inter, joint };

const char* to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

// Nearest 1 dB bin center; exact half-integers go up.
int gain_bin(double gain_db);

struct BinStats {
  double mean_mse = 0.0;
  std::size_t count = 0;
};

struct EvalReport {
  Scenario scenario = Scenario::intra;
  std::string train_device;  // "joint" for the pooled model
  std::string test_device;
  std::vector<double> per_sample_mse;
  std::vector<double> sample_gain_db;
  std::vector<double> sample_p_out_dbm;
  std::map<int, BinStats> per_gain_bin;
  // Keyed by (p_out, gain bin); feeds the CSV rows.
  std::map<std::pair<double, int>, BinStats> per_pout_gain_bin;
  std::vector<double> per_channel_mse;
  double mean_mse = 0.0;
  double max_mse = 0.0;

  std::size_t count() const { return per_sample_mse.size(); }
};

// Scores the model on the given samples (normally one device's test split).
// Throws std::invalid_argument if the model output width differs from the
// sample channel count.
EvalReport evaluate(const MlpModel& model, std::span<const Sample> samples,
                    Scenario scenario = Scenario::intra, std::string train_device = {},
                    std::string test_device = {});

// As above, taking the test split of one device and checking that the model
// was trained on the dataset's grid.
EvalReport evaluate(const MlpModel& model, const FrequencyGrid& model_grid, const Dataset& dataset,
                    const std::string& test_device, Scenario scenario,
                    const std::string& train_device);

// Channelwise MSE pooled over every sample of every report.
std::vector<double> per_frequency_mse(std::span<const EvalReport> reports);

double mean_of_reports(std::span<const EvalReport> reports);

inline const std::string kJointModelId = "joint";

struct ScenarioResults {
  std::vector<EvalReport> intra;
  std::vector<EvalReport> inter;
  std::vector<EvalReport> joint;
  std::map<std::string, MlpModel> models;  // per device id, plus kJointModelId
  std::map<std::string, std::vector<double>> loss_traces;

  std::vector<EvalReport> all() const;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Train split used for a model: one device, or every device for kJointModelId.
std::vector<Sample> training_samples(const Dataset& dataset, const std::string& model_id);

// Each model gets its own seed derived from base.seed and the model id, so a
// single-device run and the full scenario run produce the same model.
TrainConfig model_train_config(const TrainConfig& base, const std::string& model_id);

// Trains one model per device plus a joint model and runs the intra, inter
// and joint protocol over the dataset's test splits.
ScenarioResults run_scenarios(const Dataset& dataset, const TrainConfig& config);

// Scores already trained models; models maps device id (and kJointModelId)
// to a model. Only the requested scenarios need their models present.
ScenarioResults evaluate_scenarios(const Dataset& dataset,
                                   const std::map<std::string, MlpModel>& models,
                                   std::span<const Scenario> scenarios);

struct OperatingPoint {
  PsdProfile psd_in;
  double p_out_dbm = 0.0;
};

std::vector<OperatingPoint> random_operating_points(SeededRng& rng, const FrequencyGrid& grid,
                                                    const WalkConfig& walk,
                                                    std::span<const PowerPair> power_grid,
                                                    std::size_t n);

// Mean over operating points and channels of the squared output difference.
double oracle_gap(const AmplifierDevice& a, const AmplifierDevice& b,
                  std::span<const OperatingPoint> points);

// Same, split into channels at or below / above hf_start_thz.
struct GapSplit {
  double low = 0.0;
  double high = 0.0;
};
GapSplit oracle_gap_split(const AmplifierDevice& a, const AmplifierDevice& b,
                          std::span<const OperatingPoint> points, double hf_start_thz);

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CalibrationResult {
  double sigma_dev = 0.0;
  double achieved_gap = 0.0;
  std::size_t iterations = 0;
};

// Expected oracle gap between two random devices of the make, with sigma_dev
// overridden. Uses n_mc device pairs, one random operating point each; the
// same draws are reused for every sigma so the estimate is smooth in sigma.
double expected_device_gap(const FrequencyGrid& grid, MakeParams make, double sigma_dev,
                           const WalkConfig& walk, std::span<const PowerPair> power_grid,
                           std::size_t n_mc, std::uint64_t seed);

// Bisection on sigma_dev until the expected gap is within 1% of target.
CalibrationResult calibrate_device_sigma(const FrequencyGrid& grid, const MakeParams& make,
                                         const WalkConfig& walk,
                                         std::span<const PowerPair> power_grid,
                                         double target_gap_db2, std::size_t n_mc,
                                         std::uint64_t seed);

}  // namespace edfa
