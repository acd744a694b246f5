#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edfa/dataset.hpp"
#include "edfa/numerics.hpp"

namespace edfa {

// Input layer width, hidden widths, output width of the gain model.
inline const std::vector<std::size_t> kGainModelDims = {85, 256, 128, 83};

// Scale applied to the two total-power features (dBm) of the input vector.
inline constexpr double kPowerFeatureScale = 0.1;

// Fully connected network: relu on every hidden layer, identity on the output.
// weights[l] has shape dims[l+1] x dims[l].
class MlpModel {
 public:
  MlpModel() = default;
  explicit MlpModel(std::vector<std::size_t> dims);  // all parameters zero
  MlpModel(const MlpModel& other);
  MlpModel& operator=(const MlpModel& other);
  MlpModel(MlpModel&&) noexcept = default;
  MlpModel& operator=(MlpModel&&) noexcept = default;

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t num_layers() const { return weights_.size(); }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  std::size_t num_parameters() const;

  const Matrix& weight(std::size_t layer) const { return weights_.at(layer); }
  const std::vector<double>& bias(std::size_t layer) const { return biases_.at(layer); }

  // Mutable access invalidates every ForwardCache taken from this model.
  Matrix& mutable_weight(std::size_t layer);
  std::vector<double>& mutable_bias(std::size_t layer);

  // Weights then bias for each layer, in layer order.
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;

  std::uint64_t instance_id() const { return id_; }
  std::uint64_t revision() const { return revision_; }

  // Parameters and dims only.
  bool operator==(const MlpModel& other) const;

 private:
  std::vector<std::size_t> dims_;
  std::vector<Matrix> weights_;
  std::vector<std::vector<double>> biases_;
  std::uint64_t id_ = 0;
  std::uint64_t revision_ = 0;

  static std::uint64_t next_id();
};

// He initialization: N(0, 2 / fan_in) weights, zero biases.
MlpModel he_init(const std::vector<std::size_t>& dims, std::uint64_t seed);

// Activations of one batched forward pass, rows are samples.
struct ForwardCache {
  std::uint64_t model_id = 0;
  std::uint64_t model_revision = 0;
  Matrix input;
  std::vector<Matrix> pre;   // pre-activation per layer
  std::vector<Matrix> post;  // activation per layer; post.back() is the output

  const Matrix& output() const { return post.back(); }
};

// Raised when a cache does not come from the model passed to backward.
class StaleCacheError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

ForwardCache forward(const MlpModel& model, const Matrix& batch);
std::vector<double> forward(const MlpModel& model, std::span<const double> x);

double mse_loss(std::span<const double> pred, std::span<const double> label);
// Mean over every entry of (pred - label)^2.
double mse_loss(const Matrix& pred, const Matrix& label);

struct Gradients {
  double loss = 0.0;
  std::vector<Matrix> d_weights;
  std::vector<std::vector<double>> d_biases;
  Matrix d_input;

  std::vector<std::span<const double>> parameter_blocks() const;
};

// Gradients of mse_loss(output, labels) over the whole batch.
Gradients backward(const MlpModel& model, const ForwardCache& cache, const Matrix& labels);
// Back-propagates an arbitrary cotangent on the output. loss is left at 0.
Gradients backward_from_output(const MlpModel& model, const ForwardCache& cache,
                               const Matrix& d_output);

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamHyper&) const = default;
};

struct AdamState {
  AdamHyper hyper;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  static AdamState for_blocks(std::span<const std::span<const double>> blocks,
                              const AdamHyper& hyper = {});
};

// Bias-corrected Adam update of every parameter block in place.
void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads);

enum class LrSchedule { constant, cosine };
enum class InitScheme { he, identity_path };

struct TrainConfig {
  std::size_t epochs = 500;
  std::size_t batch_size = 64;
  AdamHyper adam;
  std::uint64_t seed = 0;
  bool shuffle = true;
  // 0 disables early stopping; otherwise stop after this many epochs without
  // validation improvement and keep the best model.
  std::size_t patience = 0;
  LrSchedule schedule = LrSchedule::cosine;
  InitScheme init = InitScheme::identity_path;
  // Train on standardized features and targets, folded back into the first
  // and last layer when training ends.
  bool standardize = true;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct TrainResult {
  MlpModel model;
  std::vector<double> loss_trace;        // mean training MSE per epoch, dB^2
  std::vector<double> validation_trace;  // per epoch when validation data is given
  std::size_t best_epoch = 0;
};

// Raised when the loss becomes NaN or infinite.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& what, std::size_t epoch, std::size_t batch)
      : std::runtime_error(what), epoch(epoch), batch(batch) {}
  std::size_t epoch;
  std::size_t batch;
};

std::vector<double> encode_input(const Sample& sample);
Matrix encode_inputs(std::span<const Sample> samples);
Matrix stack_labels(std::span<const Sample> samples);

// The model train() starts from, expressed in the original feature units.
MlpModel initial_model(std::span<const Sample> train_samples, const TrainConfig& config,
                       const std::vector<std::size_t>& dims = kGainModelDims);

TrainResult train(std::span<const Sample> train_samples, const TrainConfig& config,
                  std::span<const Sample> validation = {},
                  const std::vector<std::size_t>& dims = kGainModelDims);

// Predicted normalized output spectrum, dB relative to the output total.
std::vector<double> predict(const MlpModel& model, const Sample& sample);
// Same prediction shifted to absolute dBm using the sample's P_out.
std::vector<double> predict_dbm(const MlpModel& model, const Sample& sample);
Matrix predict_batch(const MlpModel& model, std::span<const Sample> samples);

// d output_k / d input_j for one input vector; shape output_dim x input_dim.
Matrix input_jacobian(const MlpModel& model, std::span<const double> x);
Matrix input_jacobian(const MlpModel& model, const Sample& sample);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // description of the worst coordinate
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates where a relu changed state
};

// Central finite differences (step h) against backward() on random small
// networks, covering every parameter and every input coordinate. Relative
// error is |a - n| / max(|a|, |n|, floor).
GradCheckResult gradient_check(std::size_t trials, std::uint64_t seed, double h = 1e-5,
                               double floor = 1e-6);

const char* to_string(LrSchedule s);
const char* to_string(InitScheme s);
LrSchedule lr_schedule_from_string(const std::string& s);
InitScheme init_scheme_from_string(const std::string& s);

}  // namespace edfa
