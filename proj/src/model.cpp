#include "edfa/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>

namespace edfa {

std::uint64_t MlpModel::next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

MlpModel::MlpModel(std::vector<std::size_t> dims) : dims_(std::move(dims)), id_(next_id()) {
  if (dims_.size() < 2) throw std::invalid_argument("MlpModel: need at least two layer widths");
  for (std::size_t d : dims_) {
    if (d == 0) throw std::invalid_argument("MlpModel: layer widths must be positive");
  }
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    weights_.emplace_back(dims_[l + 1], dims_[l]);
    biases_.emplace_back(dims_[l + 1], 0.0);
  }
}

MlpModel::MlpModel(const MlpModel& other)
    : dims_(other.dims_), weights_(other.weights_), biases_(other.biases_), id_(next_id()) {}

MlpModel& MlpModel::operator=(const MlpModel& other) {
  if (this != &other) {
    dims_ = other.dims_;
    weights_ = other.weights_;
    biases_ = other.biases_;
    ++revision_;
  }
  return *this;
}

std::size_t MlpModel::num_parameters() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

Matrix& MlpModel::mutable_weight(std::size_t layer) {
  ++revision_;
  return weights_.at(layer);
}

std::vector<double>& MlpModel::mutable_bias(std::size_t layer) {
  ++revision_;
  return biases_.at(layer);
}

std::vector<std::span<double>> MlpModel::parameter_blocks() {
  ++revision_;
  std::vector<std::span<double>> blocks;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    blocks.emplace_back(weights_[l].values());
    blocks.emplace_back(biases_[l]);
  }
  return blocks;
}

std::vector<std::span<const double>> MlpModel::parameter_blocks() const {
  std::vector<std::span<const double>> blocks;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    blocks.emplace_back(weights_[l].values());
    blocks.emplace_back(biases_[l]);
  }
  return blocks;
}

bool MlpModel::operator==(const MlpModel& other) const {
  return dims_ == other.dims_ && weights_ == other.weights_ && biases_ == other.biases_;
}

MlpModel he_init(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  MlpModel model(dims);
  SeededRng rng = SeededRng(seed).child("init");
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const double sigma = std::sqrt(2.0 / static_cast<double>(dims[l]));
    for (double& w : model.mutable_weight(l).values()) w = gaussian(rng, 0.0, sigma);
  }
  return model;
}

ForwardCache forward(const MlpModel& model, const Matrix& batch) {
  if (batch.cols() != model.input_dim()) {
    throw std::invalid_argument("forward: input width " + std::to_string(batch.cols()) +
                                " does not match model input " +
                                std::to_string(model.input_dim()));
  }
  ForwardCache cache;
  cache.model_id = model.instance_id();
  cache.model_revision = model.revision();
  cache.input = batch;
  const std::size_t layers = model.num_layers();
  cache.pre.reserve(layers);
  cache.post.reserve(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& in = l == 0 ? cache.input : cache.post.back();
    Matrix z = matmul_transposed(in, model.weight(l));
    const auto& b = model.bias(l);
    for (std::size_t r = 0; r < z.rows(); ++r) {
      auto row = z.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
    }
    Matrix h = z;
    if (l + 1 < layers) {
      for (double& v : h.values()) v = v > 0.0 ? v : 0.0;
    }
    cache.pre.push_back(std::move(z));
    cache.post.push_back(std::move(h));
  }
  return cache;
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
  Matrix batch(1, x.size(), std::vector<double>(x.begin(), x.end()));
  ForwardCache cache = forward(model, batch);
  auto out = cache.output().values();
  return {out.begin(), out.end()};
}

double mse_loss(std::span<const double> pred, std::span<const double> label) {
  if (pred.size() != label.size()) {
    throw std::invalid_argument("mse_loss: length mismatch " + std::to_string(pred.size()) +
                                " vs " + std::to_string(label.size()));
  }
  if (pred.empty()) throw std::invalid_argument("mse_loss: empty input");
  double sum = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = pred[k] - label[k];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

double mse_loss(const Matrix& pred, const Matrix& label) {
  if (pred.rows() != label.rows() || pred.cols() != label.cols()) {
    throw std::invalid_argument("mse_loss: shape mismatch");
  }
  return mse_loss(pred.values(), label.values());
}

std::vector<std::span<const double>> Gradients::parameter_blocks() const {
  std::vector<std::span<const double>> blocks;
  for (std::size_t l = 0; l < d_weights.size(); ++l) {
    blocks.emplace_back(d_weights[l].values());
    blocks.emplace_back(d_biases[l]);
  }
  return blocks;
}

namespace {

void check_cache(const MlpModel& model, const ForwardCache& cache) {
  if (cache.model_id != model.instance_id() || cache.model_revision != model.revision() ||
      cache.pre.size() != model.num_layers()) {
    throw StaleCacheError("backward: cache was not produced by this model state");
  }
}

}  // namespace

Gradients backward_from_output(const MlpModel& model, const ForwardCache& cache,
                               const Matrix& d_output) {
  check_cache(model, cache);
  const Matrix& out = cache.output();
  if (d_output.rows() != out.rows() || d_output.cols() != out.cols()) {
    throw std::invalid_argument("backward: output cotangent shape mismatch");
  }
  const std::size_t layers = model.num_layers();
  Gradients g;
  g.d_weights.resize(layers);
  g.d_biases.resize(layers);

  Matrix delta = d_output;
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& prev = l == 0 ? cache.input : cache.post[l - 1];
    g.d_weights[l] = transposed_matmul(delta, prev);
    auto& db = g.d_biases[l];
    db.assign(delta.cols(), 0.0);
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      auto row = delta.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) db[c] += row[c];
    }
    Matrix d_prev = matmul(delta, model.weight(l));
    if (l == 0) {
      g.d_input = std::move(d_prev);
    } else {
      // relu'(0) is taken as 0.
      auto dp = d_prev.values();
      auto z = cache.pre[l - 1].values();
      for (std::size_t i = 0; i < dp.size(); ++i) {
        if (!(z[i] > 0.0)) dp[i] = 0.0;
      }
      delta = std::move(d_prev);
    }
  }
  return g;
}

Gradients backward(const MlpModel& model, const ForwardCache& cache, const Matrix& labels) {
  check_cache(model, cache);
  const Matrix& out = cache.output();
  if (labels.rows() != out.rows() || labels.cols() != out.cols()) {
    throw std::invalid_argument("backward: label shape mismatch");
  }
  Matrix d_out(out.rows(), out.cols());
  const double n = static_cast<double>(out.size());
  double sum = 0.0;
  auto y = out.values();
  auto t = labels.values();
  auto d = d_out.values();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double diff = y[i] - t[i];
    sum += diff * diff;
    d[i] = 2.0 * diff / n;
  }
  Gradients g = backward_from_output(model, cache, d_out);
  g.loss = sum / n;
  return g;
}

AdamState AdamState::for_blocks(std::span<const std::span<const double>> blocks,
                                const AdamHyper& hyper) {
  AdamState s;
  s.hyper = hyper;
  for (const auto& b : blocks) {
    s.m.emplace_back(b.size(), 0.0);
    s.v.emplace_back(b.size(), 0.0);
  }
  return s;
}

void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: block count mismatch");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size() || params[b].size() != state.m[b].size()) {
      throw std::invalid_argument("adam_step: block " + std::to_string(b) + " shape mismatch");
    }
  }
  const AdamHyper& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(h.beta1, t);
  const double bias2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = state.m[b];
    auto& v = state.v[b];
    auto p = params[b];
    auto g = grads[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(adam.learning_rate >= 0.0) || !std::isfinite(adam.learning_rate)) {
    throw std::invalid_argument("TrainConfig: learning_rate must be finite and >= 0");
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw std::invalid_argument("TrainConfig: Adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw std::invalid_argument("TrainConfig: epsilon must be > 0");
}

std::vector<double> encode_input(const Sample& sample) {
  std::vector<double> x(sample.psd_in_norm_db);
  x.push_back(sample.p_in_dbm * kPowerFeatureScale);
  x.push_back(sample.p_out_dbm * kPowerFeatureScale);
  return x;
}

Matrix encode_inputs(std::span<const Sample> samples) {
  if (samples.empty()) return {};
  const std::size_t width = samples.front().psd_in_norm_db.size() + 2;
  Matrix x(samples.size(), width);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    if (samples[r].psd_in_norm_db.size() + 2 != width) {
      throw std::invalid_argument("encode_inputs: inconsistent channel counts");
    }
    const auto enc = encode_input(samples[r]);
    std::copy(enc.begin(), enc.end(), x.row(r).begin());
  }
  return x;
}

Matrix stack_labels(std::span<const Sample> samples) {
  if (samples.empty()) return {};
  const std::size_t width = samples.front().psd_out_norm_db.size();
  Matrix y(samples.size(), width);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    if (samples[r].psd_out_norm_db.size() != width) {
      throw std::invalid_argument("stack_labels: inconsistent channel counts");
    }
    std::copy(samples[r].psd_out_norm_db.begin(), samples[r].psd_out_norm_db.end(),
              y.row(r).begin());
  }
  return y;
}

namespace {

// Affine maps between original units and the coordinates the optimizer sees:
// x_internal = (x - x_mean) / x_scale, y = y_scale * y_internal + y_mean.
struct Standardizer {
  std::vector<double> x_mean, x_scale, y_mean, y_scale;
};

void column_stats(const Matrix& m, std::vector<double>& mean, std::vector<double>& scale) {
  const std::size_t n = m.rows();
  mean.assign(m.cols(), 0.0);
  scale.assign(m.cols(), 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) mean[c] += row[c];
  }
  for (double& v : mean) v /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double d = row[c] - mean[c];
      scale[c] += d * d;
    }
  }
  for (double& v : scale) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 1e-12)) v = 1.0;
  }
}

Standardizer make_standardizer(const Matrix& x, const Matrix& y, const TrainConfig& config) {
  Standardizer s;
  if (!config.standardize) {
    s.x_mean.assign(x.cols(), 0.0);
    s.x_scale.assign(x.cols(), 1.0);
    s.y_mean.assign(y.cols(), 0.0);
    s.y_scale.assign(y.cols(), 1.0);
    return s;
  }
  column_stats(x, s.x_mean, s.x_scale);
  if (config.init == InitScheme::identity_path) {
    // The identity path carries the input spectrum, so the remaining layers
    // only need to cover the residual output - input.
    Matrix residual = y;
    for (std::size_t r = 0; r < y.rows(); ++r) {
      for (std::size_t c = 0; c < y.cols(); ++c) residual(r, c) -= x(r, c);
    }
    column_stats(residual, s.y_mean, s.y_scale);
  } else {
    column_stats(y, s.y_mean, s.y_scale);
  }
  return s;
}

// He init everywhere, then overwrite one unit per output channel in every
// hidden layer so that output k starts as input k plus the He residual.
// Relies on the first output_dim inputs being normalized powers, which are
// never positive: relu(-x) == -x there.
MlpModel internal_init(const std::vector<std::size_t>& dims, const TrainConfig& config,
                       const Standardizer& s) {
  MlpModel net = he_init(dims, config.seed);
  if (config.init != InitScheme::identity_path) return net;

  const std::size_t out = dims.back();
  if (dims.size() < 3 || dims.front() < out) {
    throw std::invalid_argument("identity_path init needs a hidden layer and input >= output");
  }
  for (std::size_t l = 1; l + 1 < dims.size(); ++l) {
    if (dims[l] < out) {
      throw std::invalid_argument("identity_path init needs every hidden width >= output width");
    }
  }
  const std::size_t layers = net.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix& w = net.mutable_weight(l);
    auto& b = net.mutable_bias(l);
    if (l == 0) {
      for (std::size_t k = 0; k < out; ++k) {
        for (std::size_t c = 0; c < w.cols(); ++c) w(k, c) = 0.0;
        w(k, k) = -s.x_scale[k];
        b[k] = -s.x_mean[k];
      }
    } else if (l + 1 < layers) {
      for (std::size_t r = 0; r < w.rows(); ++r) {
        for (std::size_t k = 0; k < out; ++k) w(r, k) = 0.0;
      }
      for (std::size_t k = 0; k < out; ++k) {
        for (std::size_t c = 0; c < w.cols(); ++c) w(k, c) = 0.0;
        w(k, k) = 1.0;
        b[k] = 0.0;
      }
    } else {
      for (std::size_t r = 0; r < w.rows(); ++r) {
        for (std::size_t k = 0; k < out; ++k) w(r, k) = 0.0;
        w(r, r) = -1.0 / s.y_scale[r];
      }
    }
  }
  return net;
}

MlpModel fold(const MlpModel& net, const Standardizer& s) {
  MlpModel model(net.dims());
  const std::size_t layers = net.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    model.mutable_weight(l) = net.weight(l);
    model.mutable_bias(l) = net.bias(l);
  }
  {
    Matrix& w = model.mutable_weight(0);
    auto& b = model.mutable_bias(0);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      double shift = 0.0;
      for (std::size_t c = 0; c < w.cols(); ++c) {
        const double scaled = net.weight(0)(r, c) / s.x_scale[c];
        w(r, c) = scaled;
        shift += scaled * s.x_mean[c];
      }
      b[r] -= shift;
    }
  }
  {
    Matrix& w = model.mutable_weight(layers - 1);
    auto& b = model.mutable_bias(layers - 1);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      for (std::size_t c = 0; c < w.cols(); ++c) w(r, c) *= s.y_scale[r];
      b[r] = s.y_scale[r] * b[r] + s.y_mean[r];
    }
  }
  return model;
}

Matrix standardize_inputs(const Matrix& x, const Standardizer& s) {
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - s.x_mean[c]) / s.x_scale[c];
  }
  return out;
}

Matrix standardize_targets(const Matrix& y, const Standardizer& s) {
  Matrix out = y;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - s.y_mean[c]) / s.y_scale[c];
  }
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

// MSE in original units given outputs and targets in internal units.
// Writes the matching output cotangent into d_out when non-null.
double weighted_loss(const Matrix& y, const Matrix& t, const std::vector<double>& y_scale,
                     Matrix* d_out) {
  const double n = static_cast<double>(y.size());
  double sum = 0.0;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    for (std::size_t c = 0; c < y.cols(); ++c) {
      const double w = y_scale[c] * y_scale[c];
      const double diff = y(r, c) - t(r, c);
      sum += w * diff * diff;
      if (d_out) (*d_out)(r, c) = 2.0 * w * diff / n;
    }
  }
  return sum / n;
}

void check_dims(const Matrix& x, const Matrix& y, const std::vector<std::size_t>& dims) {
  if (x.cols() != dims.front() || y.cols() != dims.back()) {
    std::ostringstream msg;
    msg << "train: samples encode to " << x.cols() << " inputs / " << y.cols()
        << " outputs but the model expects " << dims.front() << " / " << dims.back();
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

MlpModel initial_model(std::span<const Sample> train_samples, const TrainConfig& config,
                       const std::vector<std::size_t>& dims) {
  config.validate();
  if (train_samples.empty()) throw std::invalid_argument("initial_model: no training samples");
  const Matrix x = encode_inputs(train_samples);
  const Matrix y = stack_labels(train_samples);
  check_dims(x, y, dims);
  const Standardizer s = make_standardizer(x, y, config);
  return fold(internal_init(dims, config, s), s);
}

TrainResult train(std::span<const Sample> train_samples, const TrainConfig& config,
                  std::span<const Sample> validation, const std::vector<std::size_t>& dims) {
  config.validate();
  if (train_samples.empty()) throw std::invalid_argument("train: no training samples");
  const Matrix x = encode_inputs(train_samples);
  const Matrix y = stack_labels(train_samples);
  check_dims(x, y, dims);

  const Standardizer s = make_standardizer(x, y, config);
  const Matrix xs = standardize_inputs(x, s);
  const Matrix ts = standardize_targets(y, s);

  Matrix xv, tv;
  const bool have_validation = !validation.empty();
  if (have_validation) {
    xv = standardize_inputs(encode_inputs(validation), s);
    tv = standardize_targets(stack_labels(validation), s);
  }

  MlpModel net = internal_init(dims, config, s);
  AdamState adam = AdamState::for_blocks(std::as_const(net).parameter_blocks(), config.adam);

  const std::size_t n = x.rows();
  const std::size_t batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const double total_steps = static_cast<double>(batches_per_epoch * config.epochs);
  SeededRng shuffle_rng = SeededRng(config.seed).child("shuffle");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  TrainResult result;
  MlpModel best_net;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) {
      for (std::size_t j = n; j > 1; --j) std::swap(order[j - 1], order[shuffle_rng.below(j)]);
    }
    double epoch_sum = 0.0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(n, lo + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + lo, hi - lo);
      const Matrix xb = gather_rows(xs, rows);
      const Matrix tb = gather_rows(ts, rows);

      const ForwardCache cache = forward(net, xb);
      Matrix d_out(tb.rows(), tb.cols());
      const double loss = weighted_loss(cache.output(), tb, s.y_scale, &d_out);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training loss became non-finite at epoch " << epoch << ", batch " << b;
        throw NumericFailure(msg.str(), epoch, b);
      }
      epoch_sum += loss * static_cast<double>(rows.size());

      const Gradients g = backward_from_output(net, cache, d_out);
      adam.hyper.learning_rate =
          config.schedule == LrSchedule::cosine
              ? config.adam.learning_rate * 0.5 *
                    (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps))
              : config.adam.learning_rate;
      const auto params = net.parameter_blocks();
      const auto grads = g.parameter_blocks();
      adam_step(adam, params, grads);
      ++step;
    }
    result.loss_trace.push_back(epoch_sum / static_cast<double>(n));

    if (have_validation) {
      const ForwardCache vc = forward(net, xv);
      const double val = weighted_loss(vc.output(), tv, s.y_scale, nullptr);
      result.validation_trace.push_back(val);
      if (val < best_val) {
        best_val = val;
        result.best_epoch = epoch;
        if (config.patience > 0) best_net = net;
      } else if (config.patience > 0 && epoch - result.best_epoch >= config.patience) {
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
  }

  const bool use_best = have_validation && config.patience > 0;
  result.model = fold(use_best ? best_net : net, s);
  return result;
}

std::vector<double> predict(const MlpModel& model, const Sample& sample) {
  return forward(model, encode_input(sample));
}

std::vector<double> predict_dbm(const MlpModel& model, const Sample& sample) {
  auto y = predict(model, sample);
  for (double& v : y) v += sample.p_out_dbm;
  return y;
}

Matrix predict_batch(const MlpModel& model, std::span<const Sample> samples) {
  if (samples.empty()) return Matrix(0, model.output_dim());
  return forward(model, encode_inputs(samples)).output();
}

Matrix input_jacobian(const MlpModel& model, std::span<const double> x) {
  Matrix batch(1, x.size(), std::vector<double>(x.begin(), x.end()));
  const ForwardCache cache = forward(model, batch);
  Matrix jac(model.output_dim(), model.input_dim());
  Matrix seed(1, model.output_dim());
  for (std::size_t k = 0; k < model.output_dim(); ++k) {
    seed(0, k) = 1.0;
    const Gradients g = backward_from_output(model, cache, seed);
    std::copy(g.d_input.values().begin(), g.d_input.values().end(), jac.row(k).begin());
    seed(0, k) = 0.0;
  }
  return jac;
}

Matrix input_jacobian(const MlpModel& model, const Sample& sample) {
  return input_jacobian(model, encode_input(sample));
}

const char* to_string(LrSchedule s) { return s == LrSchedule::cosine ? "cosine" : "constant"; }

const char* to_string(InitScheme s) { return s == InitScheme::identity_path ? "identity_path" : "he"; }

LrSchedule lr_schedule_from_string(const std::string& s) {
  if (s == "cosine") return LrSchedule::cosine;
  if (s == "constant") return LrSchedule::constant;
  throw std::invalid_argument("unknown learning-rate schedule '" + s + "'");
}

InitScheme init_scheme_from_string(const std::string& s) {
  if (s == "identity_path") return InitScheme::identity_path;
  if (s == "he") return InitScheme::he;
  throw std::invalid_argument("unknown init scheme '" + s + "'");
}

namespace {

std::vector<bool> relu_mask(const ForwardCache& cache) {
  std::vector<bool> mask;
  for (std::size_t l = 0; l + 1 < cache.pre.size(); ++l) {
    for (double v : cache.pre[l].values()) mask.push_back(v > 0.0);
  }
  return mask;
}

}  // namespace

GradCheckResult gradient_check(std::size_t trials, std::uint64_t seed, double h, double floor) {
  if (trials == 0) throw std::invalid_argument("gradient_check: trials must be >= 1");
  if (!(h > 0.0) || !(floor > 0.0)) {
    throw std::invalid_argument("gradient_check: step and floor must be positive");
  }
  GradCheckResult result;
  const SeededRng root(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    SeededRng rng = root.child("trial", t);
    std::vector<std::size_t> dims;
    dims.push_back(2 + rng.below(5));
    const std::size_t hidden = 1 + rng.below(2);
    for (std::size_t l = 0; l < hidden; ++l) dims.push_back(2 + rng.below(7));
    dims.push_back(1 + rng.below(4));
    MlpModel model = he_init(dims, rng.next_u64());
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
      for (double& b : model.mutable_bias(l)) b = gaussian(rng, 0.0, 0.1);
    }
    const std::size_t batch = 1 + rng.below(4);
    Matrix x(batch, dims.front());
    Matrix y(batch, dims.back());
    for (double& v : x.values()) v = gaussian(rng, 0.0, 1.0);
    for (double& v : y.values()) v = gaussian(rng, 0.0, 1.0);

    const ForwardCache base = forward(model, x);
    const Gradients grads = backward(model, base, y);
    const std::vector<bool> mask = relu_mask(base);

    auto consider = [&](double analytic, double plus, double minus, const ForwardCache& cp,
                        const ForwardCache& cm, const std::string& what) {
      if (relu_mask(cp) != mask || relu_mask(cm) != mask) {
        ++result.skipped;
        return;
      }
      const double numeric = (plus - minus) / (2.0 * h);
      const double err =
          std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      ++result.checked;
      if (err > result.max_rel_error || result.worst.empty()) {
        result.max_rel_error = err;
        std::ostringstream os;
        os << "trial " << t << " " << what << ": analytic " << analytic << ", numeric " << numeric;
        result.worst = os.str();
      }
    };

    const auto analytic_blocks = grads.parameter_blocks();
    const std::size_t n_blocks = analytic_blocks.size();
    for (std::size_t bi = 0; bi < n_blocks; ++bi) {
      const std::size_t n = analytic_blocks[bi].size();
      for (std::size_t i = 0; i < n; ++i) {
        const double orig = model.parameter_blocks()[bi][i];
        model.parameter_blocks()[bi][i] = orig + h;
        const ForwardCache cp = forward(model, x);
        model.parameter_blocks()[bi][i] = orig - h;
        const ForwardCache cm = forward(model, x);
        model.parameter_blocks()[bi][i] = orig;
        std::ostringstream what;
        what << (bi % 2 == 0 ? "weight" : "bias") << " layer " << bi / 2 << " index " << i;
        consider(analytic_blocks[bi][i], mse_loss(cp.output(), y), mse_loss(cm.output(), y), cp,
                 cm, what.str());
      }
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      Matrix xp = x;
      Matrix xm = x;
      xp.values()[i] += h;
      xm.values()[i] -= h;
      const ForwardCache cp = forward(model, xp);
      const ForwardCache cm = forward(model, xm);
      consider(grads.d_input.values()[i], mse_loss(cp.output(), y), mse_loss(cm.output(), y), cp,
               cm, "input index " + std::to_string(i));
    }
  }
  return result;
}

}  // namespace edfa
