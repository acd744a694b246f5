#include "edfa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace edfa {

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::intra: return "intra";
    case Scenario::inter: return "inter";
    case Scenario::joint: return "joint";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "intra") return Scenario::intra;
  if (s == "inter") return Scenario::inter;
  if (s == "joint") return Scenario::joint;
  throw std::invalid_argument("unknown scenario '" + s + "'");
}

int gain_bin(double gain_db) {
  if (!std::isfinite(gain_db)) throw std::invalid_argument("gain_bin: non-finite gain");
  return static_cast<int>(std::floor(gain_db + 0.5));
}

EvalReport evaluate(const MlpModel& model, std::span<const Sample> samples, Scenario scenario,
                    std::string train_device, std::string test_device) {
  EvalReport r;
  r.scenario = scenario;
  r.train_device = std::move(train_device);
  r.test_device = std::move(test_device);
  if (samples.empty()) return r;

  const std::size_t n_ch = samples.front().psd_out_norm_db.size();
  if (model.output_dim() != n_ch) {
    throw std::invalid_argument("evaluate: model predicts " + std::to_string(model.output_dim()) +
                                " channels, samples have " + std::to_string(n_ch));
  }
  const Matrix pred = predict_batch(model, samples);
  r.per_channel_mse.assign(n_ch, 0.0);
  std::map<int, double> bin_sum;
  std::map<std::pair<double, int>, double> pout_sum;
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.psd_out_norm_db.size() != n_ch) {
      throw std::invalid_argument("evaluate: inconsistent channel count in samples");
    }
    const auto row = pred.row(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < n_ch; ++k) {
      const double e = row[k] - s.psd_out_norm_db[k];
      acc += e * e;
      r.per_channel_mse[k] += e * e;
    }
    const double mse = acc / static_cast<double>(n_ch);
    r.per_sample_mse.push_back(mse);
    r.sample_gain_db.push_back(s.gain_db);
    r.sample_p_out_dbm.push_back(s.p_out_dbm);
    total += mse;
    r.max_mse = std::max(r.max_mse, mse);

    const int bin = gain_bin(s.gain_db);
    bin_sum[bin] += mse;
    ++r.per_gain_bin[bin].count;
    const auto key = std::make_pair(s.p_out_dbm, bin);
    pout_sum[key] += mse;
    ++r.per_pout_gain_bin[key].count;
  }
  const double n = static_cast<double>(samples.size());
  for (double& v : r.per_channel_mse) v /= n;
  r.mean_mse = total / n;
  for (auto& [bin, stats] : r.per_gain_bin) stats.mean_mse = bin_sum[bin] / stats.count;
  for (auto& [key, stats] : r.per_pout_gain_bin) stats.mean_mse = pout_sum[key] / stats.count;
  return r;
}

EvalReport evaluate(const MlpModel& model, const FrequencyGrid& model_grid, const Dataset& dataset,
                    const std::string& test_device, Scenario scenario,
                    const std::string& train_device) {
  if (!(model_grid == dataset.metadata.grid)) {
    throw std::invalid_argument("evaluate: model grid differs from dataset grid");
  }
  const auto samples = dataset.select(Split::test, test_device);
  return evaluate(model, samples, scenario, train_device, test_device);
}

std::vector<double> per_frequency_mse(std::span<const EvalReport> reports) {
  if (reports.empty()) throw std::invalid_argument("per_frequency_mse: no reports");
  std::vector<double> out;
  std::size_t n = 0;
  for (const auto& r : reports) {
    if (r.count() == 0) continue;
    if (out.empty()) out.assign(r.per_channel_mse.size(), 0.0);
    if (r.per_channel_mse.size() != out.size()) {
      throw std::invalid_argument("per_frequency_mse: channel count differs between reports");
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] += r.per_channel_mse[k] * static_cast<double>(r.count());
    }
    n += r.count();
  }
  if (n == 0) throw std::invalid_argument("per_frequency_mse: reports hold no samples");
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

double mean_of_reports(std::span<const EvalReport> reports) {
  if (reports.empty()) throw std::invalid_argument("mean_of_reports: no reports");
  double sum = 0.0;
  for (const auto& r : reports) sum += r.mean_mse;
  return sum / static_cast<double>(reports.size());
}

std::vector<EvalReport> ScenarioResults::all() const {
  std::vector<EvalReport> out = intra;
  out.insert(out.end(), inter.begin(), inter.end());
  out.insert(out.end(), joint.begin(), joint.end());
  return out;
}

std::vector<Sample> training_samples(const Dataset& dataset, const std::string& model_id) {
  if (model_id == kJointModelId) return dataset.select(Split::train);
  dataset.device(model_id);  // throws for an unknown id
  return dataset.select(Split::train, model_id);
}

TrainConfig model_train_config(const TrainConfig& base, const std::string& model_id) {
  TrainConfig c = base;
  c.seed = derive_seed(base.seed, "model/" + model_id);
  return c;
}

ScenarioResults run_scenarios(const Dataset& dataset, const TrainConfig& config) {
  const auto ids = dataset.device_ids();
  if (ids.size() < 2) throw ScenarioError("run_scenarios: need at least two devices");
  std::map<std::string, MlpModel> models;
  std::map<std::string, std::vector<double>> traces;
  std::vector<std::string> model_ids = ids;
  model_ids.push_back(kJointModelId);
  for (const auto& id : model_ids) {
    const auto samples = training_samples(dataset, id);
    try {
      TrainResult res = train(samples, model_train_config(config, id));
      models.emplace(id, std::move(res.model));
      traces.emplace(id, std::move(res.loss_trace));
    } catch (const NumericFailure& e) {
      throw NumericFailure("training model " + id + ": " + e.what(), e.epoch, e.batch);
    } catch (const std::exception& e) {
      throw ScenarioError("training model " + id + ": " + e.what());
    }
  }
  const Scenario all[] = {Scenario::intra, Scenario::inter, Scenario::joint};
  ScenarioResults results = evaluate_scenarios(dataset, models, all);
  results.loss_traces = std::move(traces);
  return results;
}

ScenarioResults evaluate_scenarios(const Dataset& dataset,
                                   const std::map<std::string, MlpModel>& models,
                                   std::span<const Scenario> scenarios) {
  const auto ids = dataset.device_ids();
  bool need_devices = false;
  bool need_joint = false;
  for (Scenario s : scenarios) {
    if (s == Scenario::joint) need_joint = true;
    else need_devices = true;
  }
  std::vector<std::string> missing;
  if (need_devices) {
    for (const auto& id : ids) {
      if (!models.count(id)) missing.push_back(id);
    }
  }
  if (need_joint && !models.count(kJointModelId)) missing.push_back(kJointModelId);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ScenarioError("missing models: " + list);
  }

  std::map<std::string, std::vector<Sample>> test;
  for (const auto& id : ids) test.emplace(id, dataset.select(Split::test, id));

  ScenarioResults out;
  for (Scenario s : scenarios) {
    try {
      if (s == Scenario::intra) {
        for (const auto& id : ids) {
          out.intra.push_back(evaluate(models.at(id), test.at(id), s, id, id));
        }
      } else if (s == Scenario::inter) {
        for (const auto& tr : ids) {
          for (const auto& te : ids) {
            if (tr != te) out.inter.push_back(evaluate(models.at(tr), test.at(te), s, tr, te));
          }
        }
      } else {
        for (const auto& id : ids) {
          out.joint.push_back(
              evaluate(models.at(kJointModelId), test.at(id), s, kJointModelId, id));
        }
      }
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(std::string(to_string(s)) + " scenario: " + e.what());
    }
  }
  for (const auto& [id, model] : models) out.models.emplace(id, model);
  return out;
}

std::vector<OperatingPoint> random_operating_points(SeededRng& rng, const FrequencyGrid& grid,
                                                    const WalkConfig& walk,
                                                    std::span<const PowerPair> power_grid,
                                                    std::size_t n) {
  if (power_grid.empty()) throw std::invalid_argument("random_operating_points: empty power grid");
  std::vector<OperatingPoint> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PowerPair& pair = power_grid[rng.below(power_grid.size())];
    points.push_back({shape_profile(rng, walk, grid, pair.p_in_dbm), pair.p_out_dbm});
  }
  return points;
}

GapSplit oracle_gap_split(const AmplifierDevice& a, const AmplifierDevice& b,
                          std::span<const OperatingPoint> points, double hf_start_thz) {
  if (points.empty()) throw std::invalid_argument("oracle_gap: no operating points");
  GapSplit g;
  std::size_t n_low = 0, n_high = 0;
  for (const auto& p : points) {
    const PsdProfile ya = amplify(a, p.psd_in, p.p_out_dbm);
    const PsdProfile yb = amplify(b, p.psd_in, p.p_out_dbm);
    for (std::size_t k = 0; k < ya.powers_dbm.size(); ++k) {
      const double d = ya.powers_dbm[k] - yb.powers_dbm[k];
      if (a.grid.frequency(k) > hf_start_thz) {
        g.high += d * d;
        ++n_high;
      } else {
        g.low += d * d;
        ++n_low;
      }
    }
  }
  if (n_low) g.low /= static_cast<double>(n_low);
  if (n_high) g.high /= static_cast<double>(n_high);
  return g;
}

double oracle_gap(const AmplifierDevice& a, const AmplifierDevice& b,
                  std::span<const OperatingPoint> points) {
  if (points.empty()) throw std::invalid_argument("oracle_gap: no operating points");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : points) {
    const PsdProfile ya = amplify(a, p.psd_in, p.p_out_dbm);
    const PsdProfile yb = amplify(b, p.psd_in, p.p_out_dbm);
    for (std::size_t k = 0; k < ya.powers_dbm.size(); ++k) {
      const double d = ya.powers_dbm[k] - yb.powers_dbm[k];
      sum += d * d;
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

double expected_device_gap(const FrequencyGrid& grid, MakeParams make, double sigma_dev,
                           const WalkConfig& walk, std::span<const PowerPair> power_grid,
                           std::size_t n_mc, std::uint64_t seed) {
  if (n_mc == 0) throw std::invalid_argument("expected_device_gap: n_mc must be positive");
  make.sigma_dev = sigma_dev;
  make.noise_sigma = 0.0;
  const SeededRng root(seed);
  double sum = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    const std::string tag = std::to_string(i);
    const auto a = make_device(grid, make, "mc-a", derive_seed(seed, "mc/a/" + tag));
    const auto b = make_device(grid, make, "mc-b", derive_seed(seed, "mc/b/" + tag));
    SeededRng rng = root.child("mc/point", i);
    const auto points = random_operating_points(rng, grid, walk, power_grid, 1);
    sum += oracle_gap(a, b, points);
  }
  return sum / static_cast<double>(n_mc);
}

CalibrationResult calibrate_device_sigma(const FrequencyGrid& grid, const MakeParams& make,
                                         const WalkConfig& walk,
                                         std::span<const PowerPair> power_grid,
                                         double target_gap_db2, std::size_t n_mc,
                                         std::uint64_t seed) {
  if (!(target_gap_db2 >= 0.0) || !std::isfinite(target_gap_db2)) {
    throw std::invalid_argument("calibrate_device_sigma: target gap must be finite and >= 0");
  }
  if (target_gap_db2 == 0.0) return {0.0, 0.0, 0};
  auto gap = [&](double s) {
    return expected_device_gap(grid, make, s, walk, power_grid, n_mc, seed);
  };
  const double tol = 0.01 * target_gap_db2;
  double lo = 0.0;
  double hi = 0.05;
  double g_hi = gap(hi);
  std::size_t iterations = 1;
  for (int i = 0; !(g_hi >= target_gap_db2); ++i) {
    if (i == 40 || !std::isfinite(g_hi)) {
      std::ostringstream os;
      os << "calibration does not bracket target " << target_gap_db2 << ": gap at sigma " << hi
         << " is only " << g_hi;
      throw CalibrationError(os.str());
    }
    lo = hi;
    hi *= 2.0;
    g_hi = gap(hi);
    ++iterations;
  }
  if (std::abs(g_hi - target_gap_db2) <= tol) return {hi, g_hi, iterations};
  double best_sigma = hi;
  double best_gap = g_hi;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double g = gap(mid);
    ++iterations;
    if (std::abs(g - target_gap_db2) < std::abs(best_gap - target_gap_db2)) {
      best_sigma = mid;
      best_gap = g;
    }
    if (std::abs(g - target_gap_db2) <= tol) return {mid, g, iterations};
    if (g < target_gap_db2) lo = mid;
    else hi = mid;
  }
  std::ostringstream os;
  os << "calibration did not converge: best sigma " << best_sigma << " gives gap " << best_gap
     << " for target " << target_gap_db2;
  throw CalibrationError(os.str());
}

}  // namespace edfa
