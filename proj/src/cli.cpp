#include "edfa/cli.hpp"

#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "edfa/config.hpp"
#include "edfa/eval.hpp"
#include "edfa/io.hpp"
#include "edfa/model.hpp"

namespace edfa::cli {

namespace fs = std::filesystem;

namespace {

// Reported as exit code 2 by the dispatcher.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sibling(const std::string& path, const std::string& extension) {
  fs::path p(path);
  p.replace_extension(extension);
  return p.string();
}

Json calibration_json(const PreparedDevices& prepared) {
  if (!prepared.calibration) return Json();
  Json j;
  j["sigma_dev"] = prepared.calibration->sigma_dev;
  j["achieved_gap_db2"] = prepared.calibration->achieved_gap;
  j["iterations"] = prepared.calibration->iterations;
  return j;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_path, std::ostream& out) {
  const ExperimentConfig config = load_config(config_path);
  const GeneratedDataset gen = generate_dataset(config);
  save_dataset(out_path, gen.dataset, to_json(config), calibration_json(gen.devices));

  if (gen.devices.calibration) {
    out << "calibrated sigma_dev " << format_double(gen.devices.calibration->sigma_dev)
        << " dB (oracle gap " << std::setprecision(6) << gen.devices.calibration->achieved_gap
        << " dB^2)\n";
  }
  const Dataset& ds = gen.dataset;
  std::map<std::pair<std::string, std::size_t>, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& s : ds.samples) {
    std::size_t pair_idx = 0;
    while (pair_idx < config.power_grid.size() &&
           !(config.power_grid[pair_idx].p_in_dbm == s.p_in_dbm &&
             config.power_grid[pair_idx].p_out_dbm == s.p_out_dbm)) {
      ++pair_idx;
    }
    auto& c = counts[{s.device_id, pair_idx}];
    (s.split == Split::train ? c.first : c.second) += 1;
  }
  out << "device  p_in_dbm  p_out_dbm  gain_db  samples  train  test\n";
  for (const auto& spec : config.devices) {
    for (std::size_t i = 0; i < config.power_grid.size(); ++i) {
      const auto& p = config.power_grid[i];
      const auto c = counts[{spec.id, i}];
      out << std::left << std::setw(8) << spec.id << std::right << std::fixed
          << std::setprecision(1) << std::setw(8) << p.p_in_dbm << std::setw(11) << p.p_out_dbm
          << std::setw(9) << p.gain_db() << std::setw(9) << c.first + c.second << std::setw(7)
          << c.first << std::setw(6) << c.second << '\n';
    }
  }
  out.unsetf(std::ios::floatfield);
  out << "total " << ds.samples.size() << " samples written to " << out_path << '\n';
  return kOk;
}

TrainConfig dataset_train_config(const DatasetFile& file) {
  if (file.config.is_null()) {
    TrainConfig c;
    c.seed = derive_seed(file.dataset.metadata.seed, "train");
    return c;
  }
  return config_from_json(file.config).train;
}

int cmd_train(const std::string& data_path, const std::string& device, const std::string& out_path,
              std::optional<std::size_t> epochs, std::optional<double> lr,
              std::optional<std::size_t> batch_size, std::ostream& out) {
  const DatasetFile file = load_dataset(data_path);
  const Dataset& ds = file.dataset;
  const auto ids = ds.device_ids();
  if (device != kJointModelId && std::find(ids.begin(), ids.end(), device) == ids.end()) {
    std::string known;
    for (const auto& id : ids) known += " " + id;
    throw UsageError("unknown device '" + device + "'; dataset holds:" + known + " (or joint)");
  }
  TrainConfig base = dataset_train_config(file);
  if (epochs) base.epochs = *epochs;
  if (lr) base.adam.learning_rate = *lr;
  if (batch_size) base.batch_size = *batch_size;
  base.validate();
  const TrainConfig config = model_train_config(base, device);

  const auto samples = training_samples(ds, device);
  if (samples.empty()) throw UsageError("device '" + device + "' has no training samples");
  const TrainResult result = train(samples, config);

  Checkpoint ckpt;
  ckpt.model = result.model;
  ckpt.train = config;
  ckpt.grid = ds.metadata.grid;
  ckpt.dataset_config_hash = ds.metadata.config_hash;
  if (device == kJointModelId) ckpt.trained_on = ids;
  else ckpt.trained_on = {device};
  save_checkpoint(out_path, ckpt);

  std::ostringstream csv;
  csv << "epoch,train_mse_db2\n";
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
    csv << e + 1 << ',' << format_double(result.loss_trace[e]) << '\n';
  }
  const std::string csv_path = sibling(out_path, ".loss.csv");
  write_text_file(csv_path, csv.str());

  out << "trained " << device << " on " << samples.size() << " samples for "
      << result.loss_trace.size() << " epochs; final training MSE "
      << format_double(result.loss_trace.back()) << " dB^2\n";
  out << "checkpoint " << out_path << ", loss trace " << csv_path << '\n';
  return kOk;
}

int cmd_eval(const std::string& scenario_name, const std::string& data_path,
             const std::string& models_dir, const std::string& out_path, std::ostream& out) {
  std::vector<Scenario> scenarios;
  if (scenario_name == "all") {
    scenarios = {Scenario::intra, Scenario::inter, Scenario::joint};
  } else {
    scenarios = {scenario_from_string(scenario_name)};
  }
  const DatasetFile file = load_dataset(data_path);
  const Dataset& ds = file.dataset;

  std::vector<std::string> needed;
  bool devices = false, joint = false;
  for (Scenario s : scenarios) (s == Scenario::joint ? joint : devices) = true;
  if (devices) needed = ds.device_ids();
  if (joint) needed.push_back(kJointModelId);

  std::vector<std::string> missing;
  for (const auto& id : needed) {
    if (!fs::exists(fs::path(models_dir) / (id + ".json"))) {
      missing.push_back((fs::path(models_dir) / (id + ".json")).string());
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += "\n  " + m;
    throw UsageError("missing models:" + list);
  }

  std::map<std::string, MlpModel> models;
  for (const auto& id : needed) {
    const std::string path = (fs::path(models_dir) / (id + ".json")).string();
    Checkpoint ckpt = load_checkpoint(path);
    if (!(ckpt.grid == ds.metadata.grid)) {
      throw UsageError(path + ": model grid differs from the dataset grid");
    }
    if (ckpt.model.input_dim() != ds.metadata.grid.n_channels + 2 ||
        ckpt.model.output_dim() != ds.metadata.grid.n_channels) {
      throw UsageError(path + ": model dimensions do not fit the dataset grid");
    }
    models.emplace(id, std::move(ckpt.model));
  }
  const ScenarioResults results = evaluate_scenarios(ds, models, scenarios);
  const auto reports = results.all();
  write_text_file(out_path, dump_json(reports_to_json(reports, ds.metadata.grid)) + "\n");
  std::ostringstream csv;
  write_reports_csv(csv, reports);
  const std::string csv_path =
      fs::path(out_path).extension() == ".csv" ? sibling(out_path, ".rows.csv") : sibling(out_path, ".csv");
  write_text_file(csv_path, csv.str());

  out << "scenario  train   test    count  mean_mse_db2\n";
  for (const auto& r : reports) {
    out << std::left << std::setw(10) << to_string(r.scenario) << std::setw(8) << r.train_device
        << std::setw(8) << r.test_device << std::right << std::setw(5) << r.count() << "  "
        << std::fixed << std::setprecision(6) << r.mean_mse << '\n';
  }
  out << "\nscenario  cases  mean_mse_db2  max_case_mse_db2\n";
  for (const auto* group : {&results.intra, &results.inter, &results.joint}) {
    if (group->empty()) continue;
    double worst = 0.0;
    for (const auto& r : *group) worst = std::max(worst, r.mean_mse);
    out << std::left << std::setw(10) << to_string(group->front().scenario) << std::right
        << std::setw(5) << group->size() << std::setw(14) << mean_of_reports(*group)
        << std::setw(18) << worst << '\n';
  }
  out.unsetf(std::ios::floatfield);
  out << "report " << out_path << ", rows " << csv_path << '\n';
  return kOk;
}

int cmd_gradcheck(std::size_t trials, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  if (trials == 0) throw UsageError("--trials must be at least 1");
  const GradCheckResult r = gradient_check(trials, seed);
  out << "gradient check: " << trials << " trials, " << r.checked << " coordinates checked, "
      << r.skipped << " skipped at relu kinks\n";
  out << "max relative error " << std::scientific << std::setprecision(3) << r.max_rel_error
      << '\n';
  out.unsetf(std::ios::floatfield);
  if (!(r.max_rel_error < kGradCheckTolerance)) {
    err << "gradient check failed; worst coordinate: " << r.worst << '\n';
    return kCheckFailed;
  }
  return kOk;
}

int cmd_predict(const std::string& model_path, const std::string& input_path, double p_in,
                double p_out, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(model_path);
  const Json input = parse_json(read_text_file(input_path), input_path);

  std::vector<double> norm;
  auto read_array = [&](const Json& arr, const std::string& where) {
    if (!arr.is_array()) throw ParseError(input_path + ": " + where + " must be an array");
    std::vector<double> v;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number()) {
        throw ParseError(input_path + ": " + where + "[" + std::to_string(i) +
                         "] is not a number");
      }
      v.push_back(arr[i].get<double>());
    }
    return v;
  };
  if (input.is_array()) {
    norm = read_array(input, "input");
  } else if (input.is_object() && input.contains("psd_in_norm_db")) {
    norm = read_array(input.at("psd_in_norm_db"), "psd_in_norm_db");
  } else if (input.is_object() && input.contains("psd_in_dbm")) {
    const auto dbm = read_array(input.at("psd_in_dbm"), "psd_in_dbm");
    FrequencyGrid g = ckpt.grid;
    if (dbm.size() == g.n_channels) norm = normalize(PsdProfile{g, dbm}).norm_db;
    else norm = dbm;
  } else {
    throw ParseError(input_path + ": expected an array or an object with psd_in_norm_db");
  }
  if (norm.size() != ckpt.grid.n_channels) {
    throw UsageError(input_path + ": expected " + std::to_string(ckpt.grid.n_channels) +
                     " channels, got " + std::to_string(norm.size()));
  }
  for (double v : norm) {
    if (!std::isfinite(v)) throw UsageError(input_path + ": channel values must be finite");
  }
  Sample s;
  s.p_in_dbm = p_in;
  s.p_out_dbm = p_out;
  s.gain_db = p_out - p_in;
  s.psd_in_norm_db = norm;
  const auto pred = predict(ckpt.model, s);
  const auto dbm = predict_dbm(ckpt.model, s);
  Json j;
  j["p_in_dbm"] = p_in;
  j["p_out_dbm"] = p_out;
  j["frequencies_thz"] = ckpt.grid.frequencies();
  j["psd_out_norm_db"] = pred;
  j["psd_out_dbm"] = dbm;
  out << dump_json(j) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"EDFA gain spectrum modelling: data generation, training, evaluation", "edfa"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_path, data_path, out_path, device, scenario, models_dir, model_path, input_path;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> lr;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  double p_in = 0.0, p_out = 0.0;

  auto* gen = app.add_subcommand("gen-data", "Generate a dataset from an experiment config");
  gen->add_option("--config", config_path, "Experiment config (JSON)")->required();
  gen->add_option("--out", out_path, "Dataset file (JSON Lines)")->required();

  auto* tr = app.add_subcommand("train", "Train one device model, or the joint model");
  tr->add_option("--data", data_path, "Dataset file")->required();
  tr->add_option("--device", device, "Device id, or 'joint' for all devices")->required();
  tr->add_option("--out", out_path, "Checkpoint file")->required();
  tr->add_option("--epochs", epochs, "Override the configured epoch count");
  tr->add_option("--lr", lr, "Override the configured learning rate");
  tr->add_option("--batch-size", batch_size, "Override the configured batch size");

  auto* ev = app.add_subcommand("eval", "Score trained models on the test splits");
  ev->add_option("--scenario", scenario, "intra, inter, joint or all")
      ->required()
      ->check(CLI::IsMember({"intra", "inter", "joint", "all"}));
  ev->add_option("--data", data_path, "Dataset file")->required();
  ev->add_option("--models", models_dir, "Directory holding <device>.json and joint.json")->required();
  ev->add_option("--out", out_path, "Report file (JSON); the CSV is written next to it")->required();

  auto* gc = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences");
  gc->add_option("--trials", trials, "Number of random networks")->capture_default_str();
  gc->add_option("--seed", seed, "Seed for the random networks")->capture_default_str();

  auto* pr = app.add_subcommand("predict", "Predict the output spectrum for one input");
  pr->add_option("--model", model_path, "Checkpoint file")->required();
  pr->add_option("--input", input_path, "Input spectrum (JSON)")->required();
  pr->add_option("--p-in", p_in, "Total input power, dBm")->required();
  pr->add_option("--p-out", p_out, "Total output power, dBm")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out_path, out);
    if (tr->parsed()) return cmd_train(data_path, device, out_path, epochs, lr, batch_size, out);
    if (ev->parsed()) return cmd_eval(scenario, data_path, models_dir, out_path, out);
    if (gc->parsed()) return cmd_gradcheck(trials, seed, out, err);
    if (pr->parsed()) return cmd_predict(model_path, input_path, p_in, p_out, out);
  } catch (const NumericFailure& e) {
    err << "error: numeric failure at epoch " << e.epoch << ", batch " << e.batch << ": "
        << e.what() << '\n';
    return kNumericFailure;
  } catch (const CalibrationError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const FieldError& e) {
    err << "error: invalid config field " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace edfa::cli
