#include "edfa/config.hpp"

#include <set>

namespace edfa {

ExperimentConfig ExperimentConfig::defaults(std::uint64_t global_seed) {
  ExperimentConfig c;
  c.global_seed = global_seed;
  for (const char* id : {"A1", "A2", "A3"}) {
    c.devices.push_back({id, derive_seed(global_seed, std::string("device/") + id)});
  }
  c.dataset_seed = derive_seed(global_seed, "dataset");
  c.train.seed = derive_seed(global_seed, "train");
  return c;
}

void ExperimentConfig::validate() const {
  auto guard = [](const std::string& field, auto&& fn) {
    try {
      fn();
    } catch (const FieldError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw FieldError(field, e.what());
    }
  };
  guard("grid", [&] { grid.validate(); });
  guard("make", [&] { make.validate(); });
  guard("walk", [&] { walk.validate(); });
  guard("train", [&] { train.validate(); });
  guard("power_grid", [&] { validate_power_grid(power_grid); });
  if (power_grid.empty()) throw FieldError("power_grid", "must not be empty");
  if (devices.size() < 2) throw FieldError("devices", "need at least two devices");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const std::string field = "devices[" + std::to_string(i) + "].id";
    if (devices[i].id.empty()) throw FieldError(field, "must not be empty");
    if (devices[i].id == kJointModelId) throw FieldError(field, "'joint' is reserved");
    if (!ids.insert(devices[i].id).second) throw FieldError(field, "duplicate id");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw FieldError("train_fraction", "must lie strictly between 0 and 1");
  }
  for (std::size_t w : walk.smoothing_windows) {
    if (w > grid.n_channels) throw FieldError("walk.smoothing_windows", "window exceeds channel count");
  }
  if (calibration) {
    if (!(calibration->target_gap_db2 >= 0.0)) {
      throw FieldError("calibration.target_gap_db2", "must be >= 0");
    }
    if (calibration->n_mc == 0) throw FieldError("calibration.n_mc", "must be positive");
  }
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["global_seed"] = c.global_seed;
  j["grid"] = to_json(c.grid);
  j["make"] = to_json(c.make);
  if (c.calibration) {
    Json cal;
    cal["target_gap_db2"] = c.calibration->target_gap_db2;
    cal["n_mc"] = c.calibration->n_mc;
    j["calibration"] = cal;
  } else {
    j["calibration"] = nullptr;
  }
  Json devices = Json::array();
  for (const auto& d : c.devices) devices.push_back({{"id", d.id}, {"seed", d.seed}});
  j["devices"] = devices;
  j["walk"] = to_json(c.walk);
  Json pairs = Json::array();
  for (const auto& p : c.power_grid) pairs.push_back(to_json(p));
  j["power_grid"] = pairs;
  j["profile_mode"] = to_string(c.profile_mode);
  j["train_fraction"] = c.train_fraction;
  j["clean_labels"] = c.clean_labels;
  j["dataset_seed"] = c.dataset_seed;
  j["train"] = to_json(c.train);
  j["output_dir"] = c.output_dir;
  return j;
}

namespace {

void expect_keys(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw FieldError(path.empty() ? "config" : path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw FieldError(path.empty() ? key : path + "." + key, "unknown field");
  }
}

std::uint64_t read_u64(const Json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  throw FieldError(field, "expected a non-negative integer");
}

double read_number(const Json& v, const std::string& field) {
  if (!v.is_number()) throw FieldError(field, "expected a number");
  return v.get<double>();
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  expect_keys(j, "", {"global_seed", "grid", "make", "calibration", "devices", "walk", "power_grid",
                      "profile_mode", "train_fraction", "clean_labels", "dataset_seed", "train",
                      "output_dir"});
  std::uint64_t global = 2020;
  if (j.contains("global_seed")) global = read_u64(j.at("global_seed"), "global_seed");
  ExperimentConfig c = ExperimentConfig::defaults(global);

  if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"), "grid");
  if (j.contains("make")) c.make = make_from_json(j.at("make"), "make");
  if (j.contains("calibration")) {
    const Json& cal = j.at("calibration");
    if (cal.is_null()) {
      c.calibration.reset();
    } else {
      expect_keys(cal, "calibration", {"target_gap_db2", "n_mc"});
      CalibrationConfig cc;
      if (cal.contains("target_gap_db2")) {
        cc.target_gap_db2 = read_number(cal.at("target_gap_db2"), "calibration.target_gap_db2");
      }
      if (cal.contains("n_mc")) cc.n_mc = read_u64(cal.at("n_mc"), "calibration.n_mc");
      c.calibration = cc;
    }
  }
  if (j.contains("devices")) {
    const Json& devs = j.at("devices");
    if (!devs.is_array()) throw FieldError("devices", "expected an array");
    c.devices.clear();
    for (std::size_t i = 0; i < devs.size(); ++i) {
      const std::string path = "devices[" + std::to_string(i) + "]";
      const Json& d = devs[i];
      DeviceSpec spec;
      if (d.is_string()) {
        spec.id = d.get<std::string>();
        spec.seed = derive_seed(global, "device/" + spec.id);
      } else {
        expect_keys(d, path, {"id", "seed"});
        if (!d.contains("id") || !d.at("id").is_string()) throw FieldError(path + ".id", "expected a string");
        spec.id = d.at("id").get<std::string>();
        spec.seed = d.contains("seed") ? read_u64(d.at("seed"), path + ".seed")
                                       : derive_seed(global, "device/" + spec.id);
      }
      c.devices.push_back(spec);
    }
  }
  if (j.contains("walk")) c.walk = walk_from_json(j.at("walk"), "walk");
  if (j.contains("power_grid")) {
    const Json& pg = j.at("power_grid");
    if (!pg.is_array()) throw FieldError("power_grid", "expected an array");
    c.power_grid.clear();
    for (std::size_t i = 0; i < pg.size(); ++i) {
      c.power_grid.push_back(pair_from_json(pg[i], "power_grid[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("profile_mode")) {
    const Json& v = j.at("profile_mode");
    if (!v.is_string()) throw FieldError("profile_mode", "expected a string");
    try {
      c.profile_mode = profile_mode_from_string(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw FieldError("profile_mode", e.what());
    }
  }
  if (j.contains("train_fraction")) c.train_fraction = read_number(j.at("train_fraction"), "train_fraction");
  if (j.contains("clean_labels")) {
    if (!j.at("clean_labels").is_boolean()) throw FieldError("clean_labels", "expected true or false");
    c.clean_labels = j.at("clean_labels").get<bool>();
  }
  if (j.contains("dataset_seed")) c.dataset_seed = read_u64(j.at("dataset_seed"), "dataset_seed");
  if (j.contains("train")) {
    const std::uint64_t derived = c.train.seed;
    c.train = train_from_json(j.at("train"), "train");
    if (!j.at("train").contains("seed")) c.train.seed = derived;
  }
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw FieldError("output_dir", "expected a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json(parse_json(read_text_file(path), path));
}

std::string config_hash(const ExperimentConfig& config) {
  return fnv1a_hex(dump_json(to_json(config)));
}

PreparedDevices prepare_devices(const ExperimentConfig& config) {
  config.validate();
  PreparedDevices out;
  out.make = config.make;
  if (config.calibration) {
    out.calibration = calibrate_device_sigma(
        config.grid, config.make, config.walk, config.power_grid,
        config.calibration->target_gap_db2, config.calibration->n_mc,
        derive_seed(config.global_seed, "calibration"));
    out.make.sigma_dev = out.calibration->sigma_dev;
  }
  for (const auto& spec : config.devices) {
    out.devices.push_back(make_device(config.grid, out.make, spec.id, spec.seed));
  }
  return out;
}

GeneratedDataset generate_dataset(const ExperimentConfig& config) {
  GeneratedDataset g;
  g.devices = prepare_devices(config);
  BuildOptions opts;
  opts.profile_mode = config.profile_mode;
  opts.train_fraction = config.train_fraction;
  opts.clean_labels = config.clean_labels;
  g.dataset = build_dataset(g.devices.devices, config.grid, config.walk, config.power_grid,
                            config.dataset_seed, opts);
  g.dataset.metadata.config_hash = config_hash(config);
  return g;
}

}  // namespace edfa
