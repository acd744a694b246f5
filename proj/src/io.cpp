#include "edfa/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <sstream>

namespace edfa {

std::string format_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("format_double: non-finite value");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

void dump_to(const Json& j, std::string& out) {
  switch (j.type()) {
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      break;
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ',';
        first = false;
        dump_to(e, out);
      }
      out += ']';
      break;
    }
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        first = false;
        out += Json(key).dump();
        out += ':';
        dump_to(value, out);
      }
      out += '}';
      break;
    }
    default:
      out += j.dump();
  }
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_object(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw FieldError(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw FieldError(join(path, key), "unknown field");
  }
}

template <typename T>
void read(const Json& j, const char* key, const std::string& path, T& out) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw FieldError(join(path, key), "expected a number");
      out = v.get<double>();
    } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw FieldError(join(path, key), "expected a non-negative integer");
      }
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw FieldError(join(path, key), "expected true or false");
      out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw FieldError(join(path, key), "expected a string");
      out = v.get<std::string>();
    } else {
      if (!v.is_array()) throw FieldError(join(path, key), "expected an array");
      out.clear();
      std::size_t i = 0;
      for (const auto& e : v) {
        typename T::value_type x{};
        Json wrapper = Json::object();
        wrapper["v"] = e;
        read(wrapper, "v", join(path, key) + "[" + std::to_string(i++) + "]", x);
        out.push_back(x);
      }
    }
  } catch (const Json::exception& e) {
    throw FieldError(join(path, key), e.what());
  }
}

Json array_of(std::span<const double> values) {
  Json a = Json::array();
  for (double v : values) a.push_back(v);
  return a;
}

template <typename Fn>
auto wrap_field(const std::string& field, Fn&& fn) {
  try {
    return fn();
  } catch (const FieldError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw FieldError(field, e.what());
  }
}

}  // namespace

std::string dump_json(const Json& j) {
  std::string out;
  dump_to(j, out);
  return out;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

Json to_json(const FrequencyGrid& grid) {
  Json j;
  j["n_channels"] = grid.n_channels;
  j["f_start_thz"] = grid.f_start_thz;
  j["f_stop_thz"] = grid.f_stop_thz;
  return j;
}

Json to_json(const MakeParams& m) {
  Json j;
  j["ripple_scale"] = m.ripple_scale;
  j["tilt"] = m.tilt;
  j["sigma_dev"] = m.sigma_dev;
  j["tilt_sigma_ratio"] = m.tilt_sigma_ratio;
  j["hf_sigma_ratio"] = m.hf_sigma_ratio;
  j["hf_start_thz"] = m.hf_start_thz;
  j["shb_gamma"] = m.shb_gamma;
  j["noise_sigma"] = m.noise_sigma;
  return j;
}

Json to_json(const AmplifierDevice& d) {
  Json j;
  j["device_id"] = d.device_id;
  j["seed"] = d.seed;
  j["grid"] = to_json(d.grid);
  j["a"] = array_of(d.a);
  j["b"] = array_of(d.b);
  j["hf_slope_dev"] = d.hf_slope_dev;
  j["shb_gamma"] = d.shb_gamma;
  j["noise_sigma"] = d.noise_sigma;
  return j;
}

Json to_json(const WalkConfig& w) {
  Json j;
  j["p0_min_dbm"] = w.p0_min_dbm;
  j["p0_max_dbm"] = w.p0_max_dbm;
  j["sigma_w_set"] = array_of(w.sigma_w_set);
  j["max_excursion_db"] = w.max_excursion_db;
  j["smoothing_windows"] = w.smoothing_windows;
  j["n_profiles_per_pair"] = w.n_profiles_per_pair;
  return j;
}

Json to_json(const PowerPair& p) {
  Json j;
  j["p_in_dbm"] = p.p_in_dbm;
  j["p_out_dbm"] = p.p_out_dbm;
  return j;
}

Json to_json(const TrainConfig& c) {
  Json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.adam.learning_rate;
  j["beta1"] = c.adam.beta1;
  j["beta2"] = c.adam.beta2;
  j["epsilon"] = c.adam.epsilon;
  j["seed"] = c.seed;
  j["shuffle"] = c.shuffle;
  j["patience"] = c.patience;
  j["schedule"] = to_string(c.schedule);
  j["init"] = to_string(c.init);
  j["standardize"] = c.standardize;
  return j;
}

Json to_json(const Sample& s) {
  Json j;
  j["device_id"] = s.device_id;
  j["p_in_dbm"] = s.p_in_dbm;
  j["p_out_dbm"] = s.p_out_dbm;
  j["psd_in_norm_db"] = array_of(s.psd_in_norm_db);
  j["psd_out_norm_db"] = array_of(s.psd_out_norm_db);
  j["gain_db"] = s.gain_db;
  j["split"] = to_string(s.split);
  return j;
}

Json to_json(const DatasetMetadata& m) {
  Json j;
  j["grid"] = to_json(m.grid);
  j["walk"] = to_json(m.walk);
  Json devices = Json::array();
  for (const auto& d : m.devices) devices.push_back(to_json(d));
  j["devices"] = devices;
  Json pairs = Json::array();
  for (const auto& p : m.power_grid) pairs.push_back(to_json(p));
  j["power_grid"] = pairs;
  j["seed"] = m.seed;
  j["profile_mode"] = to_string(m.profile_mode);
  j["train_fraction"] = m.train_fraction;
  j["clean_labels"] = m.clean_labels;
  return j;
}

FrequencyGrid grid_from_json(const Json& j, const std::string& path) {
  check_object(j, path, {"n_channels", "f_start_thz", "f_stop_thz"});
  FrequencyGrid g;
  read(j, "n_channels", path, g.n_channels);
  read(j, "f_start_thz", path, g.f_start_thz);
  read(j, "f_stop_thz", path, g.f_stop_thz);
  wrap_field(path, [&] { g.validate(); return 0; });
  return g;
}

MakeParams make_from_json(const Json& j, const std::string& path) {
  check_object(j, path, {"ripple_scale", "tilt", "sigma_dev", "tilt_sigma_ratio", "hf_sigma_ratio",
                         "hf_start_thz", "shb_gamma", "noise_sigma"});
  MakeParams m;
  read(j, "ripple_scale", path, m.ripple_scale);
  read(j, "tilt", path, m.tilt);
  read(j, "sigma_dev", path, m.sigma_dev);
  read(j, "tilt_sigma_ratio", path, m.tilt_sigma_ratio);
  read(j, "hf_sigma_ratio", path, m.hf_sigma_ratio);
  read(j, "hf_start_thz", path, m.hf_start_thz);
  read(j, "shb_gamma", path, m.shb_gamma);
  read(j, "noise_sigma", path, m.noise_sigma);
  wrap_field(path, [&] { m.validate(); return 0; });
  return m;
}

AmplifierDevice device_from_json(const Json& j, const std::string& path) {
  check_object(j, path, {"device_id", "seed", "grid", "a", "b", "hf_slope_dev", "shb_gamma",
                         "noise_sigma"});
  AmplifierDevice d;
  read(j, "device_id", path, d.device_id);
  read(j, "seed", path, d.seed);
  if (j.contains("grid")) d.grid = grid_from_json(j.at("grid"), join(path, "grid"));
  read(j, "a", path, d.a);
  read(j, "b", path, d.b);
  read(j, "hf_slope_dev", path, d.hf_slope_dev);
  read(j, "shb_gamma", path, d.shb_gamma);
  read(j, "noise_sigma", path, d.noise_sigma);
  if (d.a.size() != d.grid.n_channels || d.b.size() != d.grid.n_channels) {
    throw FieldError(path, "gain vectors do not match the grid");
  }
  return d;
}

WalkConfig walk_from_json(const Json& j, const std::string& path) {
  check_object(j, path, {"p0_min_dbm", "p0_max_dbm", "sigma_w_set", "max_excursion_db",
                         "smoothing_windows", "n_profiles_per_pair"});
  WalkConfig w;
  read(j, "p0_min_dbm", path, w.p0_min_dbm);
  read(j, "p0_max_dbm", path, w.p0_max_dbm);
  read(j, "sigma_w_set", path, w.sigma_w_set);
  read(j, "max_excursion_db", path, w.max_excursion_db);
  read(j, "smoothing_windows", path, w.smoothing_windows);
  read(j, "n_profiles_per_pair", path, w.n_profiles_per_pair);
  wrap_field(path, [&] { w.validate(); return 0; });
  return w;
}

PowerPair pair_from_json(const Json& j, const std::string& path) {
  check_object(j, path, {"p_in_dbm", "p_out_dbm"});
  if (!j.contains("p_in_dbm") || !j.contains("p_out_dbm")) {
    throw FieldError(path, "needs p_in_dbm and p_out_dbm");
  }
  PowerPair p;
  read(j, "p_in_dbm", path, p.p_in_dbm);
  read(j, "p_out_dbm", path, p.p_out_dbm);
  return p;
}

TrainConfig train_from_json(const Json& j, const std::string& path) {
  check_object(j, path, {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon",
                         "seed", "shuffle", "patience", "schedule", "init", "standardize"});
  TrainConfig c;
  read(j, "epochs", path, c.epochs);
  read(j, "batch_size", path, c.batch_size);
  read(j, "learning_rate", path, c.adam.learning_rate);
  read(j, "beta1", path, c.adam.beta1);
  read(j, "beta2", path, c.adam.beta2);
  read(j, "epsilon", path, c.adam.epsilon);
  read(j, "seed", path, c.seed);
  read(j, "shuffle", path, c.shuffle);
  read(j, "patience", path, c.patience);
  std::string s;
  if (j.contains("schedule")) {
    read(j, "schedule", path, s);
    c.schedule = wrap_field(join(path, "schedule"), [&] { return lr_schedule_from_string(s); });
  }
  if (j.contains("init")) {
    read(j, "init", path, s);
    c.init = wrap_field(join(path, "init"), [&] { return init_scheme_from_string(s); });
  }
  read(j, "standardize", path, c.standardize);
  wrap_field(path, [&] { c.validate(); return 0; });
  return c;
}

Sample sample_from_json(const Json& j, const std::string& path) {
  check_object(j, path, {"device_id", "p_in_dbm", "p_out_dbm", "psd_in_norm_db", "psd_out_norm_db",
                         "gain_db", "split"});
  Sample s;
  read(j, "device_id", path, s.device_id);
  read(j, "p_in_dbm", path, s.p_in_dbm);
  read(j, "p_out_dbm", path, s.p_out_dbm);
  read(j, "psd_in_norm_db", path, s.psd_in_norm_db);
  read(j, "psd_out_norm_db", path, s.psd_out_norm_db);
  read(j, "gain_db", path, s.gain_db);
  std::string split = "train";
  read(j, "split", path, split);
  s.split = wrap_field(join(path, "split"), [&] { return split_from_string(split); });
  return s;
}

DatasetMetadata metadata_from_json(const Json& j, const std::string& path) {
  check_object(j, path, {"grid", "walk", "devices", "power_grid", "seed", "profile_mode",
                         "train_fraction", "clean_labels"});
  DatasetMetadata m;
  if (j.contains("grid")) m.grid = grid_from_json(j.at("grid"), join(path, "grid"));
  if (j.contains("walk")) m.walk = walk_from_json(j.at("walk"), join(path, "walk"));
  if (j.contains("devices")) {
    std::size_t i = 0;
    for (const auto& d : j.at("devices")) {
      m.devices.push_back(device_from_json(d, join(path, "devices") + "[" + std::to_string(i++) + "]"));
    }
  }
  if (j.contains("power_grid")) {
    std::size_t i = 0;
    for (const auto& p : j.at("power_grid")) {
      m.power_grid.push_back(pair_from_json(p, join(path, "power_grid") + "[" + std::to_string(i++) + "]"));
    }
  }
  read(j, "seed", path, m.seed);
  std::string mode = "per_device";
  read(j, "profile_mode", path, mode);
  m.profile_mode = wrap_field(join(path, "profile_mode"), [&] { return profile_mode_from_string(mode); });
  read(j, "train_fraction", path, m.train_fraction);
  read(j, "clean_labels", path, m.clean_labels);
  return m;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(source + ": malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

void write_dataset(std::ostream& os, const Dataset& dataset, const Json& config,
                   const Json& calibration) {
  Json header;
  header["format"] = "edfa-dataset";
  header["version"] = 1;
  header["config_hash"] = dataset.metadata.config_hash;
  header["n_samples"] = dataset.samples.size();
  header["metadata"] = to_json(dataset.metadata);
  header["config"] = config;
  header["calibration"] = calibration;
  os << dump_json(header) << '\n';
  for (const auto& s : dataset.samples) os << dump_json(to_json(s)) << '\n';
}

DatasetFile read_dataset(std::istream& is) {
  DatasetFile file;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line)) throw ParseError("dataset: missing header line");
  ++line_no;
  const Json header = parse_json(line, "dataset line 1");
  if (!header.is_object() || header.value("format", "") != "edfa-dataset") {
    throw ParseError("dataset line 1: not an edfa-dataset header");
  }
  try {
    file.dataset.metadata = metadata_from_json(header.at("metadata"));
    file.dataset.metadata.config_hash = header.value("config_hash", "");
    file.config = header.value("config", Json());
    file.calibration = header.value("calibration", Json());
  } catch (const std::exception& e) {
    throw ParseError(std::string("dataset line 1: ") + e.what());
  }
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "dataset line " + std::to_string(line_no);
    const Json j = parse_json(line, where);
    try {
      file.dataset.samples.push_back(sample_from_json(j, "sample"));
    } catch (const std::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return file;
}

void save_dataset(const std::string& path, const Dataset& dataset, const Json& config,
                  const Json& calibration) {
  std::ostringstream os;
  write_dataset(os, dataset, config, calibration);
  write_text_file(path, os.str());
}

DatasetFile load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return read_dataset(in);
}

Json to_json(const Checkpoint& c) {
  Json j;
  j["format"] = "edfa-checkpoint";
  j["version"] = 1;
  j["dims"] = c.model.dims();
  Json weights = Json::array();
  Json biases = Json::array();
  for (std::size_t l = 0; l < c.model.num_layers(); ++l) {
    weights.push_back(array_of(c.model.weight(l).values()));
    biases.push_back(array_of(c.model.bias(l)));
  }
  j["weights"] = weights;
  j["biases"] = biases;
  Json adam;
  adam["learning_rate"] = c.train.adam.learning_rate;
  adam["beta1"] = c.train.adam.beta1;
  adam["beta2"] = c.train.adam.beta2;
  adam["epsilon"] = c.train.adam.epsilon;
  j["adam"] = adam;
  j["train"] = to_json(c.train);
  Json seeds;
  seeds["train"] = c.train.seed;
  j["seeds"] = seeds;
  j["grid"] = to_json(c.grid);
  j["dataset_config_hash"] = c.dataset_config_hash;
  j["trained_on"] = c.trained_on;
  return j;
}

Checkpoint checkpoint_from_json(const Json& j) {
  if (!j.is_object() || j.value("format", "") != "edfa-checkpoint") {
    throw ParseError("checkpoint: not an edfa-checkpoint document");
  }
  try {
    Checkpoint c;
    std::vector<std::size_t> dims;
    read(j, "dims", "", dims);
    MlpModel model(dims);
    const Json& weights = j.at("weights");
    const Json& biases = j.at("biases");
    if (weights.size() != model.num_layers() || biases.size() != model.num_layers()) {
      throw FieldError("weights", "layer count does not match dims");
    }
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
      std::vector<double> w, b;
      Json wrap;
      wrap["w"] = weights[l];
      wrap["b"] = biases[l];
      read(wrap, "w", "weights[" + std::to_string(l) + "]", w);
      read(wrap, "b", "biases[" + std::to_string(l) + "]", b);
      if (w.size() != dims[l + 1] * dims[l] || b.size() != dims[l + 1]) {
        throw FieldError("weights[" + std::to_string(l) + "]", "size does not match dims");
      }
      model.mutable_weight(l) = Matrix(dims[l + 1], dims[l], std::move(w));
      model.mutable_bias(l) = std::move(b);
    }
    c.model = std::move(model);
    if (j.contains("train")) c.train = train_from_json(j.at("train"), "train");
    if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"), "grid");
    c.dataset_config_hash = j.value("dataset_config_hash", "");
    if (j.contains("trained_on")) read(j, "trained_on", "", c.trained_on);
    return c;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  write_text_file(path, dump_json(to_json(checkpoint)) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  return checkpoint_from_json(parse_json(read_text_file(path), path));
}

Json to_json(const EvalReport& r) {
  Json j;
  j["scenario"] = to_string(r.scenario);
  j["train_device"] = r.train_device;
  j["test_device"] = r.test_device;
  j["count"] = r.count();
  j["mean_mse_db2"] = r.mean_mse;
  j["max_mse_db2"] = r.max_mse;
  Json bins = Json::array();
  for (const auto& [bin, stats] : r.per_gain_bin) {
    Json b;
    b["gain_bin_db"] = bin;
    b["mean_mse_db2"] = stats.mean_mse;
    b["count"] = stats.count;
    bins.push_back(b);
  }
  j["per_gain_bin"] = bins;
  Json pout_bins = Json::array();
  for (const auto& [key, stats] : r.per_pout_gain_bin) {
    Json b;
    b["p_out_dbm"] = key.first;
    b["gain_bin_db"] = key.second;
    b["mean_mse_db2"] = stats.mean_mse;
    b["count"] = stats.count;
    pout_bins.push_back(b);
  }
  j["per_pout_gain_bin"] = pout_bins;
  j["per_channel_mse_db2"] = array_of(r.per_channel_mse);
  j["per_sample_mse_db2"] = array_of(r.per_sample_mse);
  return j;
}

Json reports_to_json(std::span<const EvalReport> reports, const FrequencyGrid& grid) {
  Json j;
  Json list = Json::array();
  std::vector<EvalReport> inter;
  for (const auto& r : reports) {
    list.push_back(to_json(r));
    if (r.scenario == Scenario::inter) inter.push_back(r);
  }
  Json summary;
  for (Scenario s : {Scenario::intra, Scenario::inter, Scenario::joint}) {
    std::vector<EvalReport> subset;
    for (const auto& r : reports) {
      if (r.scenario == s) subset.push_back(r);
    }
    if (!subset.empty()) summary[to_string(s)] = mean_of_reports(subset);
  }
  j["summary_mean_mse_db2"] = summary;
  j["frequencies_thz"] = array_of(grid.frequencies());
  if (!inter.empty()) j["per_frequency_inter_mse_db2"] = array_of(per_frequency_mse(inter));
  j["reports"] = list;
  return j;
}

void write_reports_csv(std::ostream& os, std::span<const EvalReport> reports) {
  os << "scenario,train_device,test_device,p_out_dbm,gain_bin_db,mse_db2,count\n";
  for (const auto& r : reports) {
    for (const auto& [key, stats] : r.per_pout_gain_bin) {
      os << to_string(r.scenario) << ',' << r.train_device << ',' << r.test_device << ','
         << format_double(key.first) << ',' << key.second << ',' << format_double(stats.mean_mse)
         << ',' << stats.count << '\n';
    }
  }
}

}  // namespace edfa
