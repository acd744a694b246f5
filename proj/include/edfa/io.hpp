#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "edfa/dataset.hpp"
#include "edfa/eval.hpp"
#include "edfa/model.hpp"
#include "edfa/oracle.hpp"

namespace edfa {

using Json = nlohmann::ordered_json;

// Malformed file contents; the message carries the location.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A config or file field failed validation. field is a dotted path.
class FieldError : public std::invalid_argument {
 public:
  FieldError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field(std::move(field)) {}
  std::string field;
};

// Shortest form is not used on purpose: every double is written with 17
// significant digits. Throws std::invalid_argument for NaN or infinity.
std::string format_double(double v);

// Compact JSON text with format_double for every floating-point number.
std::string dump_json(const Json& j);

std::string fnv1a_hex(std::string_view text);

Json to_json(const FrequencyGrid& grid);
Json to_json(const MakeParams& make);
Json to_json(const AmplifierDevice& device);
Json to_json(const WalkConfig& walk);
Json to_json(const PowerPair& pair);
Json to_json(const TrainConfig& config);
Json to_json(const Sample& sample);
Json to_json(const DatasetMetadata& metadata);
Json to_json(const EvalReport& report);

// Readers accept any subset of fields and keep defaults for the rest; path
// prefixes FieldError messages.
FrequencyGrid grid_from_json(const Json& j, const std::string& path = "grid");
MakeParams make_from_json(const Json& j, const std::string& path = "make");
AmplifierDevice device_from_json(const Json& j, const std::string& path = "device");
WalkConfig walk_from_json(const Json& j, const std::string& path = "walk");
PowerPair pair_from_json(const Json& j, const std::string& path = "pair");
TrainConfig train_from_json(const Json& j, const std::string& path = "train");
Sample sample_from_json(const Json& j, const std::string& path = "sample");
DatasetMetadata metadata_from_json(const Json& j, const std::string& path = "metadata");

// JSON-Lines dataset: one header line, then one sample per line.
struct DatasetFile {
  Dataset dataset;
  Json config;       // experiment config embedded in the header, may be null
  Json calibration;  // calibration outcome, null when sigma_dev was not calibrated
};

void write_dataset(std::ostream& os, const Dataset& dataset, const Json& config = Json(),
                   const Json& calibration = Json());
DatasetFile read_dataset(std::istream& is);
void save_dataset(const std::string& path, const Dataset& dataset, const Json& config = Json(),
                  const Json& calibration = Json());
DatasetFile load_dataset(const std::string& path);

struct Checkpoint {
  MlpModel model;
  TrainConfig train;
  FrequencyGrid grid;
  std::string dataset_config_hash;
  std::vector<std::string> trained_on;
};

Json to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const Json& j);
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

// Reports as JSON (full detail) and CSV (one row per report, p_out and gain bin).
Json reports_to_json(std::span<const EvalReport> reports, const FrequencyGrid& grid);
void write_reports_csv(std::ostream& os, std::span<const EvalReport> reports);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
// Parses JSON text, converting parse failures into ParseError with position.
Json parse_json(const std::string& text, const std::string& source);

}  // namespace edfa
