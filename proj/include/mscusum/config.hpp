#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mscusum/detectors.hpp"
#include "mscusum/model.hpp"

namespace mscusum {

struct ModelConfig {
  std::size_t sensors = 0;
  std::vector<double> shifts;                    // one per sensor
  std::vector<std::vector<double>> covariance;   // empty: independent unit variance

  bool operator==(const ModelConfig&) const = default;
};

struct ClassConfig {
  std::string kind;  // exactly | at_most | explicit | product
  int size = 0;      // L for exactly / at_most
  double p = 1.0;
  std::vector<std::vector<int>> members;  // 1-based, explicit / product
  std::vector<double> weights;            // explicit: per member; product: per sensor

  bool operator==(const ClassConfig&) const = default;
};

struct DetectorConfig {
  std::string label;
  std::string rule;
  std::vector<int> subset;  // oracle; empty means the scenario's subset
  std::optional<ClassConfig> subset_class;
  int top = 0;
  double p = 1.0;
  double pi = 0.5;
  std::string window = "regeneration";
  std::vector<double> thresholds;  // explicit sweep grid; empty: calibrate to gammas

  bool operator==(const DetectorConfig&) const = default;
};

struct TableRow {
  std::string detector;  // label
  int affected = 0;      // |A|; the first |A| sensors change
  double threshold = 0.0;

  bool operator==(const TableRow&) const = default;
};

struct RunCounts {
  std::size_t arl = 1000;
  std::size_t delay = 5000;
  std::size_t calibration = 1000;

  bool operator==(const RunCounts&) const = default;
};

struct Figure1Config {
  double theta1 = 1.0;
  double theta2_min = 0.4;
  double theta2_max = 2.5;
  std::size_t points = 22;
  double gamma = 1000.0;
  std::vector<double> ratio_gammas{1e3, 1e4, 1e5};

  bool operator==(const Figure1Config&) const = default;
};

struct ExperimentConfig {
  ModelConfig model;
  std::vector<DetectorConfig> detectors;
  std::vector<TableRow> table;
  std::vector<std::vector<int>> scenarios;  // affected subsets, 1-based
  std::vector<double> gammas;
  RunCounts runs;
  std::uint64_t seed = 1;
  std::uint64_t horizon = 0;  // 0: 50 x the largest gamma, or 5 x 10^6 without gammas
  double rel_tol = 0.05;
  std::size_t confirmation_factor = 0;
  std::string output = "out";
  Figure1Config figure1;
  std::vector<double> constants_thetas{0.5, 1.0, 1.4142135623730951, 2.0};

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates a JSON config; throws ConfigError (unknown keys,
/// wrong types, inconsistent values) before any simulation starts.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON text; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

std::unique_ptr<SensorModel> build_model(const ModelConfig& config);
DetectorSpec build_detector(const DetectorConfig& config, std::size_t sensors);
std::string detector_label(const DetectorConfig& config);

}  // namespace mscusum
