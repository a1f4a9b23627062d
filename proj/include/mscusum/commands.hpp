#pragma once

#include <string>
#include <vector>

#include "mscusum/config.hpp"

namespace mscusum {

struct OutputFile {
  std::string name;     // relative to the config's output directory
  std::string content;  // CSV text
};

struct CommandResult {
  std::vector<OutputFile> files;
  std::string report;  // human-readable summary for stdout
};

/// Fixed 6-significant-digit formatting used in every CSV cell.
std::string format_number(double v);

/// Table rows at fixed thresholds: ARL (skipped when runs.arl == 0) and
/// worst-case delay with the first |A| sensors affected.
CommandResult cmd_table1(const ExperimentConfig& config, unsigned workers);
/// fig1.csv and fig1_ratio.csv from the renewal approximations, plus one
/// CSV per scenario from a performance sweep when detectors are configured.
CommandResult cmd_figures(const ExperimentConfig& config, unsigned workers);
/// Thresholds matching every target gamma, per detector.
CommandResult cmd_calibrate(const ExperimentConfig& config, unsigned workers);
/// Renewal constants and multichart designs.
CommandResult cmd_constants(const ExperimentConfig& config, unsigned workers);
/// The performance sweep as a single sweep.csv.
CommandResult cmd_sweep(const ExperimentConfig& config, unsigned workers);

}  // namespace mscusum
