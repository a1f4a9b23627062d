#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mscusum/detectors.hpp"
#include "mscusum/model.hpp"

namespace mscusum {

/// Worker count from MSCUSUM_WORKERS, else 1.
unsigned default_workers();

/// Runs body(i) for i in [0, n) on `workers` threads. Each index is visited
/// exactly once; callers write results into slot i so the outcome never
/// depends on the worker count.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

struct HarnessOptions {
  std::size_t runs = 1000;
  std::uint64_t horizon = 1'000'000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  /// Replication indices used are [first_index, first_index + runs).
  std::uint64_t first_index = 0;
};

struct EstimationResult {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t n_runs = 0;       // runs entering the mean
  std::size_t n_censored = 0;   // runs that hit the horizon
  std::size_t n_discarded = 0;  // false alarms before the change (delay runs with nu > 0)
  std::uint64_t seed = 0;
  std::uint64_t horizon = 0;

  /// More than 0.1% of the runs were censored.
  bool flagged() const { return n_censored * 1000 > n_runs + n_censored; }
};

/// Running-maximum record of one path: the statistic first reached `value`
/// at time `time`. T(b) is the first record with value >= b.
struct Record {
  std::uint64_t time;
  double value;
};

/**
 * A batch of independent paths, each advanced only as far as needed for its
 * running maximum to reach a level. Because no rule's statistic depends on
 * its threshold, the stopping time for every b up to the reached level can
 * be read off the records, and all thresholds share the same paths.
 */
class ThresholdProfile {
 public:
  /// `keep_state` allows later extension to higher levels.
  ThresholdProfile(DetectorSpec spec, const SensorModel& model, ChangeScenario scenario,
                   HarnessOptions options, bool keep_state = true);
  ~ThresholdProfile();
  ThresholdProfile(ThresholdProfile&&) noexcept;
  ThresholdProfile& operator=(ThresholdProfile&&) noexcept;

  void extend_to(double level);
  double level() const { return level_; }
  std::size_t runs() const;

  /// Stopping time of run i at threshold b (nullopt: censored). b <= level().
  std::optional<std::uint64_t> stopping_time(std::size_t run, double b) const;
  /// Mean stopping time at b.
  EstimationResult estimate(double b) const;
  /// Mean of T - nu over runs with T > nu.
  EstimationResult estimate_delay(double b, std::uint64_t change_point) const;
  /// Hash of the first observation of every run, combined in run order.
  std::uint64_t path_checksum() const;
  /// Appends the runs of `other` (same spec and scenario).
  void merge(ThresholdProfile&& other);

 private:
  struct Run;
  DetectorSpec spec_;
  const SensorModel* model_;
  ChangeScenario scenario_;
  HarnessOptions options_;
  bool keep_state_;
  double level_;
  std::vector<Run> runs_;
};

/// Resolves an oracle spec with subset 0 to the given affected subset.
DetectorSpec resolve_oracle(DetectorSpec spec, Subset affected);

EstimationResult estimate_arl(const DetectorSpec& spec, const SensorModel& model, double b,
                              const HarnessOptions& options);
/// Delay under P_0^A, which is the worst case over change points.
EstimationResult estimate_worst_delay(const DetectorSpec& spec, const SensorModel& model,
                                      Subset affected, double b, const HarnessOptions& options);
/// Conditional delay E[T - nu | T > nu] for an arbitrary scenario.
EstimationResult estimate_delay(const DetectorSpec& spec, const SensorModel& model,
                                ChangeScenario scenario, double b, const HarnessOptions& options);

struct CalibrationOptions {
  double rel_tol = 0.05;
  std::size_t runs = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  /// 0 means 50 * gamma.
  std::uint64_t horizon = 0;
  /// Confirmation batch size relative to `runs`; 0 skips confirmation and
  /// reports the calibration sample itself.
  std::size_t confirmation_factor = 4;
  int max_rounds = 3;
};

struct CalibrationResult {
  double threshold = 0.0;
  EstimationResult achieved_arl;
  double target = 0.0;
  int iterations = 0;
  double bracket_low = 0.0;
  double bracket_high = 0.0;

  bool within_tolerance(double rel_tol) const;
};

/**
 * Threshold b with E_inf[T_b] close to gamma. Starting from the bracket
 * [log gamma - 3, log gamma + log|P| + 3], paths are pushed upward until the
 * empirical ARL passes gamma; the crossing b is then located exactly on those
 * common paths by bisection, and checked on a fresh confirmation batch.
 * Throws CalibrationError when the bracket does not contain the target.
 */
CalibrationResult calibrate_threshold(const DetectorSpec& spec, const SensorModel& model,
                                      double gamma, const CalibrationOptions& options);
/// Several targets sharing one calibration sample.
std::vector<CalibrationResult> calibrate_thresholds(const DetectorSpec& spec,
                                                    const SensorModel& model,
                                                    const std::vector<double>& gammas,
                                                    const CalibrationOptions& options);

/// One curve of a performance sweep: a detector, its thresholds, and the
/// affected subset it is evaluated on (0: every scenario of the sweep).
struct SweepEntry {
  DetectorSpec detector;
  std::vector<double> thresholds;
  Subset only_scenario = 0;
};

struct SweepOptions {
  std::size_t arl_runs = 1000;
  std::size_t delay_runs = 5000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::uint64_t horizon = 1'000'000;
};

struct CurvePoint {
  double threshold = 0.0;
  EstimationResult arl;
  EstimationResult delay;
  double oracle_delay = 0.0;
  double delay_minus_oracle = 0.0;
  double delay_over_oracle = 0.0;
};

struct PerformanceCurve {
  std::string detector;
  Subset affected = 0;
  std::vector<CurvePoint> points;
  std::uint64_t arl_paths = 0;    // checksum of the P_inf paths
  std::uint64_t delay_paths = 0;  // checksum of the P_0^A paths
};

/**
 * Paired ARL/delay estimates. Every detector sees the same P_inf paths and,
 * per scenario, the same P_0^A paths. Each scenario A needs an oracle entry
 * (rule oracle with subset A); its curve, interpolated linearly in log ARL,
 * is the baseline for the difference and ratio columns.
 */
std::vector<PerformanceCurve> performance_sweep(const std::vector<SweepEntry>& entries,
                                                const SensorModel& model,
                                                const std::vector<Subset>& scenarios,
                                                const SweepOptions& options);

}  // namespace mscusum
