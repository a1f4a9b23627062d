#include "mscusum/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>
#include <sstream>
#include <thread>

#include "mscusum/errors.hpp"
#include "mscusum/numeric.hpp"

namespace mscusum {

unsigned default_workers() {
  if (const char* env = std::getenv("MSCUSUM_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t w = std::min<std::size_t>(workers, n);
  std::vector<std::exception_ptr> errors(w);
  {
    std::vector<std::jthread> pool;
    pool.reserve(w);
    for (std::size_t j = 0; j < w; ++j) {
      pool.emplace_back([&, j] {
        try {
          const std::size_t begin = n * j / w;
          const std::size_t end = n * (j + 1) / w;
          for (std::size_t i = begin; i < end; ++i) body(i);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

std::uint64_t hash_observation(std::span<const double> x) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : x) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = splitmix64(h ^ bits);
  }
  return h;
}

// Welford accumulation in index order.
struct MeanAccumulator {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double standard_error() const {
    if (n < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

}  // namespace

struct ThresholdProfile::Run {
  std::unique_ptr<Detector> detector;
  std::optional<PathSampler> sampler;
  std::vector<Record> records;
  double running_max = kNegInf;
  std::uint64_t steps = 0;
  std::uint64_t first_hash = 0;
  bool finished = false;  // reached the horizon
};

ThresholdProfile::ThresholdProfile(DetectorSpec spec, const SensorModel& model,
                                   ChangeScenario scenario, HarnessOptions options,
                                   bool keep_state)
    : spec_(std::move(spec)),
      model_(&model),
      scenario_(scenario),
      options_(options),
      keep_state_(keep_state),
      level_(kNegInf) {
  if (options_.horizon == 0) throw ContractError("horizon must be at least 1");
  if (options_.runs == 0) throw ContractError("need at least one run");
  // Builds (and validates) one detector up front so errors surface early.
  make_detector(spec_, model);
  runs_.resize(options_.runs);
}

ThresholdProfile::~ThresholdProfile() = default;
ThresholdProfile::ThresholdProfile(ThresholdProfile&&) noexcept = default;
ThresholdProfile& ThresholdProfile::operator=(ThresholdProfile&&) noexcept = default;

std::size_t ThresholdProfile::runs() const { return runs_.size(); }

void ThresholdProfile::extend_to(double level) {
  if (level <= level_) return;
  if (!keep_state_ && level_ != kNegInf) {
    throw ContractError("profile was built without state and cannot be extended");
  }
  const std::size_t k = model_->sensors();
  parallel_for(runs_.size(), options_.workers, [&](std::size_t i) {
    Run& run = runs_[i];
    if (run.finished || run.running_max >= level) return;
    if (!run.detector) {
      if (run.steps != 0) throw ContractError("profile run lost its state");
      run.detector = make_detector(spec_, *model_);
      run.sampler.emplace(*model_, scenario_,
                          stream_rng(options_.seed, options_.first_index + i));
    }
    double x[kMaxSensors];
    while (run.running_max < level && run.steps < options_.horizon) {
      run.sampler->next({x, k});
      const double stat = run.detector->observe({x, k});
      ++run.steps;
      if (run.steps == 1) run.first_hash = hash_observation({x, k});
      if (stat > run.running_max) {
        run.running_max = stat;
        run.records.push_back({run.steps, stat});
      }
    }
    if (run.steps >= options_.horizon) run.finished = true;
    if (run.finished || !keep_state_) {
      run.detector.reset();
      run.sampler.reset();
    }
  });
  level_ = level;
}

std::optional<std::uint64_t> ThresholdProfile::stopping_time(std::size_t run, double b) const {
  if (b > level_) throw ContractError("threshold above the simulated level");
  const auto& rec = runs_.at(run).records;
  const auto it = std::lower_bound(rec.begin(), rec.end(), b,
                                   [](const Record& r, double v) { return r.value < v; });
  if (it == rec.end()) return std::nullopt;
  return it->time;
}

EstimationResult ThresholdProfile::estimate(double b) const {
  return estimate_delay(b, 0);
}

EstimationResult ThresholdProfile::estimate_delay(double b, std::uint64_t change_point) const {
  make_detector(spec_, *model_)->validate_threshold(b);
  MeanAccumulator acc;
  EstimationResult r;
  for (std::size_t i = 0; i < runs_.size(); ++i) {
    const auto t = stopping_time(i, b);
    if (!t) {
      ++r.n_censored;
    } else if (*t <= change_point) {
      ++r.n_discarded;
    } else {
      acc.add(static_cast<double>(*t - change_point));
    }
  }
  r.mean = acc.n ? acc.mean : std::numeric_limits<double>::quiet_NaN();
  r.standard_error = acc.standard_error();
  r.n_runs = acc.n;
  r.seed = options_.seed;
  r.horizon = options_.horizon;
  return r;
}

std::uint64_t ThresholdProfile::path_checksum() const {
  std::uint64_t h = 0;
  for (const auto& run : runs_) h = splitmix64(h ^ run.first_hash);
  return h;
}

void ThresholdProfile::merge(ThresholdProfile&& other) {
  if (other.model_ != model_ || other.spec_.display_name() != spec_.display_name()) {
    throw ContractError("can only merge profiles of the same detector and model");
  }
  if (keep_state_) {
    const double lvl = std::max(level_, other.level_);
    extend_to(lvl);
    other.extend_to(lvl);
  }
  for (auto& r : other.runs_) runs_.push_back(std::move(r));
  level_ = std::max(level_, other.level_);
  other.runs_.clear();
}

DetectorSpec resolve_oracle(DetectorSpec spec, Subset affected) {
  if (spec.rule == Rule::oracle && spec.subset == 0) spec.subset = affected;
  return spec;
}

EstimationResult estimate_arl(const DetectorSpec& spec, const SensorModel& model, double b,
                              const HarnessOptions& options) {
  ThresholdProfile profile(spec, model, ChangeScenario::pre_change(), options, false);
  profile.extend_to(b);
  return profile.estimate(b);
}

EstimationResult estimate_worst_delay(const DetectorSpec& spec, const SensorModel& model,
                                      Subset affected, double b, const HarnessOptions& options) {
  return estimate_delay(resolve_oracle(spec, affected), model, ChangeScenario::immediate(affected),
                        b, options);
}

EstimationResult estimate_delay(const DetectorSpec& spec, const SensorModel& model,
                                ChangeScenario scenario, double b, const HarnessOptions& options) {
  ThresholdProfile profile(resolve_oracle(spec, scenario.affected), model, scenario, options,
                           false);
  profile.extend_to(b);
  return profile.estimate_delay(b, scenario.changes() ? scenario.change_point : 0);
}

// --- calibration ------------------------------------------------------------------

bool CalibrationResult::within_tolerance(double rel_tol) const {
  return std::fabs(achieved_arl.mean - target) <=
         std::max(rel_tol * target, 2.0 * achieved_arl.standard_error);
}

namespace {

struct Located {
  double threshold;
  int iterations;
  double low;
  double high;
};

std::string describe(double b, const EstimationResult& e) {
  std::ostringstream os;
  os << "ARL(" << b << ") = " << e.mean << " +- " << e.standard_error << " over " << e.n_runs
     << " runs (" << e.n_censored << " censored)";
  return os.str();
}

// Censored runs bias the mean downward; calibration refuses to use them.
EstimationResult checked_estimate(const ThresholdProfile& profile, double b) {
  auto est = profile.estimate(b);
  if (est.flagged() || est.n_runs == 0) {
    throw CalibrationError("horizon too short for calibration: " + describe(b, est));
  }
  return est;
}

Located locate(ThresholdProfile& profile, const Detector& probe, double gamma,
               double log_class) {
  double low = std::log(gamma) - 3.0;
  try {
    probe.validate_threshold(low);
  } catch (const ContractError&) {
    // Rules on the non-negative statistic need b > 0, which cuts small
    // targets' brackets short.
    low = 1e-3;
    probe.validate_threshold(low);
  }
  const double high = std::log(gamma) + log_class + 3.0;
  profile.extend_to(low);
  auto est = checked_estimate(profile, low);
  int iterations = 1;
  if (!(est.mean < gamma)) {
    throw CalibrationError("lower bracket end already meets the target: " + describe(low, est));
  }
  double below = low;
  double above = low;
  while (true) {
    const double step = std::clamp(std::log(gamma / est.mean), 0.05, 1.0);
    above = std::min(below + step, high);
    profile.extend_to(above);
    est = checked_estimate(profile, above);
    ++iterations;
    if (est.mean >= gamma) break;
    if (above >= high) {
      throw CalibrationError("upper bracket end misses the target: " + describe(above, est));
    }
    below = above;
  }
  // Exact on the common paths: ARL(b) is a nondecreasing step function.
  for (int i = 0; i < 200 && above - below > 1e-10; ++i) {
    const double mid = 0.5 * (below + above);
    (profile.estimate(mid).mean >= gamma ? above : below) = mid;
  }
  return {above, iterations, low, high};
}

}  // namespace

std::vector<CalibrationResult> calibrate_thresholds(const DetectorSpec& spec,
                                                    const SensorModel& model,
                                                    const std::vector<double>& gammas,
                                                    const CalibrationOptions& options) {
  if (gammas.empty()) return {};
  double max_gamma = 0.0;
  for (double g : gammas) {
    if (!(g > 1.0)) throw ContractError("target ARL must exceed 1");
    max_gamma = std::max(max_gamma, g);
  }
  HarnessOptions h;
  h.runs = options.runs;
  h.seed = options.seed;
  h.workers = options.workers;
  h.horizon = options.horizon ? options.horizon
                              : static_cast<std::uint64_t>(std::ceil(50.0 * max_gamma));
  h.first_index = 0;
  ThresholdProfile profile(spec, model, ChangeScenario::pre_change(), h, true);
  std::uint64_t next_index = h.runs;
  const double log_class = spec.log_class_size(model.sensors());
  const auto probe = make_detector(spec, model);

  std::vector<CalibrationResult> out;
  for (double gamma : gammas) {
    CalibrationResult result;
    result.target = gamma;
    bool done = false;
    for (int round = 0; round < std::max(options.max_rounds, 1) && !done; ++round) {
      const Located loc = locate(profile, *probe, gamma, log_class);
      result.threshold = loc.threshold;
      result.iterations += loc.iterations;
      result.bracket_low = loc.low;
      result.bracket_high = loc.high;
      if (options.confirmation_factor == 0) {
        result.achieved_arl = profile.estimate(loc.threshold);
        done = true;
        break;
      }
      HarnessOptions c = h;
      c.runs = profile.runs() * options.confirmation_factor;
      c.first_index = next_index;
      next_index += c.runs;
      ThresholdProfile confirm(spec, model, ChangeScenario::pre_change(), c, true);
      confirm.extend_to(loc.threshold);
      result.achieved_arl = confirm.estimate(loc.threshold);
      if (result.within_tolerance(options.rel_tol)) {
        done = true;
      } else {
        profile.merge(std::move(confirm));
      }
    }
    if (!done) {
      throw CalibrationError("calibration did not settle within tolerance for gamma = " +
                             std::to_string(gamma) + "; last " +
                             describe(result.threshold, result.achieved_arl));
    }
    out.push_back(result);
  }
  return out;
}

CalibrationResult calibrate_threshold(const DetectorSpec& spec, const SensorModel& model,
                                      double gamma, const CalibrationOptions& options) {
  return calibrate_thresholds(spec, model, {gamma}, options).front();
}

// --- sweeps ---------------------------------------------------------------------------

namespace {

// Piecewise-linear interpolation of delay against log ARL, extended linearly
// past both ends.
double interpolate_baseline(const std::vector<std::pair<double, double>>& curve, double arl) {
  if (curve.size() == 1) return curve.front().second;
  const double x = std::log(arl);
  for (const auto& [cx, cy] : curve) {
    if (cx == x) return cy;
  }
  std::size_t j = 1;
  while (j + 1 < curve.size() && curve[j].first < x) ++j;
  const auto& [x0, y0] = curve[j - 1];
  const auto& [x1, y1] = curve[j];
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

}  // namespace

std::vector<PerformanceCurve> performance_sweep(const std::vector<SweepEntry>& entries,
                                                const SensorModel& model,
                                                const std::vector<Subset>& scenarios,
                                                const SweepOptions& options) {
  HarnessOptions arl_opts{options.arl_runs, options.horizon, options.seed, options.workers, 0};
  HarnessOptions delay_opts{options.delay_runs, options.horizon,
                            splitmix64(options.seed ^ 0x5deece66dULL), options.workers, 0};

  std::vector<PerformanceCurve> curves;
  std::vector<bool> is_baseline;
  for (const auto& entry : entries) {
    if (entry.thresholds.empty()) throw ContractError("sweep entry without thresholds");
    for (std::size_t i = 1; i < entry.thresholds.size(); ++i) {
      if (!(entry.thresholds[i] > entry.thresholds[i - 1])) {
        throw ContractError("sweep thresholds must be strictly increasing");
      }
    }
    const double top = entry.thresholds.back();
    DetectorSpec spec = entry.detector;
    if (spec.rule == Rule::oracle && spec.subset == 0) {
      if (entry.only_scenario == 0) {
        throw ContractError("oracle sweep entry needs a subset or a scenario");
      }
      spec.subset = entry.only_scenario;
    }
    ThresholdProfile arl(spec, model, ChangeScenario::pre_change(), arl_opts, false);
    arl.extend_to(top);
    for (Subset a : scenarios) {
      if (entry.only_scenario != 0 && entry.only_scenario != a) continue;
      ThresholdProfile delay(spec, model, ChangeScenario::immediate(a), delay_opts, false);
      delay.extend_to(top);
      PerformanceCurve curve;
      curve.detector = spec.display_name();
      curve.affected = a;
      curve.arl_paths = arl.path_checksum();
      curve.delay_paths = delay.path_checksum();
      for (double b : entry.thresholds) {
        CurvePoint pt;
        pt.threshold = b;
        pt.arl = arl.estimate(b);
        pt.delay = delay.estimate(b);
        curve.points.push_back(pt);
      }
      curves.push_back(std::move(curve));
      is_baseline.push_back(spec.rule == Rule::oracle && spec.subset == a);
    }
  }

  for (Subset a : scenarios) {
    const PerformanceCurve* base = nullptr;
    for (std::size_t i = 0; i < curves.size(); ++i) {
      if (is_baseline[i] && curves[i].affected == a) {
        base = &curves[i];
        break;
      }
    }
    if (!base) {
      throw ContractError("sweep has no oracle entry for scenario " + format_subset(a));
    }
    std::vector<std::pair<double, double>> baseline;
    for (const auto& pt : base->points) {
      const double x = std::log(pt.arl.mean);
      if (baseline.empty() || x > baseline.back().first) baseline.emplace_back(x, pt.delay.mean);
    }
    for (auto& curve : curves) {
      if (curve.affected != a) continue;
      for (auto& pt : curve.points) {
        pt.oracle_delay = interpolate_baseline(baseline, pt.arl.mean);
        pt.delay_minus_oracle = pt.delay.mean - pt.oracle_delay;
        pt.delay_over_oracle = pt.delay.mean / pt.oracle_delay;
      }
    }
  }
  return curves;
}

}  // namespace mscusum
