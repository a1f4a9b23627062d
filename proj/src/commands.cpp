#include "mscusum/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mscusum/errors.hpp"
#include "mscusum/montecarlo.hpp"
#include "mscusum/renewal.hpp"

namespace mscusum {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

namespace {

// RFC 4180: quote cells holding separators or quotes.
std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { row(header); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << quoted(cells[i]);
    }
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }

std::vector<std::string> estimate_cells(const EstimationResult& e) {
  return {num(e.mean), num(e.standard_error), num(e.n_runs), num(e.n_censored)};
}

std::vector<std::string> blank_estimate() { return {"", "", "", ""}; }

std::uint64_t horizon_of(const ExperimentConfig& c) {
  if (c.horizon) return c.horizon;
  if (c.gammas.empty()) return 5'000'000;
  return static_cast<std::uint64_t>(
      std::ceil(50.0 * *std::max_element(c.gammas.begin(), c.gammas.end())));
}

std::string subset_tag(Subset a) {
  std::string s;
  for (int k : subset_members(a)) s += (s.empty() ? "" : "-") + std::to_string(k);
  return s;
}

const DetectorConfig& find_detector(const ExperimentConfig& c, const std::string& label) {
  for (const auto& d : c.detectors) {
    if (detector_label(d) == label) return d;
  }
  throw ConfigError("unknown detector '" + label + "'");
}

std::vector<Subset> scenario_subsets(const ExperimentConfig& c) {
  std::vector<Subset> out;
  for (const auto& s : c.scenarios) out.push_back(make_subset(s));
  return out;
}

CalibrationOptions calibration_options(const ExperimentConfig& c, unsigned workers) {
  CalibrationOptions o;
  o.rel_tol = c.rel_tol;
  o.runs = c.runs.calibration;
  o.seed = c.seed;
  o.workers = workers;
  o.horizon = horizon_of(c);
  o.confirmation_factor = c.confirmation_factor;
  return o;
}

std::vector<double> sorted_gammas(const ExperimentConfig& c) {
  auto g = c.gammas;
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

// Detector specs to run, with an oracle without subset expanded per scenario.
struct Job {
  std::string label;
  DetectorSpec spec;
  Subset only_scenario = 0;
  std::vector<double> thresholds;
};

std::vector<Job> expand_jobs(const ExperimentConfig& c) {
  const auto scenarios = scenario_subsets(c);
  std::vector<Job> jobs;
  for (const auto& d : c.detectors) {
    DetectorSpec spec = build_detector(d, c.model.sensors);
    if (spec.label.empty()) spec.label = detector_label(d);
    if (spec.rule == Rule::oracle && spec.subset == 0) {
      if (scenarios.empty()) {
        throw ConfigError("oracle '" + detector_label(d) + "' needs a subset or scenarios");
      }
      for (Subset a : scenarios) {
        Job j{detector_label(d), spec, a, d.thresholds};
        j.spec.subset = a;
        jobs.push_back(j);
      }
    } else {
      jobs.push_back({detector_label(d), spec, 0, d.thresholds});
    }
  }
  return jobs;
}

struct SweepOutput {
  std::vector<PerformanceCurve> curves;
  std::vector<std::string> labels;  // aligned with curves
  std::string report;
};

SweepOutput run_sweep(const ExperimentConfig& c, unsigned workers) {
  const auto model = build_model(c.model);
  const auto scenarios = scenario_subsets(c);
  if (scenarios.empty()) throw ConfigError("a sweep needs scenarios");
  const auto gammas = sorted_gammas(c);
  std::ostringstream report;

  std::vector<SweepEntry> entries;
  std::vector<std::string> entry_labels;
  for (auto& job : expand_jobs(c)) {
    SweepEntry e;
    e.detector = job.spec;
    e.only_scenario = job.only_scenario;
    if (!job.thresholds.empty()) {
      e.thresholds = job.thresholds;
    } else {
      if (gammas.empty()) {
        throw ConfigError("detector '" + job.label + "' has no thresholds and no gammas are set");
      }
      const auto cal = calibrate_thresholds(job.spec, *model, gammas, calibration_options(c, workers));
      for (const auto& r : cal) {
        e.thresholds.push_back(r.threshold);
        report << job.spec.display_name() << ": gamma " << num(r.target) << " -> b "
               << num(r.threshold) << " (ARL " << num(r.achieved_arl.mean) << " +- "
               << num(r.achieved_arl.standard_error) << ")\n";
      }
    }
    entries.push_back(std::move(e));
    entry_labels.push_back(job.label);
  }

  SweepOptions so;
  so.arl_runs = c.runs.arl ? c.runs.arl : c.runs.calibration;
  so.delay_runs = c.runs.delay;
  so.seed = splitmix64(c.seed ^ 0xa5a5a5a5a5a5a5a5ULL);
  so.workers = workers;
  so.horizon = horizon_of(c);
  SweepOutput out;
  out.curves = performance_sweep(entries, *model, scenarios, so);
  // Curves come out entry by entry, scenario by scenario.
  std::size_t k = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (Subset a : scenarios) {
      if (entries[i].only_scenario != 0 && entries[i].only_scenario != a) continue;
      out.labels.push_back(entry_labels[i]);
      ++k;
    }
  }
  if (k != out.curves.size()) throw NumericError("sweep produced an unexpected curve count");
  out.report = report.str();
  return out;
}

const std::vector<std::string> kCurveHeader = {
    "detector",   "rule",         "affected",     "threshold",    "arl",
    "arl_se",     "arl_n",        "arl_censored", "delay",        "delay_se",
    "delay_n",    "delay_censored", "oracle_delay", "delay_minus_oracle", "delay_over_oracle"};

void curve_rows(Csv& csv, const std::string& label, const PerformanceCurve& curve) {
  for (const auto& pt : curve.points) {
    std::vector<std::string> cells{label, curve.detector, format_subset(curve.affected),
                                   num(pt.threshold)};
    for (auto& s : estimate_cells(pt.arl)) cells.push_back(s);
    for (auto& s : estimate_cells(pt.delay)) cells.push_back(s);
    cells.push_back(num(pt.oracle_delay));
    cells.push_back(num(pt.delay_minus_oracle));
    cells.push_back(num(pt.delay_over_oracle));
    csv.row(cells);
  }
}

}  // namespace

CommandResult cmd_table1(const ExperimentConfig& c, unsigned workers) {
  if (c.table.empty()) throw ConfigError("table1 needs table rows");
  const auto model = build_model(c.model);
  Csv csv({"detector", "rule", "affected", "threshold", "arl", "arl_se", "arl_n", "arl_censored",
           "delay", "delay_se", "delay_n", "delay_censored"});
  std::ostringstream report;
  for (const auto& row : c.table) {
    const Subset a = full_set(static_cast<std::size_t>(row.affected));
    DetectorSpec spec = resolve_oracle(build_detector(find_detector(c, row.detector), c.model.sensors), a);
    std::vector<std::string> cells{row.detector, spec.display_name(),
                                   std::to_string(row.affected), num(row.threshold)};
    HarnessOptions h;
    h.seed = c.seed;
    h.workers = workers;
    h.horizon = horizon_of(c);
    if (c.runs.arl > 0) {
      h.runs = c.runs.arl;
      const auto arl = estimate_arl(spec, *model, row.threshold, h);
      for (auto& s : estimate_cells(arl)) cells.push_back(s);
    } else {
      for (auto& s : blank_estimate()) cells.push_back(s);
    }
    h.runs = c.runs.delay;
    h.seed = splitmix64(c.seed ^ 0x5deece66dULL);
    const auto delay = estimate_worst_delay(spec, *model, a, row.threshold, h);
    for (auto& s : estimate_cells(delay)) cells.push_back(s);
    csv.row(cells);
    report << row.detector << " |A|=" << row.affected << " b=" << num(row.threshold)
           << ": delay " << num(delay.mean) << " +- " << num(delay.standard_error) << "\n";
  }
  return {{{"table1.csv", csv.str()}}, report.str()};
}

CommandResult cmd_figures(const ExperimentConfig& c, unsigned workers) {
  CommandResult result;
  const auto& f = c.figure1;
  const RenewalConstants first = gaussian_constants(f.theta1);
  const ThresholdKind kinds[] = {ThresholdKind::uniform, ThresholdKind::equalizing,
                                 ThresholdKind::exp_rho_beta, ThresholdKind::inverse_info,
                                 ThresholdKind::proportional_info};
  Csv fig1({"theta2", "spec", "j1", "j2", "c1", "c2"});
  for (std::size_t i = 0; i < f.points; ++i) {
    const double theta2 =
        f.points == 1 ? f.theta2_min
                      : f.theta2_min + (f.theta2_max - f.theta2_min) * static_cast<double>(i) /
                                           static_cast<double>(f.points - 1);
    const std::vector<RenewalConstants> sensors{first, gaussian_constants(theta2)};
    for (ThresholdKind kind : kinds) {
      const auto j = relative_loss_curve(sensors, kind, f.gamma);
      std::vector<std::string> cells{num(theta2), threshold_kind_name(kind), num(j[0]), num(j[1])};
      if (kind == ThresholdKind::proportional_info) {
        cells.insert(cells.end(), {"", ""});
      } else {
        const auto ck = relative_loss_constants(sensors, design_weights(sensors, kind));
        cells.push_back(num(ck[0]));
        cells.push_back(num(ck[1]));
      }
      fig1.row(cells);
    }
  }
  result.files.push_back({"fig1.csv", fig1.str()});

  Csv ratio({"theta1", "theta2", "gamma", "ratio1", "ratio2"});
  const std::vector<RenewalConstants> ends{first, gaussian_constants(f.theta2_max)};
  for (double g : f.ratio_gammas) {
    const auto r = proportional_info_ratio(ends, g);
    ratio.row({num(f.theta1), num(f.theta2_max), num(g), num(r[0]), num(r[1])});
  }
  result.files.push_back({"fig1_ratio.csv", ratio.str()});

  if (!c.detectors.empty() && !c.scenarios.empty()) {
    const auto sweep = run_sweep(c, workers);
    for (Subset a : scenario_subsets(c)) {
      Csv csv(kCurveHeader);
      for (std::size_t i = 0; i < sweep.curves.size(); ++i) {
        if (sweep.curves[i].affected == a) curve_rows(csv, sweep.labels[i], sweep.curves[i]);
      }
      result.files.push_back({"fig_affected_" + subset_tag(a) + ".csv", csv.str()});
    }
    result.report = sweep.report;
  }
  return result;
}

CommandResult cmd_sweep(const ExperimentConfig& c, unsigned workers) {
  const auto sweep = run_sweep(c, workers);
  Csv csv(kCurveHeader);
  for (std::size_t i = 0; i < sweep.curves.size(); ++i) {
    curve_rows(csv, sweep.labels[i], sweep.curves[i]);
  }
  return {{{"sweep.csv", csv.str()}}, sweep.report};
}

CommandResult cmd_calibrate(const ExperimentConfig& c, unsigned workers) {
  const auto gammas = sorted_gammas(c);
  if (gammas.empty()) throw ConfigError("calibrate needs gammas");
  if (c.detectors.empty()) throw ConfigError("calibrate needs detectors");
  const auto model = build_model(c.model);
  Csv csv({"detector", "rule", "gamma", "threshold", "arl", "arl_se", "arl_n", "arl_censored",
           "iterations", "within_tolerance"});
  std::ostringstream report;
  for (const auto& job : expand_jobs(c)) {
    const auto cal = calibrate_thresholds(job.spec, *model, gammas, calibration_options(c, workers));
    for (const auto& r : cal) {
      std::vector<std::string> cells{job.label, job.spec.display_name(), num(r.target),
                                     num(r.threshold)};
      for (auto& s : estimate_cells(r.achieved_arl)) cells.push_back(s);
      cells.push_back(std::to_string(r.iterations));
      cells.push_back(r.within_tolerance(c.rel_tol) ? "yes" : "no");
      csv.row(cells);
      report << job.spec.display_name() << "  gamma=" << num(r.target)
             << "  b=" << num(r.threshold) << "  ARL=" << num(r.achieved_arl.mean) << " +- "
             << num(r.achieved_arl.standard_error) << " (" << r.achieved_arl.n_runs << " runs, "
             << r.achieved_arl.n_censored << " censored)\n";
    }
  }
  return {{{"calibration.csv", csv.str()}}, report.str()};
}

CommandResult cmd_constants(const ExperimentConfig& c, unsigned) {
  Csv consts({"theta", "kl", "rho", "beta", "delta"});
  std::ostringstream report;
  for (double t : c.constants_thetas) {
    const auto k = gaussian_constants(t);
    consts.row({num(t), num(k.kl), num(k.rho), num(k.beta), num(k.delta)});
    report << "theta=" << num(t) << "  rho=" << num(k.rho) << "  beta=" << num(k.beta)
           << "  delta=" << num(k.delta) << "\n";
  }
  CommandResult result{{{"constants.csv", consts.str()}}, report.str()};

  if (c.model.covariance.empty()) {
    std::vector<RenewalConstants> sensors;
    for (double t : c.model.shifts) sensors.push_back(gaussian_constants(t));
    auto gammas = sorted_gammas(c);
    if (gammas.empty()) gammas.push_back(c.figure1.gamma);
    Csv design({"spec", "gamma", "sensor", "weight", "threshold", "c", "jbar"});
    for (ThresholdKind kind :
         {ThresholdKind::uniform, ThresholdKind::equalizing, ThresholdKind::exp_rho_beta,
          ThresholdKind::inverse_info, ThresholdKind::proportional_info}) {
      for (double g : gammas) {
        const auto d = multichart_design(sensors, kind, g);
        const auto j = relative_loss_curve(sensors, kind, g);
        std::vector<double> ck;
        if (!d.weights.empty()) ck = relative_loss_constants(sensors, d.weights);
        for (std::size_t k = 0; k < sensors.size(); ++k) {
          design.row({threshold_kind_name(kind), num(g), std::to_string(k + 1),
                      d.weights.empty() ? "" : num(d.weights[k]), num(d.thresholds[k]),
                      ck.empty() ? "" : num(ck[k]), num(j[k])});
        }
      }
    }
    result.files.push_back({"design.csv", design.str()});
  }
  return result;
}

}  // namespace mscusum
