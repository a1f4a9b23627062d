#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mscusum/model.hpp"
#include "mscusum/subsets.hpp"
#include "mscusum/windows.hpp"

namespace mscusum {

/// Per-subset CUSUM recursion carrying both statistic variants.
struct CusumState {
  double y_nonneg = 0.0;  // Y_t = max(Y_{t-1} + l, 0)
  double y_signed = 0.0;  // Y~_t = max(Y~_{t-1}, 0) + l
  double z_cum = 0.0;     // Z_t
  Subset subset = 0;

  /// Throws NumericError on a non-finite increment.
  void step(double increment);
  void reset() { y_nonneg = y_signed = z_cum = 0.0; }
};

/**
 * A stopping rule as a streaming state machine. `observe` consumes X_t and
 * returns the detection statistic on the threshold's scale: the rule stops
 * at the first t with statistic >= b. The statistic never depends on b, so a
 * single pass yields the stopping time for every threshold.
 */
class Detector {
 public:
  virtual ~Detector() = default;

  virtual void reset() = 0;
  virtual double observe(std::span<const double> x) = 0;
  /// Subset favoured by the last statistic, when the rule defines one.
  virtual std::optional<Subset> implicated() const { return std::nullopt; }
  /// False for sigma-window rules, which only approximate their definition.
  virtual bool exact() const { return true; }
  /// Rules driven by the non-negative CUSUM statistic need b > 0.
  virtual void validate_threshold(double b) const;
};

enum class Rule {
  oracle,           // S_b^A
  glr,              // S_b over an enumerated class
  glr_top_exact,    // S_b on P_L, order-statistic form
  glr_top_at_most,  // S_b on P-bar_L, order-statistic form
  mixture_bar,      // S-bar_b
  mixture_tilde,    // S~_b
  shat,             // S^_b(pi)
  xie_siegmund,     // S-check_b(pi)
  sum_top,          // M_b(L)
  m_pi,             // M_b(pi)
  shiryaev_roberts, // R_b, test device
  sprt,             // T^_b(pi), test device
};

std::string rule_name(Rule r);
Rule parse_rule(const std::string& name);

/// Immutable description of a rule; `make_detector` builds fresh state.
struct DetectorSpec {
  Rule rule = Rule::oracle;
  std::string label;
  Subset subset = 0;  // oracle; 0 means "the scenario's affected subset"
  std::optional<SubsetClass> subset_class;  // glr, mixture_bar, mixture_tilde, shiryaev_roberts
  int top = 0;        // L for glr_top_* and sum_top
  double p = 1.0;     // weight parameter for glr_top_*
  double pi = 0.5;    // shat, xie_siegmund, m_pi, sprt
  WindowKind window = WindowKind::regeneration;

  /// Log-cardinality used to bracket calibration (log|P|).
  double log_class_size(std::size_t sensors) const;
  std::string display_name() const;
};

/// Throws ContractError on invalid parameters, CapacityError for classes
/// that cannot be enumerated.
std::unique_ptr<Detector> make_detector(const DetectorSpec& spec, const SensorModel& model);

/// Outcome of running a rule on one path.
struct Verdict {
  bool stopped = false;
  std::uint64_t time = 0;
  double statistic = 0.0;
  std::optional<Subset> implicated_subset;
  bool censored = false;
};

/// Runs `detector` (after a reset) on the sampler until statistic >= b or
/// `horizon` observations.
Verdict run_until(Detector& detector, PathSampler& sampler, double threshold,
                  std::uint64_t horizon);
/// Same over a recorded row-major path.
Verdict run_on_path(Detector& detector, std::span<const double> path, std::size_t sensors,
                    double threshold);

}  // namespace mscusum
