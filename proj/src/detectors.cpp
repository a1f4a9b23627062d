#include "mscusum/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "mscusum/errors.hpp"
#include "mscusum/numeric.hpp"

namespace mscusum {

void CusumState::step(double increment) {
  if (!std::isfinite(increment)) throw NumericError("non-finite log-likelihood ratio increment");
  y_signed = std::max(y_signed, 0.0) + increment;
  y_nonneg = std::max(y_nonneg + increment, 0.0);
  z_cum += increment;
}

void Detector::validate_threshold(double b) const {
  if (std::isnan(b)) throw ContractError("threshold is NaN");
}

namespace {

// Differences above this are summed in log space; below it the product form
// cannot overflow for any realistic class size.
constexpr double kLinearSpaceLimit = 300.0;

void check_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError("non-finite log-likelihood ratio increment");
  }
}

void require_independent(const SensorModel& model, const char* rule) {
  if (!model.independent()) {
    throw ContractError(std::string(rule) + " needs independent sensors");
  }
}

void check_pi(double pi, bool allow_one, const char* rule) {
  const bool ok = allow_one ? (pi > 0.0 && pi <= 1.0) : (pi > 0.0 && pi < 1.0);
  if (!ok) {
    throw ContractError(std::string(rule) + ": pi must lie in " +
                        (allow_one ? "(0, 1]" : "(0, 1)"));
  }
}

class PositiveThresholdDetector : public Detector {
 public:
  void validate_threshold(double b) const override {
    if (!(b > 0.0)) throw ContractError("the non-negative CUSUM statistic needs b > 0");
  }
};

// --- oracle -----------------------------------------------------------------

class OracleCusum final : public PositiveThresholdDetector {
 public:
  OracleCusum(const SensorModel& model, Subset a) : eval_(model.increments({a})) {
    state_.subset = a;
  }
  void reset() override { state_.reset(); }
  double observe(std::span<const double> x) override {
    double l = 0.0;
    eval_->evaluate(x, {&l, 1});
    state_.step(l);
    return state_.y_nonneg;
  }
  std::optional<Subset> implicated() const override { return state_.subset; }

 private:
  std::unique_ptr<IncrementEvaluator> eval_;
  CusumState state_;
};

// --- GLR over an enumerated class --------------------------------------------

class GlrBruteForce final : public PositiveThresholdDetector {
 public:
  GlrBruteForce(const SensorModel& model, const SubsetClass& cls)
      : members_(cls.enumerate()), log_weights_(cls.log_weights()) {
    eval_ = model.increments(members_);
    states_.resize(members_.size());
    for (std::size_t i = 0; i < members_.size(); ++i) states_[i].subset = members_[i];
    increments_.resize(members_.size());
  }
  void reset() override {
    for (auto& s : states_) s.reset();
    best_ = 0;
  }
  double observe(std::span<const double> x) override {
    eval_->evaluate(x, increments_);
    double stat = kNegInf;
    for (std::size_t i = 0; i < states_.size(); ++i) {
      states_[i].step(increments_[i]);
      const double v = states_[i].y_nonneg + log_weights_[i];
      if (v > stat) {  // strict: ties keep the earlier member
        stat = v;
        best_ = i;
      }
    }
    return stat;
  }
  std::optional<Subset> implicated() const override { return members_[best_]; }

 private:
  std::vector<Subset> members_;
  std::vector<double> log_weights_;
  std::unique_ptr<IncrementEvaluator> eval_;
  std::vector<CusumState> states_;
  std::vector<double> increments_;
  std::size_t best_ = 0;
};

// --- windowed per-sensor rules -------------------------------------------------

// Shared plumbing: per-sensor increments feed a regeneration tracker, and the
// statistic is a window maximum of a per-sensor function.
class WindowedSensorRule : public Detector {
 public:
  WindowedSensorRule(const SensorModel& model, WindowKind kind, const char* rule)
      : model_(&model), tracker_(model.sensors(), kind), llr_(model.sensors()) {
    require_independent(model, rule);
  }
  void reset() override { tracker_.reset(); }
  double observe(std::span<const double> x) override {
    model_->sensor_llr(x, llr_);
    check_finite(llr_);
    tracker_.advance(llr_);
    return statistic();
  }
  bool exact() const override { return tracker_.kind() == WindowKind::regeneration; }
  const RegenerationTracker& tracker() const { return tracker_; }

 protected:
  virtual double statistic() const = 0;
  const RegenerationTracker& window() const { return tracker_; }

 private:
  const SensorModel* model_;
  RegenerationTracker tracker_;
  std::vector<double> llr_;
};

// Sum of the L largest entries of f(d_k).
template <class F>
double top_sum(std::span<const double> d, int top, F&& f) {
  double buf[kMaxSensors];
  const std::size_t k = d.size();
  for (std::size_t i = 0; i < k; ++i) buf[i] = f(d[i]);
  std::partial_sort(buf, buf + top, buf + k, std::greater<>());
  double s = 0.0;
  for (int i = 0; i < top; ++i) s += buf[i];
  return s;
}

class GlrTopExact final : public WindowedSensorRule {
 public:
  GlrTopExact(const SensorModel& model, int top, WindowKind kind)
      : WindowedSensorRule(model, kind, "glr_top_exact"), top_(top) {
    if (top < 1 || top > static_cast<int>(model.sensors())) {
      throw ContractError("L must be in [1, K]");
    }
    offset_ = std::log(binomial(static_cast<int>(model.sensors()), top));
  }

 protected:
  double statistic() const override {
    return windowed_max(window(), [this](std::span<const double> d) {
             return top_sum(d, top_, [](double v) { return v; });
           }) -
           offset_;
  }

 private:
  int top_;
  double offset_;
};

class GlrTopAtMost final : public WindowedSensorRule {
 public:
  GlrTopAtMost(const SensorModel& model, int top, double p, WindowKind kind)
      : WindowedSensorRule(model, kind, "glr_top_at_most"), top_(top), log_p_(std::log(p)) {
    if (top < 1 || top > static_cast<int>(model.sensors())) {
      throw ContractError("L must be in [1, K]");
    }
    if (!(p > 0.0)) throw ContractError("p must be positive");
    offset_ = SubsetClass::at_most(model.sensors(), top, p).log_normalizer();
  }
  void validate_threshold(double b) const override {
    // The positive-part form equals the class maximum only above zero.
    if (!(b + offset_ > 0.0)) throw ContractError("need b + log C(P) > 0");
  }

 protected:
  double statistic() const override {
    const double lp = log_p_;
    return windowed_max(window(), [this, lp](std::span<const double> d) {
             return top_sum(d, top_, [lp](double v) { return std::max(v + lp, 0.0); });
           }) -
           offset_;
  }

 private:
  int top_;
  double log_p_;
  double offset_;
};

// log prod_k (1 - pi + pi e^{f(d_k)})
template <class F>
double log_product_mix(std::span<const double> d, double pi, F&& f) {
  double mx = kNegInf;
  for (double v : d) mx = std::max(mx, f(v));
  if (mx < kLinearSpaceLimit) {
    double prod = 1.0;
    for (double v : d) prod *= (1.0 - pi) + pi * std::exp(f(v));
    return std::log(prod);
  }
  double s = 0.0;
  for (double v : d) s += log_mix(pi, f(v));
  return s;
}

// Window max of log_product_mix. Products that stay in linear space are
// compared directly, so only one log is taken per step.
template <class F>
double windowed_log_product(const RegenerationTracker& w, double pi, F&& f) {
  const std::size_t dim = w.dimension();
  const auto now = w.current();
  double best_prod = 0.0;
  double best_log = kNegInf;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto zs = w.entry(i);
    double mx = kNegInf;
    double d[kMaxSensors];
    for (std::size_t k = 0; k < dim; ++k) {
      d[k] = f(now[k] - zs[k]);
      mx = std::max(mx, d[k]);
    }
    if (mx < kLinearSpaceLimit) {
      double prod = 1.0;
      for (std::size_t k = 0; k < dim; ++k) prod *= (1.0 - pi) + pi * std::exp(d[k]);
      best_prod = std::max(best_prod, prod);
    } else {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) s += log_mix(pi, d[k]);
      best_log = std::max(best_log, s);
    }
  }
  return best_prod > 0.0 ? std::max(std::log(best_prod), best_log) : best_log;
}

class ShatRule final : public WindowedSensorRule {
 public:
  ShatRule(const SensorModel& model, double pi, WindowKind kind)
      : WindowedSensorRule(model, kind, "shat"), pi_(pi) {
    check_pi(pi, false, "shat");
  }

 protected:
  double statistic() const override {
    return windowed_log_product(window(), pi_, [](double v) { return v; });
  }

 private:
  double pi_;
};

class XieSiegmundRule final : public WindowedSensorRule {
 public:
  XieSiegmundRule(const SensorModel& model, double pi, WindowKind kind)
      : WindowedSensorRule(model, kind, "xie_siegmund"), pi_(pi) {
    check_pi(pi, true, "xie_siegmund");
  }

 protected:
  double statistic() const override {
    return windowed_log_product(window(), pi_, [](double v) { return std::max(v, 0.0); });
  }

 private:
  double pi_;
};

// --- mixture S-bar ------------------------------------------------------------

class MixtureBar final : public Detector {
 public:
  MixtureBar(const SensorModel& model, const SubsetClass& cls, WindowKind kind)
      : model_(&model),
        members_(cls.enumerate()),
        log_weights_(cls.log_weights()),
        factorized_(model.independent()),
        tracker_(factorized_ ? model.sensors() : members_.size(), kind) {
    if (factorized_) {
      sensor_llr_.resize(model.sensors());
      for (double lw : log_weights_) weights_.push_back(std::exp(lw));
      const std::size_t masks = std::size_t{1} << model.sensors();
      use_mask_table_ = model.sensors() <= 16 && masks <= 4 * members_.size();
      // Every nonempty subset with weight ~ p^|A|: the mixture is a product.
      full_product_ = cls.kind() == ClassKind::at_most &&
                      cls.bound() == static_cast<int>(model.sensors());
      p_ = cls.p();
      inv_normalizer_ = std::exp(-cls.log_normalizer());
    } else {
      eval_ = model.increments(members_);
      subset_llr_.resize(members_.size());
    }
  }
  void reset() override { tracker_.reset(); }
  bool exact() const override { return tracker_.kind() == WindowKind::regeneration; }

  double observe(std::span<const double> x) override {
    if (factorized_) {
      model_->sensor_llr(x, sensor_llr_);
      check_finite(sensor_llr_);
      tracker_.advance(sensor_llr_);
      return factorized_max();
    }
    eval_->evaluate(x, subset_llr_);
    check_finite(subset_llr_);
    tracker_.advance(subset_llr_);
    return windowed_max(tracker_, [this](std::span<const double> d) {
      thread_local std::vector<double> terms;
      terms.resize(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) terms[i] = log_weights_[i] + d[i];
      return log_sum_exp(terms);
    });
  }

 private:
  // Window max of the mixture. Entries whose sum fits in linear space are
  // compared before taking a single log.
  double factorized_max() const {
    const std::size_t dim = tracker_.dimension();
    const auto now = tracker_.current();
    double d[kMaxSensors];
    double best_sum = 0.0;
    double best_log = kNegInf;
    for (std::size_t i = 0; i < tracker_.size(); ++i) {
      const auto zs = tracker_.entry(i);
      for (std::size_t k = 0; k < dim; ++k) d[k] = now[k] - zs[k];
      const std::span<const double> diff(d, dim);
      const double sum = linear_sum(diff);
      if (sum > 0.0) {
        best_sum = std::max(best_sum, sum);
      } else {
        best_log = std::max(best_log, log_mixture(diff));
      }
    }
    return best_sum > 0.0 ? std::max(std::log(best_sum), best_log) : best_log;
  }

  // sum_A p_A exp(sum_{k in A} d_k), or 0 when that leaves linear space.
  double linear_sum(std::span<const double> d) const {
    double mx = kNegInf;
    for (double v : d) mx = std::max(mx, v);
    if (mx < kLinearSpaceLimit) {
      double e[kMaxSensors];
      for (std::size_t k = 0; k < d.size(); ++k) e[k] = std::exp(d[k]);
      double sum = 0.0;
      if (full_product_) {
        double prod = 1.0;
        for (std::size_t k = 0; k < d.size(); ++k) prod *= 1.0 + p_ * e[k];
        sum = (prod - 1.0) * inv_normalizer_;
      } else if (use_mask_table_) {
        thread_local std::vector<double> prod;
        prod.resize(std::size_t{1} << d.size());
        prod[0] = 1.0;
        for (std::size_t m = 1; m < prod.size(); ++m) {
          prod[m] = prod[m & (m - 1)] * e[__builtin_ctzll(m)];
        }
        for (std::size_t i = 0; i < members_.size(); ++i) sum += weights_[i] * prod[members_[i]];
      } else {
        for (std::size_t i = 0; i < members_.size(); ++i) {
          double v = weights_[i];
          for (Subset a = members_[i]; a != 0; a &= a - 1) v *= e[__builtin_ctz(a)];
          sum += v;
        }
      }
      if (sum > 0.0 && std::isfinite(sum)) return sum;
    }
    return 0.0;
  }

  double log_mixture(std::span<const double> d) const {
    thread_local std::vector<double> terms;
    terms.resize(members_.size());
    for (std::size_t i = 0; i < members_.size(); ++i) {
      double z = log_weights_[i];
      for (Subset a = members_[i]; a != 0; a &= a - 1) z += d[__builtin_ctz(a)];
      terms[i] = z;
    }
    return log_sum_exp(terms);
  }

  const SensorModel* model_;
  std::vector<Subset> members_;
  std::vector<double> log_weights_;
  std::vector<double> weights_;
  bool factorized_;
  bool use_mask_table_ = false;
  bool full_product_ = false;
  double p_ = 1.0;
  double inv_normalizer_ = 1.0;
  RegenerationTracker tracker_;
  std::unique_ptr<IncrementEvaluator> eval_;
  std::vector<double> sensor_llr_;
  std::vector<double> subset_llr_;
};

// --- recursion-based mixtures ----------------------------------------------------

class MixtureTilde final : public Detector {
 public:
  MixtureTilde(const SensorModel& model, const SubsetClass& cls)
      : members_(cls.enumerate()), log_weights_(cls.log_weights()) {
    eval_ = model.increments(members_);
    states_.resize(members_.size());
    for (std::size_t i = 0; i < members_.size(); ++i) states_[i].subset = members_[i];
    increments_.resize(members_.size());
    terms_.resize(members_.size());
  }
  void reset() override {
    for (auto& s : states_) s.reset();
  }
  double observe(std::span<const double> x) override {
    eval_->evaluate(x, increments_);
    for (std::size_t i = 0; i < states_.size(); ++i) {
      states_[i].step(increments_[i]);
      terms_[i] = log_weights_[i] + states_[i].y_signed;
    }
    return log_sum_exp(terms_);
  }

 private:
  std::vector<Subset> members_;
  std::vector<double> log_weights_;
  std::unique_ptr<IncrementEvaluator> eval_;
  std::vector<CusumState> states_;
  std::vector<double> increments_;
  std::vector<double> terms_;
};

class ShiryaevRobertsMixture final : public Detector {
 public:
  ShiryaevRobertsMixture(const SensorModel& model, const SubsetClass& cls)
      : members_(cls.enumerate()), log_weights_(cls.log_weights()) {
    eval_ = model.increments(members_);
    increments_.resize(members_.size());
    terms_.resize(members_.size());
    reset();
  }
  void reset() override { log_r_.assign(members_.size(), kNegInf); }
  double observe(std::span<const double> x) override {
    eval_->evaluate(x, increments_);
    check_finite(increments_);
    for (std::size_t i = 0; i < members_.size(); ++i) {
      // R_t = (R_{t-1} + 1) e^{l_t}
      log_r_[i] = log_add_exp(log_r_[i], 0.0) + increments_[i];
      terms_[i] = log_weights_[i] + log_r_[i];
    }
    return log_sum_exp(terms_);
  }

 private:
  std::vector<Subset> members_;
  std::vector<double> log_weights_;
  std::unique_ptr<IncrementEvaluator> eval_;
  std::vector<double> increments_;
  std::vector<double> terms_;
  std::vector<double> log_r_;
};

// --- local-CUSUM scalable rules -----------------------------------------------------

class LocalCusumRule : public Detector {
 public:
  LocalCusumRule(const SensorModel& model, const char* rule)
      : model_(&model), states_(model.sensors()), llr_(model.sensors()) {
    require_independent(model, rule);
    for (std::size_t k = 0; k < states_.size(); ++k) states_[k].subset = Subset{1} << k;
  }
  void reset() override {
    for (auto& s : states_) s.reset();
  }
  double observe(std::span<const double> x) override {
    model_->sensor_llr(x, llr_);
    for (std::size_t k = 0; k < states_.size(); ++k) {
      states_[k].step(llr_[k]);
      llr_[k] = states_[k].y_nonneg;
    }
    return combine(llr_);
  }

 protected:
  /// Receives the local non-negative statistics Y_t^k.
  virtual double combine(std::span<const double> y) const = 0;

 private:
  const SensorModel* model_;
  std::vector<CusumState> states_;
  std::vector<double> llr_;
};

class SumTopRule final : public LocalCusumRule {
 public:
  SumTopRule(const SensorModel& model, int top) : LocalCusumRule(model, "sum_top"), top_(top) {
    if (top < 1 || top > static_cast<int>(model.sensors())) {
      throw ContractError("L must be in [1, K]");
    }
  }

 protected:
  double combine(std::span<const double> y) const override {
    return top_sum(y, top_, [](double v) { return v; });
  }

 private:
  int top_;
};

class MixtureLocalRule final : public LocalCusumRule {
 public:
  MixtureLocalRule(const SensorModel& model, double pi) : LocalCusumRule(model, "m_pi"), pi_(pi) {
    check_pi(pi, true, "m_pi");
  }

 protected:
  double combine(std::span<const double> y) const override {
    return log_product_mix(y, pi_, [](double v) { return v; });
  }

 private:
  double pi_;
};

// One-sided SPRT: like S^ but anchored at s = 0 forever.
class SprtRule final : public Detector {
 public:
  SprtRule(const SensorModel& model, double pi)
      : model_(&model), z_(model.sensors(), 0.0), llr_(model.sensors()), pi_(pi) {
    require_independent(model, "sprt");
    check_pi(pi, false, "sprt");
  }
  void reset() override { std::fill(z_.begin(), z_.end(), 0.0); }
  double observe(std::span<const double> x) override {
    model_->sensor_llr(x, llr_);
    check_finite(llr_);
    for (std::size_t k = 0; k < z_.size(); ++k) z_[k] += llr_[k];
    return log_product_mix(z_, pi_, [](double v) { return v; });
  }

 private:
  const SensorModel* model_;
  std::vector<double> z_;
  std::vector<double> llr_;
  double pi_;
};

const SubsetClass& require_class(const DetectorSpec& spec) {
  if (!spec.subset_class) {
    throw ContractError(rule_name(spec.rule) + " needs a subset class");
  }
  return *spec.subset_class;
}

void check_class_sensors(const SubsetClass& cls, const SensorModel& model) {
  if (cls.sensors() != model.sensors()) {
    throw ContractError("subset class and model disagree on the sensor count");
  }
}

struct RuleName {
  Rule rule;
  const char* name;
};

constexpr RuleName kRuleNames[] = {
    {Rule::oracle, "oracle"},
    {Rule::glr, "glr"},
    {Rule::glr_top_exact, "glr_top_exact"},
    {Rule::glr_top_at_most, "glr_top_at_most"},
    {Rule::mixture_bar, "mixture_bar"},
    {Rule::mixture_tilde, "mixture_tilde"},
    {Rule::shat, "shat"},
    {Rule::xie_siegmund, "xie_siegmund"},
    {Rule::sum_top, "sum_top"},
    {Rule::m_pi, "m_pi"},
    {Rule::shiryaev_roberts, "shiryaev_roberts"},
    {Rule::sprt, "sprt"},
};

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string describe_class(const SubsetClass& cls) {
  switch (cls.kind()) {
    case ClassKind::exactly:
      return "P" + std::to_string(cls.bound());
    case ClassKind::at_most:
      return "Pbar" + std::to_string(cls.bound());
    case ClassKind::explicit_list:
      return "list" + std::to_string(static_cast<long>(cls.cardinality()));
  }
  return "";
}

}  // namespace

std::string rule_name(Rule r) {
  for (const auto& rn : kRuleNames) {
    if (rn.rule == r) return rn.name;
  }
  return "unknown";
}

Rule parse_rule(const std::string& name) {
  for (const auto& rn : kRuleNames) {
    if (name == rn.name) return rn.rule;
  }
  throw ContractError("unknown rule '" + name + "'");
}

double DetectorSpec::log_class_size(std::size_t sensors) const {
  const int k = static_cast<int>(sensors);
  switch (rule) {
    case Rule::oracle:
      return 0.0;
    case Rule::glr:
    case Rule::mixture_bar:
    case Rule::mixture_tilde:
    case Rule::shiryaev_roberts:
      return subset_class ? std::log(subset_class->cardinality()) : 0.0;
    case Rule::glr_top_exact:
      return std::log(binomial(k, top));
    case Rule::glr_top_at_most:
    case Rule::sum_top:
      return std::log(SubsetClass::at_most(sensors, std::max(top, 1)).cardinality());
    case Rule::shat:
    case Rule::xie_siegmund:
    case Rule::m_pi:
    case Rule::sprt:
      return std::log(std::ldexp(1.0, k) - 1.0);
  }
  return 0.0;
}

std::string DetectorSpec::display_name() const {
  if (!label.empty()) return label;
  std::string name = rule_name(rule);
  switch (rule) {
    case Rule::oracle:
      return name + (subset ? format_subset(subset) : std::string("{A}"));
    case Rule::glr:
    case Rule::mixture_bar:
    case Rule::mixture_tilde:
    case Rule::shiryaev_roberts:
      return subset_class ? name + "(" + describe_class(*subset_class) + ")" : name;
    case Rule::glr_top_exact:
    case Rule::sum_top:
      return name + "(" + std::to_string(top) + ")";
    case Rule::glr_top_at_most:
      return name + "(" + std::to_string(top) + ",p=" + format_number(p) + ")";
    case Rule::shat:
    case Rule::xie_siegmund:
    case Rule::m_pi:
    case Rule::sprt:
      return name + "(" + format_number(pi) + ")";
  }
  return name;
}

std::unique_ptr<Detector> make_detector(const DetectorSpec& spec, const SensorModel& model) {
  switch (spec.rule) {
    case Rule::oracle:
      if (spec.subset == 0) {
        throw ContractError("oracle rule needs its subset resolved before construction");
      }
      return std::make_unique<OracleCusum>(model, spec.subset);
    case Rule::glr: {
      const auto& cls = require_class(spec);
      check_class_sensors(cls, model);
      return std::make_unique<GlrBruteForce>(model, cls);
    }
    case Rule::glr_top_exact:
      return std::make_unique<GlrTopExact>(model, spec.top, spec.window);
    case Rule::glr_top_at_most:
      return std::make_unique<GlrTopAtMost>(model, spec.top, spec.p, spec.window);
    case Rule::mixture_bar: {
      const auto& cls = require_class(spec);
      check_class_sensors(cls, model);
      return std::make_unique<MixtureBar>(model, cls, spec.window);
    }
    case Rule::mixture_tilde: {
      const auto& cls = require_class(spec);
      check_class_sensors(cls, model);
      return std::make_unique<MixtureTilde>(model, cls);
    }
    case Rule::shat:
      return std::make_unique<ShatRule>(model, spec.pi, spec.window);
    case Rule::xie_siegmund:
      return std::make_unique<XieSiegmundRule>(model, spec.pi, spec.window);
    case Rule::sum_top:
      return std::make_unique<SumTopRule>(model, spec.top);
    case Rule::m_pi:
      return std::make_unique<MixtureLocalRule>(model, spec.pi);
    case Rule::shiryaev_roberts: {
      const auto& cls = require_class(spec);
      check_class_sensors(cls, model);
      return std::make_unique<ShiryaevRobertsMixture>(model, cls);
    }
    case Rule::sprt:
      return std::make_unique<SprtRule>(model, spec.pi);
  }
  throw ContractError("unknown rule");
}

Verdict run_until(Detector& detector, PathSampler& sampler, double threshold,
                  std::uint64_t horizon) {
  detector.validate_threshold(threshold);
  detector.reset();
  double x[kMaxSensors];
  const std::size_t k = sampler.model().sensors();
  Verdict v;
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    sampler.next({x, k});
    v.statistic = detector.observe({x, k});
    v.time = t;
    if (v.statistic >= threshold) {
      v.stopped = true;
      v.implicated_subset = detector.implicated();
      return v;
    }
  }
  v.censored = true;
  return v;
}

Verdict run_on_path(Detector& detector, std::span<const double> path, std::size_t sensors,
                    double threshold) {
  detector.validate_threshold(threshold);
  detector.reset();
  Verdict v;
  const std::size_t n = path.size() / sensors;
  for (std::size_t t = 0; t < n; ++t) {
    v.statistic = detector.observe(path.subspan(t * sensors, sensors));
    v.time = t + 1;
    if (v.statistic >= threshold) {
      v.stopped = true;
      v.implicated_subset = detector.implicated();
      return v;
    }
  }
  v.censored = true;
  return v;
}

}  // namespace mscusum
