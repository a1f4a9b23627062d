#include "mscusum/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mscusum/errors.hpp"
#include "mscusum/numeric.hpp"

namespace mscusum {

namespace {

// Tighter than the 1e-10 target: for small theta the terms decay slowly and
// the tail is ~8/theta^2 times the last term.
constexpr double kTermTolerance = 1e-15;
constexpr int kMinTerms = 100;
constexpr int kMaxTerms = 1'000'000;

double checked_theta(double theta) {
  if (theta == 0.0 || !std::isfinite(theta)) {
    throw ContractError("renewal constants need a nonzero finite shift");
  }
  return std::fabs(theta);
}

// sum_{n>=1} term(n), stopped once |term| < 1e-15 past n = 100.
template <class Term>
double sum_series(Term&& term) {
  double sum = 0.0;
  for (int n = 1; n <= kMaxTerms; ++n) {
    const double t = term(n);
    sum += t;
    if (n >= kMinTerms && std::fabs(t) < kTermTolerance) return sum;
  }
  throw NumericError("renewal series did not converge within 1e6 terms");
}

}  // namespace

double gaussian_beta(double theta) {
  const double th = checked_theta(theta);
  // -sum (1/n) E[S_n^-] for S_n ~ N(n th^2/2, n th^2).
  return -sum_series([th](int n) {
    const double rn = std::sqrt(static_cast<double>(n));
    const double c = th * rn / 2.0;
    return th / rn * normal_pdf(c) - th * th / 2.0 * normal_cdf(-c);
  });
}

double gaussian_delta(double theta) {
  const double th = checked_theta(theta);
  const double exponent = sum_series([th](int n) {
    const double c = th * std::sqrt(static_cast<double>(n)) / 2.0;
    return -2.0 / n * normal_cdf(-c);
  });
  const double delta = 2.0 / (th * th) * std::exp(exponent);
  if (!(delta > 0.0 && delta < 1.0)) {
    throw NumericError("overshoot Laplace transform left (0, 1); series truncated wrongly");
  }
  return delta;
}

double gaussian_rho(double theta) {
  const double th = checked_theta(theta);
  // Limiting overshoot E[H^2] / (2 E[H]) of the ladder height H, which equals
  // E[X^2] / (2 E[X]) + E[inf_n S_n]; here E[X^2] / (2 E[X]) = 1 + th^2 / 4.
  return 1.0 + th * th / 4.0 + gaussian_beta(th);
}

RenewalConstants gaussian_constants(double theta) {
  RenewalConstants c;
  c.theta = checked_theta(theta);
  c.beta = gaussian_beta(theta);
  c.rho = 1.0 + c.theta * c.theta / 4.0 + c.beta;
  c.delta = gaussian_delta(theta);
  c.kl = c.theta * c.theta / 2.0;
  return c;
}

RenewalConstants aggregate_constants(const std::vector<double>& shifts) {
  if (shifts.empty()) throw ContractError("aggregate needs at least one sensor");
  double s = 0.0;
  for (double th : shifts) s += th * th;
  return gaussian_constants(std::sqrt(s));
}

double approximate_delay(double threshold, const RenewalConstants& c) {
  return (threshold + c.rho + c.beta) / c.kl;
}

std::string threshold_kind_name(ThresholdKind k) {
  switch (k) {
    case ThresholdKind::uniform:
      return "uniform";
    case ThresholdKind::equalizing:
      return "equalizing";
    case ThresholdKind::exp_rho_beta:
      return "exp_rho_beta";
    case ThresholdKind::inverse_info:
      return "inverse_info";
    case ThresholdKind::proportional_info:
      return "proportional_info";
  }
  return "unknown";
}

ThresholdKind parse_threshold_kind(const std::string& name) {
  for (auto k : {ThresholdKind::uniform, ThresholdKind::equalizing, ThresholdKind::exp_rho_beta,
                 ThresholdKind::inverse_info, ThresholdKind::proportional_info}) {
    if (threshold_kind_name(k) == name) return k;
  }
  throw ContractError("unknown threshold specification '" + name + "'");
}

std::vector<double> design_weights(const std::vector<RenewalConstants>& sensors,
                                   ThresholdKind kind) {
  if (sensors.empty()) throw ContractError("design needs at least one sensor");
  std::vector<double> w;
  w.reserve(sensors.size());
  for (const auto& c : sensors) {
    switch (kind) {
      case ThresholdKind::uniform:
        w.push_back(1.0);
        break;
      case ThresholdKind::equalizing:
        w.push_back(1.0 / (c.kl * c.delta * c.delta));
        break;
      case ThresholdKind::exp_rho_beta:
        w.push_back(std::exp(c.rho + c.beta));
        break;
      case ThresholdKind::inverse_info:
        w.push_back(1.0 / c.kl);
        break;
      case ThresholdKind::proportional_info:
        throw ContractError("proportional_info thresholds carry no weights");
    }
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return w;
}

namespace {

double false_alarm_rate(const std::vector<RenewalConstants>& sensors, double c) {
  double s = 0.0;
  for (const auto& k : sensors) s += std::exp(-c * k.kl) * k.kl * k.delta * k.delta;
  return s;
}

}  // namespace

MultichartDesign multichart_design(const std::vector<RenewalConstants>& sensors,
                                   ThresholdKind kind, double gamma) {
  if (!(gamma > 1.0)) throw ContractError("target ARL must exceed 1");
  MultichartDesign d;
  d.kind = kind;
  d.gamma = gamma;
  if (kind == ThresholdKind::proportional_info) {
    double min_info = sensors.at(0).kl;
    for (const auto& c : sensors) min_info = std::min(min_info, c.kl);
    double lo = 0.0;
    double hi = 10.0 * std::log(gamma) / min_info;
    const double target = 1.0 / gamma;
    if (!(false_alarm_rate(sensors, lo) > target && false_alarm_rate(sensors, hi) < target)) {
      throw NumericError("proportional_info: bisection bracket does not straddle 1/gamma");
    }
    for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (false_alarm_rate(sensors, mid) > target ? lo : hi) = mid;
    }
    d.base = 0.5 * (lo + hi);
    for (const auto& c : sensors) d.thresholds.push_back(d.base * c.kl);
    return d;
  }
  d.weights = design_weights(sensors, kind);
  double s = 0.0;
  for (std::size_t k = 0; k < sensors.size(); ++k) {
    s += d.weights[k] * sensors[k].kl * sensors[k].delta * sensors[k].delta;
  }
  d.base = std::log(gamma) + std::log(s);
  for (double p : d.weights) d.thresholds.push_back(d.base - std::log(p));
  return d;
}

std::vector<double> relative_loss_constants(const std::vector<RenewalConstants>& sensors,
                                            const std::vector<double>& weights) {
  if (weights.size() != sensors.size()) throw ContractError("one weight per sensor required");
  std::vector<double> terms(sensors.size());
  for (std::size_t k = 0; k < sensors.size(); ++k) {
    terms[k] = weights[k] * sensors[k].kl * sensors[k].delta * sensors[k].delta;
  }
  const double total = std::accumulate(terms.begin(), terms.end(), 0.0);
  std::vector<double> out;
  out.reserve(terms.size());
  for (double t : terms) out.push_back(std::log(total / t));
  return out;
}

namespace {

// Delay of the single-chart CUSUM designed for ARL gamma.
double optimal_delay(const RenewalConstants& c, double gamma) {
  const double b = std::log(gamma) + std::log(c.kl * c.delta * c.delta);
  return approximate_delay(b, c);
}

}  // namespace

std::vector<double> relative_loss_curve(const std::vector<RenewalConstants>& sensors,
                                        ThresholdKind kind, double gamma) {
  std::vector<double> out;
  if (kind == ThresholdKind::proportional_info) {
    const auto d = multichart_design(sensors, kind, gamma);
    for (std::size_t k = 0; k < sensors.size(); ++k) {
      const double opt = optimal_delay(sensors[k], gamma);
      out.push_back((approximate_delay(d.thresholds[k], sensors[k]) - opt) / opt);
    }
    return out;
  }
  const auto c = relative_loss_constants(sensors, design_weights(sensors, kind));
  for (std::size_t k = 0; k < sensors.size(); ++k) {
    const auto& s = sensors[k];
    out.push_back(c[k] / (std::log(gamma) + s.rho + s.beta + std::log(s.kl * s.delta * s.delta)));
  }
  return out;
}

std::vector<double> proportional_info_ratio(const std::vector<RenewalConstants>& sensors,
                                            double gamma) {
  const auto d = multichart_design(sensors, ThresholdKind::proportional_info, gamma);
  std::vector<double> out;
  for (std::size_t k = 0; k < sensors.size(); ++k) {
    out.push_back(approximate_delay(d.thresholds[k], sensors[k]) /
                  (std::log(gamma) / sensors[k].kl));
  }
  return out;
}

}  // namespace mscusum
