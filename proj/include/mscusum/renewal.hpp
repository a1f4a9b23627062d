#pragma once

#include <string>
#include <vector>

namespace mscusum {

/**
 * Renewal-theoretic constants of the LLR random walk of a unit-variance
 * Gaussian sensor with post-change mean theta. Under the post-change law the
 * increments are N(theta^2/2, theta^2).
 */
struct RenewalConstants {
  double theta = 0.0;
  double rho = 0.0;    // limiting expected overshoot
  double beta = 0.0;   // expected infimum of the walk, <= 0
  double delta = 0.0;  // Laplace transform of the limiting overshoot, in (0, 1)
  double kl = 0.0;     // theta^2 / 2
};

double gaussian_beta(double theta);
double gaussian_delta(double theta);
double gaussian_rho(double theta);
RenewalConstants gaussian_constants(double theta);

/// Constants for the summed increment of an affected subset of independent
/// Gaussian sensors, which is again Gaussian with shift sqrt(sum theta_k^2).
RenewalConstants aggregate_constants(const std::vector<double>& shifts);

/// Higher-order delay approximation (b + rho + beta) / I.
double approximate_delay(double threshold, const RenewalConstants& c);

enum class ThresholdKind {
  uniform,             // p_k equal
  equalizing,          // p_k ~ 1 / (I_k delta_k^2)
  exp_rho_beta,        // p_k ~ exp(rho_k + beta_k)
  inverse_info,        // p_k ~ 1 / I_k
  proportional_info,   // b_k = c_gamma I_k, no weights
};

std::string threshold_kind_name(ThresholdKind k);
ThresholdKind parse_threshold_kind(const std::string& name);

/// Normalized weights p_k for a spec that has them.
std::vector<double> design_weights(const std::vector<RenewalConstants>& sensors,
                                   ThresholdKind kind);

struct MultichartDesign {
  ThresholdKind kind = ThresholdKind::uniform;
  double gamma = 0.0;
  double base = 0.0;                // b, or c_gamma for proportional_info
  std::vector<double> weights;      // empty for proportional_info
  std::vector<double> thresholds;   // b_k
};

/**
 * Per-sensor thresholds of a multichart CUSUM with target ARL gamma.
 * Weighted specs use b = log gamma + log(sum_k p_k I_k delta_k^2) and
 * b_k = b - log p_k. proportional_info solves
 * sum_k exp(-c I_k) I_k delta_k^2 = 1 / gamma for c by bisection and sets
 * b_k = c I_k.
 */
MultichartDesign multichart_design(const std::vector<RenewalConstants>& sensors,
                                   ThresholdKind kind, double gamma);

/// log( sum_j p_j I_j delta_j^2 / (p_k I_k delta_k^2) ) for every k.
std::vector<double> relative_loss_constants(const std::vector<RenewalConstants>& sensors,
                                            const std::vector<double>& weights);

/// Approximate relative loss J-bar_k of every sensor under a design.
/// Weighted specs: C_k(p) / (log gamma + rho_k + beta_k + log(I_k delta_k^2)).
/// proportional_info: (J_k - J_k^opt) / J_k^opt from the delay approximation.
std::vector<double> relative_loss_curve(const std::vector<RenewalConstants>& sensors,
                                        ThresholdKind kind, double gamma);

/// J_k / (log gamma / I_k) under the proportional_info design, with J_k from
/// the delay approximation at b_k = c_gamma I_k.
std::vector<double> proportional_info_ratio(const std::vector<RenewalConstants>& sensors,
                                            double gamma);

}  // namespace mscusum
