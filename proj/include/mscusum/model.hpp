#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "mscusum/rng.hpp"
#include "mscusum/subsets.hpp"

namespace mscusum {

inline constexpr std::uint64_t kNeverChanges = std::numeric_limits<std::uint64_t>::max();

/// Change point nu and affected subset A. Observations X_t with t > nu follow
/// the post-change law in the sensors of A.
struct ChangeScenario {
  std::uint64_t change_point = kNeverChanges;
  Subset affected = 0;

  static ChangeScenario pre_change() { return {}; }
  static ChangeScenario immediate(Subset a) { return {0, a}; }
  bool changes() const { return change_point != kNeverChanges; }
};

/// Evaluates l_t^A for a fixed list of subsets, one observation at a time.
class IncrementEvaluator {
 public:
  virtual ~IncrementEvaluator() = default;
  virtual void evaluate(std::span<const double> x, std::span<double> out) const = 0;
};

/**
 * Statistical environment of K streams: the log-likelihood-ratio increment of
 * any subset, its KL number, and sampling under P_inf / P_nu^A.
 *
 * Implementations are immutable after construction and safe to share across
 * threads.
 */
class SensorModel {
 public:
  virtual ~SensorModel() = default;

  virtual std::size_t sensors() const = 0;
  /// True when l^A decomposes as a sum of per-sensor increments.
  virtual bool independent() const = 0;

  virtual double llr(std::span<const double> x, Subset a) const = 0;
  /// Per-sensor increments l^k; only for independent models.
  virtual void sensor_llr(std::span<const double> x, std::span<double> out) const;
  virtual double kl(Subset a) const = 0;

  /// One observation; sensors in `post_change` follow their post-change law.
  virtual void sample(Subset post_change, Rng& rng, StandardNormal& normal,
                      std::span<double> out) const = 0;

  virtual std::unique_ptr<IncrementEvaluator> increments(std::vector<Subset> subsets) const;

 protected:
  void check_subset(Subset a) const;
};

/// Independent unit-variance Gaussian sensors, N(0,1) -> N(theta_k,1).
class GaussianModel final : public SensorModel {
 public:
  explicit GaussianModel(std::vector<double> shifts);
  static GaussianModel homogeneous(std::size_t sensors, double theta);

  std::size_t sensors() const override { return shifts_.size(); }
  bool independent() const override { return true; }
  double llr(std::span<const double> x, Subset a) const override;
  void sensor_llr(std::span<const double> x, std::span<double> out) const override;
  double kl(Subset a) const override;
  void sample(Subset post_change, Rng& rng, StandardNormal& normal,
              std::span<double> out) const override;
  std::unique_ptr<IncrementEvaluator> increments(std::vector<Subset> subsets) const override;

  const std::vector<double>& shifts() const { return shifts_; }

 private:
  std::vector<double> shifts_;
};

/**
 * Jointly Gaussian streams: X ~ N(0, Sigma) before the change and
 * N(mu_A, Sigma) after it, where mu_A keeps mu_k for k in A and zeros the
 * rest. l^A = theta_A . x - theta_A . mu_A / 2 with theta_A = Sigma^-1 mu_A.
 */
class CorrelatedGaussianModel final : public SensorModel {
 public:
  /// `covariance` is row-major K x K.
  CorrelatedGaussianModel(std::vector<double> covariance, std::vector<double> shifts);

  std::size_t sensors() const override { return shifts_.size(); }
  bool independent() const override { return diagonal_; }
  double llr(std::span<const double> x, Subset a) const override;
  void sensor_llr(std::span<const double> x, std::span<double> out) const override;
  double kl(Subset a) const override;
  void sample(Subset post_change, Rng& rng, StandardNormal& normal,
              std::span<double> out) const override;
  std::unique_ptr<IncrementEvaluator> increments(std::vector<Subset> subsets) const override;

  /// theta_A = Sigma^-1 mu_A through the stored Cholesky factor.
  std::vector<double> natural_shift(Subset a) const;

  const std::vector<double>& covariance() const { return covariance_; }
  const std::vector<double>& shifts() const { return shifts_; }

 private:
  std::vector<double> covariance_;
  std::vector<double> shifts_;
  struct Factor;
  std::shared_ptr<const Factor> factor_;
  bool diagonal_ = false;
};

/**
 * Streams observations of one sample path. Deterministic given (model,
 * scenario, rng state); time starts at t = 1.
 */
class PathSampler {
 public:
  PathSampler(const SensorModel& model, ChangeScenario scenario, Rng rng);

  void next(std::span<double> out);
  std::uint64_t time() const { return t_; }
  const SensorModel& model() const { return *model_; }

 private:
  const SensorModel* model_;
  ChangeScenario scenario_;
  Rng rng_;
  StandardNormal normal_;
  std::uint64_t t_ = 0;
};

/// Convenience: a whole path of `horizon` observations, row-major horizon x K.
std::vector<double> sample_path(const SensorModel& model, ChangeScenario scenario,
                                std::uint64_t seed, std::size_t horizon);

}  // namespace mscusum
