#include "mscusum/model.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mscusum/errors.hpp"

namespace mscusum {

void SensorModel::check_subset(Subset a) const {
  if (a == 0) throw ContractError("subset must be nonempty");
  if ((a & ~full_set(sensors())) != 0) {
    throw ContractError("subset " + format_subset(a) + " exceeds the sensor count");
  }
}

void SensorModel::sensor_llr(std::span<const double>, std::span<double>) const {
  throw ContractError("per-sensor increments require independent sensors");
}

namespace {

class GenericIncrements final : public IncrementEvaluator {
 public:
  GenericIncrements(const SensorModel& model, std::vector<Subset> subsets)
      : model_(&model), subsets_(std::move(subsets)) {}

  void evaluate(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t i = 0; i < subsets_.size(); ++i) out[i] = model_->llr(x, subsets_[i]);
  }

 private:
  const SensorModel* model_;
  std::vector<Subset> subsets_;
};

// l^A = w_A . x - c_A; rows stored densely.
class LinearIncrements final : public IncrementEvaluator {
 public:
  LinearIncrements(std::size_t sensors, std::vector<double> weights, std::vector<double> offsets)
      : sensors_(sensors), weights_(std::move(weights)), offsets_(std::move(offsets)) {}

  void evaluate(std::span<const double> x, std::span<double> out) const override {
    const double* w = weights_.data();
    for (std::size_t i = 0; i < offsets_.size(); ++i, w += sensors_) {
      double acc = -offsets_[i];
      for (std::size_t k = 0; k < sensors_; ++k) acc += w[k] * x[k];
      out[i] = acc;
    }
  }

 private:
  std::size_t sensors_;
  std::vector<double> weights_;
  std::vector<double> offsets_;
};

}  // namespace

std::unique_ptr<IncrementEvaluator> SensorModel::increments(std::vector<Subset> subsets) const {
  for (Subset a : subsets) check_subset(a);
  return std::make_unique<GenericIncrements>(*this, std::move(subsets));
}

// ---------------------------------------------------------------------------

GaussianModel::GaussianModel(std::vector<double> shifts) : shifts_(std::move(shifts)) {
  if (shifts_.empty() || shifts_.size() > kMaxSensors) {
    throw ModelError("sensor count must be in [1, 25]");
  }
  for (double th : shifts_) {
    if (th == 0.0 || !std::isfinite(th)) {
      throw ModelError("post-change shifts must be nonzero and finite");
    }
  }
}

GaussianModel GaussianModel::homogeneous(std::size_t sensors, double theta) {
  return GaussianModel(std::vector<double>(sensors, theta));
}

double GaussianModel::llr(std::span<const double> x, Subset a) const {
  check_subset(a);
  double acc = 0.0;
  for (std::size_t k = 0; k < shifts_.size(); ++k) {
    if (contains(a, static_cast<int>(k))) {
      acc += shifts_[k] * x[k] - 0.5 * shifts_[k] * shifts_[k];
    }
  }
  return acc;
}

void GaussianModel::sensor_llr(std::span<const double> x, std::span<double> out) const {
  for (std::size_t k = 0; k < shifts_.size(); ++k) {
    out[k] = shifts_[k] * x[k] - 0.5 * shifts_[k] * shifts_[k];
  }
}

double GaussianModel::kl(Subset a) const {
  check_subset(a);
  double acc = 0.0;
  for (std::size_t k = 0; k < shifts_.size(); ++k) {
    if (contains(a, static_cast<int>(k))) acc += 0.5 * shifts_[k] * shifts_[k];
  }
  return acc;
}

void GaussianModel::sample(Subset post_change, Rng& rng, StandardNormal& normal,
                           std::span<double> out) const {
  for (std::size_t k = 0; k < shifts_.size(); ++k) {
    out[k] = normal(rng);
    if (contains(post_change, static_cast<int>(k))) out[k] += shifts_[k];
  }
}

std::unique_ptr<IncrementEvaluator> GaussianModel::increments(std::vector<Subset> subsets) const {
  const std::size_t k = sensors();
  std::vector<double> weights(subsets.size() * k, 0.0);
  std::vector<double> offsets(subsets.size(), 0.0);
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    check_subset(subsets[i]);
    for (std::size_t j = 0; j < k; ++j) {
      if (contains(subsets[i], static_cast<int>(j))) {
        weights[i * k + j] = shifts_[j];
        offsets[i] += 0.5 * shifts_[j] * shifts_[j];
      }
    }
  }
  return std::make_unique<LinearIncrements>(k, std::move(weights), std::move(offsets));
}

// ---------------------------------------------------------------------------

struct CorrelatedGaussianModel::Factor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::MatrixXd lower;
};

CorrelatedGaussianModel::CorrelatedGaussianModel(std::vector<double> covariance,
                                                 std::vector<double> shifts)
    : covariance_(std::move(covariance)), shifts_(std::move(shifts)) {
  const std::size_t k = shifts_.size();
  if (k == 0 || k > kMaxSensors) throw ModelError("sensor count must be in [1, 25]");
  if (covariance_.size() != k * k) throw ModelError("covariance must be K x K");
  for (double m : shifts_) {
    if (m == 0.0 || !std::isfinite(m)) throw ModelError("post-change shifts must be nonzero");
  }
  Eigen::MatrixXd sigma(k, k);
  diagonal_ = true;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double v = covariance_[i * k + j];
      if (!std::isfinite(v)) throw ModelError("covariance entries must be finite");
      if (v != covariance_[j * k + i]) throw ModelError("covariance must be symmetric");
      if (i != j && v != 0.0) diagonal_ = false;
      sigma(i, j) = v;
    }
  }
  auto factor = std::make_shared<Factor>();
  factor->llt.compute(sigma);
  if (factor->llt.info() != Eigen::Success) {
    throw ModelError("covariance is not positive definite");
  }
  factor->lower = factor->llt.matrixL();
  for (std::size_t i = 0; i < k; ++i) {
    if (!(factor->lower(i, i) > 0.0)) throw ModelError("covariance is not positive definite");
  }
  factor_ = std::move(factor);
}

std::vector<double> CorrelatedGaussianModel::natural_shift(Subset a) const {
  check_subset(a);
  const std::size_t k = sensors();
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(k);
  for (std::size_t j = 0; j < k; ++j) {
    if (contains(a, static_cast<int>(j))) mu(j) = shifts_[j];
  }
  const Eigen::VectorXd theta = factor_->llt.solve(mu);
  return {theta.data(), theta.data() + k};
}

double CorrelatedGaussianModel::llr(std::span<const double> x, Subset a) const {
  const auto theta = natural_shift(a);
  double acc = 0.0;
  for (std::size_t j = 0; j < sensors(); ++j) {
    acc += theta[j] * x[j];
    if (contains(a, static_cast<int>(j))) acc -= 0.5 * theta[j] * shifts_[j];
  }
  return acc;
}

void CorrelatedGaussianModel::sensor_llr(std::span<const double> x, std::span<double> out) const {
  if (!diagonal_) SensorModel::sensor_llr(x, out);
  const std::size_t k = sensors();
  for (std::size_t j = 0; j < k; ++j) {
    const double var = covariance_[j * k + j];
    out[j] = (shifts_[j] * x[j] - 0.5 * shifts_[j] * shifts_[j]) / var;
  }
}

double CorrelatedGaussianModel::kl(Subset a) const {
  const auto theta = natural_shift(a);
  double acc = 0.0;
  for (std::size_t j = 0; j < sensors(); ++j) {
    if (contains(a, static_cast<int>(j))) acc += theta[j] * shifts_[j];
  }
  acc *= 0.5;
  if (!(acc > 0.0) || !std::isfinite(acc)) {
    throw ModelError("KL number of " + format_subset(a) + " is not positive and finite");
  }
  return acc;
}

void CorrelatedGaussianModel::sample(Subset post_change, Rng& rng, StandardNormal& normal,
                                     std::span<double> out) const {
  const std::size_t k = sensors();
  double z[kMaxSensors];
  for (std::size_t j = 0; j < k; ++j) z[j] = normal(rng);
  const auto& lower = factor_->lower;
  for (std::size_t i = 0; i < k; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= i; ++j) acc += lower(i, j) * z[j];
    if (contains(post_change, static_cast<int>(i))) acc += shifts_[i];
    out[i] = acc;
  }
}

std::unique_ptr<IncrementEvaluator> CorrelatedGaussianModel::increments(
    std::vector<Subset> subsets) const {
  const std::size_t k = sensors();
  std::vector<double> weights(subsets.size() * k, 0.0);
  std::vector<double> offsets(subsets.size(), 0.0);
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    const auto theta = natural_shift(subsets[i]);
    for (std::size_t j = 0; j < k; ++j) {
      weights[i * k + j] = theta[j];
      if (contains(subsets[i], static_cast<int>(j))) offsets[i] += 0.5 * theta[j] * shifts_[j];
    }
  }
  return std::make_unique<LinearIncrements>(k, std::move(weights), std::move(offsets));
}

// ---------------------------------------------------------------------------

PathSampler::PathSampler(const SensorModel& model, ChangeScenario scenario, Rng rng)
    : model_(&model), scenario_(scenario), rng_(std::move(rng)) {
  if (scenario_.changes()) {
    if (scenario_.affected == 0) throw ContractError("affected subset must be nonempty");
    if ((scenario_.affected & ~full_set(model.sensors())) != 0) {
      throw ContractError("affected subset exceeds the sensor count");
    }
  }
}

void PathSampler::next(std::span<double> out) {
  ++t_;
  const Subset post = (scenario_.changes() && t_ > scenario_.change_point) ? scenario_.affected : 0;
  model_->sample(post, rng_, normal_, out);
}

std::vector<double> sample_path(const SensorModel& model, ChangeScenario scenario,
                                std::uint64_t seed, std::size_t horizon) {
  if (horizon == 0) throw ContractError("horizon must be at least 1");
  const std::size_t k = model.sensors();
  std::vector<double> path(horizon * k);
  PathSampler sampler(model, scenario, stream_rng(seed, 0));
  for (std::size_t t = 0; t < horizon; ++t) {
    sampler.next(std::span<double>(path.data() + t * k, k));
  }
  return path;
}

}  // namespace mscusum
