#include "mscusum/subsets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mscusum/errors.hpp"
#include "mscusum/numeric.hpp"

namespace mscusum {

Subset make_subset(const std::vector<int>& one_based) {
  Subset a = 0;
  for (int k : one_based) {
    if (k < 1 || k > static_cast<int>(kMaxSensors)) {
      throw ContractError("sensor index out of range: " + std::to_string(k));
    }
    a |= Subset{1} << (k - 1);
  }
  return a;
}

std::vector<int> subset_members(Subset a) {
  std::vector<int> out;
  for (int k = 0; k < 32; ++k) {
    if (contains(a, k)) out.push_back(k + 1);
  }
  return out;
}

std::string format_subset(Subset a) {
  std::string s = "{";
  bool first = true;
  for (int k : subset_members(a)) {
    if (!first) s += ',';
    s += std::to_string(k);
    first = false;
  }
  return s + "}";
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

namespace {

void check_sensors(std::size_t sensors) {
  if (sensors == 0 || sensors > kMaxSensors) {
    throw ContractError("sensor count must be in [1, 25]");
  }
}

// All subsets of {0..k-1} of size `size`, lexicographic.
void append_combinations(std::size_t k, int size, std::vector<Subset>& out) {
  std::vector<int> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  const int n = static_cast<int>(k);
  while (true) {
    Subset a = 0;
    for (int i : idx) a |= Subset{1} << i;
    out.push_back(a);
    int i = size - 1;
    while (i >= 0 && idx[i] == n - size + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
  }
}

void check_members(std::size_t sensors, const std::vector<Subset>& members) {
  if (members.empty()) throw ContractError("explicit class has no members");
  for (Subset a : members) {
    if (a == 0) throw ContractError("class members must be nonempty");
    if ((a & ~full_set(sensors)) != 0) {
      throw ContractError("class member outside the sensor range");
    }
  }
}

}  // namespace

SubsetClass SubsetClass::exactly(std::size_t sensors, int l, double p) {
  check_sensors(sensors);
  if (l < 1 || l > static_cast<int>(sensors)) {
    throw ContractError("L must be in [1, K]");
  }
  if (!(p > 0.0) || !std::isfinite(p)) throw ContractError("p must be positive");
  SubsetClass c;
  c.kind_ = ClassKind::exactly;
  c.sensors_ = sensors;
  c.bound_ = l;
  c.p_ = p;
  return c;
}

SubsetClass SubsetClass::at_most(std::size_t sensors, int l, double p) {
  SubsetClass c = exactly(sensors, l, p);
  c.kind_ = ClassKind::at_most;
  return c;
}

SubsetClass SubsetClass::explicit_list(std::size_t sensors,
                                       std::vector<Subset> members,
                                       std::vector<double> weights) {
  check_sensors(sensors);
  check_members(sensors, members);
  if (!weights.empty() && weights.size() != members.size()) {
    throw ContractError("one weight per member required");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ContractError("weights must be positive");
  }
  if (weights.empty()) weights.assign(members.size(), 1.0);
  SubsetClass c;
  c.kind_ = ClassKind::explicit_list;
  c.sensors_ = sensors;
  c.bound_ = 0;
  for (Subset a : members) c.bound_ = std::max(c.bound_, subset_size(a));
  c.members_ = std::move(members);
  c.raw_weights_ = std::move(weights);
  return c;
}

SubsetClass SubsetClass::explicit_product(std::size_t sensors,
                                          std::vector<Subset> members,
                                          const std::vector<double>& sensor_weights) {
  if (sensor_weights.size() != sensors) {
    throw ContractError("one weight per sensor required");
  }
  std::vector<double> weights;
  weights.reserve(members.size());
  for (Subset a : members) {
    double w = 1.0;
    for (int k : subset_members(a)) {
      if (k > static_cast<int>(sensors)) break;
      w *= sensor_weights[k - 1];
    }
    weights.push_back(w);
  }
  return explicit_list(sensors, std::move(members), std::move(weights));
}

double SubsetClass::cardinality() const {
  const int n = static_cast<int>(sensors_);
  switch (kind_) {
    case ClassKind::exactly:
      return binomial(n, bound_);
    case ClassKind::at_most: {
      double s = 0.0;
      for (int j = 1; j <= bound_; ++j) s += binomial(n, j);
      return s;
    }
    case ClassKind::explicit_list:
      return static_cast<double>(members_.size());
  }
  return 0.0;
}

double SubsetClass::log_normalizer() const {
  const int n = static_cast<int>(sensors_);
  const double lp = std::log(p_);
  switch (kind_) {
    case ClassKind::exactly:
      return std::log(binomial(n, bound_)) + bound_ * lp;
    case ClassKind::at_most: {
      double acc = kNegInf;
      for (int j = 1; j <= bound_; ++j) {
        acc = log_add_exp(acc, std::log(binomial(n, j)) + j * lp);
      }
      return acc;
    }
    case ClassKind::explicit_list: {
      double acc = kNegInf;
      for (double w : raw_weights_) acc = log_add_exp(acc, std::log(w));
      return acc;
    }
  }
  return 0.0;
}

std::vector<Subset> SubsetClass::enumerate() const {
  if (cardinality() > static_cast<double>(kMaxClassSize)) {
    throw CapacityError("subset class has " + std::to_string(cardinality()) +
                        " members; enumeration is capped at 2^20, use a "
                        "factorized detector instead");
  }
  std::vector<Subset> out;
  switch (kind_) {
    case ClassKind::exactly:
      append_combinations(sensors_, bound_, out);
      break;
    case ClassKind::at_most:
      for (int j = 1; j <= bound_; ++j) append_combinations(sensors_, j, out);
      break;
    case ClassKind::explicit_list:
      out = members_;
      break;
  }
  return out;
}

std::vector<double> SubsetClass::log_weights() const {
  const double norm = log_normalizer();
  std::vector<double> out;
  if (kind_ == ClassKind::explicit_list) {
    out.reserve(raw_weights_.size());
    for (double w : raw_weights_) out.push_back(std::log(w) - norm);
    return out;
  }
  const double lp = std::log(p_);
  for (Subset a : enumerate()) out.push_back(subset_size(a) * lp - norm);
  return out;
}

}  // namespace mscusum
