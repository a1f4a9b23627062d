#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mscusum {

/// A set of sensors encoded as a bitmask; bit k is sensor k+1.
using Subset = std::uint32_t;

inline constexpr std::size_t kMaxSensors = 25;
/// Brute-force rules refuse classes with more members than this.
inline constexpr std::size_t kMaxClassSize = std::size_t{1} << 20;

inline int subset_size(Subset a) { return __builtin_popcount(a); }
inline bool contains(Subset a, int sensor) { return (a >> sensor) & 1u; }
inline Subset full_set(std::size_t k) {
  return k >= 32 ? ~Subset{0} : (Subset{1} << k) - 1u;
}

/// Builds a subset from 1-based sensor indices.
Subset make_subset(const std::vector<int>& one_based);
/// 1-based sensor indices in increasing order.
std::vector<int> subset_members(Subset a);
/// "{1,2}" style rendering used in reports.
std::string format_subset(Subset a);

double binomial(int n, int k);

enum class ClassKind { exactly, at_most, explicit_list };

/**
 * The class P of candidate affected subsets together with its weights p_A.
 *
 * For `exactly` and `at_most` the weights are p_A proportional to p^|A|.
 * Explicit lists take either one weight per subset or one weight per sensor,
 * in which case p_A is proportional to the product of the member weights.
 * Weights are always normalized to sum to one.
 */
class SubsetClass {
 public:
  static SubsetClass exactly(std::size_t sensors, int l, double p = 1.0);
  static SubsetClass at_most(std::size_t sensors, int l, double p = 1.0);
  static SubsetClass explicit_list(std::size_t sensors,
                                   std::vector<Subset> members,
                                   std::vector<double> weights = {});
  static SubsetClass explicit_product(std::size_t sensors,
                                      std::vector<Subset> members,
                                      const std::vector<double>& sensor_weights);

  ClassKind kind() const { return kind_; }
  std::size_t sensors() const { return sensors_; }
  int bound() const { return bound_; }
  double p() const { return p_; }

  /// |P| without enumerating.
  double cardinality() const;
  /// log of the normalizing constant sum_B p^|B| (only for exactly/at_most).
  double log_normalizer() const;

  /// Members in deterministic order: by size, then lexicographic.
  /// Throws CapacityError when the class exceeds kMaxClassSize.
  std::vector<Subset> enumerate() const;
  /// log p_A aligned with enumerate().
  std::vector<double> log_weights() const;

 private:
  SubsetClass() = default;

  ClassKind kind_ = ClassKind::at_most;
  std::size_t sensors_ = 0;
  int bound_ = 0;
  double p_ = 1.0;
  std::vector<Subset> members_;
  std::vector<double> raw_weights_;
};

}  // namespace mscusum
