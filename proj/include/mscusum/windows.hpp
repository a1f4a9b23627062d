#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mscusum/numeric.hpp"

namespace mscusum {

enum class WindowKind {
  /// Regeneration times r_n: every coordinate sits at its running minimum.
  /// Window-restricted maxima equal the full-history maxima.
  regeneration,
  /// sigma_n: every coordinate strictly below its value at the last anchor.
  /// Cheaper, but the resulting rules differ from the unrestricted ones.
  sigma,
};

/**
 * Adaptive window over D cumulative sums Z^1..Z^D (per sensor or per subset).
 *
 * The tracker stores Z_s for every s in [anchor, t], rebased so that the
 * anchor is the origin. Callers feed increments; Z_0 = 0 and t = 0 is always
 * an anchor.
 */
class RegenerationTracker {
 public:
  RegenerationTracker(std::size_t dimension, WindowKind kind);

  void reset();
  /// Appends Z_t = Z_{t-1} + increments and advances the anchor if due.
  /// Returns true when t became an anchor.
  bool advance(std::span<const double> increments);

  std::size_t dimension() const { return dim_; }
  WindowKind kind() const { return kind_; }
  std::uint64_t time() const { return t_; }
  std::uint64_t anchor() const { return anchor_; }
  std::uint64_t anchors_seen() const { return anchors_; }
  /// Number of stored Z-vectors, t - anchor + 1.
  std::size_t size() const { return stored_; }

  /// Z_s (rebased) for the i-th stored time, i = 0 being the anchor.
  std::span<const double> entry(std::size_t i) const {
    return {buffer_.data() + i * dim_, dim_};
  }
  std::span<const double> current() const { return entry(stored_ - 1); }

 private:
  void collapse();

  std::size_t dim_;
  WindowKind kind_;
  std::vector<double> buffer_;
  std::vector<double> running_min_;
  std::size_t stored_ = 0;
  std::uint64_t t_ = 0;
  std::uint64_t anchor_ = 0;
  std::uint64_t anchors_ = 1;
};

/**
 * max over s in [anchor, t] of g((Z_t - Z_s)) for g non-decreasing in each
 * argument. `g` receives a span of D differences. The last entry (s = t)
 * contributes g(0).
 */
template <class G>
double windowed_max(const RegenerationTracker& tracker, G&& g) {
  const std::size_t dim = tracker.dimension();
  const auto now = tracker.current();
  thread_local std::vector<double> diff;
  diff.resize(dim);
  double best = kNegInf;
  for (std::size_t i = 0; i < tracker.size(); ++i) {
    const auto zs = tracker.entry(i);
    for (std::size_t d = 0; d < dim; ++d) diff[d] = now[d] - zs[d];
    const double v = g(std::span<const double>(diff.data(), dim));
    if (v > best) best = v;
  }
  return best;
}

}  // namespace mscusum
