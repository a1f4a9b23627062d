#include "mscusum/windows.hpp"

#include <algorithm>

#include "mscusum/errors.hpp"

namespace mscusum {

RegenerationTracker::RegenerationTracker(std::size_t dimension, WindowKind kind)
    : dim_(dimension), kind_(kind) {
  if (dimension == 0) throw ContractError("window dimension must be positive");
  reset();
}

void RegenerationTracker::reset() {
  buffer_.assign(dim_, 0.0);
  running_min_.assign(dim_, 0.0);
  stored_ = 1;
  t_ = 0;
  anchor_ = 0;
  anchors_ = 1;
}

void RegenerationTracker::collapse() {
  std::fill(running_min_.begin(), running_min_.end(), 0.0);
  buffer_.assign(dim_, 0.0);
  stored_ = 1;
  anchor_ = t_;
  ++anchors_;
}

bool RegenerationTracker::advance(std::span<const double> increments) {
  if (increments.size() != dim_) throw ContractError("increment dimension mismatch");
  ++t_;
  const std::size_t prev = (stored_ - 1) * dim_;
  buffer_.resize((stored_ + 1) * dim_);
  double* z = buffer_.data() + stored_ * dim_;
  bool due = true;
  for (std::size_t d = 0; d < dim_; ++d) {
    z[d] = buffer_[prev + d] + increments[d];
    if (kind_ == WindowKind::regeneration) {
      // Ties count: Z_t equal to the running minimum is still at the minimum.
      if (z[d] <= running_min_[d]) {
        running_min_[d] = z[d];
      } else {
        due = false;
      }
    } else if (!(z[d] < 0.0)) {
      due = false;
    }
  }
  ++stored_;
  if (due) collapse();
  return due;
}

}  // namespace mscusum
