#include <doctest.h>

#include <cmath>

#include "mscusum/detectors.hpp"
#include "mscusum/rng.hpp"
#include "mscusum/windows.hpp"
#include "reference.hpp"

using namespace mscusum;

namespace {

// Feeds cumulative values (as increments) and returns the anchor after each step.
std::vector<std::uint64_t> anchors(WindowKind kind, const std::vector<double>& z) {
  RegenerationTracker tr(1, kind);
  std::vector<std::uint64_t> out;
  double prev = 0.0;
  for (double v : z) {
    const double inc = v - prev;
    prev = v;
    tr.advance({&inc, 1});
    out.push_back(tr.anchor());
  }
  return out;
}

}  // namespace

TEST_CASE("regeneration anchors") {
  RegenerationTracker tr(2, WindowKind::regeneration);
  CHECK(tr.anchor() == 0);
  CHECK(tr.size() == 1);
  CHECK(anchors(WindowKind::regeneration, {-1, 0.5, -2}) == std::vector<std::uint64_t>{1, 1, 3});

  // Decreasing in every coordinate: each t is an anchor and the window stays at one entry.
  for (int t = 0; t < 10; ++t) {
    const double inc[] = {-0.1, -0.3};
    CHECK(tr.advance(inc));
    CHECK(tr.size() == 1);
  }
  // Ties with the running minimum count.
  CHECK(anchors(WindowKind::regeneration, {-1, -1}) == std::vector<std::uint64_t>{1, 2});
}

TEST_CASE("sigma anchors") {
  CHECK(anchors(WindowKind::sigma, {-1, -2, -1.5}) == std::vector<std::uint64_t>{1, 2, 2});
  // Strictly below the anchor value, not the running minimum.
  CHECK(anchors(WindowKind::sigma, {-1, -1}) == std::vector<std::uint64_t>{1, 1});
  RegenerationTracker tr(2, WindowKind::sigma);
  for (int t = 0; t < 20; ++t) {
    const double inc[] = {-1.0, 0.1};
    tr.advance(inc);
  }
  CHECK(tr.anchor() == 0);
  CHECK(tr.size() == 21);
}

TEST_CASE("window memory spans anchor to t") {
  const auto m = GaussianModel::homogeneous(3, 1.0);
  const auto path = sample_path(m, ChangeScenario::pre_change(), 2, 2000);
  RegenerationTracker tr(3, WindowKind::regeneration);
  std::vector<double> l(3);
  for (std::size_t t = 0; t < 2000; ++t) {
    m.sensor_llr({path.data() + 3 * t, 3}, l);
    const bool fresh = tr.advance(l);
    CHECK(tr.size() == tr.time() - tr.anchor() + 1);
    CHECK(fresh == (tr.anchor() == tr.time()));
    // Rebased: the anchor entry is the origin.
    for (double v : tr.entry(0)) CHECK(v == 0.0);
  }
}

TEST_CASE("windowed maximum equals the full-history maximum") {
  const auto m = GaussianModel::homogeneous(2, 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto path = sample_path(m, ChangeScenario{seed * 5, make_subset({1})}, seed, 200);
    const auto z = ref::per_sensor(m, path);
    const auto shat = ref::shat(z, 0.5);
    const auto members = SubsetClass::at_most(2, 2).enumerate();
    const auto logw = SubsetClass::at_most(2, 2).log_weights();
    const auto sbar = ref::sbar(ref::cumulative(m, path, members), logw);

    RegenerationTracker tr(2, WindowKind::regeneration);
    std::vector<double> l(2);
    for (std::size_t t = 0; t < 200; ++t) {
      m.sensor_llr({path.data() + 2 * t, 2}, l);
      tr.advance(l);
      const double ws = windowed_max(tr, [](std::span<const double> d) {
        double v = 0.0;
        for (double x : d) v += std::log(0.5 + 0.5 * std::exp(x));
        return v;
      });
      const double wb = windowed_max(tr, [&](std::span<const double> d) {
        const double terms[] = {logw[0] + d[0], logw[1] + d[1], logw[2] + d[0] + d[1]};
        return log_sum_exp(terms);
      });
      CHECK(ws == doctest::Approx(shat[t]).epsilon(1e-12));
      CHECK(wb == doctest::Approx(sbar[t]).epsilon(1e-12));
    }
    // Window of one entry: g at the zero vector.
    RegenerationTracker fresh(2, WindowKind::regeneration);
    CHECK(windowed_max(fresh, [](std::span<const double> d) { return d[0] + d[1] + 1.0; }) == 1.0);
  }
}

TEST_CASE("regeneration gaps under P_inf") {
  const auto m = GaussianModel::homogeneous(5, 1.0);
  PathSampler sampler(m, ChangeScenario::pre_change(), stream_rng(3, 0));
  RegenerationTracker r(5, WindowKind::regeneration);
  RegenerationTracker s(5, WindowKind::sigma);
  std::vector<double> gaps;
  std::uint64_t last = 0;
  double r_size = 0.0, s_size = 0.0;
  std::vector<double> x(5), l(5);
  const std::size_t steps = 400000;
  for (std::size_t t = 1; t <= steps; ++t) {
    sampler.next(x);
    m.sensor_llr(x, l);
    if (r.advance(l)) {
      gaps.push_back(static_cast<double>(t - last));
      last = t;
    }
    s.advance(l);
    r_size += r.size();
    s_size += s.size();
  }
  // Split-sample means agree (i.i.d. gaps).
  auto mean_se = [](auto b, auto e) {
    const double n = static_cast<double>(e - b);
    double sum = 0, sq = 0;
    for (auto it = b; it != e; ++it) {
      sum += *it;
      sq += *it * *it;
    }
    const double mean = sum / n;
    return std::pair{mean, std::sqrt((sq / n - mean * mean) / n)};
  };
  const auto half = gaps.begin() + gaps.size() / 2;
  const auto [m1, se1] = mean_se(gaps.begin(), half);
  const auto [m2, se2] = mean_se(half, gaps.end());
  CHECK(std::fabs(m1 - m2) < 3 * std::hypot(se1, se2));
  // The sigma window is smaller on average.
  CHECK(s_size / steps < r_size / steps);
}
