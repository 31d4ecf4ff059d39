#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "antibunch/pulsed_analysis.hpp"

using namespace antibunch;

namespace {

// Comb of two-sided exponential peaks, rate in 1/ns, sampled at bin centers.
CoincidenceHistogram comb_histogram(double period_ps, double decay_ns_inv, double side, double central,
                                    std::int64_t window = 120'000, std::uint64_t seed = 0) {
  CoincidenceHistogram h;
  const std::int64_t bin = 100;
  for (std::int64_t e = -window; e <= window; e += bin) h.bin_edges.push_back(e);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i + 1 < h.bin_edges.size(); ++i) {
    const double t = h.center(i);
    double mu = 0.0;
    for (int k = -20; k <= 20; ++k) {
      mu += (k == 0 ? central : side) * std::exp(-decay_ns_inv * std::abs(t - k * period_ps) * 1e-3);
    }
    std::uint64_t c;
    if (seed == 0) {
      c = static_cast<std::uint64_t>(std::llround(mu));
    } else {
      std::poisson_distribution<long> p(mu);
      c = static_cast<std::uint64_t>(p(rng));
    }
    h.counts.push_back(c);
    h.total_pairs += c;
  }
  h.duration = 1'000'000'000'000;
  h.rate_a = h.rate_b = 1e5;
  return h;
}

}  // namespace

TEST(Pulsed, EqualPeaksGiveOne) {
  const auto r = pulsed_peak_analysis(comb_histogram(10'000, 1.0, 1e5, 1e5), 10'000);
  EXPECT_NEAR(r.g2_zero.value, 1.0, 1e-4);
  EXPECT_NEAR(r.decay_rate.value, 1.0, 1e-3);
  EXPECT_FALSE(r.overlapping);
  EXPECT_FALSE(r.degenerate);
  EXPECT_TRUE(r.fit.converged);
}

TEST(Pulsed, HalfCentralPeakGivesHalf) {
  const auto r = pulsed_peak_analysis(comb_histogram(10'000, 1.0, 1e5, 5e4), 10'000);
  EXPECT_NEAR(r.g2_zero.value, 0.5, 1e-4);
  EXPECT_NEAR(r.peak_areas.at(0).value / r.peak_areas.at(3).value, 0.5, 1e-4);
}

TEST(Pulsed, NoisyPeaksAgreeWithWindowSums) {
  // Model-free check: with well separated peaks, summing counts over +-P/2
  // around each peak gives the same ratio up to Poisson noise.
  const double period = 10'000;
  int inside = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto h = comb_histogram(period, 1.2, 400.0, 160.0, 120'000, seed);
    const auto r = pulsed_peak_analysis(h, period);
    auto window_sum = [&](int k) {
      double s = 0.0;
      for (std::size_t i = 0; i < h.size(); ++i) {
        if (std::abs(h.center(i) - k * period) < 0.5 * period) s += static_cast<double>(h.counts[i]);
      }
      return s;
    };
    double side = 0.0;
    for (int k = 2; k <= 10; ++k) side += window_sum(k) + window_sum(-k);
    side /= 18.0;
    const double ratio = window_sum(0) / side;
    EXPECT_NEAR(r.g2_zero.value, 0.4, 5.0 * r.g2_zero.sigma);
    inside += std::abs(r.g2_zero.value - ratio) < 3.0 * r.g2_zero.sigma;
  }
  EXPECT_GE(inside, 18);
}

TEST(Pulsed, OverlapFlag) {
  // Valley between peaks of rate 0.3/ns and 10 ns spacing sits near
  // 2 exp(-1.5) of the peak height.
  const auto r = pulsed_peak_analysis(comb_histogram(10'000, 0.3, 1e5, 1e5), 10'000);
  EXPECT_TRUE(r.overlapping);
  EXPECT_GT(r.valley_ratio, kOverlapValleyThreshold);
  EXPECT_NEAR(r.g2_zero.value, 1.0, 1e-3);
}

TEST(Pulsed, Preconditions) {
  const auto h = comb_histogram(10'000, 1.0, 1e5, 1e5, 50'000);
  EXPECT_THROW(pulsed_peak_analysis(h, 10'000), InvalidArgument);
  EXPECT_THROW(pulsed_peak_analysis(h, 10'000, NormalizationPeaks{0, 3}), InvalidArgument);
  EXPECT_THROW(pulsed_peak_analysis(h, 10'000, NormalizationPeaks{4, 3}), InvalidArgument);
  EXPECT_THROW(pulsed_peak_analysis(h, 200), InvalidArgument);
  EXPECT_NO_THROW(pulsed_peak_analysis(h, 10'000, NormalizationPeaks{2, 4}));
}
