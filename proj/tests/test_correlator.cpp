#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "antibunch/correlator.hpp"
#include "oracles.hpp"

using namespace antibunch;
using oracle::stream;

namespace {

std::vector<std::uint64_t> random_tags(std::mt19937_64& rng, std::size_t n, std::uint64_t span, int parity) {
  std::uniform_int_distribution<std::uint64_t> u(0, span / 2);
  std::vector<std::uint64_t> t(n);
  for (auto& v : t) v = 2 * u(rng) + static_cast<std::uint64_t>(parity);
  std::sort(t.begin(), t.end());
  return t;
}

}  // namespace

TEST(CrossCorrelate, SingleCoincidentTagLandsRightOfZero) {
  const auto a = stream({5000}, 10'000), b = stream({5000}, 10'000, Channel::B);
  const auto h = cross_correlate(a, b, {100, 1000});
  ASSERT_EQ(h.size(), 20u);
  EXPECT_EQ(h.total_pairs, 1u);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_EQ(h.counts[i], h.bin_edges[i] == 0 ? 1u : 0u);
}

TEST(CrossCorrelate, BinLayout) {
  const CorrelationConfig cfg{300, 1000};
  EXPECT_EQ(cfg.bin_count(), 8u);  // 2 ceil(1000/300)
  const auto h = cross_correlate(stream({}, 10), stream({}, 10), cfg);
  EXPECT_EQ(h.bin_edges.front(), -1200);
  EXPECT_EQ(h.bin_edges.back(), 1200);
  EXPECT_EQ(h.bin_edges.size(), h.counts.size() + 1);
}

TEST(CrossCorrelate, MatchesBruteForceExactly) {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<std::size_t> size(0, 1000);
  std::uniform_int_distribution<std::int64_t> bin(1, 500), window(1, 20'000);
  for (int rep = 0; rep < 100; ++rep) {
    const std::uint64_t span = 1 + rng() % 2'000'000;
    const auto ta = random_tags(rng, size(rng), span, 0), tb = random_tags(rng, size(rng), span, rng() % 2);
    const std::int64_t bw = bin(rng), w = std::max(bw, window(rng));
    const auto h = cross_correlate(stream(ta, span + 2), stream(tb, span + 2, Channel::B), {bw, w});
    const auto oracle_counts = oracle::brute_force_pairs(ta, tb, bw, w);
    ASSERT_EQ(h.counts, oracle_counts) << "replicate " << rep;
    std::uint64_t total = 0;
    for (auto c : oracle_counts) total += c;
    // Brute force counts delays in [-W, W); bins past W are not part of the window.
    ASSERT_EQ(h.total_pairs, std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t{0}));
    ASSERT_EQ(h.total_pairs, total);
  }
}

TEST(CrossCorrelate, ChunkedAndThreadedAreBitIdentical) {
  std::mt19937_64 rng(77);
  const auto ta = random_tags(rng, 20'000, 50'000'000, 0), tb = random_tags(rng, 20'000, 50'000'000, 1);
  const auto a = stream(ta, 50'000'002), b = stream(tb, 50'000'002, Channel::B);
  for (auto mode : {CorrelationMode::full_cross_correlation, CorrelationMode::start_stop}) {
    const CorrelationConfig cfg{37, 9'000, mode};
    const auto ref = cross_correlate(a, b, cfg);
    for (std::size_t chunks : {2u, 3u, 16u, 1000u}) {
      for (std::size_t threads : {1u, 4u}) EXPECT_EQ(cross_correlate(a, b, cfg, chunks, threads), ref);
    }
  }
}

TEST(CrossCorrelate, SwapMirrorsExactly) {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    const auto ta = random_tags(rng, 800, 1'000'000, 0), tb = random_tags(rng, 800, 1'000'000, 1);
    const CorrelationConfig cfg{100, 10'000};
    const auto ab = cross_correlate(stream(ta, 1'000'002), stream(tb, 1'000'002, Channel::B), cfg);
    const auto ba = cross_correlate(stream(tb, 1'000'002), stream(ta, 1'000'002, Channel::B), cfg);
    std::vector<std::uint64_t> reversed(ba.counts.rbegin(), ba.counts.rend());
    EXPECT_EQ(ab.counts, reversed);
  }
}

TEST(CrossCorrelate, HalvingBinsReaggregatesExactly) {
  std::mt19937_64 rng(5);
  const auto ta = random_tags(rng, 3000, 10'000'000, 0), tb = random_tags(rng, 3000, 10'000'000, 1);
  const auto a = stream(ta, 10'000'002), b = stream(tb, 10'000'002, Channel::B);
  const auto coarse = cross_correlate(a, b, {200, 20'000});
  const auto fine = cross_correlate(a, b, {100, 20'000});
  ASSERT_EQ(fine.size(), 2 * coarse.size());
  for (std::size_t i = 0; i < coarse.size(); ++i) EXPECT_EQ(coarse.counts[i], fine.counts[2 * i] + fine.counts[2 * i + 1]);
}

TEST(CrossCorrelate, PoissonStreamsAreFlat) {
  const std::uint64_t duration = 2'000'000'000'000ULL;  // 2 s
  const double r1 = 2e5, r2 = 3e5;
  const auto a = stream(oracle::poisson_times(r1 * 1e-12, duration, 1), duration);
  const auto b = stream(oracle::poisson_times(r2 * 1e-12, duration, 2), duration, Channel::B);
  const auto h = cross_correlate(a, b, {1000, 50'000});
  const double expected = a.mean_rate() * b.mean_rate() * 2.0 * 1e-9;
  EXPECT_NEAR(expected, r1 * r2 * 2.0 * 1e-9, 0.02 * expected);
  int outside = 0;
  for (auto c : h.counts) outside += std::abs(static_cast<double>(c) - expected) > 3.0 * std::sqrt(expected);
  EXPECT_LE(outside, 2);  // 100 bins, 0.27 % two-sided each
  const auto n = normalize(h);
  double mean = 0.0;
  for (double g : n.g2) mean += g;
  EXPECT_NEAR(mean / n.g2.size(), 1.0, 3.0 / std::sqrt(expected * n.g2.size()));
}

TEST(CrossCorrelate, StartStopApproachesFullAtLowRate) {
  const std::uint64_t duration = 10'000'000'000'000ULL;  // 10 s at 1e5 /s -> 1e6 tags
  const auto a = stream(oracle::poisson_times(1e-7, duration, 11), duration);
  const auto b = stream(oracle::poisson_times(1e-7, duration, 12), duration, Channel::B);
  ASSERT_GT(a.size(), 990'000u);
  const CorrelationConfig full{10'000, 50'000};  // rate * W = 0.005
  CorrelationConfig ss = full;
  ss.mode = CorrelationMode::start_stop;
  const auto hf = cross_correlate(a, b, full), hs = cross_correlate(a, b, ss);
  for (std::size_t i = 0; i < hf.size(); ++i) {
    ASSERT_GT(hf.counts[i], 0u);
    EXPECT_LE(hs.counts[i], hf.counts[i]);
    EXPECT_LT(static_cast<double>(hf.counts[i] - hs.counts[i]) / static_cast<double>(hf.counts[i]), 0.02);
  }
}

TEST(CrossCorrelate, StartStopTakesOnlyFirstStop) {
  const auto a = stream({10'000}, 100'000), b = stream({9'000, 10'500, 11'000}, 100'000, Channel::B);
  const auto h = cross_correlate(a, b, {100, 5'000, CorrelationMode::start_stop});
  EXPECT_EQ(h.total_pairs, 1u);
  EXPECT_EQ(h.counts[(-1000 + 5000) / 100], 1u);
}

TEST(CrossCorrelate, Rejections) {
  EXPECT_THROW(cross_correlate(stream({5, 1}, 10), stream({}, 10), {}), InvalidArgument);
  EXPECT_THROW(cross_correlate(stream({}, 10), stream({}, 11), {}), InvalidArgument);
  EXPECT_THROW(cross_correlate(stream({}, 10), stream({}, 10), {100, 50}), InvalidArgument);
}

TEST(Normalize, EmptyBinUsesUpperLimit) {
  const auto a = stream({1000, 900'000}, 1'000'000), b = stream({1000}, 1'000'000, Channel::B);
  const auto h = cross_correlate(a, b, {100, 1000});
  const auto n = normalize(h);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h.counts[i] == 0) {
      EXPECT_EQ(n.g2[i], 0.0);
      EXPECT_DOUBLE_EQ(n.g2_err[i], 1.84 / n.normalization);
    } else {
      EXPECT_DOUBLE_EQ(n.g2_err[i], std::sqrt(static_cast<double>(h.counts[i])) / n.normalization);
    }
  }
  EXPECT_DOUBLE_EQ(n.normalization, 2e6 * 1e6 * 1e-6 * 1e-10);
}

TEST(Normalize, ZeroRateIsAnError) {
  const auto h = cross_correlate(stream({}, 1000), stream({1}, 1000), {100, 200});
  EXPECT_THROW(normalize(h), InvalidArgument);
}

TEST(Normalize, DurationInvariantInExpectation) {
  const double rate = 5e5;
  std::uint64_t seed = 3;
  for (std::uint64_t duration : {500'000'000'000ULL, 1'000'000'000'000ULL}) {
    const auto a = stream(oracle::poisson_times(rate * 1e-12, duration, seed++), duration);
    const auto b = stream(oracle::poisson_times(rate * 1e-12, duration, seed++), duration, Channel::B);
    const auto h = cross_correlate(a, b, {1000, 200'000});
    const auto n = normalize(h);
    double m = 0.0;
    for (double g : n.g2) m += g;
    m /= static_cast<double>(n.g2.size());
    EXPECT_NEAR(m, 1.0, 4.0 / std::sqrt(static_cast<double>(h.total_pairs))) << duration;
  }
}
