#pragma once

// Two-channel coincidence counting.
//
// Bins are [k*w, (k+1)*w) for k in [-n, n), so tau = 0 is a bin edge and the
// first non-negative bin starts at 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "antibunch/detection.hpp"
#include "antibunch/errors.hpp"

namespace antibunch {

enum class CorrelationMode { full_cross_correlation, start_stop };

struct CorrelationConfig {
  std::int64_t bin_width = 100;     // ps
  std::int64_t max_tau = 20'000;    // ps, window half-width W
  CorrelationMode mode = CorrelationMode::full_cross_correlation;

  void validate() const {
    require(bin_width > 0, "correlation: bin_width must be > 0");
    require(max_tau >= bin_width, "correlation: max_tau must be >= bin_width");
  }
  std::int64_t half_bins() const { return (max_tau + bin_width - 1) / bin_width; }
  std::size_t bin_count() const { return static_cast<std::size_t>(2 * half_bins()); }
};

struct CoincidenceHistogram {
  std::vector<std::int64_t> bin_edges;  // ps, size = counts.size() + 1
  std::vector<std::uint64_t> counts;
  std::uint64_t total_pairs = 0;
  std::uint64_t duration = 0;           // ps
  double rate_a = 0.0;                  // counts/s
  double rate_b = 0.0;                  // counts/s

  std::size_t size() const { return counts.size(); }
  double bin_width() const { return static_cast<double>(bin_edges[1] - bin_edges[0]); }
  double left_edge(std::size_t i) const { return static_cast<double>(bin_edges[i]); }
  double center(std::size_t i) const { return 0.5 * static_cast<double>(bin_edges[i] + bin_edges[i + 1]); }

  friend bool operator==(const CoincidenceHistogram&, const CoincidenceHistogram&) = default;
};

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

/// Counts for A tags [first, last) against all of B.
inline void correlate_range(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                            const CorrelationConfig& config, std::vector<std::uint64_t>& counts) {
  if (a.empty() || b.empty()) return;
  const std::int64_t w = config.max_tau;
  const std::int64_t width = config.bin_width;
  const std::int64_t half = config.half_bins();
  const auto* bp = b.data();
  const std::size_t nb = b.size();

  // First B tag with t_b >= t_a - W for the first A tag in the range.
  const auto lower = static_cast<std::int64_t>(a.front()) - w;
  std::size_t j = lower <= 0 ? 0
                             : static_cast<std::size_t>(std::lower_bound(b.begin(), b.end(),
                                                                         static_cast<std::uint64_t>(lower)) -
                                                        b.begin());
  const bool full = config.mode == CorrelationMode::full_cross_correlation;
  for (auto ta_u : a) {
    const auto ta = static_cast<std::int64_t>(ta_u);
    while (j < nb && static_cast<std::int64_t>(bp[j]) < ta - w) ++j;
    for (std::size_t k = j; k < nb; ++k) {
      const std::int64_t d = static_cast<std::int64_t>(bp[k]) - ta;
      if (d >= w) break;
      ++counts[static_cast<std::size_t>(floor_div(d, width) + half)];
      if (!full) break;
    }
  }
}

}  // namespace detail

/// Histogram of t_b - t_a over [-W, W). Full mode counts every pair; start-stop
/// mode pairs each A tag with only the first B tag at or after t_a - W (a stop
/// line delayed by W). With `chunks` > 1 stream A is partitioned and the
/// partial histograms are summed; the result does not depend on `chunks` or
/// `threads`.
inline CoincidenceHistogram cross_correlate(const TimeTagStream& a, const TimeTagStream& b,
                                            const CorrelationConfig& config, std::size_t chunks = 1,
                                            std::size_t threads = 1) {
  config.validate();
  if (!a.is_sorted() || !b.is_sorted()) throw InvalidArgument("cross_correlate: streams must be sorted");
  if (a.duration != b.duration) throw InvalidArgument("cross_correlate: stream durations differ");

  const std::int64_t half = config.half_bins();
  const std::size_t nbins = config.bin_count();
  CoincidenceHistogram h;
  h.bin_edges.resize(nbins + 1);
  for (std::size_t i = 0; i <= nbins; ++i) {
    h.bin_edges[i] = (static_cast<std::int64_t>(i) - half) * config.bin_width;
  }
  h.counts.assign(nbins, 0);
  h.duration = a.duration;
  h.rate_a = a.mean_rate();
  h.rate_b = b.mean_rate();

  chunks = std::clamp<std::size_t>(chunks, 1, std::max<std::size_t>(a.size(), 1));
  const std::span<const std::uint64_t> as(a.times), bs(b.times);
  if (chunks == 1) {
    detail::correlate_range(as, bs, config, h.counts);
  } else {
    std::vector<std::vector<std::uint64_t>> partial(chunks, std::vector<std::uint64_t>(nbins, 0));
    const std::size_t per = (as.size() + chunks - 1) / chunks;
    auto work = [&](std::size_t c) {
      const std::size_t first = std::min(as.size(), c * per);
      const std::size_t last = std::min(as.size(), first + per);
      detail::correlate_range(as.subspan(first, last - first), bs, config, partial[c]);
    };
    threads = std::clamp<std::size_t>(threads, 1, chunks);
    if (threads == 1) {
      for (std::size_t c = 0; c < chunks; ++c) work(c);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          for (std::size_t c = t; c < chunks; c += threads) work(c);
        });
      }
    }
    for (const auto& p : partial) {
      for (std::size_t i = 0; i < nbins; ++i) h.counts[i] += p[i];
    }
  }
  for (auto c : h.counts) h.total_pairs += c;
  return h;
}

/// Per-bin g2 normalized to uncorrelated streams, with Poisson error bars.
struct NormalizedHistogram {
  std::vector<double> tau_left;  // ps
  std::vector<double> g2;
  std::vector<double> g2_err;
  double normalization = 0.0;    // expected uncorrelated pairs per bin
};

/// Poisson 1-sigma upper limit used for bins with zero counts.
inline constexpr double kEmptyBinUpperLimit = 1.84;

inline NormalizedHistogram normalize(const CoincidenceHistogram& hist) {
  if (!(hist.rate_a > 0.0) || !(hist.rate_b > 0.0) || hist.duration == 0) {
    throw InvalidArgument("normalize: rates and duration must be > 0");
  }
  const double norm = hist.rate_a * hist.rate_b * (static_cast<double>(hist.duration) * 1e-12) *
                      (hist.bin_width() * 1e-12);
  NormalizedHistogram out;
  out.normalization = norm;
  out.tau_left.reserve(hist.size());
  out.g2.reserve(hist.size());
  out.g2_err.reserve(hist.size());
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const auto c = static_cast<double>(hist.counts[i]);
    out.tau_left.push_back(hist.left_edge(i));
    out.g2.push_back(c / norm);
    out.g2_err.push_back((c > 0.0 ? std::sqrt(c) : kEmptyBinUpperLimit) / norm);
  }
  return out;
}

}  // namespace antibunch
