#pragma once

// g2(0) of a pulsed source from the ratio of fitted coincidence-peak areas.

#include <cmath>
#include <cstdlib>
#include <map>
#include <vector>

#include "antibunch/correlator.hpp"
#include "antibunch/errors.hpp"
#include "antibunch/fit_engine.hpp"
#include "antibunch/fit_guess.hpp"

namespace antibunch {

struct Measurement {
  double value = 0.0;
  double sigma = 0.0;
};

/// Side peaks whose mean area normalizes the central one; |k| in [min, max].
struct NormalizationPeaks {
  int min_index = 2;
  int max_index = 10;
};

struct PulsedG2Result {
  std::map<int, Measurement> peak_areas;  // counts * ns
  Measurement g2_zero;
  Measurement decay_rate;                 // 1/ns, shared by all peaks
  bool overlapping = false;
  /// Some fitted amplitude came out negative: the peak decomposition does not
  /// describe the histogram and g2(0) is not meaningful.
  bool degenerate = false;
  double valley_ratio = 0.0;              // mean valley / mean peak height
  FitResult fit;
};

inline constexpr double kOverlapValleyThreshold = 0.2;

/// Fits every peak of the histogram jointly as a sum of two-sided
/// exponentials with one shared decay rate, then takes g2(0) as the central
/// area over the mean normalization-peak area. Delays are handled in ns.
inline PulsedG2Result pulsed_peak_analysis(const CoincidenceHistogram& hist, double rep_period_ps,
                                           NormalizationPeaks norm = {}, const FitOptions& options = {}) {
  require(rep_period_ps > 0.0, "pulsed_peak_analysis: rep_period must be > 0");
  require(norm.min_index >= 1 && norm.max_index >= norm.min_index,
          "pulsed_peak_analysis: normalization range must satisfy 1 <= min <= max");
  require(rep_period_ps >= 4.0 * hist.bin_width(), "pulsed_peak_analysis: rep_period must span several bins");
  const double half_window = -hist.left_edge(0);
  if (norm.max_index * rep_period_ps > half_window) {
    throw InvalidArgument("pulsed_peak_analysis: correlation window does not reach the outermost normalization peak");
  }

  const double period_ns = rep_period_ps * 1e-3;
  std::vector<double> x(hist.size()), y(hist.size());
  for (std::size_t i = 0; i < hist.size(); ++i) {
    x[i] = hist.center(i) * 1e-3;
    y[i] = static_cast<double>(hist.counts[i]);
  }
  const FitData data = FitData::counts(std::move(x), std::move(y));

  // Include peaks whose centers lie within half a period of the window.
  const int outer = static_cast<int>(std::floor((half_window + 0.5 * rep_period_ps) / rep_period_ps));
  const ModelSpec start = guess_peak_comb(data, period_ns, -outer, outer);
  PulsedG2Result out;
  out.fit = fit(start, data, options);
  const auto& comb = std::get<PeakComb>(out.fit.model);
  const auto& cov = out.fit.covariance;

  for (double a : comb.amplitudes) out.degenerate = out.degenerate || a < 0.0;
  const double lambda = comb.shared_decay;
  out.decay_rate = {lambda, out.fit.sigmas[0]};
  auto param = [&](int k) { return static_cast<Eigen::Index>(k - comb.first_index + 1); };
  for (int k = comb.first_index; k <= comb.last_index(); ++k) {
    const double a = comb.amplitude(k);
    const Eigen::Index j = param(k);
    // area = 2 A / lambda
    const double da = 2.0 / lambda, dl = -2.0 * a / (lambda * lambda);
    const double var = da * da * cov(j, j) + dl * dl * cov(0, 0) + 2.0 * da * dl * cov(j, 0);
    out.peak_areas[k] = {std::max(0.0, comb.area(k)), std::sqrt(std::max(0.0, var))};
  }

  // g2(0) = A_0 / mean(A_k); lambda cancels.
  std::vector<int> side;
  for (int k = norm.min_index; k <= norm.max_index; ++k) {
    side.push_back(k);
    side.push_back(-k);
  }
  double mean = 0.0;
  for (int k : side) mean += comb.amplitude(k);
  mean /= static_cast<double>(side.size());
  if (!(mean > 0.0)) throw InconsistentInput("pulsed_peak_analysis: normalization peaks have no area");
  const double a0 = comb.amplitude(0);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(cov.rows());
  grad[param(0)] = 1.0 / mean;
  for (int k : side) grad[param(k)] += -a0 / (mean * mean * static_cast<double>(side.size()));
  const double var = grad.dot(cov * grad);
  out.g2_zero = {std::max(0.0, a0 / mean), std::sqrt(std::max(var, 0.0))};

  // Overlap: fitted valley midway between adjacent normalization peaks
  // relative to the fitted peak heights.
  double peaks = 0.0, valleys = 0.0;
  std::size_t np = 0, nv = 0;
  for (int sign : {-1, 1}) {
    for (int k = norm.min_index; k <= norm.max_index; ++k) {
      peaks += evaluate(out.fit.model, sign * k * period_ns);
      ++np;
      if (k < norm.max_index) {
        valleys += evaluate(out.fit.model, sign * (k + 0.5) * period_ns);
        ++nv;
      }
    }
  }
  if (nv == 0) {
    valleys = evaluate(out.fit.model, (norm.min_index + 0.5) * period_ns) +
              evaluate(out.fit.model, -(norm.min_index + 0.5) * period_ns);
    nv = 2;
  }
  out.valley_ratio = (valleys / static_cast<double>(nv)) / (peaks / static_cast<double>(np));
  out.overlapping = out.valley_ratio > kOverlapValleyThreshold;
  return out;
}

}  // namespace antibunch
