#pragma once

// Data-driven starting points for the fitting engine.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "antibunch/errors.hpp"
#include "antibunch/fit_engine.hpp"
#include "antibunch/fit_models.hpp"

namespace antibunch {

namespace detail {

inline void require_informative(const FitData& data) {
  if (data.size() == 0) throw DegenerateDataError("initial_guess: no data");
  const auto [lo, hi] = std::minmax_element(data.y.begin(), data.y.end());
  if (*lo == *hi) throw DegenerateDataError("initial_guess: all y values are equal");
}

/// Indices of `data` sorted by x.
inline std::vector<std::size_t> order_by_x(const FitData& data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return data.x[a] < data.x[b]; });
  return idx;
}

/// Weighted least-squares slope and intercept.
inline std::pair<double, double> weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                                               const std::vector<double>& w) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (!(std::abs(det) > 0.0)) throw DegenerateDataError("initial_guess: cannot regress on a single abscissa");
  const double slope = (sw * sxy - sx * sy) / det;
  return {slope, (sy - slope * sx) / sw};
}

/// Offset of an exponential sampled on an even grid, from the sums over three
/// consecutive equal blocks: S_k = G q^k + n c gives
/// c = (S1 S3 - S2^2) / (n (S1 + S3 - 2 S2)). Empty when the grid is uneven
/// or the estimate falls outside [min - span, min].
inline std::optional<double> exponential_offset(const FitData& data) {
  const auto idx = order_by_x(data);
  const std::size_t n = idx.size() / 3;
  if (n < 2) return std::nullopt;
  const double step = data.x[idx[1]] - data.x[idx[0]];
  for (std::size_t k = 1; k < idx.size(); ++k) {
    const double d = data.x[idx[k]] - data.x[idx[k - 1]];
    if (!(step > 0.0) || std::abs(d - step) > 1e-6 * step) return std::nullopt;
  }
  double s[3] = {0.0, 0.0, 0.0};
  for (int b = 0; b < 3; ++b) {
    for (std::size_t k = 0; k < n; ++k) s[b] += data.y[idx[b * n + k]];
  }
  const double denom = s[0] + s[2] - 2.0 * s[1];
  if (!(std::abs(denom) > 0.0)) return std::nullopt;
  const double c = (s[0] * s[2] - s[1] * s[1]) / (static_cast<double>(n) * denom);
  const double lowest = *std::min_element(data.y.begin(), data.y.end());
  const double span = *std::max_element(data.y.begin(), data.y.end()) - lowest;
  if (!std::isfinite(c) || c > lowest || c < lowest - span) return std::nullopt;
  return c;
}

}  // namespace detail

inline Lorentzian guess_lorentzian(const FitData& data) {
  detail::require_informative(data);
  const auto idx = detail::order_by_x(data);
  std::size_t peak = 0;
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (data.y[idx[k]] > data.y[idx[peak]]) peak = k;
    lo = std::min(lo, data.y[idx[k]]);
  }
  const double top = data.y[idx[peak]];
  const double half = lo + 0.5 * (top - lo);

  // Interpolated half-maximum crossings on each side of the peak.
  auto crossing = [&](int dir) -> std::optional<double> {
    for (auto k = static_cast<long>(peak); k + dir >= 0 && k + dir < static_cast<long>(idx.size()); k += dir) {
      const auto i0 = idx[static_cast<std::size_t>(k)], i1 = idx[static_cast<std::size_t>(k + dir)];
      if (data.y[i1] <= half) {
        const double t = (data.y[i0] - half) / (data.y[i0] - data.y[i1]);
        return data.x[i0] + t * (data.x[i1] - data.x[i0]);
      }
    }
    return std::nullopt;
  };
  const auto left = crossing(-1), right = crossing(+1);
  const double center = data.x[idx[peak]];
  double fwhm;
  if (left && right) fwhm = *right - *left;
  else if (left) fwhm = 2.0 * (center - *left);
  else if (right) fwhm = 2.0 * (*right - center);
  else fwhm = 0.25 * (data.x[idx.back()] - data.x[idx.front()]);
  if (!(fwhm > 0.0)) throw DegenerateDataError("initial_guess: could not bracket the half maximum");
  return {center, fwhm, top - lo, lo};
}

inline MonoExp guess_monoexp(const FitData& data) {
  detail::require_informative(data);
  const double lowest = *std::min_element(data.y.begin(), data.y.end());
  const double top = *std::max_element(data.y.begin(), data.y.end());
  const double floor = detail::exponential_offset(data).value_or(lowest);
  // Regress log(y - floor) on the upper part of the decay, where an error in
  // the floor matters least; weights (y - floor)^2 flatten the log noise.
  std::vector<double> xs, ls, ws;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = data.y[i] - floor;
    if (v > 0.2 * (top - floor)) {
      xs.push_back(data.x[i]);
      ls.push_back(std::log(v));
      ws.push_back(v * v);
    }
  }
  if (xs.size() < 2) throw DegenerateDataError("initial_guess: decay tail has fewer than two usable points");
  const auto [slope, intercept] = detail::weighted_line(xs, ls, ws);
  if (!(slope < 0.0)) throw DegenerateDataError("initial_guess: data do not decay");
  return {std::exp(intercept), -1.0 / slope, floor};
}

inline G2Cw guess_g2cw(const FitData& data) {
  detail::require_informative(data);
  double xmax = 0.0;
  for (double x : data.x) xmax = std::max(xmax, std::abs(x));
  // Far tail: outer 20% of |x|.
  double tail_sum = 0.0, near_sum = 0.0, near_dist = std::numeric_limits<double>::infinity();
  std::size_t tail_n = 0, near_n = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double ax = std::abs(data.x[i]);
    if (ax >= 0.8 * xmax) {
      tail_sum += data.y[i];
      ++tail_n;
    }
    if (ax < near_dist - 1e-12 * xmax) {
      near_dist = ax;
      near_sum = data.y[i];
      near_n = 1;
    } else if (std::abs(ax - near_dist) <= 1e-12 * xmax) {
      near_sum += data.y[i];
      ++near_n;
    }
  }
  const double amplitude = tail_sum / static_cast<double>(tail_n);
  if (!(amplitude > 0.0)) throw DegenerateDataError("initial_guess: far tail is empty");
  const double g0 = std::max(0.0, near_sum / static_cast<double>(near_n) / amplitude);

  // Smallest |x| at which the dip has recovered by 1 - 1/e.
  const double level = amplitude * (1.0 - (1.0 - g0) / std::exp(1.0));
  double tau0 = std::numeric_limits<double>::infinity();
  const auto idx = detail::order_by_x(data);
  for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
    const auto i0 = idx[k], i1 = idx[k + 1];
    const bool cross = (data.y[i0] - level) * (data.y[i1] - level) <= 0.0 && data.y[i0] != data.y[i1];
    if (!cross) continue;
    const double t = (level - data.y[i0]) / (data.y[i1] - data.y[i0]);
    const double xc = std::abs(data.x[i0] + t * (data.x[i1] - data.x[i0]));
    if (xc > near_dist) tau0 = std::min(tau0, xc);
  }
  if (!std::isfinite(tau0) || !(tau0 > 0.0)) tau0 = 0.1 * xmax;
  return {amplitude, g0, tau0};
}

/// Peaks k = first_index..last_index at k * rep_period. Amplitudes from the
/// local maximum near each center; decay from the log-slope of the central
/// peak (the tallest peak when the central one is empty).
inline PeakComb guess_peak_comb(const FitData& data, double rep_period, int first_index, int last_index) {
  detail::require_informative(data);
  require(rep_period > 0.0, "initial_guess: rep_period must be > 0");
  require(last_index >= first_index, "initial_guess: empty peak range");
  PeakComb comb;
  comb.rep_period = rep_period;
  comb.first_index = first_index;
  const double floor = std::max(0.0, *std::min_element(data.y.begin(), data.y.end()));
  for (int k = first_index; k <= last_index; ++k) {
    const double c = k * rep_period;
    double best = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (std::abs(data.x[i] - c) <= 0.25 * rep_period) best = std::max(best, data.y[i]);
    }
    comb.amplitudes.push_back(std::max(best - floor, 1e-3 * (best + 1.0)));
  }

  int anchor = std::clamp(0, first_index, last_index);
  if (comb.amplitude(anchor) <= 0.0 || comb.amplitude(anchor) < 0.05 * *std::max_element(comb.amplitudes.begin(), comb.amplitudes.end())) {
    anchor = first_index + static_cast<int>(std::max_element(comb.amplitudes.begin(), comb.amplitudes.end()) -
                                            comb.amplitudes.begin());
  }
  std::vector<double> xs, ls, ws;
  const double c = anchor * rep_period;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double dist = std::abs(data.x[i] - c);
    const double v = data.y[i] - floor;
    if (dist <= 0.25 * rep_period && v > 0.0) {
      xs.push_back(dist);
      ls.push_back(std::log(v));
      ws.push_back(v);
    }
  }
  double decay = 2.0 / rep_period;
  if (xs.size() >= 2) {
    try {
      const double slope = detail::weighted_line(xs, ls, ws).first;
      if (slope < 0.0) decay = -slope;
    } catch (const DegenerateDataError&) {
    }
  }
  comb.shared_decay = decay;
  return comb;
}

struct GuessOptions {
  double rep_period = 0.0;  // peak comb only
  int first_index = 0;
  int last_index = 0;
};

inline ModelSpec initial_guess(ModelKind kind, const FitData& data, const GuessOptions& options = {}) {
  switch (kind) {
    case ModelKind::lorentzian: return guess_lorentzian(data);
    case ModelKind::monoexp: return guess_monoexp(data);
    case ModelKind::g2cw: return guess_g2cw(data);
    case ModelKind::peak_comb:
      return guess_peak_comb(data, options.rep_period, options.first_index, options.last_index);
  }
  throw InvalidArgument("initial_guess: unknown model kind");
}

}  // namespace antibunch
