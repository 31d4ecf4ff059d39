#pragma once

// The four curve models and their analytic parameter gradients.
//
// x and the shape parameters share whatever unit the caller uses (nm for
// spectra, ns for delays); decay rates are in 1/x.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "antibunch/errors.hpp"

namespace antibunch {

/// offset + amplitude / (1 + 4 ((x - center)/fwhm)^2)
struct Lorentzian {
  double center = 0.0;
  double fwhm = 1.0;
  double amplitude = 1.0;
  double offset = 0.0;

  double quality_factor() const { return center / fwhm; }
};

/// amplitude exp(-x/tau) + offset
struct MonoExp {
  double amplitude = 1.0;
  double tau = 1.0;
  double offset = 0.0;
};

/// amplitude [1 - (1 - g2_zero) exp(-|x|/tau0)]
struct G2Cw {
  double amplitude = 1.0;
  double g2_zero = 0.0;
  double tau0 = 1.0;
};

/// sum_k amplitudes[k] exp(-shared_decay |x - (first_index + k) rep_period|)
/// with rep_period held fixed.
struct PeakComb {
  double shared_decay = 1.0;
  double rep_period = 1.0;
  int first_index = 0;
  std::vector<double> amplitudes;

  int last_index() const { return first_index + static_cast<int>(amplitudes.size()) - 1; }
  double amplitude(int k) const { return amplitudes.at(static_cast<std::size_t>(k - first_index)); }
  double area(int k) const { return 2.0 * amplitude(k) / shared_decay; }
};

using ModelSpec = std::variant<Lorentzian, MonoExp, G2Cw, PeakComb>;

enum class ModelKind { lorentzian, monoexp, g2cw, peak_comb };

inline ModelKind kind_of(const ModelSpec& m) { return static_cast<ModelKind>(m.index()); }

inline const char* model_name(ModelKind k) {
  switch (k) {
    case ModelKind::lorentzian: return "lorentzian";
    case ModelKind::monoexp: return "monoexp";
    case ModelKind::g2cw: return "g2cw";
    case ModelKind::peak_comb: return "peak_comb";
  }
  return "?";
}

inline void validate(const ModelSpec& model) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          require(m.fwhm > 0.0, "lorentzian: fwhm must be > 0");
        } else if constexpr (std::is_same_v<T, MonoExp>) {
          require(m.tau > 0.0, "monoexp: tau must be > 0");
        } else if constexpr (std::is_same_v<T, G2Cw>) {
          require(m.tau0 > 0.0, "g2cw: tau0 must be > 0");
        } else {
          require(m.shared_decay > 0.0, "peak comb: shared_decay must be > 0");
          require(m.rep_period > 0.0, "peak comb: rep_period must be > 0");
          require(!m.amplitudes.empty(), "peak comb: no peaks");
        }
      },
      model);
}

// Flat parameter views used by the engine. Order matches parameter_names().

inline std::vector<double> parameters(const ModelSpec& model) {
  return std::visit(
      [](const auto& m) -> std::vector<double> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          return {m.center, m.fwhm, m.amplitude, m.offset};
        } else if constexpr (std::is_same_v<T, MonoExp>) {
          return {m.amplitude, m.tau, m.offset};
        } else if constexpr (std::is_same_v<T, G2Cw>) {
          return {m.amplitude, m.g2_zero, m.tau0};
        } else {
          std::vector<double> p{m.shared_decay};
          p.insert(p.end(), m.amplitudes.begin(), m.amplitudes.end());
          return p;
        }
      },
      model);
}

inline std::vector<std::string> parameter_names(const ModelSpec& model) {
  return std::visit(
      [](const auto& m) -> std::vector<std::string> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          return {"center", "fwhm", "amplitude", "offset"};
        } else if constexpr (std::is_same_v<T, MonoExp>) {
          return {"amplitude", "tau", "offset"};
        } else if constexpr (std::is_same_v<T, G2Cw>) {
          return {"amplitude", "g2_zero", "tau0"};
        } else {
          std::vector<std::string> names{"shared_decay"};
          for (int k = m.first_index; k <= m.last_index(); ++k) names.push_back("amplitude[" + std::to_string(k) + "]");
          return names;
        }
      },
      model);
}

/// Parameters that are fitted in log space to keep them positive.
inline std::vector<bool> positive_parameters(const ModelSpec& model) {
  return std::visit(
      [](const auto& m) -> std::vector<bool> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          return {false, true, false, false};
        } else if constexpr (std::is_same_v<T, MonoExp>) {
          return {false, true, false};
        } else if constexpr (std::is_same_v<T, G2Cw>) {
          return {false, false, true};
        } else {
          std::vector<bool> v(m.amplitudes.size() + 1, false);
          v[0] = true;
          return v;
        }
      },
      model);
}

/// Typical size of each parameter, used for finite-difference steps. A
/// resonance center moves on the scale of its width, not of its value.
inline std::vector<double> parameter_scales(const ModelSpec& model) {
  return std::visit(
      [](const auto& m) -> std::vector<double> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          const double a = std::abs(m.amplitude);
          return {m.fwhm, m.fwhm, a, std::max(std::abs(m.offset), a)};
        } else if constexpr (std::is_same_v<T, MonoExp>) {
          const double a = std::abs(m.amplitude);
          return {a, m.tau, std::max(std::abs(m.offset), a)};
        } else if constexpr (std::is_same_v<T, G2Cw>) {
          return {std::abs(m.amplitude), std::max(std::abs(m.g2_zero), 1.0), m.tau0};
        } else {
          double top = 0.0;
          for (double a : m.amplitudes) top = std::max(top, std::abs(a));
          std::vector<double> v{m.shared_decay};
          for (double a : m.amplitudes) v.push_back(std::max(std::abs(a), top));
          return v;
        }
      },
      model);
}

inline ModelSpec with_parameters(const ModelSpec& model, std::span<const double> p) {
  return std::visit(
      [&](const auto& m) -> ModelSpec {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          return Lorentzian{p[0], p[1], p[2], p[3]};
        } else if constexpr (std::is_same_v<T, MonoExp>) {
          return MonoExp{p[0], p[1], p[2]};
        } else if constexpr (std::is_same_v<T, G2Cw>) {
          return G2Cw{p[0], p[1], p[2]};
        } else {
          PeakComb c = m;
          c.shared_decay = p[0];
          c.amplitudes.assign(p.begin() + 1, p.end());
          return c;
        }
      },
      model);
}

inline std::size_t parameter_count(const ModelSpec& model) {
  if (const auto* c = std::get_if<PeakComb>(&model)) return c->amplitudes.size() + 1;
  return parameters(model).size();
}

inline double evaluate(const ModelSpec& model, double x) {
  return std::visit(
      [x](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          const double u = 2.0 * (x - m.center) / m.fwhm;
          return m.offset + m.amplitude / (1.0 + u * u);
        } else if constexpr (std::is_same_v<T, MonoExp>) {
          return m.amplitude * std::exp(-x / m.tau) + m.offset;
        } else if constexpr (std::is_same_v<T, G2Cw>) {
          return m.amplitude * (1.0 - (1.0 - m.g2_zero) * std::exp(-std::abs(x) / m.tau0));
        } else {
          double y = 0.0;
          for (std::size_t k = 0; k < m.amplitudes.size(); ++k) {
            const double c = (m.first_index + static_cast<int>(k)) * m.rep_period;
            y += m.amplitudes[k] * std::exp(-m.shared_decay * std::abs(x - c));
          }
          return y;
        }
      },
      model);
}

/// d model / d parameter at x, in parameters() order.
inline void gradient(const ModelSpec& model, double x, std::span<double> out) {
  std::visit(
      [x, out](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Lorentzian>) {
          const double u = 2.0 * (x - m.center) / m.fwhm;
          const double d = 1.0 / (1.0 + u * u);
          const double a_d2 = m.amplitude * d * d;
          out[0] = a_d2 * 2.0 * u * 2.0 / m.fwhm;  // d/dcenter
          out[1] = a_d2 * 2.0 * u * u / m.fwhm;    // d/dfwhm
          out[2] = d;
          out[3] = 1.0;
        } else if constexpr (std::is_same_v<T, MonoExp>) {
          const double e = std::exp(-x / m.tau);
          out[0] = e;
          out[1] = m.amplitude * e * x / (m.tau * m.tau);
          out[2] = 1.0;
        } else if constexpr (std::is_same_v<T, G2Cw>) {
          const double ax = std::abs(x);
          const double e = std::exp(-ax / m.tau0);
          out[0] = 1.0 - (1.0 - m.g2_zero) * e;
          out[1] = m.amplitude * e;
          out[2] = -m.amplitude * (1.0 - m.g2_zero) * e * ax / (m.tau0 * m.tau0);
        } else {
          out[0] = 0.0;
          for (std::size_t k = 0; k < m.amplitudes.size(); ++k) {
            const double c = (m.first_index + static_cast<int>(k)) * m.rep_period;
            const double dist = std::abs(x - c);
            const double e = std::exp(-m.shared_decay * dist);
            out[0] -= m.amplitudes[k] * dist * e;
            out[k + 1] = e;
          }
        }
      },
      model);
}

}  // namespace antibunch
