#pragma once

// Closed-form physical models for a cavity-pumped quantum-dot emitter.
//
// Units: wavelengths in nm, rates in 1/ns, delays in ns, powers in mW.

#include <cmath>
#include <limits>

#include "antibunch/errors.hpp"

namespace antibunch {

struct CavityParams {
  double lambda_c = 1500.0;       // resonance wavelength, nm
  double q_factor = 7000.0;
  double shg_coefficient = 0.0;   // pump rate per squared coupled power, 1/(ns mW^2)

  void validate() const {
    require(lambda_c > 0.0, "cavity: lambda_c must be > 0");
    require(q_factor > 0.0, "cavity: q_factor must be > 0");
    require(shg_coefficient >= 0.0, "cavity: shg_coefficient must be >= 0");
  }

  double fwhm() const { return lambda_c / q_factor; }
};

/// Radiative decay plus an optional metastable dark state.
struct EmitterParams {
  double gamma = 1.0 / 2.4;    // spontaneous emission rate, 1/ns
  double shelving_rate = 0.0;  // excited -> dark, 1/ns; 0 disables the dark state
  double recovery_rate = 0.0;  // dark -> ground, 1/ns

  void validate() const {
    require(gamma > 0.0, "emitter: gamma must be > 0");
    require(shelving_rate >= 0.0, "emitter: shelving_rate must be >= 0");
    require(shelving_rate == 0.0 || recovery_rate > 0.0,
            "emitter: recovery_rate must be > 0 when shelving is enabled");
  }

  bool has_dark_state() const { return shelving_rate > 0.0; }

  /// Synthetic preset that produces adjacent-peak suppression in pulsed
  /// correlations. The rates are illustrative, not measured.
  static EmitterParams with_memory_preset(double gamma) {
    return EmitterParams{gamma, 0.01 * gamma, 0.002};
  }
};

struct G2CwModel {
  double amplitude = 1.0;  // coincidences per bin at |tau| -> inf
  double g2_zero = 0.0;
  double tau0 = 1.0;       // ns

  void validate() const {
    require(amplitude > 0.0, "g2 model: amplitude must be > 0");
    require(tau0 > 0.0, "g2 model: tau0 must be > 0");
    require(g2_zero >= 0.0, "g2 model: g2_zero must be >= 0");
  }
};

/// Uncorrelated Poissonian background described by its signal-to-background
/// count-rate ratio. `snr` may be +inf (no background).
class BackgroundModel {
 public:
  explicit BackgroundModel(double snr) : snr_(snr) {
    require(snr > 0.0, "background: snr must be > 0");
  }

  static BackgroundModel from_rho(double rho) {
    require(rho > 0.0 && rho <= 1.0, "background: rho must lie in (0, 1]");
    return BackgroundModel(rho == 1.0 ? std::numeric_limits<double>::infinity()
                                      : rho / (1.0 - rho));
  }

  double snr() const { return snr_; }
  /// Signal fraction S/(S+B).
  double rho() const { return std::isinf(snr_) ? 1.0 : snr_ / (snr_ + 1.0); }

 private:
  double snr_;
};

/// Normalized cavity response 1/(1 + 4 Q^2 (lambda/lambda_c - 1)^2).
inline double lorentzian_response(double lambda, const CavityParams& cavity) {
  require(lambda > 0.0, "lorentzian_response: lambda must be > 0");
  const double detuning = lambda / cavity.lambda_c - 1.0;
  const double q = cavity.q_factor;
  return 1.0 / (1.0 + 4.0 * q * q * detuning * detuning);
}

/// Upconverted pump rate k (P L(lambda))^2.
inline double shg_pump_rate(double power_in, double lambda, const CavityParams& cavity) {
  require(power_in >= 0.0, "shg_pump_rate: power must be >= 0");
  const double coupled = power_in * lorentzian_response(lambda, cavity);
  return cavity.shg_coefficient * coupled * coupled;
}

/// Two-level steady-state photon rate gamma r / (gamma + r).
inline double steady_state_emission_rate(double pump_rate, double gamma) {
  require(pump_rate >= 0.0, "steady_state_emission_rate: pump rate must be >= 0");
  require(gamma > 0.0, "steady_state_emission_rate: gamma must be > 0");
  return gamma * pump_rate / (gamma + pump_rate);
}

/// A [1 - (1 - g2(0)) exp(-|tau|/tau0)].
inline double g2_cw_model(double tau, const G2CwModel& model) {
  return model.amplitude * (1.0 - (1.0 - model.g2_zero) * std::exp(-std::abs(tau) / model.tau0));
}

/// Measured g2 when a fraction 1 - rho of the clicks are Poissonian.
inline double background_mix(double g2_signal, const BackgroundModel& bg) {
  require(g2_signal >= 0.0, "background_mix: g2 must be >= 0");
  const double rho = bg.rho();
  return 1.0 - rho * rho * (1.0 - g2_signal);
}

/// Inverse of background_mix. Throws InconsistentInput when the measured value
/// lies below the pure-background floor 1 - rho^2.
inline double background_correct(double g2_measured, const BackgroundModel& bg) {
  const double rho2 = bg.rho() * bg.rho();
  const double floor = 1.0 - rho2;
  if (g2_measured < floor) {
    throw InconsistentInput("background_correct: measured g2 is below the background floor "
                            "1 - rho^2; background estimate too large");
  }
  return (g2_measured - floor) / rho2;
}

}  // namespace antibunch
