#pragma once

// Experiment description assembled from a Config.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "antibunch/config.hpp"
#include "antibunch/correlator.hpp"
#include "antibunch/detection.hpp"
#include "antibunch/emitter_sim.hpp"
#include "antibunch/errors.hpp"
#include "antibunch/photophysics.hpp"
#include "antibunch/pulsed_analysis.hpp"
#include "antibunch/waveform.hpp"

namespace antibunch {

/// What the scenario's S/B ratio is measured against.
///   arm_flux: photon flux reaching each detector, before detection losses.
///   detected: signal clicks per detector.
/// Background clicks are added per detector at reference / snr.
enum class BackgroundReference { arm_flux, detected };

enum class AnalysisKind { none, cw_g2, pulsed, lifetime };

struct Outputs {
  bool timetags = true;
  bool histogram = true;
  bool report = true;
  bool plots = false;
};

struct LifetimeAnalysis {
  double bin = 50.0;         // ps
  double fit_start = 200.0;  // ps after the pulse start
};

struct SpectrumSettings {
  double span_fwhm = 5.0;      // half-span in units of the cavity FWHM
  std::size_t points = 201;
  double noise = 0.01;         // multiplicative, relative
};

struct SweepSettings {
  std::vector<double> powers;  // mW
  double events_per_point = 1e6;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  EmitterParams emitter;
  CavityParams cavity;
  double laser_lambda = 1500.0;  // nm
  PumpDrive drive = ContinuousWave{};
  DetectorParams detector_a;
  DetectorParams detector_b;
  double background_snr = std::numeric_limits<double>::infinity();
  BackgroundReference background_reference = BackgroundReference::arm_flux;
  CorrelationConfig correlation;
  std::size_t correlation_chunks = 8;
  SimConfig sim;
  std::size_t trajectories = 1;
  AnalysisKind analysis = AnalysisKind::none;
  NormalizationPeaks normalization;
  LifetimeAnalysis lifetime;
  SpectrumSettings spectrum;
  SweepSettings sweep;
  Outputs outputs;

  bool is_cw() const { return std::holds_alternative<ContinuousWave>(drive); }
};

namespace detail {

template <typename F>
void check_field(const std::string& field, F&& f) {
  try {
    f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(field, e.what());
  }
}

inline DetectorParams read_detector(const Config& c, const std::string& prefix, DetectorParams d) {
  d.efficiency = c.number(prefix + ".efficiency", d.efficiency);
  d.jitter_sigma = c.number(prefix + ".jitter_sigma_ps", d.jitter_sigma);
  d.dead_time = c.number(prefix + ".dead_time_ps", d.dead_time);
  d.dark_rate = c.number(prefix + ".dark_rate_cps", d.dark_rate);
  return d;
}

}  // namespace detail

/// Builds and validates a scenario. Unknown keys are rejected so typos do not
/// silently fall back to defaults.
inline Scenario parse_scenario(const Config& c) {
  Scenario s;
  s.name = c.string("name", s.name);
  s.seed = c.count("seed", s.seed);

  s.emitter.gamma = c.number("emitter.gamma_ns_inv", s.emitter.gamma);
  s.emitter.shelving_rate = c.number("emitter.shelving_rate_ns_inv", s.emitter.shelving_rate);
  s.emitter.recovery_rate = c.number("emitter.recovery_rate_ns_inv", s.emitter.recovery_rate);
  if (c.flag("emitter.memory_preset", false)) s.emitter = EmitterParams::with_memory_preset(s.emitter.gamma);
  detail::check_field("emitter", [&] { s.emitter.validate(); });

  s.cavity.lambda_c = c.number("cavity.lambda_c_nm", s.cavity.lambda_c);
  s.cavity.q_factor = c.number("cavity.q_factor", s.cavity.q_factor);
  s.cavity.shg_coefficient = c.number("cavity.shg_coefficient_ns_inv_per_mw2", s.cavity.shg_coefficient);
  detail::check_field("cavity", [&] { s.cavity.validate(); });
  s.laser_lambda = c.number("laser.lambda_nm", s.cavity.lambda_c);
  if (!(s.laser_lambda > 0.0)) throw ConfigError("laser.lambda_nm", "must be > 0");

  const std::string kind = c.string("drive.kind", "cw");
  if (kind == "cw") {
    s.drive = ContinuousWave{c.number("drive.power_mw", 0.0)};
  } else if (kind == "square") {
    SquareModulated d;
    d.power_on = c.number("drive.power_on_mw", d.power_on);
    d.rep_rate = c.required_number("drive.rep_rate_mhz");
    d.duty = c.required_number("drive.duty");
    d.extinction_ratio = c.number("drive.extinction_ratio", d.extinction_ratio);
    s.drive = d;
  } else if (kind == "pulse_train") {
    PulseTrain d;
    d.rep_rate = c.required_number("drive.rep_rate_mhz");
    d.pulse_width = c.number("drive.pulse_width_ps", d.pulse_width);
    d.saturation_parameter = c.number("drive.saturation_parameter", d.saturation_parameter);
    s.drive = d;
  } else {
    throw ConfigError("drive.kind", "expected cw, square or pulse_train, got '" + kind + "'");
  }
  detail::check_field("drive", [&] { validate(s.drive); });
  if (const auto* p = std::get_if<PulseTrain>(&s.drive); p && p->pulse_width >= period_ps(p->rep_rate)) {
    throw ConfigError("drive.pulse_width_ps", "must be shorter than the repetition period");
  }

  const DetectorParams shared = detail::read_detector(c, "detector", DetectorParams{});
  s.detector_a = detail::read_detector(c, "detector_a", shared);
  s.detector_b = detail::read_detector(c, "detector_b", shared);
  detail::check_field("detector_a", [&] { s.detector_a.validate(); });
  detail::check_field("detector_b", [&] { s.detector_b.validate(); });

  s.background_snr = c.number("background.snr", s.background_snr);
  if (!(s.background_snr > 0.0)) throw ConfigError("background.snr", "must be > 0 (inf disables background)");
  const std::string ref = c.string("background.reference", "arm_flux");
  if (ref == "arm_flux") s.background_reference = BackgroundReference::arm_flux;
  else if (ref == "detected") s.background_reference = BackgroundReference::detected;
  else throw ConfigError("background.reference", "expected arm_flux or detected, got '" + ref + "'");

  const double bin = c.number("correlation.bin_width_ps", 100.0);
  const double window = c.number("correlation.max_tau_ps", 20'000.0);
  if (bin != std::floor(bin) || window != std::floor(window)) {
    throw ConfigError("correlation", "bin_width_ps and max_tau_ps must be whole picoseconds");
  }
  s.correlation.bin_width = static_cast<std::int64_t>(bin);
  s.correlation.max_tau = static_cast<std::int64_t>(window);
  const std::string mode = c.string("correlation.mode", "full");
  if (mode == "full") s.correlation.mode = CorrelationMode::full_cross_correlation;
  else if (mode == "start_stop") s.correlation.mode = CorrelationMode::start_stop;
  else throw ConfigError("correlation.mode", "expected full or start_stop, got '" + mode + "'");
  detail::check_field("correlation", [&] { s.correlation.validate(); });
  s.correlation_chunks = c.count("correlation.chunks", s.correlation_chunks);
  if (s.correlation_chunks == 0) throw ConfigError("correlation.chunks", "must be > 0");

  s.sim.duration = c.count("sim.duration_ps", 0);
  if (s.sim.duration == 0) throw ConfigError("sim.duration_ps", "acquisition duration must be > 0");
  s.sim.max_events = c.count("sim.max_events", s.sim.max_events);
  if (s.sim.max_events == 0) throw ConfigError("sim.max_events", "must be > 0");
  s.sim.seed = s.seed;
  s.trajectories = c.count("sim.trajectories", s.trajectories);
  if (s.trajectories == 0) throw ConfigError("sim.trajectories", "must be > 0");

  const std::string analysis = c.string("analysis.kind", "none");
  if (analysis == "none") s.analysis = AnalysisKind::none;
  else if (analysis == "cw_g2") s.analysis = AnalysisKind::cw_g2;
  else if (analysis == "pulsed") s.analysis = AnalysisKind::pulsed;
  else if (analysis == "lifetime") s.analysis = AnalysisKind::lifetime;
  else throw ConfigError("analysis.kind", "expected none, cw_g2, pulsed or lifetime, got '" + analysis + "'");
  if (s.analysis == AnalysisKind::cw_g2 && !s.is_cw()) {
    throw ConfigError("analysis.kind", "cw_g2 needs a cw drive");
  }
  if ((s.analysis == AnalysisKind::pulsed || s.analysis == AnalysisKind::lifetime) && s.is_cw()) {
    throw ConfigError("analysis.kind", "pulsed and lifetime analyses need a periodic drive");
  }
  s.normalization.min_index = static_cast<int>(c.count("analysis.norm_peak_min", 2));
  s.normalization.max_index = static_cast<int>(c.count("analysis.norm_peak_max", 10));
  if (s.normalization.min_index < 1 || s.normalization.max_index < s.normalization.min_index) {
    throw ConfigError("analysis.norm_peak_min", "need 1 <= norm_peak_min <= norm_peak_max");
  }
  s.lifetime.bin = c.number("analysis.lifetime_bin_ps", s.lifetime.bin);
  s.lifetime.fit_start = c.number("analysis.lifetime_fit_start_ps", s.lifetime.fit_start);
  if (!(s.lifetime.bin > 0.0)) throw ConfigError("analysis.lifetime_bin_ps", "must be > 0");

  s.spectrum.span_fwhm = c.number("spectrum.span_fwhm", s.spectrum.span_fwhm);
  s.spectrum.points = c.count("spectrum.points", s.spectrum.points);
  s.spectrum.noise = c.number("spectrum.noise", s.spectrum.noise);
  if (s.spectrum.points < 8) throw ConfigError("spectrum.points", "need at least 8 points");
  if (!(s.spectrum.span_fwhm > 0.0)) throw ConfigError("spectrum.span_fwhm", "must be > 0");
  if (!(s.spectrum.noise >= 0.0)) throw ConfigError("spectrum.noise", "must be >= 0");

  s.sweep.powers = c.numbers("sweep.powers_mw");
  for (double p : s.sweep.powers) {
    if (!(p >= 0.0)) throw ConfigError("sweep.powers_mw", "powers must be >= 0");
  }
  s.sweep.events_per_point = c.number("sweep.events_per_point", s.sweep.events_per_point);
  if (!(s.sweep.events_per_point > 0.0)) throw ConfigError("sweep.events_per_point", "must be > 0");

  s.outputs.timetags = c.flag("outputs.timetags", s.outputs.timetags);
  s.outputs.histogram = c.flag("outputs.histogram", s.outputs.histogram);
  s.outputs.report = c.flag("outputs.report", s.outputs.report);
  s.outputs.plots = c.flag("outputs.plots", s.outputs.plots);

  if (const auto unused = c.unused_keys(); !unused.empty()) {
    throw ConfigError(unused.front(), "unknown key");
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  Scenario s = parse_scenario(Config::load(path));
  if (s.name == "scenario") s.name = path.stem().string();
  return s;
}

}  // namespace antibunch
