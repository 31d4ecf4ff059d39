#pragma once

// End-to-end runs: simulate -> detect -> correlate -> fit -> correct, plus the
// power sweep and the synthetic cavity spectrum.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "antibunch/artifacts.hpp"
#include "antibunch/config.hpp"
#include "antibunch/correlator.hpp"
#include "antibunch/detection.hpp"
#include "antibunch/emitter_sim.hpp"
#include "antibunch/errors.hpp"
#include "antibunch/fit_engine.hpp"
#include "antibunch/fit_guess.hpp"
#include "antibunch/photophysics.hpp"
#include "antibunch/pulsed_analysis.hpp"
#include "antibunch/scenario.hpp"
#include "antibunch/seeds.hpp"
#include "antibunch/timetag_io.hpp"
#include "antibunch/waveform.hpp"

namespace antibunch {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kManifestFormat = 1;

/// Seeds of every stochastic stage, all derived from the master seed.
struct StageSeeds {
  std::uint64_t master = 0;
  std::uint64_t split = 0;
  std::uint64_t detector_a = 0;
  std::uint64_t detector_b = 0;
  std::uint64_t spectrum = 0;

  static StageSeeds from(std::uint64_t master) {
    return {master, derive_seed(master, "hbt_split"), derive_seed(master, "detector_a"),
            derive_seed(master, "detector_b"), derive_seed(master, "spectrum")};
  }
};

/// Detector clicks of one acquisition.
struct Acquisition {
  std::uint64_t emissions = 0;
  double background_rate = 0.0;  // counts/s added to each detector
  TimeTagStream a;
  TimeTagStream b;
};

struct RunSummary {
  std::optional<Measurement> g2_raw;
  std::optional<Measurement> g2_corrected;
  std::optional<Measurement> tau0;      // ns
  std::optional<Measurement> lifetime;  // ns
  std::optional<Measurement> decay_rate;  // 1/ns, pulsed peaks
  std::optional<double> valley_ratio;
  bool overlapping = false;
  bool degenerate = false;
  std::optional<double> chi2_per_dof;
  bool converged = true;
  std::vector<std::string> notes;
};

struct RunResult {
  Scenario scenario;
  StageSeeds seeds;
  Acquisition acquisition;
  std::optional<CoincidenceHistogram> histogram;
  std::optional<DecayHistogram> decay;
  double decay_origin = 0.0;  // ps; phase where the decay fit's x = 0
  std::optional<FitResult> fit;
  std::optional<PulsedG2Result> pulsed;
  RunSummary summary;
};

namespace detail {

template <typename F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PipelineError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(stage, e.what());
  }
}

inline double rep_period_of(const PumpDrive& drive) {
  if (const auto* s = std::get_if<SquareModulated>(&drive)) return period_ps(s->rep_rate);
  if (const auto* p = std::get_if<PulseTrain>(&drive)) return period_ps(p->rep_rate);
  return 0.0;
}

/// Background rate per detector for a given optical flux per detector arm.
inline double background_rate(const Scenario& s, double arm_flux_cps, const DetectorParams& det) {
  if (std::isinf(s.background_snr)) return 0.0;
  const double reference =
      s.background_reference == BackgroundReference::arm_flux ? arm_flux_cps : det.efficiency * arm_flux_cps;
  return reference / s.background_snr;
}

inline std::optional<Measurement> corrected(double g2, double sigma, double snr, std::vector<std::string>& notes) {
  if (std::isinf(snr)) return std::nullopt;
  const BackgroundModel bg(snr);
  try {
    const double rho2 = bg.rho() * bg.rho();
    return Measurement{background_correct(g2, bg), sigma / rho2};
  } catch (const InconsistentInput&) {
    notes.push_back("raw g2(0) is below the background floor 1 - rho^2; no corrected value");
    return std::nullopt;
  }
}

}  // namespace detail

/// Simulates the emitter and the two detectors. Lifetime scenarios send every
/// photon to detector A.
inline Acquisition acquire(const Scenario& s, const StageSeeds& seeds, std::size_t threads = 1) {
  const PumpWaveform waveform =
      detail::in_stage("waveform", [&] { return build_waveform(s.drive, s.cavity, s.laser_lambda); });
  SimConfig sim = s.sim;
  sim.seed = seeds.master;
  const std::vector<EmissionRecord> emissions = detail::in_stage("simulate", [&] {
    try {
      return simulate_trajectories(s.emitter, waveform, sim, s.trajectories, threads);
    } catch (const EventCapExceeded&) {
      throw PipelineError("simulate", "more than sim.max_events = " + std::to_string(sim.max_events) +
                                          " photons; shorten sim.duration_ps or raise the cap");
    }
  });

  Acquisition out;
  out.emissions = emissions.size();
  const double seconds = static_cast<double>(sim.duration) * 1e-12;
  detail::in_stage("detect", [&] {
    if (s.analysis == AnalysisKind::lifetime) {
      std::vector<std::uint64_t> times;
      times.reserve(emissions.size());
      for (const auto& e : emissions) times.push_back(e.time);
      out.background_rate = detail::background_rate(s, static_cast<double>(times.size()) / seconds, s.detector_a);
      out.a = detect(times, s.detector_a, out.background_rate, sim.duration, seeds.detector_a, Channel::A);
      out.b.channel = Channel::B;
      out.b.duration = sim.duration;
    } else {
      const SplitStreams split = hbt_split(emissions, seeds.split);
      const double arm_flux = 0.5 * static_cast<double>(emissions.size()) / seconds;
      out.background_rate = detail::background_rate(s, arm_flux, s.detector_a);
      const double background_b = detail::background_rate(s, arm_flux, s.detector_b);
      out.a = detect(split.a, s.detector_a, out.background_rate, sim.duration, seeds.detector_a, Channel::A);
      out.b = detect(split.b, s.detector_b, background_b, sim.duration, seeds.detector_b, Channel::B);
    }
    return 0;
  });
  return out;
}

/// CW antibunching dip: fit of the raw coincidence counts, delays in ns.
inline FitResult fit_cw_histogram(const CoincidenceHistogram& h, const FitOptions& options = {}) {
  std::vector<double> x(h.size()), y(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    x[i] = h.center(i) * 1e-3;
    y[i] = static_cast<double>(h.counts[i]);
  }
  const FitData data = FitData::counts(std::move(x), std::move(y));
  return fit(guess_g2cw(data), data, options);
}

inline void analyze_cw(RunResult& r) {
  const auto& h = *r.histogram;
  FitResult f = detail::in_stage("fit", [&] { return fit_cw_histogram(h); });
  auto& sum = r.summary;
  sum.g2_raw = Measurement{f.value("g2_zero"), f.sigma("g2_zero")};
  sum.tau0 = Measurement{f.value("tau0"), f.sigma("tau0")};
  sum.chi2_per_dof = f.chi2_per_dof;
  sum.converged = f.converged;
  sum.g2_corrected = detail::corrected(sum.g2_raw->value, sum.g2_raw->sigma, r.scenario.background_snr, sum.notes);
  r.fit = std::move(f);
}

inline void analyze_pulsed(RunResult& r) {
  const double period = detail::rep_period_of(r.scenario.drive);
  PulsedG2Result p = detail::in_stage(
      "fit", [&] { return pulsed_peak_analysis(*r.histogram, period, r.scenario.normalization); });
  auto& sum = r.summary;
  sum.g2_raw = p.g2_zero;
  sum.decay_rate = p.decay_rate;
  sum.valley_ratio = p.valley_ratio;
  sum.overlapping = p.overlapping;
  sum.degenerate = p.degenerate;
  sum.chi2_per_dof = p.fit.chi2_per_dof;
  sum.converged = p.fit.converged;
  if (p.overlapping) sum.notes.push_back("coincidence peaks overlap: valley/peak above threshold");
  if (p.degenerate) sum.notes.push_back("a fitted peak amplitude is negative; peak-area g2(0) is unreliable");
  sum.g2_corrected = detail::corrected(p.g2_zero.value, p.g2_zero.sigma, r.scenario.background_snr, sum.notes);
  r.fit = p.fit;
  r.pulsed = std::move(p);
}

/// Monoexponential tail of the excitation-phase histogram. x = 0 at the end of
/// the pump window.
inline FitResult fit_decay(const DecayHistogram& d, double origin, double fit_start, const FitOptions& options = {}) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < d.counts.size(); ++i) {
    const double left = static_cast<double>(i) * d.bin_width - origin;
    if (left < fit_start) continue;
    x.push_back((d.bin_center(i) - origin) * 1e-3);
    y.push_back(static_cast<double>(d.counts[i]));
  }
  const FitData data = FitData::counts(std::move(x), std::move(y));
  return fit(guess_monoexp(data), data, options);
}

inline void analyze_lifetime(RunResult& r) {
  const auto& s = r.scenario;
  const PumpWaveform waveform = build_waveform(s.drive, s.cavity, s.laser_lambda);
  r.decay_origin = waveform.segments().front().end;
  r.decay = detail::in_stage("decay_histogram", [&] {
    std::vector<EmissionRecord> clicks;
    clicks.reserve(r.acquisition.a.size());
    for (auto t : r.acquisition.a.times) clicks.push_back({t});
    return decay_histogram(clicks, waveform, s.lifetime.bin);
  });
  FitResult f = detail::in_stage("fit", [&] { return fit_decay(*r.decay, r.decay_origin, s.lifetime.fit_start); });
  r.summary.lifetime = Measurement{f.value("tau"), f.sigma("tau")};
  r.summary.chi2_per_dof = f.chi2_per_dof;
  r.summary.converged = f.converged;
  r.fit = std::move(f);
}

/// Runs a scenario in memory.
inline RunResult run_pipeline(const Scenario& s, std::size_t threads = 1) {
  RunResult r;
  r.scenario = s;
  r.seeds = StageSeeds::from(s.seed);
  r.acquisition = acquire(s, r.seeds, threads);
  if (s.analysis != AnalysisKind::lifetime) {
    r.histogram = detail::in_stage("correlate", [&] {
      return cross_correlate(r.acquisition.a, r.acquisition.b, s.correlation, s.correlation_chunks, threads);
    });
  }
  switch (s.analysis) {
    case AnalysisKind::cw_g2: analyze_cw(r); break;
    case AnalysisKind::pulsed: analyze_pulsed(r); break;
    case AnalysisKind::lifetime: analyze_lifetime(r); break;
    case AnalysisKind::none: break;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Cavity spectrum

/// Resonance sampled over +-span FWHM with multiplicative Gaussian noise.
inline FitData synthetic_spectrum(const CavityParams& cavity, const SpectrumSettings& settings, std::uint64_t seed) {
  cavity.validate();
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double half = settings.span_fwhm * cavity.fwhm();
  std::vector<double> x(settings.points), y(settings.points);
  for (std::size_t i = 0; i < settings.points; ++i) {
    x[i] = cavity.lambda_c - half + 2.0 * half * static_cast<double>(i) / static_cast<double>(settings.points - 1);
    y[i] = lorentzian_response(x[i], cavity) * (1.0 + settings.noise * gauss(rng));
  }
  return FitData::unweighted(std::move(x), std::move(y));
}

struct SpectrumResult {
  FitData data;
  FitResult fit;
  Measurement quality_factor;
};

inline SpectrumResult analyze_spectrum(const FitData& data, const FitOptions& options = {}) {
  SpectrumResult out{data, fit(guess_lorentzian(data), data, options), {}};
  const auto& f = out.fit;
  const auto c = f.index_of("center"), w = f.index_of("fwhm");
  const double center = f.values[c], fwhm = f.values[w];
  // Q = center / fwhm
  const double dc = 1.0 / fwhm, dw = -center / (fwhm * fwhm);
  const double var = dc * dc * f.covariance(c, c) + dw * dw * f.covariance(w, w) + 2.0 * dc * dw * f.covariance(c, w);
  out.quality_factor = {center / fwhm, std::sqrt(std::max(var, 0.0))};
  return out;
}

inline SpectrumResult spectrum_replicate(const Scenario& s, std::uint64_t replicate) {
  const std::uint64_t seed = derive_seed(s.seed, "spectrum", replicate);
  return analyze_spectrum(synthetic_spectrum(s.cavity, s.spectrum, seed));
}

// ---------------------------------------------------------------------------
// Power sweep

struct SweepPoint {
  double laser_power = 0.0;     // mW
  double shg_power = 0.0;       // (P L)^2, mW^2; proportional to up-converted power
  double pump_rate = 0.0;       // 1/ns
  double emission_rate = 0.0;   // simulated photons/s
  double detected_rate = 0.0;   // clicks/s, both detectors
  double predicted_rate = 0.0;  // clicks/s, both detectors, no dead time
  std::uint64_t duration = 0;   // ps
};

/// Expected clicks/s summed over both detectors, ignoring dead time.
inline double predicted_click_rate(const Scenario& s, double pump_rate) {
  const double emission = s.emitter.gamma * stationary_population(s.emitter, pump_rate).excited * 1e9;
  const double arm = 0.5 * emission;
  return arm * (s.detector_a.efficiency + s.detector_b.efficiency) + s.detector_a.dark_rate + s.detector_b.dark_rate +
         detail::background_rate(s, arm, s.detector_a) + detail::background_rate(s, arm, s.detector_b);
}

/// Each point runs for events_per_point predicted clicks (or sim.duration_ps
/// when nothing is expected) with its own derived master seed.
inline std::vector<SweepPoint> power_sweep(const Scenario& s, std::span<const double> powers, std::size_t threads = 1) {
  if (!s.is_cw()) throw ConfigError("drive.kind", "power sweep needs a cw drive");
  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    SweepPoint p;
    p.laser_power = powers[i];
    const double coupled = p.laser_power * lorentzian_response(s.laser_lambda, s.cavity);
    p.shg_power = coupled * coupled;
    p.pump_rate = shg_pump_rate(p.laser_power, s.laser_lambda, s.cavity);
    p.predicted_rate = predicted_click_rate(s, p.pump_rate);
    p.duration = p.predicted_rate > 0.0
                     ? static_cast<std::uint64_t>(std::ceil(s.sweep.events_per_point / p.predicted_rate * 1e12))
                     : s.sim.duration;

    Scenario point = s;
    point.drive = ContinuousWave{p.laser_power};
    point.sim.duration = p.duration;
    point.analysis = AnalysisKind::none;
    const Acquisition acq = acquire(point, StageSeeds::from(derive_seed(s.seed, "sweep", i)), threads);
    const double seconds = static_cast<double>(p.duration) * 1e-12;
    p.emission_rate = static_cast<double>(acq.emissions) / seconds;
    p.detected_rate = static_cast<double>(acq.a.size() + acq.b.size()) / seconds;
    out.push_back(p);
  }
  return out;
}

inline std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream os;
  os << "laser_power_mw,shg_power_mw2,pump_rate_ns_inv,emission_rate_cps,detected_rate_cps,predicted_rate_cps,"
        "duration_ps\n";
  for (const auto& p : points) {
    os << exact(p.laser_power) << ',' << exact(p.shg_power) << ',' << exact(p.pump_rate) << ','
       << exact(p.emission_rate) << ',' << exact(p.detected_rate) << ',' << exact(p.predicted_rate) << ','
       << p.duration << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {

inline std::string pm(const Measurement& m, int digits = 4) { return fixed(m.value, digits) + " +- " + fixed(m.sigma, digits); }

inline void fit_table(std::ostringstream& os, const FitResult& f) {
  os << "fit model       " << model_name(kind_of(f.model)) << '\n';
  os << "chi2/dof        " << fixed(f.chi2_per_dof, 3) << "  (dof " << f.dof << ")\n";
  os << "converged       " << (f.converged ? "yes" : "no") << " after " << f.iterations << " iterations\n";
  os << "parameters\n";
  for (std::size_t i = 0; i < f.names.size(); ++i) {
    char line[160];
    std::snprintf(line, sizeof line, "  %-16s %14.6g +- %.3g\n", f.names[i].c_str(), f.values[i], f.sigmas[i]);
    os << line;
  }
}

}  // namespace detail

inline std::string format_report(const RunResult& r) {
  const auto& s = r.scenario;
  const auto& sum = r.summary;
  std::ostringstream os;
  os << "scenario        " << s.name << '\n';
  os << "master seed     " << r.seeds.master << '\n';
  os << "duration        " << s.sim.duration << " ps\n";
  os << "emissions       " << r.acquisition.emissions << '\n';
  os << "clicks A / B    " << r.acquisition.a.size() << " / " << r.acquisition.b.size() << '\n';
  os << "background      " << fixed(r.acquisition.background_rate, 1) << " counts/s per detector";
  if (!std::isinf(s.background_snr)) {
    os << " (S/N " << s.background_snr << ", "
       << (s.background_reference == BackgroundReference::arm_flux ? "arm flux" : "detected") << " reference)";
  }
  os << '\n';
  if (r.histogram) os << "pairs           " << r.histogram->total_pairs << '\n';
  if (sum.g2_raw) os << "g2(0) raw       " << detail::pm(*sum.g2_raw) << '\n';
  if (sum.g2_corrected) os << "g2(0) corrected " << detail::pm(*sum.g2_corrected) << '\n';
  if (sum.tau0) os << "tau0            " << detail::pm(*sum.tau0, 3) << " ns\n";
  if (sum.lifetime) os << "lifetime        " << detail::pm(*sum.lifetime, 3) << " ns\n";
  if (sum.decay_rate) os << "peak decay      " << detail::pm(*sum.decay_rate, 3) << " 1/ns\n";
  if (sum.valley_ratio) {
    os << "valley/peak     " << fixed(*sum.valley_ratio, 3) << (sum.overlapping ? "  OVERLAPPING" : "") << '\n';
  }
  if (r.pulsed) {
    os << "peak areas (counts ns)\n";
    for (const auto& [k, a] : r.pulsed->peak_areas) {
      char line[96];
      std::snprintf(line, sizeof line, "  %4d %14.2f +- %.2f\n", k, a.value, a.sigma);
      os << line;
    }
  }
  if (r.fit) detail::fit_table(os, *r.fit);
  for (const auto& n : sum.notes) os << "note: " << n << '\n';
  os << "uncertainties are one standard deviation from the fit covariance scaled by chi2/dof\n";
  return os.str();
}

/// Machine-readable `key = value` summary, same syntax as the config files.
inline std::string format_summary(const RunResult& r) {
  std::ostringstream os;
  const auto& sum = r.summary;
  auto put = [&](const char* key, const std::optional<Measurement>& m) {
    if (!m) return;
    os << key << " = " << exact(m->value) << '\n' << key << "_err = " << exact(m->sigma) << '\n';
  };
  os << "scenario = " << r.scenario.name << '\n';
  os << "emissions = " << r.acquisition.emissions << '\n';
  os << "clicks_a = " << r.acquisition.a.size() << "\nclicks_b = " << r.acquisition.b.size() << '\n';
  if (r.histogram) os << "pairs = " << r.histogram->total_pairs << '\n';
  put("g2_raw", sum.g2_raw);
  put("g2_corrected", sum.g2_corrected);
  put("tau0_ns", sum.tau0);
  put("lifetime_ns", sum.lifetime);
  put("peak_decay_ns_inv", sum.decay_rate);
  if (sum.valley_ratio) os << "valley_ratio = " << exact(*sum.valley_ratio) << '\n';
  if (r.pulsed) os << "overlapping = " << (sum.overlapping ? "true" : "false") << '\n';
  if (r.pulsed) os << "degenerate = " << (sum.degenerate ? "true" : "false") << '\n';
  if (sum.chi2_per_dof) os << "chi2_per_dof = " << exact(*sum.chi2_per_dof) << '\n';
  if (r.fit) os << "converged = " << (sum.converged ? "true" : "false") << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Manifest and artifacts

inline std::string canonical_config(const Config& c) {
  std::ostringstream os;
  for (const auto& [k, v] : c.entries()) os << k << " = " << v << '\n';
  return os.str();
}

inline nlohmann::json manifest_header(const Config& config, std::uint64_t master, const std::string& command) {
  nlohmann::json m;
  m["format_version"] = kManifestFormat;
  m["command"] = command;
  m["scenario_hash"] = sha256_hex(canonical_config(config));
  m["config"] = config.entries();
  m["master_seed"] = master;
  m["versions"] = {{"antibunch", kVersion},
                   {"timetag_format", kTagVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)}};
  return m;
}

inline nlohmann::json seeds_json(const Scenario& s, const StageSeeds& seeds) {
  nlohmann::json j;
  j["master"] = seeds.master;
  nlohmann::json emitter = nlohmann::json::array();
  for (std::size_t i = 0; i < s.trajectories; ++i) emitter.push_back(derive_seed(seeds.master, "emitter", i));
  j["emitter"] = emitter;
  j["hbt_split"] = seeds.split;
  j["detector_a"] = seeds.detector_a;
  j["detector_b"] = seeds.detector_b;
  j["spectrum"] = seeds.spectrum;
  return j;
}

struct RunOptions {
  std::filesystem::path out_dir = "out";
  std::size_t threads = 1;
  std::optional<std::uint64_t> seed;
  std::optional<bool> plots;
};

inline std::string timetag_bytes(const Acquisition& acq) {
  std::ostringstream os(std::ios::binary);
  const auto tags = merge_channels(acq.a, acq.b);
  write_timetags(os, tags);
  return os.str();
}

inline std::string decay_csv(const DecayHistogram& d) {
  std::ostringstream os;
  os << "# bin_width_ps = " << exact(d.bin_width) << '\n' << "phase_ps_left_edge,counts\n";
  for (std::size_t i = 0; i < d.counts.size(); ++i) {
    os << exact(static_cast<double>(i) * d.bin_width) << ',' << d.counts[i] << '\n';
  }
  return os.str();
}

inline void add_run_plots(ArtifactSet& files, const RunResult& r) {
  if (r.histogram && r.histogram->rate_a > 0.0 && r.histogram->rate_b > 0.0) {
    const auto& h = *r.histogram;
    const NormalizedHistogram n = normalize(h);
    PlotSeries data{"data", {}, n.g2, "#1f4e9c", true};
    for (double t : n.tau_left) data.x.push_back(t * 1e-3);
    std::vector<PlotSeries> series{data};
    if (r.fit) {
      PlotSeries model{"fit", {}, {}, "#c0392b", false};
      for (std::size_t i = 0; i < h.size(); ++i) {
        model.x.push_back(h.center(i) * 1e-3);
        model.y.push_back(evaluate(r.fit->model, h.center(i) * 1e-3) / n.normalization);
      }
      series.push_back(model);
    }
    files.add("g2.svg", svg_plot(r.scenario.name + ": coincidences", "delay (ns)", "g2", series));
  }
  if (r.decay) {
    PlotSeries data{"data", {}, {}, "#1f4e9c", true};
    for (std::size_t i = 0; i < r.decay->counts.size(); ++i) {
      data.x.push_back(static_cast<double>(i) * r.decay->bin_width * 1e-3);
      data.y.push_back(static_cast<double>(r.decay->counts[i]));
    }
    std::vector<PlotSeries> series{data};
    if (r.fit) {
      PlotSeries model{"fit", {}, {}, "#c0392b", false};
      for (std::size_t i = 0; i < r.decay->counts.size(); ++i) {
        const double x = (r.decay->bin_center(i) - r.decay_origin) * 1e-3;
        if (x * 1e3 < r.scenario.lifetime.fit_start) continue;
        model.x.push_back(r.decay->bin_center(i) * 1e-3);
        model.y.push_back(evaluate(r.fit->model, x));
      }
      series.push_back(model);
    }
    files.add("decay.svg", svg_plot(r.scenario.name + ": decay", "time after pulse start (ns)", "counts", series));
  }
}

/// Writes the artifacts of a finished run and returns the manifest path.
inline std::filesystem::path write_run_artifacts(const RunResult& r, const Config& config, const RunOptions& options,
                                                 const std::string& command = "run") {
  std::filesystem::create_directories(options.out_dir);
  ArtifactSet files(options.out_dir);
  const auto& s = r.scenario;
  if (s.outputs.timetags) files.add("timetags.ptag", timetag_bytes(r.acquisition));
  if (s.outputs.histogram && r.histogram) files.add("histogram.csv", histogram_csv(*r.histogram));
  if (s.outputs.histogram && r.decay) files.add("decay.csv", decay_csv(*r.decay));
  if (s.outputs.report) {
    files.add("report.txt", format_report(r));
    files.add("summary.kv", format_summary(r));
  }
  if (options.plots.value_or(s.outputs.plots)) add_run_plots(files, r);
  nlohmann::json m = manifest_header(config, r.seeds.master, command);
  m["scenario"] = s.name;
  m["seeds"] = seeds_json(s, r.seeds);
  m["duration_ps"] = s.sim.duration;
  return files.write_manifest(m);
}

/// Applies CLI overrides to a parsed config before building the scenario.
inline Config with_overrides(Config config, const RunOptions& options) {
  if (options.seed) config.set("seed", std::to_string(*options.seed));
  return config;
}

struct ScenarioRun {
  RunResult result;
  std::filesystem::path manifest;
};

/// Full run from a config file. Nothing is written if the config is invalid.
inline ScenarioRun run_scenario(const std::filesystem::path& config_path, const RunOptions& options) {
  const Config config = with_overrides(Config::load(config_path), options);
  Scenario s = parse_scenario(config);
  if (!config.has("name")) s.name = config_path.stem().string();
  RunResult r = run_pipeline(s, options.threads);
  const auto manifest = detail::in_stage("write", [&] { return write_run_artifacts(r, config, options); });
  return {std::move(r), manifest};
}

}  // namespace antibunch
