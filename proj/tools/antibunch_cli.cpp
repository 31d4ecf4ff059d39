// antibunch command-line driver.
//
//   antibunch run --config scenarios/cw_fig2.cfg --out-dir out/cw
//   antibunch simulate --config scenarios/cw_fig2.cfg --out-dir out/tags
//   antibunch correlate --input out/tags/timetags.ptag --bin-width-ps 100 --max-tau-ps 20000
//   antibunch fit --input out/cw/histogram.csv --config scenarios/cw_fig2.cfg
//   antibunch spectrum --config scenarios/spectrum.cfg
//   antibunch sweep --config scenarios/sweep.cfg
//
// Exit codes: 0 success, 2 config error, 3 pipeline error, 4 fit did not converge.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "antibunch/pipeline.hpp"

namespace ab = antibunch;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kPipelineError = 3;
constexpr int kNotConverged = 4;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool plots = false;
  std::size_t threads = 1;

  ab::RunOptions options() const {
    ab::RunOptions o;
    o.out_dir = out_dir;
    o.threads = threads;
    o.seed = seed;
    if (plots) o.plots = true;
    return o;
  }
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "scenario config file");
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "override the master seed");
  cmd->add_option("--out-dir", c.out_dir, "directory for artifacts")->capture_default_str();
  cmd->add_flag("--plots", c.plots, "also write SVG plots");
  cmd->add_option("--threads", c.threads, "worker threads (output does not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

struct Loaded {
  ab::Config config;
  ab::Scenario scenario;
};

Loaded load(const Common& c) {
  ab::Config config = ab::with_overrides(ab::Config::load(c.config), c.options());
  ab::Scenario s = ab::parse_scenario(config);
  if (!config.has("name")) s.name = fs::path(c.config).stem().string();
  return {std::move(config), std::move(s)};
}

void print_summary(const ab::RunResult& r) {
  const auto& s = r.summary;
  auto cell = [](const std::optional<ab::Measurement>& m, int digits) {
    return m ? ab::fixed(m->value, digits) + " +- " + ab::fixed(m->sigma, digits) : std::string("-");
  };
  std::printf("%-18s %-22s %-22s %-18s %-18s\n", "scenario", "g2(0) raw", "g2(0) corrected", "tau0 (ns)",
              "lifetime (ns)");
  std::printf("%-18s %-22s %-22s %-18s %-18s\n", r.scenario.name.c_str(), cell(s.g2_raw, 3).c_str(),
              cell(s.g2_corrected, 3).c_str(), cell(s.tau0, 3).c_str(), cell(s.lifetime, 3).c_str());
  if (s.valley_ratio) {
    std::printf("valley/peak %.3f%s\n", *s.valley_ratio, s.overlapping ? " (peaks overlap)" : "");
  }
  for (const auto& n : s.notes) std::printf("note: %s\n", n.c_str());
}

int cmd_run(const Common& c) {
  const ab::RunOptions options = c.options();
  const auto run = ab::run_scenario(c.config, options);
  print_summary(run.result);
  std::printf("manifest: %s\n", run.manifest.string().c_str());
  return run.result.summary.converged ? kOk : kNotConverged;
}

int cmd_simulate(const Common& c) {
  Loaded l = load(c);
  l.scenario.analysis = ab::AnalysisKind::none;
  ab::RunResult r;
  r.scenario = l.scenario;
  r.seeds = ab::StageSeeds::from(l.scenario.seed);
  r.acquisition = ab::acquire(l.scenario, r.seeds, c.threads);
  const ab::RunOptions options = c.options();
  fs::create_directories(options.out_dir);
  ab::ArtifactSet files(options.out_dir);
  files.add("timetags.ptag", ab::timetag_bytes(r.acquisition));
  nlohmann::json m = ab::manifest_header(l.config, r.seeds.master, "simulate");
  m["scenario"] = l.scenario.name;
  m["seeds"] = ab::seeds_json(l.scenario, r.seeds);
  m["duration_ps"] = l.scenario.sim.duration;
  const auto path = files.write_manifest(m);
  std::printf("emissions %llu, clicks A %zu, B %zu\nmanifest: %s\n",
              static_cast<unsigned long long>(r.acquisition.emissions), r.acquisition.a.size(),
              r.acquisition.b.size(), path.string().c_str());
  return kOk;
}

struct CorrelateArgs {
  std::string input;
  std::optional<std::uint64_t> duration;
  std::optional<std::int64_t> bin_width;
  std::optional<std::int64_t> max_tau;
  std::string mode;
  std::size_t chunks = 8;
};

int cmd_correlate(const Common& c, const CorrelateArgs& a) {
  ab::CorrelationConfig cc;
  std::size_t chunks = a.chunks;
  if (!c.config.empty()) {
    const Loaded l = load(c);
    cc = l.scenario.correlation;
    chunks = l.scenario.correlation_chunks;
  }
  if (a.bin_width) cc.bin_width = *a.bin_width;
  if (a.max_tau) cc.max_tau = *a.max_tau;
  if (a.mode == "full") cc.mode = ab::CorrelationMode::full_cross_correlation;
  else if (a.mode == "start_stop") cc.mode = ab::CorrelationMode::start_stop;
  else if (!a.mode.empty()) throw ab::ConfigError("--mode", "expected full or start_stop");
  try {
    cc.validate();
  } catch (const ab::InvalidArgument& e) {
    throw ab::ConfigError("correlation", e.what());
  }

  const std::string bytes = ab::detail::in_stage("read", [&] { return ab::read_file(a.input); });
  const auto tags = ab::detail::in_stage("read", [&] {
    std::istringstream in(bytes);
    return ab::read_timetags(in);
  });
  auto [sa, sb] = ab::split_channels(tags, a.duration);
  const auto hist = ab::detail::in_stage("correlate", [&] { return ab::cross_correlate(sa, sb, cc, chunks, c.threads); });

  const ab::RunOptions options = c.options();
  fs::create_directories(options.out_dir);
  ab::ArtifactSet files(options.out_dir);
  files.add("histogram.csv", ab::histogram_csv(hist));
  nlohmann::json m;
  m["format_version"] = ab::kManifestFormat;
  m["command"] = "correlate";
  m["inputs"] = {{{"path", a.input}, {"sha256", ab::sha256_hex(bytes)}}};
  m["correlation"] = {{"bin_width_ps", cc.bin_width},
                      {"max_tau_ps", cc.max_tau},
                      {"mode", cc.mode == ab::CorrelationMode::start_stop ? "start_stop" : "full"},
                      {"chunks", chunks},
                      {"duration_ps", sa.duration}};
  m["versions"] = {{"antibunch", ab::kVersion}, {"timetag_format", ab::kTagVersion}};
  const auto path = files.write_manifest(m);
  std::printf("tags %zu, pairs %llu\nmanifest: %s\n", tags.size(), static_cast<unsigned long long>(hist.total_pairs),
              path.string().c_str());
  return kOk;
}

struct FitArgs {
  std::string input;
  std::string model;
  std::optional<double> rep_rate;
  std::optional<double> snr;
};

int cmd_fit(const Common& c, const FitArgs& a) {
  ab::Scenario s;
  s.name = fs::path(a.input).stem().string();
  if (!c.config.empty()) s = load(c).scenario;
  if (a.model == "cw_g2") s.analysis = ab::AnalysisKind::cw_g2;
  else if (a.model == "pulsed") s.analysis = ab::AnalysisKind::pulsed;
  else if (!a.model.empty()) throw ab::ConfigError("--model", "expected cw_g2 or pulsed");
  if (a.rep_rate) s.drive = ab::SquareModulated{0.0, *a.rep_rate, 0.5, ab::kInfinity};
  if (a.snr) s.background_snr = *a.snr;
  if (s.analysis != ab::AnalysisKind::cw_g2 && s.analysis != ab::AnalysisKind::pulsed) {
    throw ab::ConfigError("--model", "choose cw_g2 or pulsed (or pass a config with analysis.kind)");
  }
  if (s.analysis == ab::AnalysisKind::pulsed && ab::detail::rep_period_of(s.drive) <= 0.0) {
    throw ab::ConfigError("--rep-rate-mhz", "pulsed fits need the repetition rate");
  }

  const std::string bytes = ab::detail::in_stage("read", [&] { return ab::read_file(a.input); });
  ab::RunResult r;
  r.scenario = s;
  r.histogram = ab::detail::in_stage("read", [&] { return ab::parse_histogram_csv(bytes); });
  if (s.analysis == ab::AnalysisKind::cw_g2) ab::analyze_cw(r);
  else ab::analyze_pulsed(r);

  const ab::RunOptions options = c.options();
  fs::create_directories(options.out_dir);
  ab::ArtifactSet files(options.out_dir);
  std::ostringstream report;
  report << "input           " << a.input << '\n';
  if (r.summary.g2_raw) report << "g2(0) raw       " << ab::detail::pm(*r.summary.g2_raw) << '\n';
  if (r.summary.g2_corrected) report << "g2(0) corrected " << ab::detail::pm(*r.summary.g2_corrected) << '\n';
  if (r.summary.tau0) report << "tau0            " << ab::detail::pm(*r.summary.tau0, 3) << " ns\n";
  if (r.summary.valley_ratio) report << "valley/peak     " << ab::fixed(*r.summary.valley_ratio, 3) << '\n';
  ab::detail::fit_table(report, *r.fit);
  for (const auto& n : r.summary.notes) report << "note: " << n << '\n';
  files.add("fit_report.txt", report.str());
  files.add("fit_summary.kv", ab::format_summary(r));
  if (options.plots.value_or(false)) ab::add_run_plots(files, r);
  nlohmann::json m;
  m["format_version"] = ab::kManifestFormat;
  m["command"] = "fit";
  m["inputs"] = {{{"path", a.input}, {"sha256", ab::sha256_hex(bytes)}}};
  m["versions"] = {{"antibunch", ab::kVersion}};
  files.write_manifest(m);
  std::fputs(report.str().c_str(), stdout);
  return r.summary.converged ? kOk : kNotConverged;
}

int cmd_spectrum(const Common& c) {
  const Loaded l = load(c);
  const auto res = ab::spectrum_replicate(l.scenario, 0);
  const ab::RunOptions options = c.options();
  fs::create_directories(options.out_dir);
  ab::ArtifactSet files(options.out_dir);
  std::ostringstream csv;
  csv << "wavelength_nm,signal\n";
  for (std::size_t i = 0; i < res.data.size(); ++i) csv << ab::exact(res.data.x[i]) << ',' << ab::exact(res.data.y[i]) << '\n';
  files.add("spectrum.csv", csv.str());
  std::ostringstream report;
  report << "scenario        " << l.scenario.name << '\n';
  report << "Q               " << ab::fixed(res.quality_factor.value, 1) << " +- " << ab::fixed(res.quality_factor.sigma, 1)
         << '\n';
  ab::detail::fit_table(report, res.fit);
  files.add("spectrum_report.txt", report.str());
  if (options.plots.value_or(l.scenario.outputs.plots)) {
    ab::PlotSeries data{"data", res.data.x, res.data.y, "#1f4e9c", false};
    ab::PlotSeries model{"fit", res.data.x, {}, "#c0392b", false};
    for (double x : res.data.x) model.y.push_back(ab::evaluate(res.fit.model, x));
    files.add("spectrum.svg", ab::svg_plot(l.scenario.name + ": cavity resonance", "wavelength (nm)", "signal",
                                           {data, model}));
  }
  nlohmann::json m = ab::manifest_header(l.config, l.scenario.seed, "spectrum");
  m["scenario"] = l.scenario.name;
  m["seeds"] = {{"spectrum", ab::derive_seed(l.scenario.seed, "spectrum", 0)}};
  files.write_manifest(m);
  std::fputs(report.str().c_str(), stdout);
  return res.fit.converged ? kOk : kNotConverged;
}

int cmd_sweep(const Common& c) {
  const Loaded l = load(c);
  if (l.scenario.sweep.powers.empty()) throw ab::ConfigError("sweep.powers_mw", "no powers given");
  const auto points = ab::power_sweep(l.scenario, l.scenario.sweep.powers, c.threads);
  const ab::RunOptions options = c.options();
  fs::create_directories(options.out_dir);
  ab::ArtifactSet files(options.out_dir);
  files.add("sweep.csv", ab::sweep_csv(points));
  if (options.plots.value_or(l.scenario.outputs.plots)) {
    ab::PlotSeries measured{"detected", {}, {}, "#1f4e9c", false};
    ab::PlotSeries predicted{"predicted", {}, {}, "#c0392b", false};
    for (const auto& p : points) {
      measured.x.push_back(p.shg_power);
      measured.y.push_back(p.detected_rate);
      predicted.x.push_back(p.shg_power);
      predicted.y.push_back(p.predicted_rate);
    }
    files.add("sweep.svg", ab::svg_plot(l.scenario.name + ": count rate", "(P L)^2 (mW^2)", "clicks/s",
                                        {measured, predicted}));
  }
  nlohmann::json m = ab::manifest_header(l.config, l.scenario.seed, "sweep");
  m["scenario"] = l.scenario.name;
  nlohmann::json seeds = nlohmann::json::array();
  for (std::size_t i = 0; i < points.size(); ++i) seeds.push_back(ab::derive_seed(l.scenario.seed, "sweep", i));
  m["seeds"] = {{"points", seeds}};
  files.write_manifest(m);
  std::printf("%12s %14s %14s %14s %14s\n", "power_mw", "pump_ns_inv", "detected_cps", "predicted_cps", "ratio");
  for (const auto& p : points) {
    std::printf("%12.4g %14.5g %14.6g %14.6g %14.5f\n", p.laser_power, p.pump_rate, p.detected_rate,
                p.predicted_rate, p.predicted_rate > 0 ? p.detected_rate / p.predicted_rate : 0.0);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon-antibunching simulator and coincidence analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ab::kVersion);

  Common common;
  CorrelateArgs corr;
  FitArgs fit;

  auto* run = app.add_subcommand("run", "full scenario: simulate, detect, correlate, fit, correct");
  add_common(run, common, true);
  auto* simulate = app.add_subcommand("simulate", "write detector time tags for a scenario");
  add_common(simulate, common, true);
  auto* correlate = app.add_subcommand("correlate", "time-tag file to coincidence histogram CSV");
  add_common(correlate, common, false);
  correlate->add_option("--input", corr.input, "PTAG time-tag file")->required()->check(CLI::ExistingFile);
  correlate->add_option("--duration-ps", corr.duration, "acquisition length (default: last tag + 1)");
  correlate->add_option("--bin-width-ps", corr.bin_width, "histogram bin width");
  correlate->add_option("--max-tau-ps", corr.max_tau, "window half-width");
  correlate->add_option("--mode", corr.mode, "full or start_stop");
  correlate->add_option("--chunks", corr.chunks, "work partitions")->check(CLI::PositiveNumber);
  auto* fitcmd = app.add_subcommand("fit", "histogram CSV to fit report");
  add_common(fitcmd, common, false);
  fitcmd->add_option("--input", fit.input, "histogram CSV")->required()->check(CLI::ExistingFile);
  fitcmd->add_option("--model", fit.model, "cw_g2 or pulsed");
  fitcmd->add_option("--rep-rate-mhz", fit.rep_rate, "repetition rate for pulsed fits");
  fitcmd->add_option("--snr", fit.snr, "signal-to-background ratio for the correction");
  auto* spectrum = app.add_subcommand("spectrum", "synthetic cavity spectrum and Lorentzian fit");
  add_common(spectrum, common, true);
  auto* sweep = app.add_subcommand("sweep", "count rate against laser power");
  add_common(sweep, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(common);
    if (*simulate) return cmd_simulate(common);
    if (*correlate) return cmd_correlate(common, corr);
    if (*fitcmd) return cmd_fit(common, fit);
    if (*spectrum) return cmd_spectrum(common);
    if (*sweep) return cmd_sweep(common);
  } catch (const ab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ab::PipelineError& e) {
    std::cerr << "pipeline error in stage " << e.stage() << ": " << e.what() << '\n';
    return kPipelineError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPipelineError;
  }
  return kOk;
}
