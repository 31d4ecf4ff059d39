// Acceptance checks. `acceptance` runs all of them; `acceptance --criterion N`
// runs one. Prints one PASS/FAIL line per criterion and exits nonzero if any
// failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "antibunch/pipeline.hpp"
#include "oracles.hpp"

using namespace antibunch;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string scenario_path(const char* name) { return std::string(ANTIBUNCH_SCENARIO_DIR) + "/" + name; }

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome correction_arithmetic() {
  const BackgroundModel bg(10.0);
  const double raw[3] = {0.43, 0.49, 0.40};
  const double want[3] = {0.310, 0.383, 0.274};
  bool ok = true;
  std::string d;
  for (int i = 0; i < 3; ++i) {
    const double got = background_correct(raw[i], bg);
    ok = ok && std::abs(got - want[i]) <= 0.001;
    d += fmt("%.2f -> %.4f (want %.3f) ", raw[i], got, want[i]);
  }
  return {ok, d};
}

// Mean of 1 - exp(-k |tau|) over [lo, hi), lo and hi on the same side of 0.
double bin_mean(double k, double lo, double hi) {
  auto tail = [k](double x) { return (1.0 - std::exp(-k * x)) / k; };  // int_0^x exp(-k t) dt
  const double a = std::min(std::abs(lo), std::abs(hi)), b = std::max(std::abs(lo), std::abs(hi));
  return 1.0 - (tail(b) - tail(a)) / (b - a);
}

Outcome cw_analytic() {
  Scenario s;
  s.name = "cw_oracle";
  s.seed = 4242;
  s.emitter.gamma = 1.0 / 2.4;
  s.cavity.shg_coefficient = 1e-3;
  const double rp = 0.04;
  s.drive = ContinuousWave{std::sqrt(rp / s.cavity.shg_coefficient)};
  s.detector_a = s.detector_b = DetectorParams::ideal();
  s.correlation = {100, 20'000, CorrelationMode::full_cross_correlation};
  s.sim.duration = 20'000'000'000;  // 20 ms
  s.analysis = AnalysisKind::cw_g2;
  const RunResult r = run_pipeline(s);
  const auto& h = *r.histogram;

  const double k = (s.emitter.gamma + rp) * 1e-3;  // 1/ps
  const double norm = h.rate_a * h.rate_b * static_cast<double>(h.duration) * 1e-12 * h.bin_width() * 1e-12;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double expect = norm * bin_mean(k, h.left_edge(i), h.left_edge(i) + h.bin_width());
    const double diff = static_cast<double>(h.counts[i]) - expect;
    chi2 += diff * diff / expect;
  }
  const double chi2_dof = chi2 / static_cast<double>(h.size());
  const double tau0 = r.summary.tau0->value, sigma_tau0 = r.summary.tau0->sigma;
  const double inv = 1.0 / tau0, sigma_inv = sigma_tau0 / (tau0 * tau0);
  const double want = s.emitter.gamma + rp;
  const bool ok = h.total_pairs >= 100'000 && h.size() >= 100 && chi2_dof < 1.5 &&
                  std::abs(inv - want) <= 3.0 * sigma_inv;
  return {ok, fmt("pairs %.0f, bins %.0f, chi2/dof %.3f, 1/tau0 = ", static_cast<double>(h.total_pairs),
                  static_cast<double>(h.size()), chi2_dof) +
                  fmt("%.4f +- %.4f /ns (want %.4f)", inv, sigma_inv, want)};
}

Outcome cw_fig2() {
  const RunResult r = run_pipeline(load_scenario(scenario_path("cw_fig2.cfg")));
  const auto& sum = r.summary;
  if (!sum.g2_raw || !sum.g2_corrected || !sum.tau0) return {false, "missing fit results"};
  const double raw = sum.g2_raw->value, cor = sum.g2_corrected->value, tau0 = sum.tau0->value;
  const bool ok = raw >= 0.33 && raw <= 0.53 && cor >= 0.24 && cor <= 0.38 && tau0 >= 1.9 && tau0 <= 2.7;
  return {ok, fmt("raw g2(0) %.3f, corrected %.3f, tau0 %.3f ns", raw, cor, tau0)};
}

Outcome lifetime() {
  const RunResult r = run_pipeline(load_scenario(scenario_path("lifetime_80mhz.cfg")));
  const double events = static_cast<double>(r.acquisition.a.size());
  const double tau = r.summary.lifetime->value;
  const bool ok = events >= 1e5 && tau >= 2.3 && tau <= 2.5;
  return {ok, fmt("%.0f detected events, tau %.4f +- %.4f ns", events, tau, r.summary.lifetime->sigma)};
}

Outcome pulsed_100() {
  const Scenario s = load_scenario(scenario_path("pulsed_100mhz.cfg"));
  const RunResult r = run_pipeline(s);
  const auto& sum = r.summary;
  if (!sum.g2_raw || !sum.g2_corrected) return {false, "missing g2(0)"};
  const double g = sum.g2_raw->value, c = sum.g2_corrected->value;
  const bool ok = s.emitter.shelving_rate == 0.0 && g >= 0.38 && g <= 0.59 && g < 0.5 && std::abs(c - 0.38) <= 0.10;
  return {ok, fmt("g2(0) %.4f +- %.4f, corrected %.4f, valley/peak %.3f", g, sum.g2_raw->sigma, c,
                  sum.valley_ratio.value_or(NAN))};
}

Outcome pulsed_300() {
  const RunResult r = run_pipeline(load_scenario(scenario_path("pulsed_300mhz.cfg")));
  const auto& sum = r.summary;
  const double g = sum.g2_raw ? sum.g2_raw->value : NAN;
  const bool ok = g >= 0.28 && g <= 0.52 && sum.overlapping;
  return {ok, fmt("g2(0) %.4f, valley/peak %.3f, overlapping %.0f, degenerate fit %.0f", g,
                  sum.valley_ratio.value_or(NAN), sum.overlapping, sum.degenerate)};
}

Outcome quality_factor() {
  const Scenario s = load_scenario(scenario_path("spectrum.cfg"));
  int good = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const double q = spectrum_replicate(s, i).quality_factor.value;
    good += std::abs(q / s.cavity.q_factor - 1.0) <= 0.02;
  }
  return {good >= 95, fmt("%.0f of 100 replicates within 2%% of Q = %.0f", good, s.cavity.q_factor)};
}

Outcome correlator_exactness() {
  std::mt19937_64 rng(8);
  int exact_matches = 0, identical = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::uniform_int_distribution<std::uint64_t> n(0, 1000), span(1, 2'000'000);
    std::uniform_int_distribution<std::int64_t> bin(1, 500);
    const std::uint64_t duration = span(rng);
    auto draw = [&](std::size_t count) {
      std::uniform_int_distribution<std::uint64_t> t(0, duration - 1);
      std::vector<std::uint64_t> v(count);
      for (auto& x : v) x = t(rng);
      std::sort(v.begin(), v.end());
      return v;
    };
    const auto a = oracle::stream(draw(n(rng)), duration, Channel::A);
    const auto b = oracle::stream(draw(n(rng)), duration, Channel::B);
    const std::int64_t width = bin(rng);
    std::uniform_int_distribution<std::int64_t> win(width, 60 * width);
    const CorrelationConfig cfg{width, win(rng), CorrelationMode::full_cross_correlation};
    const auto single = cross_correlate(a, b, cfg);
    exact_matches += single.counts == oracle::brute_force_pairs(a.times, b.times, cfg.bin_width, cfg.max_tau);
    const auto chunked = cross_correlate(a, b, cfg, 7, 4);
    identical += chunked == single;
  }
  return {exact_matches == 100 && identical == 100,
          fmt("%.0f/100 exact against brute force, %.0f/100 chunked-parallel identical", exact_matches, identical)};
}

Outcome saturation() {
  const Scenario s = load_scenario(scenario_path("sweep.cfg"));
  const double gamma = s.emitter.gamma;
  std::vector<double> ratios{0.05, 0.5, 5.0}, powers;
  for (double x : ratios) powers.push_back(std::sqrt(x * gamma / s.cavity.shg_coefficient));
  Scenario point = s;
  point.sweep.events_per_point = 1e6;
  const auto pts = power_sweep(point, powers);
  const double eta = 0.5 * (s.detector_a.efficiency + s.detector_b.efficiency);
  const double dark = s.detector_a.dark_rate + s.detector_b.dark_rate;
  bool ok = s.detector_a.dead_time == 0.0 && s.detector_b.dead_time == 0.0;
  std::string d;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double rp = ratios[i] * gamma;
    const double want = eta * gamma * rp / (rp + gamma) * 1e9;
    const double got = pts[i].detected_rate - dark;
    ok = ok && std::abs(got / want - 1.0) <= 0.01;
    d += fmt("r/G=%.2f: %.5g vs %.5g (%+.3f%%) ", ratios[i], got, want, 100.0 * (got / want - 1.0));
  }
  return {ok, d};
}

Outcome throughput() {
  const std::uint64_t duration = 100'000'000'000'000;  // 100 s at 1e5 counts/s
  const auto a = oracle::stream(oracle::poisson_times(1e-7, duration, 1), duration, Channel::A);
  const auto b = oracle::stream(oracle::poisson_times(1e-7, duration, 2), duration, Channel::B);
  const CorrelationConfig cfg{100, 100'000, CorrelationMode::full_cross_correlation};
  const auto t0 = std::chrono::steady_clock::now();
  const auto h = cross_correlate(a, b, cfg, 1, 1);
  const double elapsed = seconds_since(t0);
  return {elapsed < 10.0, fmt("%.0f + %.0f tags, %.0f pairs, %.2f s", static_cast<double>(a.size()),
                              static_cast<double>(b.size()), static_cast<double>(h.total_pairs), elapsed)};
}

const std::vector<std::function<Outcome()>> kCriteria{correction_arithmetic, cw_analytic, cw_fig2, lifetime,
                                                      pulsed_100, pulsed_300, quality_factor, correlator_exactness,
                                                      saturation, throughput};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
      return 2;
    }
  }
  if (only < 0 || only > static_cast<int>(kCriteria.size())) {
    std::fprintf(stderr, "criterion must be 1..%zu\n", kCriteria.size());
    return 2;
  }
  int failed = 0;
  for (int n = 1; n <= static_cast<int>(kCriteria.size()); ++n) {
    if (only != 0 && n != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = kCriteria[n - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d: %s  %s  [%.1f s]\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
