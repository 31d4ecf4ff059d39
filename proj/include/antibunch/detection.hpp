#pragma once

// Beamsplitter and single-photon detector model turning emissions into clicks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "antibunch/emitter_sim.hpp"
#include "antibunch/errors.hpp"
#include "antibunch/seeds.hpp"

namespace antibunch {

struct DetectorParams {
  double efficiency = 0.30;
  double jitter_sigma = 212.0;  // ps, ~500 ps FWHM
  double dead_time = 50'000.0;  // ps
  double dark_rate = 200.0;     // counts/s

  void validate() const {
    require(efficiency >= 0.0 && efficiency <= 1.0, "detector: efficiency must lie in [0, 1]");
    require(jitter_sigma >= 0.0, "detector: jitter_sigma must be >= 0");
    require(dead_time >= 0.0, "detector: dead_time must be >= 0");
    require(dark_rate >= 0.0, "detector: dark_rate must be >= 0");
  }

  /// Perfect detector: every photon clicks at its true time.
  static DetectorParams ideal() { return {1.0, 0.0, 0.0, 0.0}; }
};

enum class Channel : std::uint8_t { A = 0, B = 1 };

struct TimeTag {
  std::uint64_t timestamp = 0;  // ps
  Channel channel = Channel::A;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

/// Click times of one detector over an acquisition window [0, duration].
struct TimeTagStream {
  Channel channel = Channel::A;
  std::vector<std::uint64_t> times;  // ps, nondecreasing
  std::uint64_t duration = 0;        // ps

  std::size_t size() const { return times.size(); }
  /// counts/s
  double mean_rate() const {
    return duration == 0 ? 0.0 : static_cast<double>(times.size()) / (static_cast<double>(duration) * 1e-12);
  }
  bool is_sorted() const { return std::is_sorted(times.begin(), times.end()); }

  friend bool operator==(const TimeTagStream&, const TimeTagStream&) = default;
};

struct SplitStreams {
  std::vector<std::uint64_t> a;
  std::vector<std::uint64_t> b;
};

/// 50/50 beamsplitter: every photon goes to A or B independently.
inline SplitStreams hbt_split(std::span<const EmissionRecord> emissions, std::uint64_t seed) {
  Rng rng(seed);
  SplitStreams out;
  out.a.reserve(emissions.size() / 2 + 16);
  out.b.reserve(emissions.size() / 2 + 16);
  for (const auto& e : emissions) {
    if (rng() >> 63) out.b.push_back(e.time); else out.a.push_back(e.time);
  }
  return out;
}

/// Applies, in order: Bernoulli loss, additive Poisson background at
/// dark_rate + background_rate, Gaussian jitter, dead time, and the
/// acquisition window. Each step draws from its own derived seed.
inline TimeTagStream detect(std::span<const std::uint64_t> raw, const DetectorParams& params,
                            double background_rate, std::uint64_t duration, std::uint64_t seed,
                            Channel channel = Channel::A) {
  params.validate();
  require(background_rate >= 0.0, "detect: background rate must be >= 0");
  require(duration > 0, "detect: duration must be > 0");
  require(std::is_sorted(raw.begin(), raw.end()), "detect: input must be sorted");

  // Signed ps; jitter can push tags below zero before the window cut.
  std::vector<double> clicks;
  clicks.reserve(static_cast<std::size_t>(static_cast<double>(raw.size()) * params.efficiency) + 64);

  Rng thin(derive_seed(seed, "detect.thin"));
  for (auto t : raw) {
    if (uniform01(thin) < params.efficiency) clicks.push_back(static_cast<double>(t));
  }
  const std::size_t signal_clicks = clicks.size();

  const double noise_rate = (params.dark_rate + background_rate) * 1e-12;  // per ps
  if (noise_rate > 0.0) {
    Rng noise(derive_seed(seed, "detect.background"));
    const double end = static_cast<double>(duration);
    for (double t = unit_exponential(noise) / noise_rate; t < end;
         t += unit_exponential(noise) / noise_rate) {
      clicks.push_back(std::floor(t));
    }
  }

  if (params.jitter_sigma > 0.0) {
    Rng jitter(derive_seed(seed, "detect.jitter"));
    std::normal_distribution<double> gauss(0.0, params.jitter_sigma);
    for (auto& t : clicks) t = std::round(t + gauss(jitter));
  }
  if (params.jitter_sigma > 0.0 || clicks.size() != signal_clicks) {
    std::sort(clicks.begin(), clicks.end());
  }

  TimeTagStream out;
  out.channel = channel;
  out.duration = duration;
  out.times.reserve(clicks.size());
  const double last_allowed = static_cast<double>(duration);
  bool have_last = false;
  double last = 0.0;
  for (double t : clicks) {
    if (t < 0.0 || t > last_allowed) continue;
    if (have_last && t - last < params.dead_time) continue;
    out.times.push_back(static_cast<std::uint64_t>(t));
    last = t;
    have_last = true;
  }
  return out;
}

}  // namespace antibunch
