#pragma once

// Continuous-time Markov-chain sampling of a ground/excited/dark emitter under
// a piecewise-constant pump.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <utility>
#include <vector>

#include "antibunch/errors.hpp"
#include "antibunch/photophysics.hpp"
#include "antibunch/seeds.hpp"
#include "antibunch/waveform.hpp"

namespace antibunch {

enum class EmissionOrigin : std::uint8_t { radiative };

struct EmissionRecord {
  std::uint64_t time = 0;  // ps
  EmissionOrigin origin = EmissionOrigin::radiative;

  friend bool operator==(const EmissionRecord&, const EmissionRecord&) = default;
};

struct SimConfig {
  std::uint64_t duration = 0;  // ps
  std::uint64_t seed = 0;
  std::uint64_t max_events = 100'000'000;

  void validate() const {
    require(duration > 0, "sim: duration must be > 0");
    require(max_events > 0, "sim: max_events must be > 0");
  }
};

/// Thrown when a trajectory produces more than `max_events` photons. Carries
/// the photons emitted before the cap was hit.
class EventCapExceeded : public Error {
 public:
  explicit EventCapExceeded(std::vector<EmissionRecord> partial)
      : Error("simulate_emitter: event cap exceeded"), partial_(std::move(partial)) {}
  const std::vector<EmissionRecord>& partial() const noexcept { return partial_; }

 private:
  std::vector<EmissionRecord> partial_;
};

/// One trajectory starting in the ground state at t = 0. Output times are
/// strictly increasing.
inline std::vector<EmissionRecord> simulate_emitter(const EmitterParams& emitter,
                                                    const PumpWaveform& waveform,
                                                    const SimConfig& config) {
  emitter.validate();
  config.validate();

  std::vector<EmissionRecord> out;
  if (waveform.is_zero()) return out;

  Rng rng(config.seed);
  const double end = static_cast<double>(config.duration);
  const double leave_excited = emitter.gamma + emitter.shelving_rate;  // 1/ns
  const double emit_probability = emitter.gamma / leave_excited;

  double t = 0.0;
  std::uint64_t last = 0;
  for (;;) {
    // ground -> excited: invert the integrated pump hazard.
    t = waveform.advance(t, unit_exponential(rng));
    if (!(t < end)) break;

    // excited -> ground (photon) or excited -> dark.
    t += unit_exponential(rng) * kPsPerNs / leave_excited;
    if (!(t < end)) break;
    if (uniform01(rng) < emit_probability) {
      auto stamp = static_cast<std::uint64_t>(std::llround(t));
      if (!out.empty() && stamp <= last) stamp = last + 1;
      if (stamp >= config.duration) break;
      if (out.size() == config.max_events) throw EventCapExceeded(std::move(out));
      out.push_back({stamp, EmissionOrigin::radiative});
      last = stamp;
    } else {
      t += unit_exponential(rng) * kPsPerNs / emitter.recovery_rate;
      if (!(t < end)) break;
    }
  }
  return out;
}

/// Splits `config.duration` into `trajectories` consecutive pieces (period
/// aligned for periodic pumps), simulates each from the ground state with seed
/// derive_seed(config.seed, "emitter", i), and concatenates with time offsets.
/// The result depends on `trajectories` but not on `threads`.
inline std::vector<EmissionRecord> simulate_trajectories(const EmitterParams& emitter,
                                                         const PumpWaveform& waveform,
                                                         const SimConfig& config,
                                                         std::size_t trajectories,
                                                         std::size_t threads = 1) {
  config.validate();
  require(trajectories > 0, "simulate_trajectories: need at least one trajectory");
  if (trajectories == 1) {
    SimConfig one = config;
    one.seed = derive_seed(config.seed, "emitter", 0);
    return simulate_emitter(emitter, waveform, one);
  }

  std::uint64_t piece = config.duration / trajectories;
  if (waveform.is_periodic()) {
    // Round each piece down to whole periods when the period is an integer
    // number of ps; otherwise accept phase slip at the joins.
    const double period = waveform.period();
    if (period == std::floor(period) && piece >= static_cast<std::uint64_t>(period)) {
      const auto p = static_cast<std::uint64_t>(period);
      piece -= piece % p;
    }
  }
  require(piece > 0, "simulate_trajectories: duration too short for the trajectory count");

  std::vector<std::vector<EmissionRecord>> parts(trajectories);
  std::vector<char> capped(trajectories, 0);
  auto work = [&](std::size_t i) {
    SimConfig sub = config;
    sub.seed = derive_seed(config.seed, "emitter", i);
    sub.duration = i + 1 == trajectories ? config.duration - piece * i : piece;
    try {
      parts[i] = simulate_emitter(emitter, waveform, sub);
    } catch (const EventCapExceeded& e) {
      parts[i] = e.partial();
      capped[i] = 1;
    }
  };

  threads = std::clamp<std::size_t>(threads, 1, trajectories);
  if (threads == 1) {
    for (std::size_t i = 0; i < trajectories; ++i) work(i);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < trajectories; i += threads) work(i);
      });
    }
  }

  std::vector<EmissionRecord> out;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  out.reserve(std::min<std::size_t>(total, config.max_events));
  for (std::size_t i = 0; i < trajectories; ++i) {
    const std::uint64_t offset = piece * i;
    for (auto r : parts[i]) {
      if (out.size() == config.max_events) throw EventCapExceeded(std::move(out));
      r.time += offset;
      if (!out.empty() && r.time <= out.back().time) r.time = out.back().time + 1;
      out.push_back(r);
    }
    if (capped[i]) throw EventCapExceeded(std::move(out));
  }
  return out;
}

/// Stationary occupation of (ground, excited, dark) under a constant pump,
/// from the null vector of the 3-state generator.
struct StationaryPopulation {
  double ground = 1.0;
  double excited = 0.0;
  double dark = 0.0;
};

inline StationaryPopulation stationary_population(const EmitterParams& emitter, double pump_rate) {
  emitter.validate();
  // Balance: r g = (gamma) e + recovery d ; (gamma + s) e = r g ; recovery d = s e.
  const double r = pump_rate, gamma = emitter.gamma, s = emitter.shelving_rate;
  if (r == 0.0) return {};
  const double e_over_g = r / (gamma + s);
  const double d_over_g = s == 0.0 ? 0.0 : s * e_over_g / emitter.recovery_rate;
  const double norm = 1.0 + e_over_g + d_over_g;
  return {1.0 / norm, e_over_g / norm, d_over_g / norm};
}

/// Histogram of emission phase relative to the start of the pump period.
struct DecayHistogram {
  double bin_width = 0.0;  // ps
  std::vector<std::uint64_t> counts;

  double bin_center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * bin_width; }
  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
};

inline DecayHistogram decay_histogram(const std::vector<EmissionRecord>& emissions,
                                      const PumpWaveform& waveform, double bin) {
  if (!waveform.is_periodic()) throw InvalidArgument("decay_histogram: waveform must be periodic");
  require(bin > 0.0, "decay_histogram: bin must be > 0");
  const double period = waveform.period();
  DecayHistogram h;
  h.bin_width = bin;
  h.counts.assign(static_cast<std::size_t>(std::ceil(period / bin)), 0);
  for (const auto& e : emissions) {
    const double t = static_cast<double>(e.time);
    double phase = t - std::floor(t / period) * period;
    auto i = static_cast<std::size_t>(phase / bin);
    if (i >= h.counts.size()) i = h.counts.size() - 1;
    ++h.counts[i];
  }
  return h;
}

}  // namespace antibunch
