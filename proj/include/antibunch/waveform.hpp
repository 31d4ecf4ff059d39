#pragma once

// Piecewise-constant excitation rate r_p(t) and the drives that produce it.
//
// Segment boundaries are in ps; rates are in 1/ns.

#include <cmath>
#include <limits>
#include <type_traits>
#include <variant>
#include <vector>

#include "antibunch/errors.hpp"
#include "antibunch/photophysics.hpp"

namespace antibunch {

inline constexpr double kPsPerNs = 1000.0;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct ContinuousWave {
  double power = 0.0;  // mW
};

struct SquareModulated {
  double power_on = 0.0;           // mW
  double rep_rate = 100.0;         // MHz
  double duty = 0.5;               // (0, 1]
  double extinction_ratio = 100.0; // on/off power ratio, >= 1, may be +inf
};

/// Short excitation pulses of fixed area. `saturation_parameter` is the mean
/// number of excitations per pulse for an emitter that is never saturated.
struct PulseTrain {
  double rep_rate = 80.0;    // MHz
  double pulse_width = 3.0;  // ps
  double saturation_parameter = 1.0;
};

using PumpDrive = std::variant<ContinuousWave, SquareModulated, PulseTrain>;

inline void validate(const PumpDrive& drive) {
  std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ContinuousWave>) {
          require(d.power >= 0.0, "drive: power must be >= 0");
        } else if constexpr (std::is_same_v<T, SquareModulated>) {
          require(d.power_on >= 0.0, "drive: power_on must be >= 0");
          require(d.rep_rate > 0.0, "drive: rep_rate must be > 0");
          require(d.duty > 0.0 && d.duty <= 1.0, "drive: duty must lie in (0, 1]");
          require(d.extinction_ratio >= 1.0, "drive: extinction_ratio must be >= 1");
        } else {
          require(d.rep_rate > 0.0, "drive: rep_rate must be > 0");
          require(d.pulse_width > 0.0, "drive: pulse_width must be > 0");
          require(d.saturation_parameter >= 0.0, "drive: saturation_parameter must be >= 0");
        }
      },
      drive);
}

struct Segment {
  double start = 0.0;  // ps
  double end = 0.0;    // ps
  double rate = 0.0;   // 1/ns
};

class PumpWaveform {
 public:
  /// Time-independent rate, period 0.
  static PumpWaveform constant(double rate) {
    require(rate >= 0.0, "waveform: rate must be >= 0");
    PumpWaveform w;
    w.segments_.push_back({0.0, kInfinity, rate});
    w.per_period_hazard_ = rate == 0.0 ? 0.0 : kInfinity;
    return w;
  }

  /// Segments must tile [0, period) contiguously with strictly increasing
  /// boundaries.
  static PumpWaveform periodic(std::vector<Segment> segments, double period) {
    require(period > 0.0 && std::isfinite(period), "waveform: period must be finite and > 0");
    require(!segments.empty(), "waveform: no segments");
    require(segments.front().start == 0.0, "waveform: first segment must start at 0");
    require(segments.back().end == period, "waveform: last segment must end at the period");
    double hazard = 0.0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& s = segments[i];
      require(s.end > s.start, "waveform: segment boundaries must be strictly increasing");
      require(s.rate >= 0.0 && std::isfinite(s.rate), "waveform: rates must be finite and >= 0");
      if (i > 0) require(segments[i - 1].end == s.start, "waveform: segments must be contiguous");
      hazard += s.rate * (s.end - s.start) / kPsPerNs;
    }
    PumpWaveform w;
    w.segments_ = std::move(segments);
    w.period_ = period;
    w.per_period_hazard_ = hazard;
    return w;
  }

  const std::vector<Segment>& segments() const { return segments_; }
  double period() const { return period_; }
  bool is_periodic() const { return period_ > 0.0; }
  bool is_zero() const { return per_period_hazard_ == 0.0; }
  /// Integrated excitation hazard over one period (dimensionless).
  double hazard_per_period() const { return per_period_hazard_; }

  double rate_at(double t) const {
    if (!is_periodic()) return segments_.front().rate;
    double phase = std::fmod(t, period_);
    if (phase < 0.0) phase += period_;
    return segments_[segment_index(phase)].rate;
  }

  /// Earliest time t' >= t with  integral_t^t' r_p = budget (budget in units of
  /// the unit exponential). Returns +inf when the pump never delivers it.
  double advance(double t, double budget) const {
    if (!is_periodic()) {
      const double rate = segments_.front().rate;
      return rate == 0.0 ? kInfinity : t + budget * kPsPerNs / rate;
    }
    if (is_zero()) return kInfinity;

    double cycle = std::floor(t / period_);
    double phase = t - cycle * period_;
    if (phase >= period_) {
      cycle += 1.0;
      phase = 0.0;
    } else if (phase < 0.0) {
      phase = 0.0;
    }
    std::size_t i = segment_index(phase);
    bool skipped = false;
    for (;;) {
      for (; i < segments_.size(); ++i) {
        const auto& s = segments_[i];
        const double available = s.rate * (s.end - phase) / kPsPerNs;
        if (s.rate > 0.0 && budget <= available) {
          return cycle * period_ + phase + budget * kPsPerNs / s.rate;
        }
        budget -= available;
        phase = s.end;
      }
      cycle += 1.0;
      phase = 0.0;
      i = 0;
      if (!skipped) {
        // Whole periods that are certain to be crossed.
        const double whole = std::floor(budget / per_period_hazard_);
        if (whole > 0.0) {
          cycle += whole;
          budget -= whole * per_period_hazard_;
        }
        skipped = true;
      }
    }
  }

 private:
  std::size_t segment_index(double phase) const {
    std::size_t lo = 0, hi = segments_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi + 1) / 2;
      if (segments_[mid].start <= phase) lo = mid; else hi = mid - 1;
    }
    return lo;
  }

  std::vector<Segment> segments_;
  double period_ = 0.0;
  double per_period_hazard_ = 0.0;
};

inline double period_ps(double rep_rate_mhz) { return 1.0e6 / rep_rate_mhz; }

/// Rate profile seen by the emitter for a given laser drive and cavity.
inline PumpWaveform build_waveform(const PumpDrive& drive, const CavityParams& cavity,
                                   double laser_lambda) {
  validate(drive);
  cavity.validate();
  return std::visit(
      [&](const auto& d) -> PumpWaveform {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ContinuousWave>) {
          return PumpWaveform::constant(shg_pump_rate(d.power, laser_lambda, cavity));
        } else if constexpr (std::is_same_v<T, SquareModulated>) {
          const double period = period_ps(d.rep_rate);
          const double on_rate = shg_pump_rate(d.power_on, laser_lambda, cavity);
          if (d.duty == 1.0) return PumpWaveform::periodic({{0.0, period, on_rate}}, period);
          const double off_power = std::isinf(d.extinction_ratio) ? 0.0 : d.power_on / d.extinction_ratio;
          const double off_rate = shg_pump_rate(off_power, laser_lambda, cavity);
          const double on_end = d.duty * period;
          return PumpWaveform::periodic({{0.0, on_end, on_rate}, {on_end, period, off_rate}}, period);
        } else {
          const double period = period_ps(d.rep_rate);
          if (d.pulse_width >= period) throw InvalidArgument("drive: pulse_width must be shorter than the period");
          const double rate = d.saturation_parameter / d.pulse_width * kPsPerNs;
          return PumpWaveform::periodic({{0.0, d.pulse_width, rate}, {d.pulse_width, period, 0.0}}, period);
        }
      },
      drive);
}

}  // namespace antibunch
