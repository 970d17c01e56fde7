#pragma once

// Domain types and the closed-form depth pipeline of an AMCW iToF sensor:
// unambiguous range, four-phase depth reconstruction, depth wrapping,
// two-tap combination and per-pixel tap calibration.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "itofflow/raster.hpp"

namespace itof {

struct PhysicalConstants {
  static constexpr double speed_of_light = 299'792'458.0;  // m/s
  /// Denominator stabilizer in measurement units (instance-normalized scale).
  static constexpr double default_epsilon = 1e-6;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Unambiguous range c / (2f) in meters.
inline double d_max(double frequency_hz) {
  if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz))
    throw DomainError("modulation frequency must be positive and finite");
  return PhysicalConstants::speed_of_light / (2.0 * frequency_hz);
}

/// Meters per radian of phase offset, c / (4 pi f).
inline double depth_per_radian(double frequency_hz) {
  return d_max(frequency_hz) / kTwoPi;
}

/// d mod d_max(f), in [0, d_max).
inline double wrap_depth(double depth, double frequency_hz) {
  const double range = d_max(frequency_hz);
  double r = std::fmod(depth, range);
  if (r < 0.0) r += range;
  if (r >= range) r = 0.0;  // fmod + range can round up onto the range itself
  return r;
}

/// Capture layout of a sensor: which phase shift and frequency every raw
/// sample has, and at which timestep it was taken.
///
/// Captures are ordered frequency-major; inside one frequency the four
/// phase samples m0..m3 (theta = 0, pi/2, pi, 3pi/2) follow in order.
struct SensorConfig {
  std::vector<double> frequencies_hz;
  int taps = 1;
  std::vector<double> phase_shifts;  // per capture index
  std::vector<int> timestep_layout;  // per capture index
  int reference_timestep = 0;

  static SensorConfig make(std::vector<double> frequencies, int taps) {
    if (frequencies.empty()) throw DomainError("at least one modulation frequency is required");
    if (taps != 1 && taps != 2 && taps != 4) throw DomainError("taps must be 1, 2 or 4");
    SensorConfig cfg;
    cfg.frequencies_hz = std::move(frequencies);
    cfg.taps = taps;
    const int per_freq = 4 / taps;
    for (std::size_t fi = 0; fi < cfg.frequencies_hz.size(); ++fi) {
      d_max(cfg.frequencies_hz[fi]);  // validates
      for (int k = 0; k < 4; ++k) {
        cfg.phase_shifts.push_back(k * kPi / 2.0);
        int slot = 0;
        if (taps == 1) slot = k;
        else if (taps == 2) slot = k % 2;  // (m0, m2) then (m1, m3)
        cfg.timestep_layout.push_back(static_cast<int>(fi) * per_freq + slot);
      }
    }
    cfg.reference_timestep = cfg.timestep_count() - 1;
    return cfg;
  }

  std::size_t frequency_count() const noexcept { return frequencies_hz.size(); }
  std::size_t capture_count() const noexcept { return phase_shifts.size(); }
  int timestep_count() const noexcept { return (4 / taps) * static_cast<int>(frequencies_hz.size()); }

  std::size_t frequency_index(std::size_t capture) const noexcept { return capture / 4; }
  int phase_index(std::size_t capture) const noexcept { return static_cast<int>(capture % 4); }

  /// Readout channel of a capture: 0 on single-tap sensors; A/B = 0/1 on
  /// two-tap sensors (tap B carries m2 and m3); the phase index on four-tap.
  int tap_id(std::size_t capture) const noexcept {
    const int k = phase_index(capture);
    if (taps == 1) return 0;
    if (taps == 2) return k / 2;
    return k;
  }

  /// Checks the structural invariants; throws DomainError on violation.
  void validate() const {
    if (taps != 1 && taps != 2 && taps != 4) throw DomainError("taps must be 1, 2 or 4");
    if (frequencies_hz.empty()) throw DomainError("at least one modulation frequency is required");
    for (double f : frequencies_hz) d_max(f);
    const std::size_t n = 4 * frequencies_hz.size();
    if (phase_shifts.size() != n || timestep_layout.size() != n)
      throw DomainError("capture layout must list 4 samples per frequency");
    const SensorConfig canonical = make(frequencies_hz, taps);
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(phase_shifts[i] - canonical.phase_shifts[i]) > 1e-9)
        throw DomainError("phase shifts must be 0, pi/2, pi, 3pi/2 per frequency");
      if (timestep_layout[i] != canonical.timestep_layout[i])
        throw DomainError("timestep layout does not match the tap grouping");
    }
    if (reference_timestep != timestep_count() - 1)
      throw DomainError("reference timestep must be the last timestep");
  }

  friend bool operator==(const SensorConfig&, const SensorConfig&) = default;
};

struct FrameInfo {
  double frequency_hz = 0.0;
  double phase_shift = 0.0;
  int tap = 0;
  int timestep = 0;
};

/// Raw correlation images in capture order.
struct MeasurementStack {
  SensorConfig config;
  std::vector<Image> frames;

  int width() const noexcept { return frames.empty() ? 0 : frames.front().width(); }
  int height() const noexcept { return frames.empty() ? 0 : frames.front().height(); }

  FrameInfo info(std::size_t capture) const {
    return {config.frequencies_hz[config.frequency_index(capture)], config.phase_shifts[capture],
            config.tap_id(capture), config.timestep_layout[capture]};
  }

  void validate() const {
    config.validate();
    if (frames.size() != config.capture_count())
      throw ShapeError("stack holds " + std::to_string(frames.size()) + " frames, layout expects " +
                       std::to_string(config.capture_count()));
    for (const auto& f : frames) require_same_shape(f, frames.front(), "MeasurementStack");
  }
};

/// Wrapped depth in meters for one modulation frequency.
struct DepthImage {
  double frequency_hz = 0.0;
  Image values;
  Mask valid_mask;
};

/// Per-pixel linear model mapping tap-B samples onto the tap-A response:
/// r(mB) = gain * mB + offset.
struct TapCalibration {
  Image gain;
  Image offset;

  static TapCalibration identity(int width, int height) {
    return {Image(width, height, 1.0), Image(width, height, 0.0)};
  }

  double apply(std::size_t i, double mb) const { return gain[i] * mb + offset[i]; }
};

/// sign with sign(0) := +1, so x + sign(x) * eps never vanishes for eps > 0.
inline double stabilizer_sign(double x) noexcept { return x >= 0.0 ? 1.0 : -1.0; }

/// Phase in [0, 2 pi) from the differential signals x = m0 - m2, y = m3 - m1.
inline double wrapped_phase(double x, double y, double epsilon) noexcept {
  double phi = std::atan2(y, x + stabilizer_sign(x) * epsilon);
  if (phi < 0.0) phi += kTwoPi;
  if (phi >= kTwoPi) phi = 0.0;
  return phi;
}

/// Stabilized four-phase depth for a single pixel.
inline double reconstruct_pixel(double m0, double m1, double m2, double m3, double frequency_hz,
                                double epsilon) {
  const double range = d_max(frequency_hz);
  const double d = wrapped_phase(m0 - m2, m3 - m1, epsilon) / kTwoPi * range;
  return d < range ? d : 0.0;
}

inline DepthImage reconstruct_depth(const Image& m0, const Image& m1, const Image& m2,
                                    const Image& m3, double frequency_hz,
                                    double epsilon = PhysicalConstants::default_epsilon) {
  require_same_shape(m0, m1, "reconstruct_depth");
  require_same_shape(m0, m2, "reconstruct_depth");
  require_same_shape(m0, m3, "reconstruct_depth");
  if (epsilon < 0.0) throw DomainError("epsilon must be non-negative");
  const double range = d_max(frequency_hz);
  DepthImage out{frequency_hz, Image(m0.width(), m0.height()), full_mask(m0.width(), m0.height())};
  for (std::size_t i = 0; i < m0.size(); ++i) {
    const double d = wrapped_phase(m0[i] - m2[i], m3[i] - m1[i], epsilon) / kTwoPi * range;
    out.values[i] = d < range ? d : 0.0;
  }
  return out;
}

/// Reconstructs one depth image per frequency from a stack in capture order.
inline std::vector<DepthImage> reconstruct_stack(const MeasurementStack& stack,
                                                 double epsilon = PhysicalConstants::default_epsilon) {
  stack.validate();
  std::vector<DepthImage> out;
  for (std::size_t fi = 0; fi < stack.config.frequency_count(); ++fi) {
    const auto* m = &stack.frames[4 * fi];
    out.push_back(reconstruct_depth(m[0], m[1], m[2], m[3], stack.config.frequencies_hz[fi], epsilon));
  }
  return out;
}

/// Two-tap difference mA - r(mB).
inline Image combine_taps(const Image& ma, const Image& mb, const TapCalibration& calib) {
  require_same_shape(ma, mb, "combine_taps");
  require_same_shape(ma, calib.gain, "combine_taps");
  require_same_shape(ma, calib.offset, "combine_taps");
  Image out(ma.width(), ma.height());
  for (std::size_t i = 0; i < ma.size(); ++i) out[i] = ma[i] - calib.apply(i, mb[i]);
  return out;
}

inline Image combine_taps(const Image& ma, const Image& mb) {
  return combine_taps(ma, mb, TapCalibration::identity(ma.width(), ma.height()));
}

struct TapPair {
  Image a;
  Image b;
};

/// Per-pixel least-squares fit of mA ~ gain * mB + offset over static captures.
///
/// A pixel whose mB samples have (numerically) zero variance, or whose fit
/// would yield a non-positive gain, falls back to gain 1 and offset mean(mA - mB).
inline TapCalibration fit_tap_calibration(const std::vector<TapPair>& pairs) {
  if (pairs.size() < 2) throw DomainError("tap calibration needs at least two static capture pairs");
  const int w = pairs.front().a.width();
  const int h = pairs.front().a.height();
  for (const auto& p : pairs) {
    require_same_shape(p.a, pairs.front().a, "fit_tap_calibration");
    require_same_shape(p.b, pairs.front().a, "fit_tap_calibration");
  }
  TapCalibration calib = TapCalibration::identity(w, h);
  const double n = static_cast<double>(pairs.size());
  for (std::size_t i = 0; i < calib.gain.size(); ++i) {
    double mean_a = 0.0, mean_b = 0.0;
    for (const auto& p : pairs) {
      mean_a += p.a[i];
      mean_b += p.b[i];
    }
    mean_a /= n;
    mean_b /= n;
    double cov = 0.0, var = 0.0;
    for (const auto& p : pairs) {
      cov += (p.a[i] - mean_a) * (p.b[i] - mean_b);
      var += (p.b[i] - mean_b) * (p.b[i] - mean_b);
    }
    const double scale = std::max(1.0, mean_b * mean_b);
    if (var <= 1e-24 * n * scale || cov / var <= 0.0) {
      calib.gain[i] = 1.0;
      calib.offset[i] = mean_a - mean_b;
    } else {
      calib.gain[i] = cov / var;
      calib.offset[i] = mean_a - calib.gain[i] * mean_b;
    }
  }
  return calib;
}

struct NormalizationStats {
  double mean = 0.0;
  double scale = 1.0;  // std, or 1 when the stack is (numerically) constant
};

/// Joint mean / standard deviation over every sample of every frame.
inline NormalizationStats instance_stats(const std::vector<Image>& frames) {
  if (frames.empty()) throw DomainError("instance normalization needs a nonempty stack");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& f : frames) {
    for (double v : f) sum += v;
    n += f.size();
  }
  if (n == 0) throw DomainError("instance normalization needs a nonempty stack");
  const double mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (const auto& f : frames)
    for (double v : f) sq += (v - mean) * (v - mean);
  const double sd = std::sqrt(sq / static_cast<double>(n));
  return {mean, sd < 1e-12 ? 1.0 : sd};
}

inline std::vector<Image> apply_normalization(const std::vector<Image>& frames, NormalizationStats s) {
  std::vector<Image> out = frames;
  for (auto& f : out)
    for (double& v : f) v = (v - s.mean) / s.scale;
  return out;
}

inline MeasurementStack instance_normalize(const MeasurementStack& stack) {
  return {stack.config, apply_normalization(stack.frames, instance_stats(stack.frames))};
}

}  // namespace itof
