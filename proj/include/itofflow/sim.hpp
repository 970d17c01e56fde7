#pragma once

// Synthetic iToF captures: front-parallel sprites over a flat background,
// rendered with the sinusoidal correlation model m = O + A cos(dphi + theta),
// with piecewise-constant image-space motion and exact ground-truth flows.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "itofflow/core.hpp"
#include "itofflow/warp.hpp"

namespace itof {

enum class SpriteShape { rectangle, disk };
enum class Texture { none, checker, stripes, sine };

/// Reflectance of a surface: amplitude A and ambient offset O, optionally
/// modulated by a texture that moves with the surface.
struct SurfaceLook {
  double amplitude = 1.0;
  double offset = 1.5;
  Texture texture = Texture::none;
  double texture_period = 8.0;    // pixels
  double texture_contrast = 0.5;  // relative amplitude modulation, in [0, 1)

  /// Amplitude at surface-local coordinates (lx, ly).
  double amplitude_at(double lx, double ly) const {
    double pattern = 0.0;
    const double p = texture_period;
    switch (texture) {
      case Texture::none: return amplitude;
      case Texture::checker: {
        const auto cx = static_cast<long long>(std::floor(lx / p));
        const auto cy = static_cast<long long>(std::floor(ly / p));
        pattern = ((cx + cy) % 2 == 0) ? 1.0 : -1.0;
        break;
      }
      case Texture::stripes:
        pattern = (static_cast<long long>(std::floor(lx / p)) % 2 == 0) ? 1.0 : -1.0;
        break;
      case Texture::sine:
        pattern = std::sin(kTwoPi * lx / p) * std::cos(kTwoPi * ly / (1.37 * p));
        break;
    }
    return amplitude * (1.0 + texture_contrast * pattern);
  }
};

struct Sprite {
  SpriteShape shape = SpriteShape::rectangle;
  double depth = 1.0;  // meters
  SurfaceLook look;
  double x = 0.0, y = 0.0;  // center at timestep 0, pixels
  double half_width = 8.0, half_height = 8.0;  // rectangle extent
  double radius = 8.0;                         // disk extent
  double vx = 0.0, vy = 0.0;                   // pixels / timestep

  bool contains(double lx, double ly) const {
    if (shape == SpriteShape::disk) return lx * lx + ly * ly <= radius * radius;
    return std::abs(lx) <= half_width && std::abs(ly) <= half_height;
  }
};

struct SceneSpec {
  int width = 64;
  int height = 64;
  double background_depth = 4.0;
  SurfaceLook background;
  std::vector<Sprite> sprites;  // later sprites occlude earlier ones
  double camera_vx = 0.0, camera_vy = 0.0;  // pixels / timestep, moves everything

  void validate(const SensorConfig& config) const {
    if (width <= 0 || height <= 0) throw DomainError("scene width and height must be positive");
    double fmin = config.frequencies_hz.front();
    for (double f : config.frequencies_hz) fmin = std::min(fmin, f);
    const double limit = 2.0 * d_max(fmin);
    auto check_look = [](const SurfaceLook& l, const std::string& who) {
      if (!(l.amplitude > 0.0)) throw DomainError(who + ": amplitude must be positive");
      if (!(l.offset >= 0.0)) throw DomainError(who + ": offset must be non-negative");
      if (!(l.texture_contrast >= 0.0 && l.texture_contrast < 1.0))
        throw DomainError(who + ": texture_contrast must lie in [0, 1)");
      if (!(l.texture_period > 0.0)) throw DomainError(who + ": texture_period must be positive");
    };
    auto check_depth = [limit](double d, const std::string& who) {
      if (!(d > 0.0 && d < limit))
        throw DomainError(who + ": depth must lie in (0, " + std::to_string(limit) + ") m");
    };
    check_depth(background_depth, "background");
    check_look(background, "background");
    for (std::size_t k = 0; k < sprites.size(); ++k) {
      const std::string who = "sprites[" + std::to_string(k) + "]";
      check_depth(sprites[k].depth, who);
      check_look(sprites[k].look, who);
    }
  }

  /// Image-space position of sprite k's center at timestep t.
  double sprite_x(std::size_t k, double t) const { return sprites[k].x + (sprites[k].vx + camera_vx) * t; }
  double sprite_y(std::size_t k, double t) const { return sprites[k].y + (sprites[k].vy + camera_vy) * t; }

  /// Index of the visible surface at an image point: sprite index, or -1 for background.
  int surface_at(double px, double py, int t) const {
    for (std::size_t k = sprites.size(); k-- > 0;)
      if (sprites[k].contains(px - sprite_x(k, t), py - sprite_y(k, t))) return static_cast<int>(k);
    return -1;
  }

  struct Sample {
    double depth, amplitude, offset;
  };

  Sample sample(double px, double py, int t) const {
    const int s = surface_at(px, py, t);
    if (s < 0) {
      const double lx = px - camera_vx * t, ly = py - camera_vy * t;
      return {background_depth, background.amplitude_at(lx, ly), background.offset};
    }
    const auto& sp = sprites[static_cast<std::size_t>(s)];
    const double lx = px - sprite_x(s, t), ly = py - sprite_y(s, t);
    return {sp.depth, sp.look.amplitude_at(lx, ly), sp.look.offset};
  }

  /// Displacement from the reference timestep to timestep t of surface s
  /// (reference coordinates -> source coordinates).
  std::pair<double, double> displacement(int surface, int t, int reference) const {
    const double dt = static_cast<double>(t - reference);
    if (surface < 0) return {camera_vx * dt, camera_vy * dt};
    const auto& sp = sprites[static_cast<std::size_t>(surface)];
    return {(sp.vx + camera_vx) * dt, (sp.vy + camera_vy) * dt};
  }
};

/// Phase offset 4 pi f d / c of a surface at depth d.
inline double phase_offset(double depth, double frequency_hz) {
  return kTwoPi * depth / d_max(frequency_hz);
}

/// Correlation sample m = O + A cos(dphi + theta) of the scene at timestep t.
inline Image render_measurement(const SceneSpec& scene, int timestep, double frequency_hz,
                                double phase_shift) {
  Image out(scene.width, scene.height);
  for (int y = 0; y < scene.height; ++y)
    for (int x = 0; x < scene.width; ++x) {
      const auto s = scene.sample(x, y, timestep);
      out(x, y) = s.offset + s.amplitude * std::cos(phase_offset(s.depth, frequency_hz) + phase_shift);
    }
  return out;
}

/// Scene depth (unwrapped, meters) at timestep t.
inline Image render_depth(const SceneSpec& scene, int timestep) {
  Image out(scene.width, scene.height);
  for (int y = 0; y < scene.height; ++y)
    for (int x = 0; x < scene.width; ++x) out(x, y) = scene.sample(x, y, timestep).depth;
  return out;
}

struct CaptureBundle {
  MeasurementStack moving;     // every capture at its own timestep
  MeasurementStack static_gt;  // every capture at the reference timestep
  std::vector<DepthImage> depth_gt;  // per frequency, wrapped, motion-free
  /// Indexed by timestep; the reference entry is the zero flow.
  std::vector<FlowField> true_flows;
  /// Indexed by timestep: reference pixels whose source sample under the true
  /// flow stays inside the raster and shows the same surface (not disoccluded).
  std::vector<Mask> visibility;
};

/// Derives an independent generator for stream `stream` of a seed.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return std::mt19937_64(seq);
}

/// Gaussian approximation of shot noise: m' = m + n, n ~ N(0, scale * max(|m|, floor)),
/// with scale the variance per unit of signal. Frame f draws from stream f.
inline MeasurementStack apply_shot_noise(const MeasurementStack& stack, double scale,
                                         std::uint64_t seed, double floor = 1e-3) {
  if (scale < 0.0) throw DomainError("noise scale must be non-negative");
  MeasurementStack out = stack;
  if (scale == 0.0) return out;
  for (std::size_t f = 0; f < out.frames.size(); ++f) {
    auto rng = stream_rng(seed, f);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : out.frames[f]) v += std::sqrt(scale * std::max(std::abs(v), floor)) * normal(rng);
  }
  return out;
}

inline CaptureBundle simulate_bundle(const SceneSpec& scene, const SensorConfig& config,
                                     std::uint64_t seed = 0, double noise_scale = 0.0) {
  config.validate();
  scene.validate(config);
  const int ref = config.reference_timestep;
  const int w = scene.width, h = scene.height;

  CaptureBundle b;
  b.moving.config = config;
  b.static_gt.config = config;
  for (std::size_t c = 0; c < config.capture_count(); ++c) {
    const double f = config.frequencies_hz[config.frequency_index(c)];
    const double theta = config.phase_shifts[c];
    b.moving.frames.push_back(render_measurement(scene, config.timestep_layout[c], f, theta));
    b.static_gt.frames.push_back(render_measurement(scene, ref, f, theta));
  }
  if (noise_scale > 0.0) b.moving = apply_shot_noise(b.moving, noise_scale, seed);

  const Image depth_ref = render_depth(scene, ref);
  for (double f : config.frequencies_hz) {
    DepthImage d{f, Image(w, h), full_mask(w, h)};
    for (std::size_t i = 0; i < depth_ref.size(); ++i) d.values[i] = wrap_depth(depth_ref[i], f);
    b.depth_gt.push_back(std::move(d));
  }

  std::vector<int> surface_ref(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) surface_ref[static_cast<std::size_t>(y) * w + x] = scene.surface_at(x, y, ref);

  for (int t = 0; t < config.timestep_count(); ++t) {
    FlowField flow(w, h);
    Mask visible(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = flow.u.index(x, y);
        const int s = surface_ref[i];
        const auto [du, dv] = scene.displacement(s, t, ref);
        flow.u[i] = du;
        flow.v[i] = dv;
        const double sx = x + du, sy = y + dv;
        if (!(sx >= 0.0 && sx <= w - 1.0 && sy >= 0.0 && sy <= h - 1.0)) continue;
        // Every bilinear corner with nonzero weight must show the same surface.
        const double x0 = std::floor(sx), y0 = std::floor(sy);
        bool same = true;
        for (int cy = 0; cy < 2 && same; ++cy)
          for (int cx = 0; cx < 2 && same; ++cx) {
            if ((cx == 1 && sx == x0) || (cy == 1 && sy == y0)) continue;
            same = scene.surface_at(x0 + cx, y0 + cy, t) == s;
          }
        visible[i] = same ? 1 : 0;
      }
    b.true_flows.push_back(std::move(flow));
    b.visibility.push_back(std::move(visible));
  }
  return b;
}

}  // namespace itof
