#pragma once

// Backward bilinear warping with validity masks and hand-written
// vector-Jacobian products with respect to the image and the flow.
//
// Flow convention: V maps reference-grid coordinates to source coordinates,
// warped(x) = m(x + V(x)). An object that moves by +d between the source
// frame and the reference frame therefore has flow -d on its reference
// footprint.

#include <array>
#include <cmath>
#include <vector>

#include "itofflow/raster.hpp"

namespace itof {

struct FlowField {
  Image u;  // x displacement, pixels
  Image v;  // y displacement, pixels

  FlowField() = default;
  FlowField(int width, int height) : u(width, height), v(width, height) {}
  FlowField(Image u_, Image v_) : u(std::move(u_)), v(std::move(v_)) {
    require_same_shape(u, v, "FlowField");
  }

  int width() const noexcept { return u.width(); }
  int height() const noexcept { return u.height(); }

  static FlowField constant(int width, int height, double du, double dv) {
    return {Image(width, height, du), Image(width, height, dv)};
  }

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

/// Result of warp(): the resampled raster, its validity mask, and the
/// per-pixel sampling footprint needed for the reverse pass.
class WarpResult {
public:
  Image warped;
  Mask mask;  // 1 = every corner with nonzero weight lies inside the source

  /// d<g, warped>/d m: scatters g through the bilinear weights.
  Image vjp_image(const Image& cotangent) const {
    require_same_shape(cotangent, warped, "WarpResult::vjp_image");
    Image grad(source_width_, source_height_);
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!mask[i]) continue;
      const Sample& s = samples_[i];
      for (int k = 0; k < 4; ++k) grad[s.index[k]] += s.weight[k] * cotangent[i];
    }
    return grad;
  }

  /// d<g, warped>/d V: image derivative at the sample point times g.
  FlowField vjp_flow(const Image& cotangent) const {
    require_same_shape(cotangent, warped, "WarpResult::vjp_flow");
    FlowField grad(warped.width(), warped.height());
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!mask[i]) continue;
      grad.u[i] = samples_[i].d_du * cotangent[i];
      grad.v[i] = samples_[i].d_dv * cotangent[i];
    }
    return grad;
  }

  /// Partial derivatives of warped(i) with respect to the flow at i.
  double d_du(std::size_t i) const { return samples_[i].d_du; }
  double d_dv(std::size_t i) const { return samples_[i].d_dv; }

private:
  struct Sample {
    std::array<std::size_t, 4> index{};  // 00, 10, 01, 11
    std::array<double, 4> weight{};
    double d_du = 0.0;
    double d_dv = 0.0;
  };

  std::vector<Sample> samples_;
  int source_width_ = 0;
  int source_height_ = 0;

  friend WarpResult warp(const Image&, const FlowField&);
};

inline WarpResult warp(const Image& m, const FlowField& flow) {
  require_same_shape(m, flow.u, "warp");
  require_same_shape(m, flow.v, "warp");
  const int w = m.width();
  const int h = m.height();
  WarpResult r;
  r.warped = Image(w, h);
  r.mask = Mask(w, h);
  r.samples_.resize(m.size());
  r.source_width_ = w;
  r.source_height_ = h;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = m.index(x, y);
      const double sx = x + flow.u[i];
      const double sy = y + flow.v[i];
      if (!(sx >= 0.0 && sx <= w - 1.0 && sy >= 0.0 && sy <= h - 1.0)) continue;
      const int x0 = std::min(static_cast<int>(std::floor(sx)), w - 1);
      const int y0 = std::min(static_cast<int>(std::floor(sy)), h - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      auto& s = r.samples_[i];
      s.index = {m.index(x0, y0), m.index(x1, y0), m.index(x0, y1), m.index(x1, y1)};
      s.weight = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
      const double m00 = m[s.index[0]], m10 = m[s.index[1]];
      const double m01 = m[s.index[2]], m11 = m[s.index[3]];
      r.warped[i] = s.weight[0] * m00 + s.weight[1] * m10 + s.weight[2] * m01 + s.weight[3] * m11;
      r.mask[i] = 1;
      // On the last row/column the clamped corner duplicates the first and
      // the one-sided derivative is zero.
      s.d_du = (1 - fy) * (m10 - m00) + fy * (m11 - m01);
      s.d_dv = (1 - fx) * (m01 - m00) + fx * (m11 - m10);
    }
  }
  return r;
}

/// Fraction of pixels that are invalid in at least one mask (union).
inline double masked_fraction(const std::vector<Mask>& masks) {
  if (masks.empty()) throw DomainError("masked_fraction needs at least one mask");
  const auto& first = masks.front();
  for (const auto& m : masks) require_same_shape(m, first, "masked_fraction");
  if (first.empty()) return 0.0;
  std::size_t invalid = 0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    for (const auto& m : masks) {
      if (!m[i]) {
        ++invalid;
        break;
      }
    }
  }
  return static_cast<double>(invalid) / static_cast<double>(first.size());
}

}  // namespace itof
