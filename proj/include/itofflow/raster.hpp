#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace itof {

/// Thrown when rasters that must agree in shape do not.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an argument lies outside an operation's domain.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Dense row-major 2D raster. Element (x, y) lives at index y * width + x.
template <class T>
class Raster {
public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0)
      throw ShapeError("raster dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <class U>
  bool same_shape(const Raster<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Image = Raster<double>;
/// Boolean raster; 1 = valid. std::uint8_t avoids the vector<bool> proxy.
using Mask = Raster<std::uint8_t>;

template <class A, class B>
void require_same_shape(const Raster<A>& a, const Raster<B>& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.width()) +
                     "x" + std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                     "x" + std::to_string(b.height()) + ")");
}

inline Mask full_mask(int width, int height) { return Mask(width, height, 1); }

/// Elementwise logical AND of two masks.
inline Mask mask_and(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "mask_and");
  Mask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && b[i]) ? 1 : 0;
  return out;
}

inline std::size_t count_valid(const Mask& m) {
  return static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](auto v) { return v != 0; }));
}

/// Intersection over union of the set pixels; two empty masks give 1.
inline double mask_iou(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "mask_iou");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]) ? 1 : 0;
    uni += (a[i] || b[i]) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// 2x box downsampling; odd trailing rows/columns are dropped.
inline Image downsample2(const Image& src) {
  const int w = src.width() / 2;
  const int h = src.height() / 2;
  Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out(x, y) = 0.25 * (src(2 * x, 2 * y) + src(2 * x + 1, 2 * y) + src(2 * x, 2 * y + 1) +
                          src(2 * x + 1, 2 * y + 1));
  return out;
}

/// A 2x2 block is valid only if all four children are.
inline Mask downsample2(const Mask& src) {
  const int w = src.width() / 2;
  const int h = src.height() / 2;
  Mask out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out(x, y) = (src(2 * x, 2 * y) && src(2 * x + 1, 2 * y) && src(2 * x, 2 * y + 1) &&
                   src(2 * x + 1, 2 * y + 1))
                      ? 1
                      : 0;
  return out;
}

/// Bilinear resampling onto a (width, height) grid with pixel-center alignment,
/// values multiplied by `scale`. Used to lift coarse flows to the next level.
inline Image upsample_to(const Image& src, int width, int height, double scale) {
  Image out(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double tx = fx - x0;
      const double top = (1 - tx) * src(x0, y0) + tx * src(x1, y0);
      const double bot = (1 - tx) * src(x0, y1) + tx * src(x1, y1);
      out(x, y) = scale * ((1 - ty) * top + ty * bot);
    }
  }
  return out;
}

}  // namespace itof
