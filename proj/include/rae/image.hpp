#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rae/errors.hpp"

namespace rae {

// Dense grayscale image, row-major, intensities in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
    if (w <= 0 || h <= 0) throw InvalidInput("Image dimensions must be positive");
  }

  std::size_t size() const { return pixels.size(); }

  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height;
  }

  // Enforces the type invariants; used at I/O and construction boundaries.
  void validate() const {
    if (width <= 0 || height <= 0) throw InvalidInput("Image dimensions must be positive");
    if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw ShapeError("Image pixel count does not match dimensions");
    for (const double v : pixels) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw InvalidInput("Image intensity outside [0,1]: " + std::to_string(v));
    }
  }
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                     std::to_string(b.height) + ")");
}

// Area-weighted (box) resampling. Exact average of the covered source area,
// so downsampling preserves mean intensity.
inline Image resize_area(const Image& src, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) throw InvalidInput("resize_area: target dimensions must be positive");
  if (out_w == src.width && out_h == src.height) return src;
  Image dst(out_w, out_h);
  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;
  for (int oy = 0; oy < out_h; ++oy) {
    const double y0 = oy * sy;
    const double y1 = (oy + 1) * sy;
    const int iy0 = static_cast<int>(std::floor(y0));
    const int iy1 = std::min(src.height, static_cast<int>(std::ceil(y1)));
    for (int ox = 0; ox < out_w; ++ox) {
      const double x0 = ox * sx;
      const double x1 = (ox + 1) * sx;
      const int ix0 = static_cast<int>(std::floor(x0));
      const int ix1 = std::min(src.width, static_cast<int>(std::ceil(x1)));
      double acc = 0.0;
      double area = 0.0;
      for (int iy = iy0; iy < iy1; ++iy) {
        const double wy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
        for (int ix = ix0; ix < ix1; ++ix) {
          const double wx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
          acc += src.at(ix, iy) * wx * wy;
          area += wx * wy;
        }
      }
      dst.at(ox, oy) = acc / area;
    }
  }
  return dst;
}

// Nearest-neighbour resize; carries model-resolution values back to the
// native grid without inventing intermediate values.
inline Image resize_nearest(const Image& src, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) throw InvalidInput("resize_nearest: target dimensions must be positive");
  if (out_w == src.width && out_h == src.height) return src;
  Image dst(out_w, out_h);
  for (int oy = 0; oy < out_h; ++oy) {
    const int sy = static_cast<int>((static_cast<long long>(oy) * src.height) / out_h);
    for (int ox = 0; ox < out_w; ++ox) {
      const int sx = static_cast<int>((static_cast<long long>(ox) * src.width) / out_w);
      dst.at(ox, oy) = src.at(sx, sy);
    }
  }
  return dst;
}

// Integer-pixel translation with edge replication.
inline Image shift_image(const Image& src, int dx, int dy) {
  Image dst(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    const int sy = std::clamp(y - dy, 0, src.height - 1);
    for (int x = 0; x < src.width; ++x) {
      const int sx = std::clamp(x - dx, 0, src.width - 1);
      dst.at(x, y) = src.at(sx, sy);
    }
  }
  return dst;
}

inline void clamp_intensities(Image& img) {
  for (double& v : img.pixels) v = std::clamp(v, 0.0, 1.0);
}

// Snap every intensity to the nearest 8-bit level so in-memory corpora match
// their PGM serialization bit-for-bit.
inline void quantize_8bit(Image& img) {
  for (double& v : img.pixels) {
    const int b = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    v = b / 255.0;
  }
}

}  // namespace rae
