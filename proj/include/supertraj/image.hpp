#pragma once

#include <array>

#include "supertraj/common.hpp"

namespace supertraj {

// Interleaved 3-channel float raster. sRGB content uses [0,255]; the same
// container holds CIELAB planes internally (L in [0,100], a/b signed).
struct ImageFrame {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  ImageFrame() = default;
  ImageFrame(int w, int h, float fill = 0.f)
      : width(w), height(h), data(static_cast<size_t>(w) * h * 3, fill) {}

  float& at(int x, int y, int c) {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  float at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

// Boundary-strength raster, values in [0,1].
struct EdgeMap {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  EdgeMap() = default;
  EdgeMap(int w, int h, float fill = 0.f)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

struct FlowField {
  enum class Direction { Forward, Backward };

  int width = 0;
  int height = 0;
  std::vector<float> u, v;
  Direction direction = Direction::Forward;

  FlowField() = default;
  FlowField(int w, int h, Direction d = Direction::Forward)
      : width(w),
        height(h),
        u(static_cast<size_t>(w) * h, 0.f),
        v(static_cast<size_t>(w) * h, 0.f),
        direction(d) {}

  size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

// 0 is reserved for "unlabeled" during intermediate stages.
struct LabelRaster {
  int width = 0;
  int height = 0;
  std::vector<uint32_t> data;

  LabelRaster() = default;
  LabelRaster(int w, int h, uint32_t fill = 0)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  uint32_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  uint32_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

// Border-clamped bilinear sampling. Exact at integer coordinates (the
// zero-weight terms vanish identically), which downstream equality tests
// rely on.
double bilinear(const EdgeMap& m, double x, double y);
Vec2 bilinear(const FlowField& f, double x, double y);
std::array<double, 3> bilinear(const ImageFrame& img, double x, double y);

// sRGB (D65) <-> CIELAB, computed in double per pixel.
void rgb_to_lab(const float rgb[3], float lab[3]);
void lab_to_rgb(const float lab[3], float rgb[3]);

ImageFrame rgb_to_lab(const ImageFrame& rgb);
ImageFrame rgb_to_lab_serial(const ImageFrame& rgb);
ImageFrame lab_to_rgb(const ImageFrame& lab);

}  // namespace supertraj
