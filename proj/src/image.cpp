#include "supertraj/image.hpp"

#include <algorithm>

namespace supertraj {

namespace {

struct Lerp {
  int x0, x1, y0, y1;
  double fx, fy;
};

Lerp lerp_setup(double x, double y, int w, int h) {
  if (!(x >= 0.0)) x = 0.0;
  if (x > w - 1) x = w - 1;
  if (!(y >= 0.0)) y = 0.0;
  if (y > h - 1) y = h - 1;
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  x0 = std::clamp(x0, 0, std::max(w - 2, 0));
  y0 = std::clamp(y0, 0, std::max(h - 2, 0));
  int x1 = std::min(x0 + 1, w - 1);
  int y1 = std::min(y0 + 1, h - 1);
  return {x0, x1, y0, y1, x - x0, y - y0};
}

inline double mix(double v00, double v10, double v01, double v11, double fx, double fy) {
  return v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) +
         v01 * (1.0 - fx) * fy + v11 * fx * fy;
}

}  // namespace

double bilinear(const EdgeMap& m, double x, double y) {
  Lerp l = lerp_setup(x, y, m.width, m.height);
  return mix(m.at(l.x0, l.y0), m.at(l.x1, l.y0), m.at(l.x0, l.y1), m.at(l.x1, l.y1),
             l.fx, l.fy);
}

Vec2 bilinear(const FlowField& f, double x, double y) {
  Lerp l = lerp_setup(x, y, f.width, f.height);
  double u = mix(f.u[f.idx(l.x0, l.y0)], f.u[f.idx(l.x1, l.y0)],
                 f.u[f.idx(l.x0, l.y1)], f.u[f.idx(l.x1, l.y1)], l.fx, l.fy);
  double v = mix(f.v[f.idx(l.x0, l.y0)], f.v[f.idx(l.x1, l.y0)],
                 f.v[f.idx(l.x0, l.y1)], f.v[f.idx(l.x1, l.y1)], l.fx, l.fy);
  return {u, v};
}

std::array<double, 3> bilinear(const ImageFrame& img, double x, double y) {
  Lerp l = lerp_setup(x, y, img.width, img.height);
  std::array<double, 3> out;
  for (int c = 0; c < 3; ++c) {
    out[c] = mix(img.at(l.x0, l.y0, c), img.at(l.x1, l.y0, c), img.at(l.x0, l.y1, c),
                 img.at(l.x1, l.y1, c), l.fx, l.fy);
  }
  return out;
}

namespace {

inline double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double linear_to_srgb(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

constexpr double kEps = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

inline double lab_f(double t) {
  return t > kEps ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

inline double lab_finv(double t) {
  double t3 = t * t * t;
  return t3 > kEps ? t3 : (116.0 * t - 16.0) / kKappa;
}

}  // namespace

void rgb_to_lab(const float rgb[3], float lab[3]) {
  double r = srgb_to_linear(rgb[0] / 255.0);
  double g = srgb_to_linear(rgb[1] / 255.0);
  double b = srgb_to_linear(rgb[2] / 255.0);
  // D65 white
  double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
  double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
  double fx = lab_f(x), fy = lab_f(y), fz = lab_f(z);
  lab[0] = static_cast<float>(116.0 * fy - 16.0);
  lab[1] = static_cast<float>(500.0 * (fx - fy));
  lab[2] = static_cast<float>(200.0 * (fy - fz));
}

void lab_to_rgb(const float lab[3], float rgb[3]) {
  double fy = (lab[0] + 16.0) / 116.0;
  double fx = fy + lab[1] / 500.0;
  double fz = fy - lab[2] / 200.0;
  double x = lab_finv(fx) * 0.95047;
  double y = lab[0] > kKappa * kEps ? std::pow(fy, 3.0) : lab[0] / kKappa;
  double z = lab_finv(fz) * 1.08883;
  double r = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
  double g = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
  double b = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
  rgb[0] = static_cast<float>(std::clamp(linear_to_srgb(r), 0.0, 1.0) * 255.0);
  rgb[1] = static_cast<float>(std::clamp(linear_to_srgb(g), 0.0, 1.0) * 255.0);
  rgb[2] = static_cast<float>(std::clamp(linear_to_srgb(b), 0.0, 1.0) * 255.0);
}

namespace {

ImageFrame convert_frame(const ImageFrame& in, void (*fn)(const float*, float*), bool parallel) {
  ImageFrame out(in.width, in.height);
  const int64_t n = static_cast<int64_t>(in.pixel_count());
#ifdef _OPENMP
#pragma omp parallel for if (parallel)
#endif
  for (int64_t i = 0; i < n; ++i) {
    fn(&in.data[i * 3], &out.data[i * 3]);
  }
  (void)parallel;
  return out;
}

}  // namespace

ImageFrame rgb_to_lab(const ImageFrame& rgb) { return convert_frame(rgb, rgb_to_lab, true); }

ImageFrame rgb_to_lab_serial(const ImageFrame& rgb) {
  return convert_frame(rgb, rgb_to_lab, false);
}

ImageFrame lab_to_rgb(const ImageFrame& lab) { return convert_frame(lab, lab_to_rgb, true); }

}  // namespace supertraj
