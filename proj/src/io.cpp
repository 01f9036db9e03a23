#include "supertraj/io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace supertraj {

namespace {

constexpr float kFloMagic = 202021.25f;
constexpr double kFloSentinel = 1e9;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw FormatError("truncated file: " + path);
  return v;
}

}  // namespace

FlowField read_flow_file(const std::string& path, int expected_width,
                         int expected_height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open flow file: " + path);
  float magic = get<float>(in, path);
  if (magic != kFloMagic) throw FormatError("bad flow magic in " + path);
  int32_t w = get<int32_t>(in, path);
  int32_t h = get<int32_t>(in, path);
  if (w <= 0 || h <= 0 || w > 100000 || h > 100000)
    throw FormatError("implausible flow dimensions in " + path);
  if ((expected_width >= 0 && w != expected_width) ||
      (expected_height >= 0 && h != expected_height))
    throw DimensionError("flow dimensions disagree with frames: " + path);
  FlowField f(w, h);
  std::vector<float> buf(static_cast<size_t>(w) * h * 2);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw FormatError("truncated flow file: " + path);
  for (size_t i = 0; i < f.u.size(); ++i) {
    float u = buf[i * 2], v = buf[i * 2 + 1];
    if (!std::isfinite(u) || !std::isfinite(v) || std::abs(u) >= kFloSentinel ||
        std::abs(v) >= kFloSentinel)
      throw InvalidDataError("unknown-flow sentinel in " + path);
    f.u[i] = u;
    f.v[i] = v;
  }
  return f;
}

void write_flow_file(const FlowField& flow, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot create flow file: " + path);
  put(out, kFloMagic);
  put(out, static_cast<int32_t>(flow.width));
  put(out, static_cast<int32_t>(flow.height));
  for (size_t i = 0; i < flow.u.size(); ++i) {
    put(out, flow.u[i]);
    put(out, flow.v[i]);
  }
  if (!out) throw FormatError("short write: " + path);
}

namespace {

struct PngReader {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;

  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }

  void open(const std::string& path) {
    fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw FormatError("cannot open image: " + path);
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, fp) != 8 || png_sig_cmp(sig, 0, 8))
      throw FormatError("not a PNG file: " + path);
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) throw FormatError("PNG reader setup failed");
    png_init_io(png, fp);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
  }
};

struct PngWriter {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;

  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }

  void open(const std::string& path) {
    fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw FormatError("cannot create image: " + path);
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) throw FormatError("PNG writer setup failed");
    png_init_io(png, fp);
  }
};

struct GrayImage {
  int width = 0, height = 0, bit_depth = 8;
  std::vector<uint16_t> data;
};

GrayImage read_png_gray(const std::string& path) {
  PngReader r;
  r.open(path);
  if (setjmp(png_jmpbuf(r.png))) throw FormatError("PNG decode failed: " + path);
  png_byte color_type = png_get_color_type(r.png, r.info);
  if (color_type != PNG_COLOR_TYPE_GRAY)
    throw FormatError("single-channel image required: " + path);
  png_byte depth = png_get_bit_depth(r.png, r.info);
  if (depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
  if (depth == 16) png_set_swap(r.png);
  png_read_update_info(r.png, r.info);

  GrayImage img;
  img.width = static_cast<int>(png_get_image_width(r.png, r.info));
  img.height = static_cast<int>(png_get_image_height(r.png, r.info));
  img.bit_depth = depth == 16 ? 16 : 8;
  img.data.resize(static_cast<size_t>(img.width) * img.height);

  std::vector<uint8_t> row(png_get_rowbytes(r.png, r.info));
  for (int y = 0; y < img.height; ++y) {
    png_read_row(r.png, row.data(), nullptr);
    if (img.bit_depth == 16) {
      const auto* p = reinterpret_cast<const uint16_t*>(row.data());
      std::copy(p, p + img.width, &img.data[static_cast<size_t>(y) * img.width]);
    } else {
      for (int x = 0; x < img.width; ++x)
        img.data[static_cast<size_t>(y) * img.width + x] = row[x];
    }
  }
  png_read_end(r.png, nullptr);
  return img;
}

}  // namespace

ImageFrame read_image(const std::string& path) {
  PngReader r;
  r.open(path);
  if (setjmp(png_jmpbuf(r.png))) throw FormatError("PNG decode failed: " + path);
  png_byte color_type = png_get_color_type(r.png, r.info);
  png_byte depth = png_get_bit_depth(r.png, r.info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8)
    png_set_expand_gray_1_2_4_to_8(r.png);
  if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
  if (depth == 16) png_set_strip_16(r.png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(r.png);
  png_read_update_info(r.png, r.info);

  int w = static_cast<int>(png_get_image_width(r.png, r.info));
  int h = static_cast<int>(png_get_image_height(r.png, r.info));
  int ch = png_get_channels(r.png, r.info);
  if (ch != 3 && ch != 4) throw FormatError("unsupported channel layout: " + path);

  ImageFrame img(w, h);
  std::vector<uint8_t> row(png_get_rowbytes(r.png, r.info));
  for (int y = 0; y < h; ++y) {
    png_read_row(r.png, row.data(), nullptr);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = row[x * ch + c];
    }
  }
  png_read_end(r.png, nullptr);
  return img;
}

void write_image(const ImageFrame& rgb, const std::string& path) {
  PngWriter w;
  w.open(path);
  if (setjmp(png_jmpbuf(w.png))) throw FormatError("PNG encode failed: " + path);
  png_set_IHDR(w.png, w.info, rgb.width, rgb.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  std::vector<uint8_t> row(static_cast<size_t>(rgb.width) * 3);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        float v = rgb.at(x, y, c);
        row[x * 3 + c] =
            static_cast<uint8_t>(std::clamp(round_half_up(v), 0, 255));
      }
    }
    png_write_row(w.png, row.data());
  }
  png_write_end(w.png, nullptr);
}

EdgeMap read_edge_map(const std::string& path) {
  GrayImage img = read_png_gray(path);
  EdgeMap e(img.width, img.height);
  const float scale = img.bit_depth == 16 ? 65535.f : 255.f;
  for (size_t i = 0; i < img.data.size(); ++i) e.data[i] = img.data[i] / scale;
  return e;
}

void write_edge_map(const EdgeMap& edges, const std::string& path) {
  PngWriter w;
  w.open(path);
  if (setjmp(png_jmpbuf(w.png))) throw FormatError("PNG encode failed: " + path);
  png_set_IHDR(w.png, w.info, edges.width, edges.height, 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  png_set_swap(w.png);
  std::vector<uint16_t> row(edges.width);
  for (int y = 0; y < edges.height; ++y) {
    for (int x = 0; x < edges.width; ++x) {
      double v = std::clamp(static_cast<double>(edges.at(x, y)), 0.0, 1.0);
      row[x] = static_cast<uint16_t>(round_half_up(v * 65535.0));
    }
    png_write_row(w.png, reinterpret_cast<png_bytep>(row.data()));
  }
  png_write_end(w.png, nullptr);
}

LabelRaster read_label_raster(const std::string& path) {
  GrayImage img = read_png_gray(path);
  LabelRaster l(img.width, img.height);
  for (size_t i = 0; i < img.data.size(); ++i) l.data[i] = img.data[i];
  return l;
}

void write_label_raster(const LabelRaster& labels, const std::string& path) {
  for (uint32_t v : labels.data) {
    if (v > 65535) throw InvalidDataError("label value does not fit 16 bits");
  }
  PngWriter w;
  w.open(path);
  if (setjmp(png_jmpbuf(w.png))) throw FormatError("PNG encode failed: " + path);
  png_set_IHDR(w.png, w.info, labels.width, labels.height, 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  png_set_swap(w.png);
  std::vector<uint16_t> row(labels.width);
  for (int y = 0; y < labels.height; ++y) {
    for (int x = 0; x < labels.width; ++x)
      row[x] = static_cast<uint16_t>(labels.at(x, y));
    png_write_row(w.png, reinterpret_cast<png_bytep>(row.data()));
  }
  png_write_end(w.png, nullptr);
}

namespace {

void sobel_row(int y, const std::vector<double>& lum, int w, int h, double* out) {
  auto at = [&](int xx, int yy) {
    xx = std::clamp(xx, 0, w - 1);
    yy = std::clamp(yy, 0, h - 1);
    return lum[static_cast<size_t>(yy) * w + xx];
  };
  for (int x = 0; x < w; ++x) {
    double gx = -at(x - 1, y - 1) + at(x + 1, y - 1) - 2.0 * at(x - 1, y) +
                2.0 * at(x + 1, y) - at(x - 1, y + 1) + at(x + 1, y + 1);
    double gy = -at(x - 1, y - 1) - 2.0 * at(x, y - 1) - at(x + 1, y - 1) +
                at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1);
    out[x] = std::sqrt(gx * gx + gy * gy);
  }
}

EdgeMap sobel_impl(const ImageFrame& rgb, bool parallel) {
  const int w = rgb.width, h = rgb.height;
  std::vector<double> lum(static_cast<size_t>(w) * h);
  for (size_t i = 0; i < lum.size(); ++i) {
    lum[i] = 0.299 * rgb.data[i * 3] + 0.587 * rgb.data[i * 3 + 1] +
             0.114 * rgb.data[i * 3 + 2];
  }
  std::vector<double> mag(lum.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (int y = 0; y < h; ++y) {
    sobel_row(y, lum, w, h, &mag[static_cast<size_t>(y) * w]);
  }
  (void)parallel;

  std::vector<double> sorted(mag);
  size_t idx = (sorted.size() - 1) * 99 / 100;
  std::nth_element(sorted.begin(), sorted.begin() + idx, sorted.end());
  double p99 = sorted[idx];

  EdgeMap e(w, h);
  // near-constant images leave only FP contraction residue (~1e-14 at 8-bit
  // scale) in mag; dividing by it would promote noise to full edge strength
  if (p99 < 1e-9) return e;
  for (size_t i = 0; i < mag.size(); ++i)
    e.data[i] = static_cast<float>(std::min(1.0, mag[i] / p99));
  return e;
}

}  // namespace

EdgeMap sobel_edge_fallback(const ImageFrame& rgb) { return sobel_impl(rgb, true); }

EdgeMap sobel_edge_fallback_serial(const ImageFrame& rgb) { return sobel_impl(rgb, false); }

void write_trajectories(const TrajectorySet& set, const TrajectoryAttributes& attrs,
                        const std::string& path) {
  if (attrs.colors.size() != set.size())
    throw ConfigError("write_trajectories: attributes do not match the set");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot create trajectory file: " + path);
  out.write("STRJ", 4);
  put(out, static_cast<uint32_t>(1));
  put(out, static_cast<uint32_t>(set.F));
  put(out, static_cast<uint32_t>(set.H));
  put(out, static_cast<uint32_t>(set.W));
  put(out, static_cast<uint64_t>(set.size()));
  for (uint32_t i = 0; i < set.size(); ++i) {
    const Trajectory& t = set.trajectories[i];
    if (attrs.colors[i].size() != t.coords.size())
      throw ConfigError("write_trajectories: color run length mismatch");
    put(out, static_cast<uint32_t>(t.start_frame));
    put(out, static_cast<uint32_t>(t.coords.size()));
    for (const Vec2& p : t.coords) {
      put(out, static_cast<float>(p.x));
      put(out, static_cast<float>(p.y));
    }
    for (const auto& c : attrs.colors[i]) {
      put(out, c[0]);
      put(out, c[1]);
      put(out, c[2]);
    }
  }
  if (!out) throw FormatError("short write: " + path);
}

TrajectoryFile read_trajectories(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open trajectory file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "STRJ", 4) != 0)
    throw FormatError("bad trajectory magic in " + path);
  uint32_t version = get<uint32_t>(in, path);
  if (version != 1) throw FormatError("unsupported trajectory version in " + path);

  TrajectoryFile tf;
  tf.set.F = static_cast<int>(get<uint32_t>(in, path));
  tf.set.H = static_cast<int>(get<uint32_t>(in, path));
  tf.set.W = static_cast<int>(get<uint32_t>(in, path));
  uint64_t count = get<uint64_t>(in, path);
  if (tf.set.F < 1 || tf.set.H < 1 || tf.set.W < 1)
    throw InvalidDataError("bad trajectory header in " + path);

  tf.set.trajectories.resize(count);
  tf.attrs.colors.resize(count);
  tf.attrs.edge_strengths.resize(count);
  tf.attrs.mean_color.resize(count);
  for (uint64_t i = 0; i < count; ++i) {
    Trajectory& t = tf.set.trajectories[i];
    t.start_frame = static_cast<int>(get<uint32_t>(in, path));
    uint32_t len = get<uint32_t>(in, path);
    if (t.start_frame < 1 || len < 1 || t.start_frame + static_cast<int>(len) - 1 > tf.set.F)
      throw InvalidDataError("trajectory run leaves the frame range in " + path);
    t.coords.resize(len);
    for (uint32_t k = 0; k < len; ++k) {
      t.coords[k].x = get<float>(in, path);
      t.coords[k].y = get<float>(in, path);
    }
    auto& cols = tf.attrs.colors[i];
    cols.resize(len);
    double s0 = 0, s1 = 0, s2 = 0;
    for (uint32_t k = 0; k < len; ++k) {
      cols[k][0] = get<float>(in, path);
      cols[k][1] = get<float>(in, path);
      cols[k][2] = get<float>(in, path);
      s0 += cols[k][0];
      s1 += cols[k][1];
      s2 += cols[k][2];
    }
    tf.attrs.mean_color[i] = {static_cast<float>(s0 / len),
                              static_cast<float>(s1 / len),
                              static_cast<float>(s2 / len)};
  }
  in.peek();
  if (!in.eof()) throw FormatError("trailing bytes in " + path);
  return tf;
}

void write_labels(const std::vector<uint32_t>& labels, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot create label file: " + path);
  out.write("STLB", 4);
  put(out, static_cast<uint32_t>(1));
  put(out, static_cast<uint64_t>(labels.size()));
  for (uint32_t v : labels) put(out, v);
  if (!out) throw FormatError("short write: " + path);
}

std::vector<uint32_t> read_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open label file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "STLB", 4) != 0)
    throw FormatError("bad label magic in " + path);
  uint32_t version = get<uint32_t>(in, path);
  if (version != 1) throw FormatError("unsupported label version in " + path);
  uint64_t count = get<uint64_t>(in, path);
  std::vector<uint32_t> labels(count);
  for (uint64_t i = 0; i < count; ++i) labels[i] = get<uint32_t>(in, path);
  in.peek();
  if (!in.eof()) throw FormatError("trailing bytes in " + path);
  return labels;
}

namespace {

std::array<uint8_t, 3> hsv_to_rgb(double hue, double sat, double val) {
  double c = val * sat;
  double hp = hue / 60.0;
  double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) {
    r = c; g = x;
  } else if (hp < 2) {
    r = x; g = c;
  } else if (hp < 3) {
    g = c; b = x;
  } else if (hp < 4) {
    g = x; b = c;
  } else if (hp < 5) {
    r = x; b = c;
  } else {
    r = c; b = x;
  }
  double m = val - c;
  auto q = [&](double v) { return static_cast<uint8_t>(std::lround((v + m) * 255.0)); };
  return {q(r), q(g), q(b)};
}

}  // namespace

std::array<uint8_t, 3> label_color(uint32_t label) {
  uint64_t hsh = hash_u64(label);
  double hue = static_cast<double>(hsh & 0xFFFF) / 65536.0 * 360.0;
  double sat = 0.55 + static_cast<double>((hsh >> 16) & 0xFF) / 255.0 * 0.4;
  return hsv_to_rgb(hue, sat, 0.95);
}

ImageFrame render_overlay(const ImageFrame& rgb, const LabelRaster& labels) {
  if (rgb.width != labels.width || rgb.height != labels.height)
    throw DimensionError("render_overlay: frame/label dimensions disagree");
  ImageFrame out(rgb.width, rgb.height);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      uint32_t l = labels.at(x, y);
      bool boundary = (x > 0 && labels.at(x - 1, y) != l) ||
                      (y > 0 && labels.at(x, y - 1) != l);
      if (boundary) {
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = 0.f;
      } else {
        std::array<uint8_t, 3> col = label_color(l);
        for (int c = 0; c < 3; ++c)
          out.at(x, y, c) = 0.5f * rgb.at(x, y, c) + 0.5f * col[c];
      }
    }
  }
  return out;
}

ImageFrame render_avgcolor(const TrajectorySet& set,
                           const std::vector<std::array<float, 3>>& mean_lab,
                           int frame) {
  if (mean_lab.size() != set.size())
    throw ConfigError("render_avgcolor: one mean color per trajectory required");
  std::vector<int64_t> winner = g_winner_raster(set, frame, true);
  ImageFrame out(set.W, set.H);
  for (size_t c = 0; c < winner.size(); ++c) {
    float rgb[3];
    lab_to_rgb(mean_lab[static_cast<size_t>(winner[c])].data(), rgb);
    out.data[c * 3] = rgb[0];
    out.data[c * 3 + 1] = rgb[1];
    out.data[c * 3 + 2] = rgb[2];
  }
  return out;
}

}  // namespace supertraj
