// Times the OpenMP kernels against their serial reference implementations and
// verifies the outputs match bitwise.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "supertraj/io.hpp"
#include "supertraj/metrics.hpp"
#include "supertraj/trajectory.hpp"

using namespace supertraj;

namespace {

template <typename Fn>
double best_of(int reps, Fn&& fn) {
  double best = 1e30;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

ImageFrame noise_image(int w, int h, uint64_t seed) {
  ImageFrame img(w, h);
  SplitMix64 rng(seed);
  for (float& v : img.data) v = static_cast<float>(rng.next() % 256);
  return img;
}

EdgeMap noise_edges(int w, int h, uint64_t seed) {
  EdgeMap e(w, h);
  SplitMix64 rng(seed);
  for (float& v : e.data) v = static_cast<float>(rng.unit());
  return e;
}

FlowField noise_flow(int w, int h, double scale, uint64_t seed) {
  FlowField f(w, h);
  SplitMix64 rng(seed);
  for (size_t i = 0; i < f.u.size(); ++i) {
    f.u[i] = static_cast<float>(rng.uniform(-scale, scale));
    f.v[i] = static_cast<float>(rng.uniform(-scale, scale));
  }
  return f;
}

SegmentationVolume noise_volume(int F, int H, int W, uint32_t K, uint64_t seed) {
  SegmentationVolume v(F, H, W);
  SplitMix64 rng(seed);
  for (uint32_t& l : v.data) l = 1 + static_cast<uint32_t>(rng.next() % K);
  return v;
}

void report(const char* kernel, const std::string& size, double serial_ms,
            double parallel_ms, bool match) {
  std::printf("%-22s %-12s %9.2f ms %9.2f ms %6.2fx  %s\n", kernel, size.c_str(),
              serial_ms, parallel_ms, serial_ms / parallel_ms, match ? "match" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int dim = 1024;
  int reps = 3;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--size" && i + 1 < argc) dim = std::atoi(argv[++i]);
    else if (a == "--reps" && i + 1 < argc) reps = std::atoi(argv[++i]);
    else {
      std::fprintf(stderr, "usage: %s [--size N] [--reps R]\n", argv[0]);
      return 2;
    }
  }

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif
  std::printf("%-22s %-12s %12s %12s %8s\n", "kernel", "size", "serial", "parallel",
              "speedup");

  bool all_match = true;
  const std::string sz = std::to_string(dim) + "x" + std::to_string(dim);

  {
    ImageFrame rgb = noise_image(dim, dim, 11);
    ImageFrame a, b;
    double ts = best_of(reps, [&] { a = rgb_to_lab_serial(rgb); });
    double tp = best_of(reps, [&] { b = rgb_to_lab(rgb); });
    bool ok = a.data == b.data;
    all_match &= ok;
    report("rgb_to_lab", sz, ts, tp, ok);
  }

  {
    ImageFrame rgb = noise_image(dim, dim, 12);
    EdgeMap a, b;
    double ts = best_of(reps, [&] { a = sobel_edge_fallback_serial(rgb); });
    double tp = best_of(reps, [&] { b = sobel_edge_fallback(rgb); });
    bool ok = a.data == b.data;
    all_match &= ok;
    report("sobel_edges", sz, ts, tp, ok);
  }

  {
    ImageFrame lab_f = rgb_to_lab(noise_image(dim, dim, 13));
    ImageFrame lab_p = rgb_to_lab(noise_image(dim, dim, 14));
    FlowField bwd = noise_flow(dim, dim, 2.0, 15);
    FlowField fwd = noise_flow(dim, dim, 2.0, 16);
    EdgeMap ep = noise_edges(dim, dim, 17), ef = noise_edges(dim, dim, 18);
    DistanceRaster a, b;
    double ts = best_of(reps, [&] {
      a = consistency_distance_serial(lab_f, lab_p, bwd, fwd, ep, ef, 4.0, 20.0);
    });
    double tp = best_of(reps, [&] {
      b = consistency_distance(lab_f, lab_p, bwd, fwd, ep, ef, 4.0, 20.0);
    });
    bool ok = a.data == b.data;
    all_match &= ok;
    report("consistency_distance", sz, ts, tp, ok);
  }

  {
    const int F = 8, side = dim / 8;
    SegmentationVolume pred = noise_volume(F, side, side, 6, 19);
    SegmentationVolume gt = noise_volume(F, side, side, 4, 20);
    double ra = 0, rb = 0;
    double ts = best_of(reps, [&] { ra = br3d_serial(pred, gt, 1); });
    double tp = best_of(reps, [&] { rb = br3d(pred, gt, 1); });
    bool ok = ra == rb;
    all_match &= ok;
    report("br3d", std::to_string(F) + "x" + std::to_string(side) + "x" +
                       std::to_string(side),
           ts, tp, ok);
  }

  if (!all_match) {
    std::printf("FAIL: parallel output diverged from serial reference\n");
    return 1;
  }
  std::printf("all kernels match their serial references\n");
  return 0;
}
