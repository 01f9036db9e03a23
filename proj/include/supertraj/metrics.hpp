#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "supertraj/image.hpp"
#include "supertraj/primitives.hpp"
#include "supertraj/trajectory.hpp"

namespace supertraj {

// Dense F x H x W label volume, frame-major then row-major.
struct SegmentationVolume {
  int F = 0, H = 0, W = 0;
  std::vector<uint32_t> data;

  SegmentationVolume() = default;
  SegmentationVolume(int f, int h, int w)
      : F(f), H(h), W(w), data(static_cast<size_t>(f) * h * w, 0) {}

  uint32_t& at(int f, int x, int y) {
    return data[(static_cast<size_t>(f) * H + y) * W + x];
  }
  uint32_t at(int f, int x, int y) const {
    return data[(static_cast<size_t>(f) * H + y) * W + x];
  }
  size_t voxels() const { return data.size(); }
};

SegmentationVolume volume_from_rasters(const std::vector<LabelRaster>& frames);
SegmentationVolume rasterize_volume(const TrajectorySet& set, const LabelVector& labels);

// Undersegmentation error: per ground-truth segment, the bleed of every
// overlapping predicted segment relative to the segment size, averaged.
double ue3d(const SegmentationVolume& pred, const SegmentationVolume& gt);
// Segmentation accuracy: per ground-truth segment, the fraction recovered by
// predicted segments that lie at least half inside it.
double sa3d(const SegmentationVolume& pred, const SegmentationVolume& gt);
// Boundary recall: fraction of ground-truth boundary voxels with a predicted
// boundary voxel within Chebyshev distance tol (6-neighbor boundaries).
double br3d(const SegmentationVolume& pred, const SegmentationVolume& gt, int tol = 1);
double br3d_serial(const SegmentationVolume& pred, const SegmentationVolume& gt,
                   int tol = 1);

// Per-frame variants: each frame's slice is scored as a 2D segmentation
// (4-neighbor boundaries) and the frame scores are averaged uniformly.
double ue2d(const SegmentationVolume& pred, const SegmentationVolume& gt);
double sa2d(const SegmentationVolume& pred, const SegmentationVolume& gt);
double br2d(const SegmentationVolume& pred, const SegmentationVolume& gt, int tol = 1);

// Mean lifespan in frames over distinct labels (last minus first occurrence,
// inclusive).
double mean_duration(const SegmentationVolume& volume);
size_t count_supervoxels(const SegmentationVolume& volume);

struct MetricReport {
  double ue2d = 0, sa2d = 0, br2d = 0;
  double ue3d = 0, sa3d = 0, br3d = 0;
  double mean_duration = 0;
  size_t supervoxels = 0;
};

MetricReport compute_metrics(const SegmentationVolume& pred, const SegmentationVolume& gt,
                             int tol = 1);

std::string report_json(const MetricReport& r);
std::string csv_header();
std::string csv_row(double s, const MetricReport& r);

}  // namespace supertraj
