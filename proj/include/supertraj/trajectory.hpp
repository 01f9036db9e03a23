#pragma once

#include <utility>

#include "supertraj/image.hpp"

namespace supertraj {

// One tracked point. Frames are 1-based; a trajectory is visible on the
// contiguous range [start_frame, start_frame + coords.size() - 1].
struct Trajectory {
  int start_frame = 1;
  std::vector<Vec2> coords;

  int length() const { return static_cast<int>(coords.size()); }
  int end_frame() const { return start_frame + length() - 1; }
};

struct TrajectorySet {
  int F = 0, H = 0, W = 0;
  std::vector<Trajectory> trajectories;

  size_t size() const { return trajectories.size(); }

  bool visible_at(uint32_t i, int f) const {
    const Trajectory& t = trajectories[i];
    return f >= t.start_frame && f <= t.end_frame();
  }
  Vec2 pos_at(uint32_t i, int f) const {
    const Trajectory& t = trajectories[i];
    return t.coords[f - t.start_frame];
  }
};

// Per-frame appearance attributes, parallel to TrajectorySet. Colors are
// CIELAB; edge strengths are in [0,1].
struct TrajectoryAttributes {
  std::vector<std::vector<std::array<float, 3>>> colors;
  std::vector<std::vector<float>> edge_strengths;
  std::vector<std::array<float, 3>> mean_color;
};

// frames[0] (frame 1) is all-true by convention: everything is new there.
struct OcclusionMask {
  int F = 0, H = 0, W = 0;
  std::vector<std::vector<uint8_t>> frames;
};

struct DistanceRaster {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  DistanceRaster() = default;
  DistanceRaster(int w, int h)
      : width(w), height(h), data(static_cast<size_t>(w) * h, 0.0) {}

  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

// Joint flow/color/edge consistency distance for a frame f against its
// predecessor p. Frames must already be in Lab space. Pixels whose backward
// round trip leaves the image domain get +inf.
DistanceRaster consistency_distance(const ImageFrame& lab_f, const ImageFrame& lab_p,
                                    const FlowField& bwd_f, const FlowField& fwd_p,
                                    const EdgeMap& edges_p, const EdgeMap& edges_f,
                                    double beta, double sigma);
DistanceRaster consistency_distance_serial(const ImageFrame& lab_f, const ImageFrame& lab_p,
                                           const FlowField& bwd_f, const FlowField& fwd_p,
                                           const EdgeMap& edges_p, const EdgeMap& edges_f,
                                           double beta, double sigma);

std::vector<uint8_t> occlusion_mask(const DistanceRaster& d, double gamma);

struct BuildParams {
  double gamma = 1.5;
  double beta = 4.0;
  double sigma = 20.0;
};

struct BuildResult {
  TrajectorySet set;
  TrajectoryAttributes attrs;
  OcclusionMask mask;
};

// Dense trajectory builder. Frame 1 spawns a trajectory per pixel; each frame
// advances live trajectories along the forward flow, terminates them when the
// arrival cell's occlusion mask is set or the position leaves the domain, and
// spawns a fresh trajectory at every raster cell no survivor claimed.
BuildResult build_trajectories(const std::vector<ImageFrame>& rgb_frames,
                               const std::vector<FlowField>& fwd,
                               const std::vector<FlowField>& bwd,
                               const std::vector<EdgeMap>& edges,
                               const BuildParams& params = {});

// g(): scatter per-trajectory values onto the frame grid. Cells take the value
// of the trajectory whose sub-pixel coordinate is nearest the cell center
// (ties: lowest trajectory id); empty cells are filled from the nearest
// assigned cell by 4-connected BFS (ties: lowest value).
LabelRaster g_rasterize(const TrajectorySet& set, int frame,
                        const std::vector<uint32_t>& values);

// Winner trajectory per cell (-1 where no trajectory rounds in). With
// fill_holes, empty cells take the nearest winner (ties: lowest id).
std::vector<int64_t> g_winner_raster(const TrajectorySet& set, int frame, bool fill_holes);

// h(): sample a raster back onto trajectories visible at the frame. Result
// pairs are (trajectory id, value) in ascending id order; invisible
// trajectories yield nothing. Label rasters sample nearest-neighbor,
// continuous rasters bilinearly.
std::vector<std::pair<uint32_t, uint32_t>> h_sample_labels(const TrajectorySet& set,
                                                           int frame,
                                                           const LabelRaster& raster);
std::vector<std::pair<uint32_t, double>> h_sample_scalar(const TrajectorySet& set, int frame,
                                                         const EdgeMap& raster);
std::vector<std::pair<uint32_t, std::array<double, 3>>> h_sample_color(
    const TrajectorySet& set, int frame, const ImageFrame& raster);

}  // namespace supertraj
