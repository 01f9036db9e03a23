#pragma once

#include "supertraj/trajectory.hpp"

namespace supertraj {

// Middlebury .flo: float magic 202021.25, int32 width/height, then row-major
// interleaved float32 (u, v). Component magnitudes >= 1e9 are the "unknown"
// sentinel and are rejected.
FlowField read_flow_file(const std::string& path, int expected_width = -1,
                         int expected_height = -1);
void write_flow_file(const FlowField& flow, const std::string& path);

// 8-bit RGB PNG (grayscale inputs are expanded, 16-bit depth is narrowed).
ImageFrame read_image(const std::string& path);
void write_image(const ImageFrame& rgb, const std::string& path);

// 8- or 16-bit single-channel PNG, normalized to [0,1]. Multi-channel input
// is a format error.
EdgeMap read_edge_map(const std::string& path);
// 16-bit single-channel PNG; values clamped to [0,1].
void write_edge_map(const EdgeMap& edges, const std::string& path);

// Luminance Sobel magnitude, normalized by its 99th percentile and clipped
// to [0,1]. Used when no precomputed boundary images are available.
EdgeMap sobel_edge_fallback(const ImageFrame& rgb);
EdgeMap sobel_edge_fallback_serial(const ImageFrame& rgb);

// 16-bit single-channel PNG label rasters (8-bit accepted on read).
LabelRaster read_label_raster(const std::string& path);
void write_label_raster(const LabelRaster& labels, const std::string& path);

// STRJ container (little-endian): "STRJ", u32 version=1, u32 F,H,W, u64 T;
// per trajectory u32 start_frame, u32 length, length x (f32 x, f32 y),
// length x (f32 L, f32 a, f32 b). Edge strengths are not stored; mean colors
// are recomputed on read.
void write_trajectories(const TrajectorySet& set, const TrajectoryAttributes& attrs,
                        const std::string& path);

struct TrajectoryFile {
  TrajectorySet set;
  TrajectoryAttributes attrs;
};
TrajectoryFile read_trajectories(const std::string& path);

// STLB container: "STLB", u32 version=1, u64 T, then T x u32 labels.
void write_labels(const std::vector<uint32_t>& labels, const std::string& path);
std::vector<uint32_t> read_labels(const std::string& path);

// Deterministic display color for a label id.
std::array<uint8_t, 3> label_color(uint32_t label);

// Half-boundary overlay: pixels whose label differs from the left or up
// neighbor are drawn black, everything else is a 50/50 tint with the label
// color.
ImageFrame render_overlay(const ImageFrame& rgb, const LabelRaster& labels);

// Paint each cell with the mean Lab color of the trajectory that wins it
// (holes filled from the nearest assigned cell, ties to the lowest id).
ImageFrame render_avgcolor(const TrajectorySet& set,
                           const std::vector<std::array<float, 3>>& mean_lab, int frame);

}  // namespace supertraj
