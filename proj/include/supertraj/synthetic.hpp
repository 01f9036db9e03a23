#pragma once

#include "supertraj/trajectory.hpp"

namespace supertraj {

enum class SynthPreset { GlobalTranslate, TwoRegion, Occluder };

SynthPreset preset_from_name(const std::string& name);
std::string preset_name(SynthPreset p);

struct SynthParams {
  SynthPreset preset = SynthPreset::GlobalTranslate;
  int width = 64;
  int height = 64;
  int frames = 10;
  // global-translate / two-region first region / occluder rectangle
  Vec2 motion{2, 1};
  // two-region second region (occluder background stays static)
  Vec2 motion2{0, 0};
  uint64_t seed = 1;
};

struct GtTrajectory {
  int start_frame = 1;
  std::vector<Vec2> coords;
};

struct SyntheticSequence {
  int width = 0, height = 0, frames = 0;
  std::vector<ImageFrame> images;
  std::vector<FlowField> fwd, bwd;
  std::vector<EdgeMap> edges;          // 1 on region-boundary pixels
  std::vector<LabelRaster> gt_labels;  // region id per pixel, 1-based
  // Pixels with no tracked predecessor: all of frame 1, then per frame the
  // entering/disoccluded cells. Flows are exact everywhere else.
  std::vector<std::vector<uint8_t>> new_masks;
  // Motion-model truth, spawned frame-major then row-major. Only emitted for
  // integer motions, where spawn/terminate geometry is closed-form.
  std::vector<GtTrajectory> gt_trajectories;
};

// Frames are sums of seeded sinusoids, so texture translates exactly and the
// emitted flows are forward/backward consistent to float rounding at every
// cell that new_masks does not flag.
SyntheticSequence generate_synthetic(const SynthParams& params);

}  // namespace supertraj
