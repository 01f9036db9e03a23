#pragma once

#include "supertraj/primitives.hpp"

namespace supertraj {

// (trajectory id, frame it was selected at); seed order defines labels 1..K.
struct SeedSet {
  std::vector<std::pair<uint32_t, int>> seeds;

  size_t size() const { return seeds.size(); }
};

// Grid seeds on frame 1 at (s/2 + a*s, s/2 + b*s), snapped to the occupying
// trajectory, then bisection probing of later frames: rasterize the
// uncovered-trajectory indicator, box-sum it, and plant a seed at every s x s
// window holding at least th uncovered mass. th < 0 means ceil(s^2 / 2).
SeedSet init_seeds(const TrajectorySet& set, double s, int th = -1);

// SNIC-style region growing over the neighbor graph: labeled trajectories
// push their unlabeled neighbors into a priority queue keyed by (energy,
// insertion order); pops adopt, update the centroid online, and push again.
LabelVector tnic(const TrajectorySet& set, const TrajectoryAttributes& attrs,
                 const NeighborGraph& graph, const LabelVector& init, size_t num_labels,
                 const EnergyParams& prm);

struct ClusterDiagnostics {
  std::vector<size_t> fully_connected_counts;  // |L*| after each outer iteration
  int iterations = 0;
  size_t fallback_assignments = 0;
  int64_t disconnection_before = -1;
  int64_t disconnection_after = -1;
};

// Per-frame cleanup: rasterize, relabel 4-connected regions smaller than
// min_region to their largest adjacent region, sample back; trajectories with
// one consistent nonzero label keep it, the rest take the neighbor label of
// minimum connectivity cost (nearest labeled trajectory as a last resort).
LabelVector post_process(const TrajectorySet& set, const NeighborGraph& graph,
                         const LabelVector& l_hat, size_t num_labels, int min_region,
                         ClusterDiagnostics* diag = nullptr);

// Outer loop: TNIC, then per cluster grow the maximal zero-cost connected set
// from its seed (later iterations extend the kept set L*), repeat with L* as
// the next initialization until the kept count stops growing or max_iter,
// then post-process. min_region < 0 means ceil(s^2 / 4).
LabelVector super_trajectory_clustering(const TrajectorySet& set,
                                        const TrajectoryAttributes& attrs,
                                        const NeighborGraph& graph, const SeedSet& seeds,
                                        const EnergyParams& prm, int max_iter = 10,
                                        int min_region = -1,
                                        ClusterDiagnostics* diag = nullptr);

// Exposed for tests: the small-region relabeling pass on one raster.
LabelRaster filter_small_regions(const LabelRaster& raster, int min_region);

}  // namespace supertraj
