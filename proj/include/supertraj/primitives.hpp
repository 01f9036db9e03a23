#pragma once

#include "supertraj/trajectory.hpp"

namespace supertraj {

// Per-trajectory cluster labels; 0 means unlabeled.
using LabelVector = std::vector<uint32_t>;

// Frame-indexed bitmask (bit f-1 = frame f).
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(int nbits) : n_(nbits), w_((nbits + 63) / 64, 0) {}

  int size() const { return n_; }
  void set(int i) { w_[i >> 6] |= 1ull << (i & 63); }
  bool get(int i) const { return (w_[i >> 6] >> (i & 63)) & 1; }

  void set_range(int lo, int hi) {  // inclusive
    if (hi < lo) return;
    int wl = lo >> 6, wh = hi >> 6;
    for (int w = wl; w <= wh; ++w) {
      uint64_t m = ~0ull;
      if (w == wl) m &= ~0ull << (lo & 63);
      if (w == wh) m &= ~0ull >> (63 - (hi & 63));
      w_[w] |= m;
    }
  }

  BitVec& operator|=(const BitVec& o) {
    for (size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i];
    return *this;
  }

  // |a & ~b|: frames required by a that b does not connect
  static int count_andnot(const BitVec& a, const BitVec& b) {
    int c = 0;
    for (size_t i = 0; i < a.w_.size(); ++i)
      c += __builtin_popcountll(a.w_[i] & ~b.w_[i]);
    return c;
  }

 private:
  int n_ = 0;
  std::vector<uint64_t> w_;
};

BitVec visibility(const TrajectorySet& set, uint32_t i);

// Two trajectories are neighbors if at some common frame their rounded cells
// coincide or are 4-adjacent. Symmetric, irreflexive. first_frame[i][k] is the
// earliest frame at which the pair (i, neighbors[i][k]) qualified.
struct NeighborGraph {
  std::vector<std::vector<uint32_t>> neighbors;
  std::vector<std::vector<uint16_t>> first_frame;

  size_t size() const { return neighbors.size(); }
};

NeighborGraph build_neighbor_graph(const TrajectorySet& set);

// d(f) per frame: 0 iff some neighbor of i carrying `label` is visible at f.
std::vector<uint8_t> disconnectivity(const TrajectorySet& set, const NeighborGraph& graph,
                                     uint32_t i, const LabelVector& labels,
                                     uint32_t label);

// Frames where the cluster (minus i) is visible but no labeled neighbor of i
// is, i.e. sum_f d(f) & v_S(f).
int connectivity_cost(const TrajectorySet& set, const NeighborGraph& graph, uint32_t i,
                      uint32_t label, const LabelVector& labels);

// Same cost against an explicit member set whose combined visibility the
// caller maintains incrementally.
int connectivity_cost_set(const TrajectorySet& set, const NeighborGraph& graph, uint32_t i,
                          const std::vector<uint8_t>& member, const BitVec& set_vis);

// Independent re-derivation from raw coordinates (per-frame cell scans, no
// NeighborGraph/BitVec machinery); test oracle for connectivity_cost.
int cost_bruteforce_oracle(const TrajectorySet& set, uint32_t i, uint32_t label,
                           const LabelVector& labels);

// Sum of connectivity costs under a labeling; unlabeled trajectories count as
// disconnected on all F frames (the cost of any real label is at most F, so
// labeling a zero never raises its term).
int64_t disconnection_sum(const TrajectorySet& set, const NeighborGraph& graph,
                          const LabelVector& labels);

struct EnergyParams {
  double s = 16.0;  // target spacing, pixels
  double m = 10.0;  // color normalization
  double beta = 4.0;
};

// Online cluster centroid: per-frame position sums plus a mean-color sum.
struct ClusterState {
  uint32_t label = 0;
  std::vector<double> sum_x, sum_y;
  std::vector<uint32_t> count;
  std::array<double, 3> color_sum{0, 0, 0};
  uint32_t member_count = 0;
  std::vector<uint32_t> members;

  ClusterState() = default;
  ClusterState(int F, uint32_t lab)
      : label(lab), sum_x(F, 0.0), sum_y(F, 0.0), count(F, 0) {}

  void add_member(const TrajectorySet& set, const TrajectoryAttributes& attrs,
                  uint32_t i);
};

// Spatial + color energy of trajectory i against a centroid; +inf when they
// share no defined frame.
double energy_to_centroid(const TrajectorySet& set, const TrajectoryAttributes& attrs,
                          uint32_t i, const ClusterState& state, const EnergyParams& prm);

// Mean of exp(beta * max(b_i, b_j)) over co-visible frames; exp(beta) when
// there are none. Missing edge attributes act as zero strength.
double edge_energy(const TrajectorySet& set, const TrajectoryAttributes& attrs, uint32_t i,
                   uint32_t j, double beta);

double total_energy(const TrajectorySet& set, const TrajectoryAttributes& attrs, uint32_t i,
                    const ClusterState& state, uint32_t j, const EnergyParams& prm);

}  // namespace supertraj
