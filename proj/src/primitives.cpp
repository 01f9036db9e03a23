#include "supertraj/primitives.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

namespace supertraj {

BitVec visibility(const TrajectorySet& set, uint32_t i) {
  BitVec v(set.F);
  const Trajectory& t = set.trajectories[i];
  v.set_range(t.start_frame - 1, t.end_frame() - 1);
  return v;
}

NeighborGraph build_neighbor_graph(const TrajectorySet& set) {
  const size_t T = set.size();
  const int W = set.W, H = set.H;
  // edge key (lo << 32 | hi) -> first co-resident frame
  std::unordered_map<uint64_t, uint16_t> edges;
  edges.reserve(T * 4);

  auto add_edge = [&](uint32_t a, uint32_t b, int f) {
    if (a == b) return;
    uint64_t lo = std::min(a, b), hi = std::max(a, b);
    edges.emplace(lo << 32 | hi, static_cast<uint16_t>(f));
  };

  std::vector<std::vector<uint32_t>> cells(static_cast<size_t>(W) * H);
  for (int f = 1; f <= set.F; ++f) {
    for (auto& c : cells) c.clear();
    for (uint32_t i = 0; i < T; ++i) {
      if (!set.visible_at(i, f)) continue;
      Vec2 p = set.pos_at(i, f);
      int cx = std::clamp(round_half_up(p.x), 0, W - 1);
      int cy = std::clamp(round_half_up(p.y), 0, H - 1);
      cells[static_cast<size_t>(cy) * W + cx].push_back(i);
    }
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const auto& here = cells[static_cast<size_t>(y) * W + x];
        if (here.empty()) continue;
        for (size_t a = 0; a < here.size(); ++a)
          for (size_t b = a + 1; b < here.size(); ++b) add_edge(here[a], here[b], f);
        if (x + 1 < W) {
          for (uint32_t a : here)
            for (uint32_t b : cells[static_cast<size_t>(y) * W + x + 1]) add_edge(a, b, f);
        }
        if (y + 1 < H) {
          for (uint32_t a : here)
            for (uint32_t b : cells[static_cast<size_t>(y + 1) * W + x]) add_edge(a, b, f);
        }
      }
    }
  }

  NeighborGraph g;
  g.neighbors.resize(T);
  g.first_frame.resize(T);
  for (const auto& [key, f] : edges) {
    uint32_t a = static_cast<uint32_t>(key >> 32);
    uint32_t b = static_cast<uint32_t>(key & 0xFFFFFFFFu);
    g.neighbors[a].push_back(b);
    g.neighbors[b].push_back(a);
  }
  for (uint32_t i = 0; i < T; ++i) {
    std::sort(g.neighbors[i].begin(), g.neighbors[i].end());
    g.first_frame[i].resize(g.neighbors[i].size());
    for (size_t k = 0; k < g.neighbors[i].size(); ++k) {
      uint32_t j = g.neighbors[i][k];
      uint64_t lo = std::min(i, j), hi = std::max(i, j);
      g.first_frame[i][k] = edges.at(lo << 32 | hi);
    }
  }
  return g;
}

namespace {

// frames at which some neighbor of i carrying `label` is visible
BitVec connected_frames(const TrajectorySet& set, const NeighborGraph& graph, uint32_t i,
                        const LabelVector& labels, uint32_t label) {
  BitVec conn(set.F);
  for (uint32_t k : graph.neighbors[i]) {
    if (labels[k] != label) continue;
    const Trajectory& t = set.trajectories[k];
    conn.set_range(t.start_frame - 1, t.end_frame() - 1);
  }
  return conn;
}

BitVec connected_frames_set(const TrajectorySet& set, const NeighborGraph& graph,
                            uint32_t i, const std::vector<uint8_t>& member) {
  BitVec conn(set.F);
  for (uint32_t k : graph.neighbors[i]) {
    if (!member[k]) continue;
    const Trajectory& t = set.trajectories[k];
    conn.set_range(t.start_frame - 1, t.end_frame() - 1);
  }
  return conn;
}

}  // namespace

std::vector<uint8_t> disconnectivity(const TrajectorySet& set, const NeighborGraph& graph,
                                     uint32_t i, const LabelVector& labels,
                                     uint32_t label) {
  BitVec conn = connected_frames(set, graph, i, labels, label);
  std::vector<uint8_t> d(set.F);
  for (int f = 0; f < set.F; ++f) d[f] = conn.get(f) ? 0 : 1;
  return d;
}

int connectivity_cost(const TrajectorySet& set, const NeighborGraph& graph, uint32_t i,
                      uint32_t label, const LabelVector& labels) {
  BitVec conn = connected_frames(set, graph, i, labels, label);
  BitVec vis(set.F);
  for (uint32_t j = 0; j < set.size(); ++j) {
    if (j == i || labels[j] != label) continue;
    const Trajectory& t = set.trajectories[j];
    vis.set_range(t.start_frame - 1, t.end_frame() - 1);
  }
  return BitVec::count_andnot(vis, conn);
}

int connectivity_cost_set(const TrajectorySet& set, const NeighborGraph& graph, uint32_t i,
                          const std::vector<uint8_t>& member, const BitVec& set_vis) {
  BitVec conn = connected_frames_set(set, graph, i, member);
  return BitVec::count_andnot(set_vis, conn);
}

int cost_bruteforce_oracle(const TrajectorySet& set, uint32_t i, uint32_t label,
                           const LabelVector& labels) {
  const size_t T = set.size();
  auto cell = [&](uint32_t k, int f) {
    Vec2 p = set.pos_at(k, f);
    return std::pair<int, int>(round_half_up(p.x), round_half_up(p.y));
  };

  std::vector<uint8_t> neighbor_of(T, 0);
  for (int f = 1; f <= set.F; ++f) {
    if (!set.visible_at(i, f)) continue;
    auto [cx, cy] = cell(i, f);
    for (uint32_t k = 0; k < T; ++k) {
      if (k == i || neighbor_of[k] || !set.visible_at(k, f)) continue;
      auto [kx, ky] = cell(k, f);
      if (std::abs(kx - cx) + std::abs(ky - cy) <= 1) neighbor_of[k] = 1;
    }
  }

  int cost = 0;
  for (int f = 1; f <= set.F; ++f) {
    bool cluster_visible = false, connected = false;
    for (uint32_t k = 0; k < T; ++k) {
      if (k == i || labels[k] != label || !set.visible_at(k, f)) continue;
      cluster_visible = true;
      if (neighbor_of[k]) {
        connected = true;
        break;
      }
    }
    if (cluster_visible && !connected) ++cost;
  }
  return cost;
}

int64_t disconnection_sum(const TrajectorySet& set, const NeighborGraph& graph,
                          const LabelVector& labels) {
  uint32_t max_label = 0;
  for (uint32_t l : labels) max_label = std::max(max_label, l);
  // per label, per frame member-visibility counts, so v_{S \ {i}} is a
  // decrement away
  std::vector<std::vector<uint32_t>> vis_count(max_label + 1,
                                               std::vector<uint32_t>(set.F, 0));
  for (uint32_t i = 0; i < set.size(); ++i) {
    if (labels[i] == 0) continue;
    const Trajectory& t = set.trajectories[i];
    auto& vc = vis_count[labels[i]];
    for (int f = t.start_frame; f <= t.end_frame(); ++f) vc[f - 1]++;
  }
  int64_t total = 0;
  for (uint32_t i = 0; i < set.size(); ++i) {
    if (labels[i] == 0) {
      total += set.F;
      continue;
    }
    BitVec conn = connected_frames(set, graph, i, labels, labels[i]);
    const auto& vc = vis_count[labels[i]];
    for (int f = 0; f < set.F; ++f) {
      uint32_t others = vc[f] - (set.visible_at(i, f + 1) ? 1 : 0);
      if (others > 0 && !conn.get(f)) ++total;
    }
  }
  return total;
}

void ClusterState::add_member(const TrajectorySet& set, const TrajectoryAttributes& attrs,
                              uint32_t i) {
  const Trajectory& t = set.trajectories[i];
  for (int f = t.start_frame; f <= t.end_frame(); ++f) {
    const Vec2& p = t.coords[f - t.start_frame];
    sum_x[f - 1] += p.x;
    sum_y[f - 1] += p.y;
    count[f - 1]++;
  }
  const auto& mc = attrs.mean_color[i];
  color_sum[0] += mc[0];
  color_sum[1] += mc[1];
  color_sum[2] += mc[2];
  member_count++;
  members.push_back(i);
}

double energy_to_centroid(const TrajectorySet& set, const TrajectoryAttributes& attrs,
                          uint32_t i, const ClusterState& state, const EnergyParams& prm) {
  const Trajectory& t = set.trajectories[i];
  double acc = 0.0;
  int n = 0;
  for (int f = t.start_frame; f <= t.end_frame(); ++f) {
    int fi = f - 1;
    if (state.count[fi] == 0) continue;
    double cx = state.sum_x[fi] / state.count[fi];
    double cy = state.sum_y[fi] / state.count[fi];
    const Vec2& p = t.coords[f - t.start_frame];
    double dx = p.x - cx;
    double dy = p.y - cy;
    acc += dx * dx + dy * dy;
    ++n;
  }
  if (n == 0) return std::numeric_limits<double>::infinity();
  double es = (acc / n) / (prm.s * prm.s);

  const auto& mc = attrs.mean_color[i];
  double d0 = mc[0] - state.color_sum[0] / state.member_count;
  double d1 = mc[1] - state.color_sum[1] / state.member_count;
  double d2 = mc[2] - state.color_sum[2] / state.member_count;
  double ec = (d0 * d0 + d1 * d1 + d2 * d2) / (prm.m * prm.m);
  return es + ec;
}

double edge_energy(const TrajectorySet& set, const TrajectoryAttributes& attrs, uint32_t i,
                   uint32_t j, double beta) {
  const Trajectory& ti = set.trajectories[i];
  const Trajectory& tj = set.trajectories[j];
  int lo = std::max(ti.start_frame, tj.start_frame);
  int hi = std::min(ti.end_frame(), tj.end_frame());
  if (hi < lo) return std::exp(beta);
  const auto& bi = attrs.edge_strengths[i];
  const auto& bj = attrs.edge_strengths[j];
  bool have = !bi.empty() && !bj.empty();
  double acc = 0.0;
  for (int f = lo; f <= hi; ++f) {
    double b = have ? std::max<double>(bi[f - ti.start_frame], bj[f - tj.start_frame])
                    : 0.0;
    acc += std::exp(beta * b);
  }
  return acc / (hi - lo + 1);
}

double total_energy(const TrajectorySet& set, const TrajectoryAttributes& attrs, uint32_t i,
                    const ClusterState& state, uint32_t j, const EnergyParams& prm) {
  return energy_to_centroid(set, attrs, i, state, prm) +
         edge_energy(set, attrs, i, j, prm.beta);
}

}  // namespace supertraj
