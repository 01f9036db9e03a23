#include "supertraj/clustering.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace supertraj {

namespace {

struct QEntry {
  double energy;
  uint64_t seq;
  uint32_t traj;
  uint32_t label;
};

struct QOrder {
  bool operator()(const QEntry& a, const QEntry& b) const {
    if (a.energy != b.energy) return a.energy > b.energy;
    return a.seq > b.seq;
  }
};

}  // namespace

LabelVector tnic(const TrajectorySet& set, const TrajectoryAttributes& attrs,
                 const NeighborGraph& graph, const LabelVector& init, size_t num_labels,
                 const EnergyParams& prm) {
  const size_t T = set.size();
  if (init.size() != T) throw ConfigError("tnic: one init label per trajectory required");
  LabelVector L = init;
  std::vector<ClusterState> states;
  states.reserve(num_labels);
  for (size_t k = 0; k < num_labels; ++k)
    states.emplace_back(set.F, static_cast<uint32_t>(k + 1));
  for (uint32_t i = 0; i < T; ++i) {
    if (L[i] == 0) continue;
    if (L[i] > num_labels) throw ConfigError("tnic: init label exceeds cluster count");
    states[L[i] - 1].add_member(set, attrs, i);
  }

  std::priority_queue<QEntry, std::vector<QEntry>, QOrder> pq;
  uint64_t seq = 0;
  for (size_t k = 0; k < num_labels; ++k) {
    for (uint32_t j : states[k].members) {
      for (uint32_t nb : graph.neighbors[j]) {
        if (L[nb] != 0) continue;
        pq.push({total_energy(set, attrs, nb, states[k], j, prm), seq++, nb,
                 static_cast<uint32_t>(k + 1)});
      }
    }
  }

  while (!pq.empty()) {
    QEntry e = pq.top();
    pq.pop();
    if (L[e.traj] != 0) continue;  // stale
    L[e.traj] = e.label;
    ClusterState& st = states[e.label - 1];
    st.add_member(set, attrs, e.traj);
    for (uint32_t nb : graph.neighbors[e.traj]) {
      if (L[nb] != 0) continue;
      pq.push({total_energy(set, attrs, nb, st, e.traj, prm), seq++, nb, e.label});
    }
  }
  return L;
}

SeedSet init_seeds(const TrajectorySet& set, double s, int th) {
  const int W = set.W, H = set.H, F = set.F;
  if (s < 2.0) throw ConfigError("init_seeds: spacing must be at least 2");
  if (s > std::min(W, H)) throw ConfigError("init_seeds: spacing exceeds frame size");
  const int si = std::max(1, round_half_up(s));
  const int th_val = th > 0 ? th : static_cast<int>(std::ceil(s * s / 2.0));
  const size_t T = set.size();

  SeedSet out;
  std::vector<uint8_t> covered(T, 0), is_seed(T, 0);

  std::vector<int64_t> winners = g_winner_raster(set, 1, true);
  for (double gy = s / 2.0; gy <= H - 1 + 1e-9; gy += s) {
    for (double gx = s / 2.0; gx <= W - 1 + 1e-9; gx += s) {
      int cx = std::clamp(round_half_up(gx), 0, W - 1);
      int cy = std::clamp(round_half_up(gy), 0, H - 1);
      auto tr = static_cast<uint32_t>(winners[static_cast<size_t>(cy) * W + cx]);
      if (!is_seed[tr]) {
        is_seed[tr] = 1;
        out.seeds.emplace_back(tr, 1);
      }
    }
  }
  for (uint32_t i = 0; i < T; ++i)
    if (set.visible_at(i, 1)) covered[i] = 1;
  if (F == 1) return out;

  // box sum of the uncovered indicator via a summed-area table
  auto scan_frame = [&](int f) -> bool {
    std::vector<uint32_t> indicator(T);
    for (uint32_t i = 0; i < T; ++i) indicator[i] = covered[i] ? 0 : 1;
    LabelRaster u = g_rasterize(set, f, indicator);
    std::vector<int64_t> ids = g_winner_raster(set, f, true);

    bool productive = false;
    std::vector<int64_t> sat(static_cast<size_t>(W + 1) * (H + 1), 0);
    while (true) {
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          sat[static_cast<size_t>(y + 1) * (W + 1) + x + 1] =
              u.at(x, y) + sat[static_cast<size_t>(y) * (W + 1) + x + 1] +
              sat[static_cast<size_t>(y + 1) * (W + 1) + x] -
              sat[static_cast<size_t>(y) * (W + 1) + x];
        }
      }
      auto box = [&](int x0, int y0, int x1, int y1) {  // inclusive, clamped
        x0 = std::max(x0, 0);
        y0 = std::max(y0, 0);
        x1 = std::min(x1, W - 1);
        y1 = std::min(y1, H - 1);
        return sat[static_cast<size_t>(y1 + 1) * (W + 1) + x1 + 1] -
               sat[static_cast<size_t>(y0) * (W + 1) + x1 + 1] -
               sat[static_cast<size_t>(y1 + 1) * (W + 1) + x0] +
               sat[static_cast<size_t>(y0) * (W + 1) + x0];
      };
      int64_t best = -1;
      int bx = 0, by = 0;
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          int64_t v = box(x - si / 2, y - si / 2, x - si / 2 + si - 1, y - si / 2 + si - 1);
          if (v > best) {
            best = v;
            bx = x;
            by = y;
          }
        }
      }
      if (best < th_val) break;
      productive = true;
      auto tr = static_cast<uint32_t>(ids[static_cast<size_t>(by) * W + bx]);
      if (!is_seed[tr]) {
        is_seed[tr] = 1;
        out.seeds.emplace_back(tr, f);
      }
      for (int y = std::max(by - si / 2, 0); y <= std::min(by - si / 2 + si - 1, H - 1); ++y)
        for (int x = std::max(bx - si / 2, 0); x <= std::min(bx - si / 2 + si - 1, W - 1); ++x)
          u.at(x, y) = 0;
    }

    for (const auto& [i, v] : h_sample_labels(set, f, u)) {
      if (v == 0) covered[i] = 1;
    }
    return productive;
  };

  struct Gap {
    int a, b;
    int mid() const { return (a + b + 1) / 2; }
    int span() const { return b - a; }
  };

  scan_frame(F);
  std::vector<Gap> gaps;
  if (F - 1 >= 2) gaps.push_back({1, F});
  while (!gaps.empty()) {
    size_t best = 0;
    for (size_t g = 1; g < gaps.size(); ++g) {
      if (gaps[g].span() > gaps[best].span() ||
          (gaps[g].span() == gaps[best].span() && gaps[g].mid() < gaps[best].mid()))
        best = g;
    }
    Gap gap = gaps[best];
    gaps.erase(gaps.begin() + best);
    int f = gap.mid();
    if (scan_frame(f)) {
      if (f - gap.a >= 2) gaps.push_back({gap.a, f});
      if (gap.b - f >= 2) gaps.push_back({f, gap.b});
    }
  }
  return out;
}

LabelRaster filter_small_regions(const LabelRaster& raster, int min_region) {
  const int W = raster.width, H = raster.height;
  const size_t n = raster.data.size();
  std::vector<int32_t> region(n, -1);
  std::vector<int64_t> region_size;
  std::vector<uint32_t> region_label;
  std::vector<int> stack;

  for (size_t start = 0; start < n; ++start) {
    if (region[start] >= 0) continue;
    int32_t r = static_cast<int32_t>(region_size.size());
    uint32_t lab = raster.data[start];
    region_label.push_back(lab);
    region_size.push_back(0);
    stack.push_back(static_cast<int>(start));
    region[start] = r;
    while (!stack.empty()) {
      int c = stack.back();
      stack.pop_back();
      region_size[r]++;
      int cx = c % W, cy = c / W;
      const int dx[4] = {0, -1, 1, 0}, dy[4] = {-1, 0, 0, 1};
      for (int k = 0; k < 4; ++k) {
        int nx = cx + dx[k], ny = cy + dy[k];
        if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
        int nc = ny * W + nx;
        if (region[nc] >= 0 || raster.data[nc] != lab) continue;
        region[nc] = r;
        stack.push_back(nc);
      }
    }
  }

  LabelRaster out = raster;
  const auto R = static_cast<int32_t>(region_size.size());
  for (int32_t r = 0; r < R; ++r) {
    if (region_size[r] >= min_region) continue;
    // pick the largest adjacent region off the original partition
    int64_t best_size = -1;
    uint32_t best_label = 0;
    for (size_t c = 0; c < n; ++c) {
      if (region[c] != r) continue;
      int cx = static_cast<int>(c) % W, cy = static_cast<int>(c) / W;
      const int dx[4] = {0, -1, 1, 0}, dy[4] = {-1, 0, 0, 1};
      for (int k = 0; k < 4; ++k) {
        int nx = cx + dx[k], ny = cy + dy[k];
        if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
        int32_t rn = region[ny * W + nx];
        if (rn == r) continue;
        if (region_size[rn] > best_size ||
            (region_size[rn] == best_size && region_label[rn] < best_label)) {
          best_size = region_size[rn];
          best_label = region_label[rn];
        }
      }
    }
    if (best_size < 0) continue;  // single-region frame
    for (size_t c = 0; c < n; ++c) {
      if (region[c] == r) out.data[c] = best_label;
    }
  }
  return out;
}

namespace {

// maximal zero-cost connected growth of cluster k's kept set, ascending-id
// rounds until a fixpoint
void grow_cluster(const TrajectorySet& set, const NeighborGraph& graph,
                  const LabelVector& L, LabelVector& kept, uint32_t k,
                  std::vector<uint8_t>& member, BitVec& vis,
                  std::vector<uint32_t>& members) {
  while (true) {
    std::vector<uint32_t> candidates;
    for (uint32_t m : members) {
      for (uint32_t j : graph.neighbors[m]) {
        if (!member[j] && kept[j] == 0 && L[j] == k) candidates.push_back(j);
      }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    bool added = false;
    for (uint32_t j : candidates) {
      if (member[j]) continue;
      if (connectivity_cost_set(set, graph, j, member, vis) != 0) continue;
      member[j] = 1;
      kept[j] = k;
      vis |= visibility(set, j);
      members.push_back(j);
      added = true;
    }
    if (!added) break;
  }
}

}  // namespace

LabelVector post_process(const TrajectorySet& set, const NeighborGraph& graph,
                         const LabelVector& l_hat, size_t num_labels, int min_region,
                         ClusterDiagnostics* diag) {
  const size_t T = set.size();
  const int F = set.F;
  if (l_hat.size() != T)
    throw ConfigError("post_process: one label per trajectory required");

  std::vector<std::vector<std::pair<uint32_t, uint32_t>>> samples(F);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int f = 1; f <= F; ++f) {
    LabelRaster raster = g_rasterize(set, f, l_hat);
    LabelRaster filtered = filter_small_regions(raster, min_region);
    samples[f - 1] = h_sample_labels(set, f, filtered);
  }

  LabelVector lstar(T, 0);
  {
    std::vector<uint32_t> first(T, 0);
    std::vector<uint8_t> seen(T, 0), consistent(T, 1);
    for (int f = 0; f < F; ++f) {
      for (const auto& [i, v] : samples[f]) {
        if (!seen[i]) {
          seen[i] = 1;
          first[i] = v;
        } else if (first[i] != v) {
          consistent[i] = 0;
        }
      }
    }
    for (uint32_t i = 0; i < T; ++i) {
      if (seen[i] && consistent[i] && first[i] != 0) lstar[i] = first[i];
    }
  }

  std::vector<BitVec> label_vis(num_labels, BitVec(F));
  for (uint32_t i = 0; i < T; ++i) {
    if (lstar[i] > 0) label_vis[lstar[i] - 1] |= visibility(set, i);
  }

  auto assign_by_cost = [&](uint32_t j) -> bool {
    std::vector<uint32_t> cand;
    for (uint32_t n : graph.neighbors[j]) {
      if (lstar[n] != 0) cand.push_back(lstar[n]);
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    if (cand.empty()) return false;
    uint32_t best_label = 0;
    int best_cost = std::numeric_limits<int>::max();
    for (uint32_t k : cand) {
      BitVec conn(F);
      for (uint32_t n : graph.neighbors[j]) {
        if (lstar[n] == k) conn |= visibility(set, n);
      }
      int cost = BitVec::count_andnot(label_vis[k - 1], conn);
      if (cost < best_cost) {
        best_cost = cost;
        best_label = k;
      }
    }
    lstar[j] = best_label;
    label_vis[best_label - 1] |= visibility(set, j);
    return true;
  };

  std::vector<uint32_t> leftover;
  for (uint32_t j = 0; j < T; ++j) {
    if (lstar[j] != 0) continue;
    if (!assign_by_cost(j)) leftover.push_back(j);
  }

  // leftovers: try the cost rule again now that the sweep labeled their
  // surroundings, then fall back to the nearest labeled trajectory
  for (uint32_t j : leftover) {
    if (lstar[j] != 0 || assign_by_cost(j)) continue;
    uint32_t found = 0;
    {
      std::vector<int32_t> dist(T, -1);
      std::vector<uint32_t> frontier{j};
      dist[j] = 0;
      while (!frontier.empty() && found == 0) {
        std::vector<uint32_t> next;
        uint32_t best_id = std::numeric_limits<uint32_t>::max();
        for (uint32_t c : frontier) {
          for (uint32_t n : graph.neighbors[c]) {
            if (dist[n] >= 0) continue;
            dist[n] = dist[c] + 1;
            if (lstar[n] != 0) best_id = std::min(best_id, n);
            next.push_back(n);
          }
        }
        if (best_id != std::numeric_limits<uint32_t>::max()) found = lstar[best_id];
        frontier = std::move(next);
      }
    }
    if (found == 0) {
      // disconnected component: nearest mean position among labeled trajectories
      auto mean_pos = [&](uint32_t i) {
        const Trajectory& t = set.trajectories[i];
        double sx = 0, sy = 0;
        for (const Vec2& p : t.coords) {
          sx += p.x;
          sy += p.y;
        }
        return Vec2{sx / t.coords.size(), sy / t.coords.size()};
      };
      Vec2 pj = mean_pos(j);
      double best_d = std::numeric_limits<double>::infinity();
      for (uint32_t i = 0; i < T; ++i) {
        if (lstar[i] == 0) continue;
        Vec2 pi = mean_pos(i);
        double d = (pi.x - pj.x) * (pi.x - pj.x) + (pi.y - pj.y) * (pi.y - pj.y);
        if (d < best_d) {
          best_d = d;
          found = lstar[i];
        }
      }
      if (found == 0)
        throw InvalidDataError("post_process: no labeled trajectory to attach to");
    }
    lstar[j] = found;
    label_vis[found - 1] |= visibility(set, j);
    if (diag) diag->fallback_assignments++;
  }
  return lstar;
}

LabelVector super_trajectory_clustering(const TrajectorySet& set,
                                        const TrajectoryAttributes& attrs,
                                        const NeighborGraph& graph, const SeedSet& seeds,
                                        const EnergyParams& prm, int max_iter,
                                        int min_region,
                                        ClusterDiagnostics* diag) {
  const size_t T = set.size();
  const size_t K = seeds.size();
  if (K == 0) throw ConfigError("clustering: need at least one seed");
  if (min_region < 0) min_region = static_cast<int>(std::ceil(prm.s * prm.s / 4.0));

  LabelVector kept(T, 0);
  for (size_t k = 0; k < K; ++k) kept[seeds.seeds[k].first] = static_cast<uint32_t>(k + 1);

  std::vector<std::vector<uint32_t>> grown_members(K);
  std::vector<std::vector<uint8_t>> member(K, std::vector<uint8_t>(T, 0));
  std::vector<BitVec> vis(K, BitVec(set.F));
  for (size_t k = 0; k < K; ++k) {
    uint32_t s = seeds.seeds[k].first;
    member[k][s] = 1;
    vis[k] |= visibility(set, s);
    grown_members[k].push_back(s);
  }

  LabelVector L;
  size_t prev_cnt = K;
  for (int iter = 0; iter < max_iter; ++iter) {
    L = tnic(set, attrs, graph, kept, K, prm);
    for (size_t k = 0; k < K; ++k) {
      grow_cluster(set, graph, L, kept, static_cast<uint32_t>(k + 1), member[k], vis[k],
                   grown_members[k]);
    }
    size_t cnt = 0;
    for (uint32_t v : kept) cnt += v != 0;
    if (diag) {
      diag->fully_connected_counts.push_back(cnt);
      diag->iterations = iter + 1;
    }
    if (cnt <= prev_cnt) break;  // kept set stopped growing
    prev_cnt = cnt;
  }

  if (diag) diag->disconnection_before = disconnection_sum(set, graph, L);
  LabelVector out = post_process(set, graph, L, K, min_region, diag);
  if (diag) diag->disconnection_after = disconnection_sum(set, graph, out);
  return out;
}

}  // namespace supertraj
