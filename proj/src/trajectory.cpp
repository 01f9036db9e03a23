#include "supertraj/trajectory.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace supertraj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_consistency_dims(const ImageFrame& lab_f, const ImageFrame& lab_p,
                            const FlowField& bwd_f, const FlowField& fwd_p,
                            const EdgeMap& edges_p, const EdgeMap& edges_f) {
  int w = lab_f.width, h = lab_f.height;
  bool ok = lab_p.width == w && lab_p.height == h && bwd_f.width == w &&
            bwd_f.height == h && fwd_p.width == w && fwd_p.height == h &&
            edges_p.width == w && edges_p.height == h && edges_f.width == w &&
            edges_f.height == h;
  if (!ok) throw DimensionError("consistency_distance: input dimensions disagree");
}

void consistency_row(int y, const ImageFrame& lab_f, const ImageFrame& lab_p,
                     const FlowField& bwd_f, const FlowField& fwd_p,
                     const EdgeMap& edges_p, const EdgeMap& edges_f, double beta,
                     double sigma, double* out_row) {
  const int w = lab_f.width, h = lab_f.height;
  for (int x = 0; x < w; ++x) {
    size_t i = bwd_f.idx(x, y);
    double px = x + bwd_f.u[i];
    double py = y + bwd_f.v[i];
    if (px < 0.0 || px > w - 1 || py < 0.0 || py > h - 1) {
      out_row[x] = kInf;
      continue;
    }
    Vec2 rt = bilinear(fwd_p, px, py);
    double dx = px + rt.x - x;
    double dy = py + rt.y - y;
    double dfo = std::sqrt(dx * dx + dy * dy);

    std::array<double, 3> cp = bilinear(lab_p, px, py);
    double d0 = cp[0] - lab_f.at(x, y, 0);
    double d1 = cp[1] - lab_f.at(x, y, 1);
    double d2 = cp[2] - lab_f.at(x, y, 2);
    double dfc = std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);

    double b = std::max(bilinear(edges_p, px, py), static_cast<double>(edges_f.at(x, y)));
    double dfb = std::exp(beta * b);

    out_row[x] = (dfo + dfc / sigma) * dfb;
  }
}

}  // namespace

DistanceRaster consistency_distance_serial(const ImageFrame& lab_f, const ImageFrame& lab_p,
                                           const FlowField& bwd_f, const FlowField& fwd_p,
                                           const EdgeMap& edges_p, const EdgeMap& edges_f,
                                           double beta, double sigma) {
  check_consistency_dims(lab_f, lab_p, bwd_f, fwd_p, edges_p, edges_f);
  DistanceRaster d(lab_f.width, lab_f.height);
  for (int y = 0; y < lab_f.height; ++y) {
    consistency_row(y, lab_f, lab_p, bwd_f, fwd_p, edges_p, edges_f, beta, sigma,
                    &d.data[static_cast<size_t>(y) * lab_f.width]);
  }
  return d;
}

DistanceRaster consistency_distance(const ImageFrame& lab_f, const ImageFrame& lab_p,
                                    const FlowField& bwd_f, const FlowField& fwd_p,
                                    const EdgeMap& edges_p, const EdgeMap& edges_f,
                                    double beta, double sigma) {
  check_consistency_dims(lab_f, lab_p, bwd_f, fwd_p, edges_p, edges_f);
  DistanceRaster d(lab_f.width, lab_f.height);
  const int h = lab_f.height;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int y = 0; y < h; ++y) {
    consistency_row(y, lab_f, lab_p, bwd_f, fwd_p, edges_p, edges_f, beta, sigma,
                    &d.data[static_cast<size_t>(y) * lab_f.width]);
  }
  return d;
}

std::vector<uint8_t> occlusion_mask(const DistanceRaster& d, double gamma) {
  std::vector<uint8_t> m(d.data.size());
  for (size_t i = 0; i < d.data.size(); ++i) m[i] = d.data[i] >= gamma ? 1 : 0;
  return m;
}

namespace {

int cell_coord(double v, int n) { return std::clamp(round_half_up(v), 0, n - 1); }

// Multi-source BFS fill: every unassigned cell takes the value of its nearest
// assigned cell (4-connected hops), ties resolved to the smallest value.
// Processing the queue FIFO level by level makes predecessor values final
// before they propagate.
template <typename T>
void bfs_fill(int w, int h, std::vector<T>& val, std::vector<int32_t>& dist) {
  std::deque<int> q;
  for (int i = 0; i < w * h; ++i) {
    if (dist[i] == 0) q.push_back(i);
  }
  if (q.empty()) throw InvalidDataError("rasterization: no assigned cells to fill from");
  const int dx[4] = {0, -1, 1, 0};
  const int dy[4] = {-1, 0, 0, 1};
  while (!q.empty()) {
    int c = q.front();
    q.pop_front();
    int cx = c % w, cy = c / w;
    for (int k = 0; k < 4; ++k) {
      int nx = cx + dx[k], ny = cy + dy[k];
      if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
      int n = ny * w + nx;
      if (dist[n] < 0) {
        dist[n] = dist[c] + 1;
        val[n] = val[c];
        q.push_back(n);
      } else if (dist[n] == dist[c] + 1 && val[c] < val[n]) {
        val[n] = val[c];
      }
    }
  }
}

struct WinnerRaster {
  std::vector<int64_t> id;
  std::vector<double> d2;
};

WinnerRaster compute_winners(const TrajectorySet& set, int frame) {
  const int w = set.W, h = set.H;
  WinnerRaster wr;
  wr.id.assign(static_cast<size_t>(w) * h, -1);
  wr.d2.assign(static_cast<size_t>(w) * h, kInf);
  for (uint32_t i = 0; i < set.size(); ++i) {
    if (!set.visible_at(i, frame)) continue;
    Vec2 p = set.pos_at(i, frame);
    int cx = cell_coord(p.x, w);
    int cy = cell_coord(p.y, h);
    double ddx = p.x - cx, ddy = p.y - cy;
    double d2 = ddx * ddx + ddy * ddy;
    size_t c = static_cast<size_t>(cy) * w + cx;
    if (d2 < wr.d2[c] || (d2 == wr.d2[c] && static_cast<int64_t>(i) < wr.id[c])) {
      wr.d2[c] = d2;
      wr.id[c] = i;
    }
  }
  return wr;
}

void check_frame(const TrajectorySet& set, int frame) {
  if (frame < 1 || frame > set.F) throw ConfigError("frame index out of range");
}

}  // namespace

LabelRaster g_rasterize(const TrajectorySet& set, int frame,
                        const std::vector<uint32_t>& values) {
  check_frame(set, frame);
  if (values.size() != set.size())
    throw ConfigError("g_rasterize: one value per trajectory required");
  WinnerRaster wr = compute_winners(set, frame);
  LabelRaster out(set.W, set.H);
  std::vector<int32_t> dist(out.data.size(), -1);
  for (size_t c = 0; c < out.data.size(); ++c) {
    if (wr.id[c] >= 0) {
      out.data[c] = values[static_cast<size_t>(wr.id[c])];
      dist[c] = 0;
    }
  }
  bfs_fill(set.W, set.H, out.data, dist);
  return out;
}

std::vector<int64_t> g_winner_raster(const TrajectorySet& set, int frame, bool fill_holes) {
  check_frame(set, frame);
  WinnerRaster wr = compute_winners(set, frame);
  if (fill_holes) {
    std::vector<int32_t> dist(wr.id.size(), -1);
    for (size_t c = 0; c < wr.id.size(); ++c) {
      if (wr.id[c] >= 0) dist[c] = 0;
    }
    bfs_fill(set.W, set.H, wr.id, dist);
  }
  return wr.id;
}

std::vector<std::pair<uint32_t, uint32_t>> h_sample_labels(const TrajectorySet& set,
                                                           int frame,
                                                           const LabelRaster& raster) {
  check_frame(set, frame);
  if (raster.width != set.W || raster.height != set.H)
    throw DimensionError("h_sample: raster dimensions disagree with trajectory set");
  std::vector<std::pair<uint32_t, uint32_t>> out;
  for (uint32_t i = 0; i < set.size(); ++i) {
    if (!set.visible_at(i, frame)) continue;
    Vec2 p = set.pos_at(i, frame);
    out.emplace_back(i, raster.at(cell_coord(p.x, set.W), cell_coord(p.y, set.H)));
  }
  return out;
}

std::vector<std::pair<uint32_t, double>> h_sample_scalar(const TrajectorySet& set, int frame,
                                                         const EdgeMap& raster) {
  check_frame(set, frame);
  if (raster.width != set.W || raster.height != set.H)
    throw DimensionError("h_sample: raster dimensions disagree with trajectory set");
  std::vector<std::pair<uint32_t, double>> out;
  for (uint32_t i = 0; i < set.size(); ++i) {
    if (!set.visible_at(i, frame)) continue;
    Vec2 p = set.pos_at(i, frame);
    out.emplace_back(i, bilinear(raster, p.x, p.y));
  }
  return out;
}

std::vector<std::pair<uint32_t, std::array<double, 3>>> h_sample_color(
    const TrajectorySet& set, int frame, const ImageFrame& raster) {
  check_frame(set, frame);
  if (raster.width != set.W || raster.height != set.H)
    throw DimensionError("h_sample: raster dimensions disagree with trajectory set");
  std::vector<std::pair<uint32_t, std::array<double, 3>>> out;
  for (uint32_t i = 0; i < set.size(); ++i) {
    if (!set.visible_at(i, frame)) continue;
    Vec2 p = set.pos_at(i, frame);
    out.emplace_back(i, bilinear(raster, p.x, p.y));
  }
  return out;
}

BuildResult build_trajectories(const std::vector<ImageFrame>& rgb_frames,
                               const std::vector<FlowField>& fwd,
                               const std::vector<FlowField>& bwd,
                               const std::vector<EdgeMap>& edges,
                               const BuildParams& params) {
  const int F = static_cast<int>(rgb_frames.size());
  if (F < 1) throw ConfigError("build_trajectories: need at least one frame");
  if (static_cast<int>(fwd.size()) != F - 1 || static_cast<int>(bwd.size()) != F - 1)
    throw ConfigError("build_trajectories: need F-1 forward and F-1 backward flows");
  if (static_cast<int>(edges.size()) != F)
    throw ConfigError("build_trajectories: need one edge map per frame");
  const int W = rgb_frames[0].width, H = rgb_frames[0].height;
  if (W < 1 || H < 1) throw DimensionError("build_trajectories: empty frames");
  for (int f = 0; f < F; ++f) {
    if (rgb_frames[f].width != W || rgb_frames[f].height != H ||
        edges[f].width != W || edges[f].height != H)
      throw DimensionError("build_trajectories: frame/edge dimensions disagree");
  }
  for (int f = 0; f + 1 < F; ++f) {
    if (fwd[f].width != W || fwd[f].height != H || bwd[f].width != W ||
        bwd[f].height != H)
      throw DimensionError("build_trajectories: flow dimensions disagree");
  }

  std::vector<ImageFrame> labs(F);
  for (int f = 0; f < F; ++f) labs[f] = rgb_to_lab(rgb_frames[f]);

  BuildResult r;
  r.set.F = F;
  r.set.H = H;
  r.set.W = W;
  r.mask.F = F;
  r.mask.H = H;
  r.mask.W = W;
  r.mask.frames.resize(F);
  r.mask.frames[0].assign(static_cast<size_t>(W) * H, 1);

  auto& trajs = r.set.trajectories;
  auto& colors = r.attrs.colors;
  auto& strengths = r.attrs.edge_strengths;

  std::vector<uint32_t> live;
  live.reserve(static_cast<size_t>(W) * H);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      Trajectory t;
      t.start_frame = 1;
      t.coords.push_back({static_cast<double>(x), static_cast<double>(y)});
      live.push_back(static_cast<uint32_t>(trajs.size()));
      trajs.push_back(std::move(t));
    }
  }
  colors.resize(trajs.size());
  strengths.resize(trajs.size());

  auto sample_live = [&](int f) {
    const ImageFrame& lab = labs[f - 1];
    const EdgeMap& em = edges[f - 1];
    const int64_t n = static_cast<int64_t>(live.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t idx = 0; idx < n; ++idx) {
      uint32_t i = live[idx];
      Vec2 p = trajs[i].coords.back();
      std::array<double, 3> c = bilinear(lab, p.x, p.y);
      colors[i].push_back({static_cast<float>(c[0]), static_cast<float>(c[1]),
                           static_cast<float>(c[2])});
      strengths[i].push_back(static_cast<float>(bilinear(em, p.x, p.y)));
    }
  };
  sample_live(1);

  for (int f = 2; f <= F; ++f) {
    DistanceRaster d =
        consistency_distance(labs[f - 1], labs[f - 2], bwd[f - 2], fwd[f - 2],
                             edges[f - 2], edges[f - 1], params.beta, params.sigma);
    std::vector<uint8_t> mk = occlusion_mask(d, params.gamma);
    r.mask.frames[f - 1] = mk;

    const int64_t n = static_cast<int64_t>(live.size());
    std::vector<Vec2> arrival(live.size());
    std::vector<uint8_t> alive(live.size(), 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t idx = 0; idx < n; ++idx) {
      uint32_t i = live[idx];
      Vec2 x = trajs[i].coords.back();
      Vec2 fl = bilinear(fwd[f - 2], x.x, x.y);
      Vec2 a = x + fl;
      arrival[idx] = a;
      if (a.x < 0.0 || a.x > W - 1 || a.y < 0.0 || a.y > H - 1) continue;
      int cx = round_half_up(a.x), cy = round_half_up(a.y);
      if (mk[static_cast<size_t>(cy) * W + cx]) continue;
      alive[idx] = 1;
    }

    std::vector<double> best_d2(static_cast<size_t>(W) * H, kInf);
    std::vector<int64_t> best_id(static_cast<size_t>(W) * H, -1);
    for (size_t idx = 0; idx < live.size(); ++idx) {
      if (!alive[idx]) continue;
      Vec2 a = arrival[idx];
      int cx = round_half_up(a.x), cy = round_half_up(a.y);
      size_t c = static_cast<size_t>(cy) * W + cx;
      double ddx = a.x - cx, ddy = a.y - cy;
      double d2 = ddx * ddx + ddy * ddy;
      int64_t id = live[idx];
      if (d2 < best_d2[c] || (d2 == best_d2[c] && id < best_id[c])) {
        best_d2[c] = d2;
        best_id[c] = id;
      }
    }

    std::vector<uint32_t> next_live;
    next_live.reserve(live.size());
    for (size_t idx = 0; idx < live.size(); ++idx) {
      if (!alive[idx]) continue;
      trajs[live[idx]].coords.push_back(arrival[idx]);
      next_live.push_back(live[idx]);
    }
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        if (best_id[static_cast<size_t>(y) * W + x] >= 0) continue;
        Trajectory t;
        t.start_frame = f;
        t.coords.push_back({static_cast<double>(x), static_cast<double>(y)});
        next_live.push_back(static_cast<uint32_t>(trajs.size()));
        trajs.push_back(std::move(t));
        colors.emplace_back();
        strengths.emplace_back();
      }
    }
    live = std::move(next_live);
    sample_live(f);
  }

  r.attrs.mean_color.resize(trajs.size());
  const int64_t t_count = static_cast<int64_t>(trajs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int64_t i = 0; i < t_count; ++i) {
    double s0 = 0, s1 = 0, s2 = 0;
    for (const auto& c : colors[i]) {
      s0 += c[0];
      s1 += c[1];
      s2 += c[2];
    }
    double len = static_cast<double>(colors[i].size());
    r.attrs.mean_color[i] = {static_cast<float>(s0 / len), static_cast<float>(s1 / len),
                             static_cast<float>(s2 / len)};
  }
  return r;
}

}  // namespace supertraj
