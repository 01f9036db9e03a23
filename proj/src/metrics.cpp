#include "supertraj/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace supertraj {

namespace {

void check_dims(const SegmentationVolume& pred, const SegmentationVolume& gt) {
  if (pred.F != gt.F || pred.H != gt.H || pred.W != gt.W)
    throw DimensionError("metrics: prediction and ground truth dimensions differ");
  if (pred.F < 1 || pred.H < 1 || pred.W < 1)
    throw DimensionError("metrics: empty volume");
}

void check_labels(const uint32_t* p, size_t n, const char* which) {
  for (size_t i = 0; i < n; ++i) {
    if (p[i] == 0)
      throw InvalidDataError(std::string("metrics: zero label in ") + which + " volume");
  }
}

// Segment sizes and pairwise overlaps for one label universe (a whole volume
// or a single frame slice). Segment indices follow ascending label order.
struct SegStats {
  std::vector<int64_t> pred_sizes, gt_sizes;
  std::vector<std::vector<std::pair<uint32_t, int64_t>>> by_gt;  // (pred idx, |v∩g|)
};

std::unordered_map<uint32_t, uint32_t> dense_remap(const uint32_t* p, size_t n,
                                                   size_t& count) {
  std::vector<uint32_t> labels(p, p + n);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  std::unordered_map<uint32_t, uint32_t> map;
  map.reserve(labels.size());
  for (uint32_t i = 0; i < labels.size(); ++i) map.emplace(labels[i], i);
  count = labels.size();
  return map;
}

SegStats segment_stats(const uint32_t* pred, const uint32_t* gt, size_t n) {
  size_t np = 0, ng = 0;
  auto pmap = dense_remap(pred, n, np);
  auto gmap = dense_remap(gt, n, ng);

  SegStats st;
  st.pred_sizes.assign(np, 0);
  st.gt_sizes.assign(ng, 0);
  std::unordered_map<uint64_t, int64_t> inter;
  inter.reserve(np + ng);
  for (size_t i = 0; i < n; ++i) {
    uint32_t pi = pmap.find(pred[i])->second;
    uint32_t gi = gmap.find(gt[i])->second;
    st.pred_sizes[pi]++;
    st.gt_sizes[gi]++;
    inter[static_cast<uint64_t>(pi) * ng + gi]++;
  }
  st.by_gt.assign(ng, {});
  for (const auto& [key, c] : inter)
    st.by_gt[key % ng].emplace_back(static_cast<uint32_t>(key / ng), c);
  return st;
}

double ue_from_stats(const SegStats& st) {
  double sum = 0.0;
  for (size_t g = 0; g < st.gt_sizes.size(); ++g) {
    int64_t bleed = 0;
    for (const auto& [v, c] : st.by_gt[g]) bleed += st.pred_sizes[v];
    sum += static_cast<double>(bleed - st.gt_sizes[g]) / static_cast<double>(st.gt_sizes[g]);
  }
  return sum / static_cast<double>(st.gt_sizes.size());
}

double sa_from_stats(const SegStats& st) {
  double sum = 0.0;
  for (size_t g = 0; g < st.gt_sizes.size(); ++g) {
    int64_t kept = 0;
    for (const auto& [v, c] : st.by_gt[g]) {
      if (2 * c >= st.pred_sizes[v]) kept += c;
    }
    sum += static_cast<double>(kept) / static_cast<double>(st.gt_sizes[g]);
  }
  return sum / static_cast<double>(st.gt_sizes.size());
}

std::vector<uint8_t> boundary_3d(const SegmentationVolume& v) {
  std::vector<uint8_t> b(v.voxels(), 0);
  const int F = v.F, H = v.H, W = v.W;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int f = 0; f < F; ++f) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        uint32_t c = v.at(f, x, y);
        bool edge = (x > 0 && v.at(f, x - 1, y) != c) ||
                    (x + 1 < W && v.at(f, x + 1, y) != c) ||
                    (y > 0 && v.at(f, x, y - 1) != c) ||
                    (y + 1 < H && v.at(f, x, y + 1) != c) ||
                    (f > 0 && v.at(f - 1, x, y) != c) ||
                    (f + 1 < F && v.at(f + 1, x, y) != c);
        if (edge) b[(static_cast<size_t>(f) * H + y) * W + x] = 1;
      }
    }
  }
  return b;
}

void boundary_2d(const uint32_t* slice, int W, int H, uint8_t* out) {
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      uint32_t c = slice[static_cast<size_t>(y) * W + x];
      bool edge = (x > 0 && slice[static_cast<size_t>(y) * W + x - 1] != c) ||
                  (x + 1 < W && slice[static_cast<size_t>(y) * W + x + 1] != c) ||
                  (y > 0 && slice[static_cast<size_t>(y - 1) * W + x] != c) ||
                  (y + 1 < H && slice[static_cast<size_t>(y + 1) * W + x] != c);
      out[static_cast<size_t>(y) * W + x] = edge ? 1 : 0;
    }
  }
}

double br3d_impl(const SegmentationVolume& pred, const SegmentationVolume& gt, int tol,
                 bool parallel) {
  check_dims(pred, gt);
  if (tol < 0) throw ConfigError("boundary recall: tolerance must be non-negative");
  std::vector<uint8_t> bp = boundary_3d(pred);
  std::vector<uint8_t> bg = boundary_3d(gt);
  const int F = gt.F, H = gt.H, W = gt.W;
  int64_t total = 0, hit = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : total, hit) if (parallel)
#endif
  for (int f = 0; f < F; ++f) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        if (!bg[(static_cast<size_t>(f) * H + y) * W + x]) continue;
        total++;
        bool found = false;
        for (int df = std::max(f - tol, 0); df <= std::min(f + tol, F - 1) && !found; ++df)
          for (int dy = std::max(y - tol, 0); dy <= std::min(y + tol, H - 1) && !found; ++dy)
            for (int dx = std::max(x - tol, 0); dx <= std::min(x + tol, W - 1); ++dx)
              if (bp[(static_cast<size_t>(df) * H + dy) * W + dx]) {
                found = true;
                break;
              }
        if (found) hit++;
      }
    }
  }
  (void)parallel;
  if (total == 0) return 1.0;  // nothing to recall
  return static_cast<double>(hit) / static_cast<double>(total);
}

double br2d_frame(const uint8_t* bp, const uint8_t* bg, int W, int H, int tol) {
  int64_t total = 0, hit = 0;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!bg[static_cast<size_t>(y) * W + x]) continue;
      total++;
      bool found = false;
      for (int dy = std::max(y - tol, 0); dy <= std::min(y + tol, H - 1) && !found; ++dy)
        for (int dx = std::max(x - tol, 0); dx <= std::min(x + tol, W - 1); ++dx)
          if (bp[static_cast<size_t>(dy) * W + dx]) {
            found = true;
            break;
          }
      if (found) hit++;
    }
  }
  if (total == 0) return 1.0;
  return static_cast<double>(hit) / static_cast<double>(total);
}

template <typename PerFrame>
double frame_mean(int F, PerFrame&& fn) {
  std::vector<double> per_frame(F);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int f = 0; f < F; ++f) per_frame[f] = fn(f);
  double sum = 0.0;
  for (int f = 0; f < F; ++f) sum += per_frame[f];  // fixed order: deterministic
  return sum / F;
}

}  // namespace

SegmentationVolume volume_from_rasters(const std::vector<LabelRaster>& frames) {
  if (frames.empty()) throw ConfigError("volume: at least one frame required");
  const int H = frames[0].height, W = frames[0].width;
  SegmentationVolume v(static_cast<int>(frames.size()), H, W);
  for (size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].height != H || frames[f].width != W)
      throw DimensionError("volume: frame dimensions differ");
    std::copy(frames[f].data.begin(), frames[f].data.end(),
              v.data.begin() + static_cast<size_t>(f) * H * W);
  }
  return v;
}

SegmentationVolume rasterize_volume(const TrajectorySet& set, const LabelVector& labels) {
  SegmentationVolume v(set.F, set.H, set.W);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int f = 1; f <= set.F; ++f) {
    LabelRaster r = g_rasterize(set, f, labels);
    std::copy(r.data.begin(), r.data.end(),
              v.data.begin() + static_cast<size_t>(f - 1) * set.H * set.W);
  }
  return v;
}

double ue3d(const SegmentationVolume& pred, const SegmentationVolume& gt) {
  check_dims(pred, gt);
  check_labels(pred.data.data(), pred.voxels(), "predicted");
  check_labels(gt.data.data(), gt.voxels(), "ground-truth");
  return ue_from_stats(segment_stats(pred.data.data(), gt.data.data(), gt.voxels()));
}

double sa3d(const SegmentationVolume& pred, const SegmentationVolume& gt) {
  check_dims(pred, gt);
  check_labels(pred.data.data(), pred.voxels(), "predicted");
  check_labels(gt.data.data(), gt.voxels(), "ground-truth");
  return sa_from_stats(segment_stats(pred.data.data(), gt.data.data(), gt.voxels()));
}

double br3d(const SegmentationVolume& pred, const SegmentationVolume& gt, int tol) {
  return br3d_impl(pred, gt, tol, true);
}

double br3d_serial(const SegmentationVolume& pred, const SegmentationVolume& gt, int tol) {
  return br3d_impl(pred, gt, tol, false);
}

double ue2d(const SegmentationVolume& pred, const SegmentationVolume& gt) {
  check_dims(pred, gt);
  check_labels(pred.data.data(), pred.voxels(), "predicted");
  check_labels(gt.data.data(), gt.voxels(), "ground-truth");
  const size_t n = static_cast<size_t>(gt.H) * gt.W;
  return frame_mean(gt.F, [&](int f) {
    return ue_from_stats(
        segment_stats(pred.data.data() + f * n, gt.data.data() + f * n, n));
  });
}

double sa2d(const SegmentationVolume& pred, const SegmentationVolume& gt) {
  check_dims(pred, gt);
  check_labels(pred.data.data(), pred.voxels(), "predicted");
  check_labels(gt.data.data(), gt.voxels(), "ground-truth");
  const size_t n = static_cast<size_t>(gt.H) * gt.W;
  return frame_mean(gt.F, [&](int f) {
    return sa_from_stats(
        segment_stats(pred.data.data() + f * n, gt.data.data() + f * n, n));
  });
}

double br2d(const SegmentationVolume& pred, const SegmentationVolume& gt, int tol) {
  check_dims(pred, gt);
  if (tol < 0) throw ConfigError("boundary recall: tolerance must be non-negative");
  const size_t n = static_cast<size_t>(gt.H) * gt.W;
  return frame_mean(gt.F, [&](int f) {
    std::vector<uint8_t> bp(n), bg(n);
    boundary_2d(pred.data.data() + f * n, gt.W, gt.H, bp.data());
    boundary_2d(gt.data.data() + f * n, gt.W, gt.H, bg.data());
    return br2d_frame(bp.data(), bg.data(), gt.W, gt.H, tol);
  });
}

double mean_duration(const SegmentationVolume& volume) {
  if (volume.voxels() == 0) throw ConfigError("mean_duration: empty volume");
  std::unordered_map<uint32_t, std::pair<int, int>> span;  // label -> (first, last)
  const size_t n = static_cast<size_t>(volume.H) * volume.W;
  for (int f = 0; f < volume.F; ++f) {
    const uint32_t* slice = volume.data.data() + f * n;
    for (size_t i = 0; i < n; ++i) {
      auto [it, fresh] = span.try_emplace(slice[i], f, f);
      if (!fresh) it->second.second = f;
    }
  }
  int64_t sum = 0;
  for (const auto& [lab, fl] : span) sum += fl.second - fl.first + 1;
  return static_cast<double>(sum) / static_cast<double>(span.size());
}

size_t count_supervoxels(const SegmentationVolume& volume) {
  std::unordered_set<uint32_t> labels(volume.data.begin(), volume.data.end());
  return labels.size();
}

MetricReport compute_metrics(const SegmentationVolume& pred, const SegmentationVolume& gt,
                             int tol) {
  MetricReport r;
  r.ue2d = ue2d(pred, gt);
  r.sa2d = sa2d(pred, gt);
  r.br2d = br2d(pred, gt, tol);
  r.ue3d = ue3d(pred, gt);
  r.sa3d = sa3d(pred, gt);
  r.br3d = br3d(pred, gt, tol);
  r.mean_duration = mean_duration(pred);
  r.supervoxels = count_supervoxels(pred);
  return r;
}

std::string report_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["ue2d"] = r.ue2d;
  j["sa2d"] = r.sa2d;
  j["br2d"] = r.br2d;
  j["ue3d"] = r.ue3d;
  j["sa3d"] = r.sa3d;
  j["br3d"] = r.br3d;
  j["mean_duration"] = r.mean_duration;
  j["supervoxels"] = r.supervoxels;
  return j.dump(2) + "\n";
}

std::string csv_header() {
  return "s,supervoxels,ue2d,sa2d,br2d,ue3d,sa3d,br3d,mean_duration";
}

std::string csv_row(double s, const MetricReport& r) {
  std::ostringstream os;
  os << std::setprecision(10) << s << ',' << r.supervoxels << ',' << r.ue2d << ','
     << r.sa2d << ',' << r.br2d << ',' << r.ue3d << ',' << r.sa3d << ',' << r.br3d << ','
     << r.mean_duration;
  return os.str();
}

}  // namespace supertraj
