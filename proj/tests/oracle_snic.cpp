#include "oracle_snic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <queue>

namespace supertraj::oracle {

namespace {

struct Entry {
  double energy;
  uint64_t seq;
  uint32_t pixel;
  uint32_t label;
};

struct EntryOrder {
  bool operator()(const Entry& a, const Entry& b) const {
    if (a.energy != b.energy) return a.energy > b.energy;
    return a.seq > b.seq;
  }
};

struct Centroid {
  double sx = 0.0, sy = 0.0;
  std::array<double, 3> color{0.0, 0.0, 0.0};
  int n = 0;
};

}  // namespace

std::vector<uint32_t> snic_pixel_labels(const ImageFrame& rgb, const EdgeMap& edges,
                                        double s, double m, double beta,
                                        size_t* seed_count) {
  const int W = rgb.width, H = rgb.height;
  const size_t N = static_cast<size_t>(W) * H;

  std::vector<std::array<float, 3>> lab(N);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      float px[3] = {rgb.at(x, y, 0), rgb.at(x, y, 1), rgb.at(x, y, 2)};
      rgb_to_lab(px, lab[static_cast<size_t>(y) * W + x].data());
    }
  }

  std::vector<uint32_t> seeds;
  {
    std::vector<uint8_t> taken(N, 0);
    for (double gy = s / 2.0; gy <= H - 1 + 1e-9; gy += s) {
      for (double gx = s / 2.0; gx <= W - 1 + 1e-9; gx += s) {
        int cx = std::clamp(round_half_up(gx), 0, W - 1);
        int cy = std::clamp(round_half_up(gy), 0, H - 1);
        auto p = static_cast<uint32_t>(cy) * W + cx;
        if (!taken[p]) {
          taken[p] = 1;
          seeds.push_back(p);
        }
      }
    }
  }
  if (seed_count) *seed_count = seeds.size();

  std::vector<uint32_t> L(N, 0);
  std::vector<Centroid> cent(seeds.size());
  auto adopt = [&](uint32_t p, uint32_t label) {
    L[p] = label;
    Centroid& c = cent[label - 1];
    c.sx += p % W;
    c.sy += p / W;
    const auto& col = lab[p];
    c.color[0] += col[0];
    c.color[1] += col[1];
    c.color[2] += col[2];
    c.n++;
  };
  // energy of pixel p against cluster c, entered from member j; arithmetic
  // shape intentionally fixed: spatial+color first, then the boundary factor
  auto energy = [&](uint32_t p, const Centroid& c, uint32_t j) {
    double cx = c.sx / c.n;
    double cy = c.sy / c.n;
    double dx = static_cast<double>(p % W) - cx;
    double dy = static_cast<double>(p / W) - cy;
    double acc = dx * dx + dy * dy;
    int frames = 1;
    double es = (acc / frames) / (s * s);
    double d0 = lab[p][0] - c.color[0] / c.n;
    double d1 = lab[p][1] - c.color[1] / c.n;
    double d2 = lab[p][2] - c.color[2] / c.n;
    double ec = (d0 * d0 + d1 * d1 + d2 * d2) / (m * m);
    double eb = std::exp(beta * std::max<double>(edges.data[p], edges.data[j]));
    return (es + ec) + eb;
  };
  auto for_neighbors = [&](uint32_t p, auto&& fn) {  // ascending pixel id
    int x = static_cast<int>(p) % W, y = static_cast<int>(p) / W;
    if (y > 0) fn(p - W);
    if (x > 0) fn(p - 1);
    if (x + 1 < W) fn(p + 1);
    if (y + 1 < H) fn(p + W);
  };

  std::priority_queue<Entry, std::vector<Entry>, EntryOrder> pq;
  uint64_t seq = 0;
  for (size_t k = 0; k < seeds.size(); ++k) adopt(seeds[k], static_cast<uint32_t>(k + 1));
  for (size_t k = 0; k < seeds.size(); ++k) {
    uint32_t sp = seeds[k];
    for_neighbors(sp, [&](uint32_t nb) {
      if (L[nb] != 0) return;
      pq.push({energy(nb, cent[k], sp), seq++, nb, static_cast<uint32_t>(k + 1)});
    });
  }
  while (!pq.empty()) {
    Entry e = pq.top();
    pq.pop();
    if (L[e.pixel] != 0) continue;
    adopt(e.pixel, e.label);
    for_neighbors(e.pixel, [&](uint32_t nb) {
      if (L[nb] != 0) return;
      pq.push({energy(nb, cent[e.label - 1], e.pixel), seq++, nb, e.label});
    });
  }
  return L;
}

std::vector<uint32_t> filter_small_pixel_regions(const std::vector<uint32_t>& labels,
                                                 int W, int H, int min_region) {
  const size_t N = labels.size();
  std::vector<int32_t> region(N, -1);
  std::vector<int64_t> sizes;
  std::vector<uint32_t> region_label;

  for (size_t start = 0; start < N; ++start) {
    if (region[start] >= 0) continue;
    auto r = static_cast<int32_t>(sizes.size());
    sizes.push_back(0);
    region_label.push_back(labels[start]);
    std::deque<uint32_t> queue{static_cast<uint32_t>(start)};
    region[start] = r;
    while (!queue.empty()) {
      uint32_t p = queue.front();
      queue.pop_front();
      sizes[r]++;
      int x = static_cast<int>(p) % W, y = static_cast<int>(p) / W;
      auto visit = [&](int nx, int ny) {
        if (nx < 0 || nx >= W || ny < 0 || ny >= H) return;
        auto np = static_cast<uint32_t>(ny) * W + nx;
        if (region[np] >= 0 || labels[np] != labels[p]) return;
        region[np] = r;
        queue.push_back(np);
      };
      visit(x, y - 1);
      visit(x - 1, y);
      visit(x + 1, y);
      visit(x, y + 1);
    }
  }

  std::vector<uint32_t> out = labels;
  for (int32_t r = 0; r < static_cast<int32_t>(sizes.size()); ++r) {
    if (sizes[r] >= min_region) continue;
    int64_t best_size = -1;
    uint32_t best_label = 0;
    for (size_t p = 0; p < N; ++p) {
      if (region[p] != r) continue;
      int x = static_cast<int>(p) % W, y = static_cast<int>(p) / W;
      auto consider = [&](int nx, int ny) {
        if (nx < 0 || nx >= W || ny < 0 || ny >= H) return;
        int32_t rn = region[static_cast<size_t>(ny) * W + nx];
        if (rn == r) return;
        if (sizes[rn] > best_size ||
            (sizes[rn] == best_size && region_label[rn] < best_label)) {
          best_size = sizes[rn];
          best_label = region_label[rn];
        }
      };
      consider(x, y - 1);
      consider(x - 1, y);
      consider(x + 1, y);
      consider(x, y + 1);
    }
    if (best_size < 0) continue;
    for (size_t p = 0; p < N; ++p) {
      if (region[p] == r) out[p] = best_label;
    }
  }
  return out;
}

}  // namespace supertraj::oracle
