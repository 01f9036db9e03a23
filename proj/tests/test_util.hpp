#pragma once

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "supertraj/metrics.hpp"
#include "supertraj/synthetic.hpp"
#include "supertraj/trajectory.hpp"

namespace testutil {

using namespace supertraj;

inline ImageFrame noise_image(int w, int h, uint64_t seed) {
  ImageFrame img(w, h);
  SplitMix64 rng(seed);
  for (float& v : img.data) v = static_cast<float>(rng.next() % 256);
  return img;
}

inline SegmentationVolume random_volume(int F, int H, int W, uint32_t num_labels,
                                        uint64_t seed) {
  SegmentationVolume v(F, H, W);
  SplitMix64 rng(seed);
  for (uint32_t& l : v.data) l = 1 + static_cast<uint32_t>(rng.next() % num_labels);
  return v;
}

// Random trajectory population over a small grid: arbitrary start frames,
// lengths, and jittered positions, so neighbor structure is irregular.
inline TrajectorySet random_trajectory_set(size_t T, int F, int W, int H, uint64_t seed) {
  TrajectorySet set;
  set.F = F;
  set.W = W;
  set.H = H;
  SplitMix64 rng(seed);
  set.trajectories.resize(T);
  for (auto& t : set.trajectories) {
    t.start_frame = 1 + static_cast<int>(rng.next() % F);
    int max_len = F - t.start_frame + 1;
    int len = 1 + static_cast<int>(rng.next() % max_len);
    double x = rng.uniform(0, W - 1), y = rng.uniform(0, H - 1);
    t.coords.resize(len);
    for (auto& p : t.coords) {
      p = {x, y};
      x = std::clamp(x + rng.uniform(-1.5, 1.5), 0.0, W - 1.0);
      y = std::clamp(y + rng.uniform(-1.5, 1.5), 0.0, H - 1.0);
    }
  }
  return set;
}

inline std::vector<uint32_t> random_labels(size_t T, uint32_t num_labels, uint64_t seed,
                                           bool allow_zero = false) {
  SplitMix64 rng(seed);
  std::vector<uint32_t> l(T);
  for (auto& v : l)
    v = allow_zero ? static_cast<uint32_t>(rng.next() % (num_labels + 1))
                   : 1 + static_cast<uint32_t>(rng.next() % num_labels);
  return l;
}

// True when the two labelings are equal up to a label bijection.
inline bool label_bijection(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
  if (a.size() != b.size()) return false;
  std::unordered_map<uint32_t, uint32_t> fwd, bwd;
  for (size_t i = 0; i < a.size(); ++i) {
    auto [itf, newf] = fwd.try_emplace(a[i], b[i]);
    if (!newf && itf->second != b[i]) return false;
    auto [itb, newb] = bwd.try_emplace(b[i], a[i]);
    if (!newb && itb->second != a[i]) return false;
  }
  return true;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    namespace fs = std::filesystem;
    path_ = (fs::temp_directory_path() / ("supertraj_" + tag + "_" +
                                          std::to_string(::getpid())))
                .string();
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::string& path() const { return path_; }
  std::string sub(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testutil
