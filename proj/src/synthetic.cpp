#include "supertraj/synthetic.hpp"

#include <functional>

namespace supertraj {

SynthPreset preset_from_name(const std::string& name) {
  if (name == "global-translate") return SynthPreset::GlobalTranslate;
  if (name == "two-region") return SynthPreset::TwoRegion;
  if (name == "occluder") return SynthPreset::Occluder;
  throw ConfigError("unknown synthetic preset: " + name);
}

std::string preset_name(SynthPreset p) {
  switch (p) {
    case SynthPreset::GlobalTranslate: return "global-translate";
    case SynthPreset::TwoRegion: return "two-region";
    case SynthPreset::Occluder: return "occluder";
  }
  return "?";
}

namespace {

// Sum of seeded sinusoids: defined on all of R^2, so translated samples are
// exactly equal to samples of the translated texture.
class ProceduralTexture {
 public:
  ProceduralTexture() = default;
  ProceduralTexture(uint64_t seed, std::array<double, 3> base, double contrast)
      : base_(base) {
    SplitMix64 rng(seed);
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < 5; ++k) {
        Wave w;
        double wavelength = rng.uniform(5.0, 22.0);
        double angle = rng.uniform(0.0, 2.0 * M_PI);
        w.kx = 2.0 * M_PI / wavelength * std::cos(angle);
        w.ky = 2.0 * M_PI / wavelength * std::sin(angle);
        w.phase = rng.uniform(0.0, 2.0 * M_PI);
        w.amp = contrast * rng.uniform(6.0, 18.0);
        waves_[c].push_back(w);
      }
    }
  }

  void sample(double x, double y, float out[3]) const {
    for (int c = 0; c < 3; ++c) {
      double v = base_[c];
      for (const Wave& w : waves_[c]) {
        v += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
      }
      out[c] = static_cast<float>(std::clamp(v, 0.0, 255.0));
    }
  }

 private:
  struct Wave {
    double kx, ky, phase, amp;
  };
  std::array<std::vector<Wave>, 3> waves_;
  std::array<double, 3> base_{};
};

bool is_integer(double v) { return v == std::floor(v); }

struct SceneModel {
  // All positions are cell coordinates, frames 1-based.
  std::function<int(int, int, int)> region;          // (x, y, f)
  std::function<void(int, int, int, float*)> color;  // rgb out
  std::function<Vec2(int, int, int)> fwd;            // content motion f -> f+1
  std::function<Vec2(int, int, int)> bwd;            // content motion f -> f-1
  std::function<bool(int, int, int)> is_new;         // no predecessor, f >= 2
};

bool in_domain(double x, double y, int w, int h) {
  return x >= 0.0 && x <= w - 1 && y >= 0.0 && y <= h - 1;
}

}  // namespace

SyntheticSequence generate_synthetic(const SynthParams& p) {
  const int W = p.width, H = p.height, F = p.frames;
  if (W < 2 || H < 2 || F < 1)
    throw ConfigError("generate_synthetic: degenerate dimensions");
  if (norm(p.motion) >= static_cast<double>(std::min(W, H)) / F)
    throw ConfigError("generate_synthetic: per-frame motion too large for the volume");
  if (p.preset == SynthPreset::TwoRegion && (p.motion.y != 0.0 || p.motion2.y != 0.0))
    throw ConfigError(
        "generate_synthetic: two-region content scrolls horizontally; vertical motion "
        "would cross the region boundary");
  if (p.preset == SynthPreset::Occluder && (W < 8 || H < 8))
    throw ConfigError("generate_synthetic: occluder preset needs at least 8x8 frames");

  ProceduralTexture tex1, tex2;
  SceneModel m;
  const Vec2 m1 = p.motion, m2 = p.motion2;
  bool integer_motion = is_integer(m1.x) && is_integer(m1.y);

  switch (p.preset) {
    case SynthPreset::GlobalTranslate: {
      tex1 = ProceduralTexture(hash_u64(p.seed), {120, 130, 140}, 1.0);
      m.region = [](int, int, int) { return 1; };
      m.color = [&, m1](int x, int y, int f, float* rgb) {
        tex1.sample(x - m1.x * (f - 1), y - m1.y * (f - 1), rgb);
      };
      m.fwd = [m1](int, int, int) { return m1; };
      m.bwd = [m1](int, int, int) { return Vec2{-m1.x, -m1.y}; };
      m.is_new = [m1, W, H](int x, int y, int) {
        return !in_domain(x - m1.x, y - m1.y, W, H);
      };
      break;
    }
    case SynthPreset::TwoRegion: {
      tex1 = ProceduralTexture(hash_u64(p.seed), {172, 92, 76}, 0.9);
      tex2 = ProceduralTexture(hash_u64(p.seed ^ 0x5bd1e995u), {76, 104, 184}, 0.9);
      integer_motion = integer_motion && is_integer(m2.x) && is_integer(m2.y);
      const int split = H / 2;
      m.region = [split](int, int y, int) { return y < split ? 1 : 2; };
      m.color = [&, m1, m2, split](int x, int y, int f, float* rgb) {
        if (y < split)
          tex1.sample(x - m1.x * (f - 1), y, rgb);
        else
          tex2.sample(x - m2.x * (f - 1), y, rgb);
      };
      m.fwd = [m1, m2, split](int, int y, int) { return y < split ? m1 : m2; };
      m.bwd = [m1, m2, split](int, int y, int) {
        Vec2 v = y < split ? m1 : m2;
        return Vec2{-v.x, -v.y};
      };
      m.is_new = [m1, m2, split, W](int x, int y, int) {
        double mx = y < split ? m1.x : m2.x;
        return x - mx < 0.0 || x - mx > W - 1;
      };
      break;
    }
    case SynthPreset::Occluder: {
      tex1 = ProceduralTexture(hash_u64(p.seed), {96, 142, 104}, 0.9);
      tex2 = ProceduralTexture(hash_u64(p.seed ^ 0x9e3779b9u), {188, 122, 58}, 0.9);
      const double rx0 = W / 6, ry0 = H / 3;
      const double rw = std::max(W / 4, 2), rh = std::max(H / 3, 2);
      auto covered = [=](int x, int y, int f) {
        double ox = m1.x * (f - 1), oy = m1.y * (f - 1);
        return x >= rx0 + ox && x < rx0 + rw + ox && y >= ry0 + oy && y < ry0 + rh + oy;
      };
      m.region = [covered](int x, int y, int f) { return covered(x, y, f) ? 2 : 1; };
      m.color = [&, covered, m1](int x, int y, int f, float* rgb) {
        if (covered(x, y, f))
          tex2.sample(x - m1.x * (f - 1), y - m1.y * (f - 1), rgb);
        else
          tex1.sample(x, y, rgb);
      };
      m.fwd = [covered, m1](int x, int y, int f) {
        return covered(x, y, f) ? m1 : Vec2{0, 0};
      };
      m.bwd = [covered, m1](int x, int y, int f) {
        return covered(x, y, f) ? Vec2{-m1.x, -m1.y} : Vec2{0, 0};
      };
      m.is_new = [covered](int x, int y, int f) {
        return !covered(x, y, f) && covered(x, y, f - 1);
      };
      break;
    }
  }

  SyntheticSequence seq;
  seq.width = W;
  seq.height = H;
  seq.frames = F;
  seq.images.reserve(F);
  seq.edges.reserve(F);
  seq.gt_labels.reserve(F);
  seq.new_masks.reserve(F);

  for (int f = 1; f <= F; ++f) {
    ImageFrame img(W, H);
    LabelRaster lab(W, H);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        m.color(x, y, f, &img.data[(static_cast<size_t>(y) * W + x) * 3]);
        lab.at(x, y) = static_cast<uint32_t>(m.region(x, y, f));
      }
    }
    EdgeMap e(W, H);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        uint32_t l = lab.at(x, y);
        bool b = (x > 0 && lab.at(x - 1, y) != l) || (x + 1 < W && lab.at(x + 1, y) != l) ||
                 (y > 0 && lab.at(x, y - 1) != l) || (y + 1 < H && lab.at(x, y + 1) != l);
        e.at(x, y) = b ? 1.f : 0.f;
      }
    }
    std::vector<uint8_t> nm(static_cast<size_t>(W) * H, f == 1 ? 1 : 0);
    if (f > 1) {
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
          nm[static_cast<size_t>(y) * W + x] = m.is_new(x, y, f) ? 1 : 0;
    }
    seq.images.push_back(std::move(img));
    seq.gt_labels.push_back(std::move(lab));
    seq.edges.push_back(std::move(e));
    seq.new_masks.push_back(std::move(nm));
  }

  for (int f = 1; f < F; ++f) {
    FlowField fw(W, H, FlowField::Direction::Forward);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        Vec2 v = m.fwd(x, y, f);
        fw.u[fw.idx(x, y)] = static_cast<float>(v.x);
        fw.v[fw.idx(x, y)] = static_cast<float>(v.y);
      }
    }
    seq.fwd.push_back(std::move(fw));

    FlowField bw(W, H, FlowField::Direction::Backward);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        Vec2 v = m.bwd(x, y, f + 1);
        bw.u[bw.idx(x, y)] = static_cast<float>(v.x);
        bw.v[bw.idx(x, y)] = static_cast<float>(v.y);
      }
    }
    seq.bwd.push_back(std::move(bw));
  }

  if (integer_motion) {
    for (int f0 = 1; f0 <= F; ++f0) {
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          if (f0 > 1 && !seq.new_masks[f0 - 1][static_cast<size_t>(y) * W + x]) continue;
          GtTrajectory t;
          t.start_frame = f0;
          Vec2 pos{static_cast<double>(x), static_cast<double>(y)};
          for (int f = f0; f <= F; ++f) {
            if (f > f0) {
              Vec2 step = m.fwd(round_half_up(t.coords.back().x),
                                round_half_up(t.coords.back().y), f - 1);
              pos = t.coords.back() + step;
              if (!in_domain(pos.x, pos.y, W, H)) break;
              // physical truth: a point that gets covered stops existing as
              // an observable trajectory
              if (p.preset == SynthPreset::Occluder &&
                  m.region(round_half_up(pos.x), round_half_up(pos.y), f) !=
                      m.region(x, y, f0) &&
                  m.region(x, y, f0) == 1)
                break;
            }
            t.coords.push_back(pos);
          }
          seq.gt_trajectories.push_back(std::move(t));
        }
      }
    }
  }

  return seq;
}

}  // namespace supertraj
