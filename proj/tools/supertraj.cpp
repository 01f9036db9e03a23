// Command-line front end: build / cluster / metrics / synth / render.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "supertraj/clustering.hpp"
#include "supertraj/io.hpp"
#include "supertraj/metrics.hpp"
#include "supertraj/synthetic.hpp"

namespace fs = std::filesystem;
using namespace supertraj;

namespace {

void apply_threads(int t) {
#ifdef _OPENMP
  if (t > 0) omp_set_num_threads(t);
#else
  (void)t;
#endif
}

std::string frame_path(const std::string& dir, const char* stem, int f, const char* ext) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s_%04d.%s", stem, f, ext);
  return dir + "/" + buf;
}

std::vector<std::string> list_pngs(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("directory not found: " + dir);
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png")
      out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ConfigError("no .png files in " + dir);
  return out;
}

void ensure_parent(const std::string& path) {
  fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

// Every subcommand prints a digest of its effective configuration so runs can
// be told apart in logs.
class Digest {
 public:
  explicit Digest(const std::string& cmd) { add("command", cmd); }

  void add(const std::string& k, const std::string& v) { kv_.emplace_back(k, v); }
  void add(const std::string& k, double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    kv_.emplace_back(k, os.str());
  }
  void add(const std::string& k, int64_t v) { kv_.emplace_back(k, std::to_string(v)); }
  void add(const std::string& k, uint64_t v) { kv_.emplace_back(k, std::to_string(v)); }

  void print(std::ostream& os) const {
    Fnv1a h;
    std::ostringstream params;
    for (const auto& [k, v] : kv_) {
      h.add(k);
      h.add(std::string("="));
      h.add(v);
      h.add(std::string("\n"));
      params << ' ' << k << '=' << v;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.value()));
    os << "config digest: " << buf << '\n';
    os << "parameters:" << params.str() << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> kv_;
};

std::vector<ImageFrame> read_frames(const std::string& dir) {
  std::vector<ImageFrame> frames;
  for (const std::string& p : list_pngs(dir)) frames.push_back(read_image(p));
  for (const ImageFrame& f : frames) {
    if (f.width != frames[0].width || f.height != frames[0].height)
      throw DimensionError("frame dimensions differ in " + dir);
  }
  return frames;
}

std::vector<EdgeMap> read_edge_dir(const std::string& dir, int F, int W, int H) {
  std::vector<EdgeMap> edges;
  for (int f = 1; f <= F; ++f) {
    std::string p = frame_path(dir, "edge", f, "png");
    if (!fs::exists(p))
      throw ConfigError("missing edge map for frame " + std::to_string(f) + ": " + p);
    edges.push_back(read_edge_map(p));
    if (edges.back().width != W || edges.back().height != H)
      throw DimensionError("edge map dimensions differ from frames: " + p);
  }
  return edges;
}

void resample_edge_strengths(const TrajectorySet& set, const std::vector<EdgeMap>& edges,
                             TrajectoryAttributes& attrs) {
  const size_t T = set.size();
  attrs.edge_strengths.assign(T, {});
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (size_t i = 0; i < T; ++i) {
    const Trajectory& t = set.trajectories[i];
    auto& es = attrs.edge_strengths[i];
    es.resize(t.coords.size());
    for (size_t k = 0; k < t.coords.size(); ++k) {
      int f = t.start_frame + static_cast<int>(k);
      es[k] = static_cast<float>(bilinear(edges[f - 1], t.coords[k].x, t.coords[k].y));
    }
  }
}

SegmentationVolume load_volume(const std::string& dir) {
  std::vector<LabelRaster> rasters;
  for (const std::string& p : list_pngs(dir)) rasters.push_back(read_label_raster(p));
  return volume_from_rasters(rasters);
}

struct BuildOpts {
  std::string images, fwd, bwd, edges, out;
  double gamma = 1.5, beta = 4.0, sigma = 20.0;
};

void cmd_build(const BuildOpts& o) {
  std::vector<ImageFrame> frames = read_frames(o.images);
  const int F = static_cast<int>(frames.size());
  const int W = frames[0].width, H = frames[0].height;

  std::vector<FlowField> fwd, bwd;
  for (int f = 1; f <= F - 1; ++f) {
    std::string pf = frame_path(o.fwd, "flow", f, "flo");
    if (!fs::exists(pf))
      throw ConfigError("missing forward flow (frame " + std::to_string(f) + " -> " +
                        std::to_string(f + 1) + "): " + pf);
    fwd.push_back(read_flow_file(pf, W, H));
    std::string pb = frame_path(o.bwd, "flow", f, "flo");
    if (!fs::exists(pb))
      throw ConfigError("missing backward flow (frame " + std::to_string(f + 1) + " -> " +
                        std::to_string(f) + "): " + pb);
    bwd.push_back(read_flow_file(pb, W, H));
    bwd.back().direction = FlowField::Direction::Backward;
  }

  std::vector<EdgeMap> edges;
  if (!o.edges.empty()) {
    edges = read_edge_dir(o.edges, F, W, H);
  } else {
    edges.reserve(frames.size());
    for (const ImageFrame& img : frames) edges.push_back(sobel_edge_fallback(img));
  }

  BuildParams bp;
  bp.gamma = o.gamma;
  bp.beta = o.beta;
  bp.sigma = o.sigma;
  BuildResult res = build_trajectories(frames, fwd, bwd, edges, bp);
  ensure_parent(o.out);
  write_trajectories(res.set, res.attrs, o.out);

  Digest dg("build");
  dg.add("images", o.images);
  dg.add("fwd", o.fwd);
  dg.add("bwd", o.bwd);
  dg.add("edges", o.edges.empty() ? std::string("<sobel>") : o.edges);
  dg.add("gamma", o.gamma);
  dg.add("beta", o.beta);
  dg.add("sigma", o.sigma);
  dg.print(std::cout);

  const size_t T = res.set.size();
  double mean_len = 0.0;
  for (const Trajectory& t : res.set.trajectories) mean_len += t.length();
  mean_len /= static_cast<double>(T);
  std::cout << "trajectories: " << T << '\n';
  std::cout << "mean length: " << std::fixed << std::setprecision(3) << mean_len << '\n';
  for (int f = 2; f <= F; ++f) {
    const auto& m = res.mask.frames[f - 1];
    size_t occ = 0;
    for (uint8_t v : m) occ += v != 0;
    std::cout << "frame " << f << ": occluded fraction " << std::setprecision(4)
              << static_cast<double>(occ) / static_cast<double>(m.size()) << '\n';
  }
  std::cout.unsetf(std::ios::fixed);
  std::cout << "wrote " << o.out << '\n';
}

struct ClusterOpts {
  std::string traj, out, labels_dir, edges, images;
  double s = 16.0, m = 10.0, beta = 4.0;
  int th = -1, min_region = -1, max_iter = 10;
};

void cmd_cluster(const ClusterOpts& o) {
  TrajectoryFile tf = read_trajectories(o.traj);
  const int F = tf.set.F;

  if (!o.edges.empty()) {
    resample_edge_strengths(tf.set, read_edge_dir(o.edges, F, tf.set.W, tf.set.H),
                            tf.attrs);
  } else if (!o.images.empty()) {
    std::vector<ImageFrame> frames = read_frames(o.images);
    if (static_cast<int>(frames.size()) != F)
      throw ConfigError("image count does not match trajectory file frame count");
    if (frames[0].width != tf.set.W || frames[0].height != tf.set.H)
      throw DimensionError("image dimensions differ from trajectory file");
    std::vector<EdgeMap> edges;
    edges.reserve(frames.size());
    for (const ImageFrame& img : frames) edges.push_back(sobel_edge_fallback(img));
    resample_edge_strengths(tf.set, edges, tf.attrs);
  } else {
    std::cerr << "note: no --edges/--images; boundary energy term is neutral\n";
  }

  NeighborGraph graph = build_neighbor_graph(tf.set);
  SeedSet seeds = init_seeds(tf.set, o.s, o.th);
  EnergyParams prm{o.s, o.m, o.beta};
  ClusterDiagnostics diag;
  LabelVector labels = super_trajectory_clustering(tf.set, tf.attrs, graph, seeds, prm,
                                                   o.max_iter, o.min_region, &diag);
  ensure_parent(o.out);
  write_labels(labels, o.out);
  if (!o.labels_dir.empty()) {
    fs::create_directories(o.labels_dir);
    for (int f = 1; f <= F; ++f) {
      write_label_raster(g_rasterize(tf.set, f, labels),
                         frame_path(o.labels_dir, "label", f, "png"));
    }
  }

  Digest dg("cluster");
  dg.add("traj", o.traj);
  dg.add("s", o.s);
  dg.add("m", o.m);
  dg.add("beta", o.beta);
  dg.add("th", static_cast<int64_t>(o.th > 0 ? o.th : static_cast<int>(std::ceil(o.s * o.s / 2.0))));
  dg.add("min_region",
         static_cast<int64_t>(o.min_region >= 0 ? o.min_region
                                                : static_cast<int>(std::ceil(o.s * o.s / 4.0))));
  dg.add("max_iter", static_cast<int64_t>(o.max_iter));
  dg.print(std::cout);

  std::cout << "seeds: " << seeds.size() << '\n';
  std::cout << "outer iterations: " << diag.iterations << '\n';
  std::cout << "disconnection sum: before " << diag.disconnection_before << ", after "
            << diag.disconnection_after << '\n';
  std::cout << "fallback assignments: " << diag.fallback_assignments << '\n';
  std::cout << "wrote " << o.out << '\n';
}

struct MetricsOpts {
  std::string pred, gt, traj, out;
  std::vector<double> sweep;
  double m = 10.0, beta = 4.0;
  int th = -1, min_region = -1, max_iter = 10, tol = 1;
};

void cmd_metrics(const MetricsOpts& o) {
  Digest dg("metrics");
  dg.add("gt", o.gt);
  dg.add("tol", static_cast<int64_t>(o.tol));

  std::string payload;
  if (!o.sweep.empty()) {
    if (o.traj.empty())
      throw ConfigError("--sweep requires --traj (clusters are rebuilt per spacing)");
    TrajectoryFile tf = read_trajectories(o.traj);
    SegmentationVolume gt = load_volume(o.gt);
    if (gt.F != tf.set.F || gt.H != tf.set.H || gt.W != tf.set.W)
      throw DimensionError("ground-truth volume does not match trajectory file");
    NeighborGraph graph = build_neighbor_graph(tf.set);
    std::ostringstream csv;
    csv << csv_header() << '\n';
    for (double s : o.sweep) {
      SeedSet seeds = init_seeds(tf.set, s, o.th);
      EnergyParams prm{s, o.m, o.beta};
      LabelVector labels = super_trajectory_clustering(tf.set, tf.attrs, graph, seeds, prm,
                                                       o.max_iter, o.min_region, nullptr);
      SegmentationVolume pred = rasterize_volume(tf.set, labels);
      csv << csv_row(s, compute_metrics(pred, gt, o.tol)) << '\n';
    }
    payload = csv.str();
    dg.add("traj", o.traj);
    {
      std::ostringstream ss;
      for (size_t i = 0; i < o.sweep.size(); ++i) ss << (i ? "," : "") << o.sweep[i];
      dg.add("sweep", ss.str());
    }
  } else {
    if (o.pred.empty()) throw ConfigError("metrics needs --pred (or --sweep with --traj)");
    SegmentationVolume pred = load_volume(o.pred);
    SegmentationVolume gt = load_volume(o.gt);
    payload = report_json(compute_metrics(pred, gt, o.tol));
    dg.add("pred", o.pred);
  }

  dg.print(std::cerr);  // keep stdout machine-readable
  std::cout << payload;
  if (!o.out.empty()) {
    ensure_parent(o.out);
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + o.out);
    f << payload;
  }
}

struct SynthOpts {
  std::string preset, out;
  int width = 64, height = 64, frames = 10;
  std::vector<double> motion{2.0, 1.0}, motion2{0.0, 0.0};
  uint64_t seed = 1;
};

void cmd_synth(const SynthOpts& o) {
  SynthParams sp;
  sp.preset = preset_from_name(o.preset);
  sp.width = o.width;
  sp.height = o.height;
  sp.frames = o.frames;
  sp.motion = {o.motion[0], o.motion[1]};
  sp.motion2 = {o.motion2[0], o.motion2[1]};
  sp.seed = o.seed;
  SyntheticSequence seq = generate_synthetic(sp);

  fs::create_directories(o.out + "/images");
  fs::create_directories(o.out + "/flow_fwd");
  fs::create_directories(o.out + "/flow_bwd");
  fs::create_directories(o.out + "/edges");
  fs::create_directories(o.out + "/gt_labels");
  for (int f = 1; f <= o.frames; ++f) {
    write_image(seq.images[f - 1], frame_path(o.out + "/images", "frame", f, "png"));
    write_edge_map(seq.edges[f - 1], frame_path(o.out + "/edges", "edge", f, "png"));
    write_label_raster(seq.gt_labels[f - 1],
                       frame_path(o.out + "/gt_labels", "label", f, "png"));
  }
  for (int f = 1; f <= o.frames - 1; ++f) {
    write_flow_file(seq.fwd[f - 1], frame_path(o.out + "/flow_fwd", "flow", f, "flo"));
    write_flow_file(seq.bwd[f - 1], frame_path(o.out + "/flow_bwd", "flow", f, "flo"));
  }

  Digest dg("synth");
  dg.add("preset", o.preset);
  dg.add("width", static_cast<int64_t>(o.width));
  dg.add("height", static_cast<int64_t>(o.height));
  dg.add("frames", static_cast<int64_t>(o.frames));
  dg.add("motion", std::to_string(o.motion[0]) + "," + std::to_string(o.motion[1]));
  dg.add("motion2", std::to_string(o.motion2[0]) + "," + std::to_string(o.motion2[1]));
  dg.add("seed", o.seed);
  dg.print(std::cout);
  std::cout << "wrote " << o.frames << " images, " << (o.frames - 1) << "+"
            << (o.frames - 1) << " flows, " << o.frames << " edge maps, " << o.frames
            << " label rasters to " << o.out << '\n';
}

struct RenderOpts {
  std::string traj, labels, images, out, mode = "overlay";
};

void cmd_render(const RenderOpts& o) {
  TrajectoryFile tf = read_trajectories(o.traj);
  const int F = tf.set.F;
  fs::create_directories(o.out);

  if (o.mode == "avgcolor") {
    for (int f = 1; f <= F; ++f) {
      write_image(render_avgcolor(tf.set, tf.attrs.mean_color, f),
                  frame_path(o.out, "avgcolor", f, "png"));
    }
  } else {
    if (o.labels.empty() || o.images.empty())
      throw ConfigError("overlay mode needs --labels and --images");
    std::vector<uint32_t> labels = read_labels(o.labels);
    if (labels.size() != tf.set.size())
      throw InvalidDataError("label count does not match trajectory file");
    std::vector<std::string> paths = list_pngs(o.images);
    if (static_cast<int>(paths.size()) != F)
      throw ConfigError("image count does not match trajectory file frame count");
    for (int f = 1; f <= F; ++f) {
      ImageFrame img = read_image(paths[f - 1]);
      if (img.width != tf.set.W || img.height != tf.set.H)
        throw DimensionError("image dimensions differ from trajectory file");
      write_image(render_overlay(img, g_rasterize(tf.set, f, labels)),
                  frame_path(o.out, "overlay", f, "png"));
    }
  }

  Digest dg("render");
  dg.add("traj", o.traj);
  dg.add("mode", o.mode);
  dg.print(std::cout);
  std::cout << "wrote " << F << " frames to " << o.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"super-trajectory video representation pipeline"};
  app.set_config("--config", "", "key=value config file ([subcommand] sections)");
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker thread cap (0 = hardware default)")
      ->envname("SUPERTRAJ_THREADS");

  BuildOpts b;
  CLI::App* build = app.add_subcommand("build", "track dense trajectories from frames + flows");
  build->add_option("--images", b.images, "directory of frame PNGs")->required();
  build->add_option("--fwd", b.fwd, "directory of forward .flo files (flow_XXXX.flo)")
      ->required();
  build->add_option("--bwd", b.bwd, "directory of backward .flo files")->required();
  build->add_option("--edges", b.edges, "directory of edge PNGs (default: Sobel)");
  build->add_option("--out", b.out, "output trajectory file (.strj)")->required();
  build->add_option("--gamma", b.gamma, "occlusion threshold")
      ->check(CLI::PositiveNumber)
      ->envname("SUPERTRAJ_GAMMA");
  build->add_option("--beta", b.beta, "edge sharpness")
      ->check(CLI::PositiveNumber)
      ->envname("SUPERTRAJ_BETA");
  build->add_option("--sigma", b.sigma, "color distance normalizer")
      ->check(CLI::PositiveNumber)
      ->envname("SUPERTRAJ_SIGMA");
  build->callback([&] {
    apply_threads(threads);
    cmd_build(b);
  });

  ClusterOpts c;
  CLI::App* cluster = app.add_subcommand("cluster", "group trajectories into super-trajectories");
  cluster->add_option("--traj", c.traj, "input trajectory file (.strj)")->required();
  cluster->add_option("--out", c.out, "output label file (.stlb)")->required();
  cluster->add_option("--labels-dir", c.labels_dir, "also write per-frame 16-bit label PNGs");
  cluster->add_option("--edges", c.edges, "edge PNG directory for the boundary term");
  cluster->add_option("--images", c.images, "frame PNG directory (Sobel boundary term)");
  cluster->add_option("--s", c.s, "target spacing in pixels")
      ->check(CLI::PositiveNumber)
      ->envname("SUPERTRAJ_S");
  cluster->add_option("--m", c.m, "color compactness")
      ->check(CLI::PositiveNumber)
      ->envname("SUPERTRAJ_M");
  cluster->add_option("--beta", c.beta, "edge sharpness")->check(CLI::PositiveNumber);
  cluster->add_option("--th", c.th, "seed coverage threshold (<0: ceil(s^2/2))");
  cluster->add_option("--min-region", c.min_region, "small-region cutoff (<0: ceil(s^2/4))");
  cluster->add_option("--max-iter", c.max_iter, "outer iteration cap")
      ->check(CLI::PositiveNumber);
  cluster->callback([&] {
    apply_threads(threads);
    cmd_cluster(c);
  });

  MetricsOpts mo;
  CLI::App* metrics = app.add_subcommand("metrics", "score a labeling against ground truth");
  metrics->add_option("--pred", mo.pred, "predicted label PNG directory");
  metrics->add_option("--gt", mo.gt, "ground-truth label PNG directory")->required();
  metrics->add_option("--traj", mo.traj, "trajectory file (sweep mode)");
  metrics->add_option("--sweep", mo.sweep, "spacings to re-cluster and score (CSV output)");
  metrics->add_option("--tol", mo.tol, "boundary recall tolerance")
      ->check(CLI::NonNegativeNumber)
      ->envname("SUPERTRAJ_TOL");
  metrics->add_option("--m", mo.m, "color compactness (sweep mode)")
      ->check(CLI::PositiveNumber);
  metrics->add_option("--th", mo.th, "seed coverage threshold (sweep mode)");
  metrics->add_option("--min-region", mo.min_region, "small-region cutoff (sweep mode)");
  metrics->add_option("--max-iter", mo.max_iter, "outer iteration cap (sweep mode)")
      ->check(CLI::PositiveNumber);
  metrics->add_option("--out", mo.out, "also write the report to this file");
  metrics->callback([&] {
    apply_threads(threads);
    cmd_metrics(mo);
  });

  SynthOpts s;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic sequence with exact flows");
  synth->add_option("preset", s.preset, "global-translate | two-region | occluder")
      ->required();
  synth->add_option("width", s.width, "frame width")->check(CLI::PositiveNumber);
  synth->add_option("height", s.height, "frame height")->check(CLI::PositiveNumber);
  synth->add_option("frames", s.frames, "frame count")->check(CLI::PositiveNumber);
  synth->add_option("--out", s.out, "output dataset directory")->required();
  synth->add_option("--motion", s.motion, "per-frame motion dx dy")->expected(2);
  synth->add_option("--motion2", s.motion2, "second-region motion dx dy")->expected(2);
  synth->add_option("--seed", s.seed, "texture seed")->envname("SUPERTRAJ_SEED");
  synth->callback([&] {
    apply_threads(threads);
    cmd_synth(s);
  });

  RenderOpts r;
  CLI::App* render = app.add_subcommand("render", "visualize labels or mean trajectory colors");
  render->add_option("--traj", r.traj, "trajectory file (.strj)")->required();
  render->add_option("--labels", r.labels, "label file (.stlb, overlay mode)");
  render->add_option("--images", r.images, "frame PNG directory (overlay mode)");
  render->add_option("--out", r.out, "output directory")->required();
  render->add_option("--mode", r.mode, "overlay | avgcolor")
      ->check(CLI::IsMember({"overlay", "avgcolor"}));
  render->callback([&] {
    apply_threads(threads);
    cmd_render(r);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidDataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
