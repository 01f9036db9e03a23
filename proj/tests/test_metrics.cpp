#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "oracle_metrics.hpp"
#include "supertraj/metrics.hpp"
#include "supertraj/synthetic.hpp"
#include "test_util.hpp"

using namespace supertraj;

namespace {

SegmentationVolume two_halves(int F, int H, int W) {
  SegmentationVolume v(F, H, W);
  for (int f = 0; f < F; ++f)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) v.at(f, x, y) = x < W / 2 ? 1 : 2;
  return v;
}

}  // namespace

TEST_CASE("a perfect prediction scores zero error, full accuracy, full recall") {
  SegmentationVolume gt = two_halves(3, 6, 8);
  MetricReport r = compute_metrics(gt, gt);
  CHECK(r.ue3d == 0.0);
  CHECK(r.sa3d == 1.0);
  CHECK(r.br3d == 1.0);
  CHECK(r.ue2d == 0.0);
  CHECK(r.sa2d == 1.0);
  CHECK(r.br2d == 1.0);
  CHECK(r.supervoxels == 2);
  CHECK(r.mean_duration == 3.0);
}

TEST_CASE("one blob over a two-segment truth bleeds a full segment each") {
  SegmentationVolume gt = two_halves(2, 4, 8);
  SegmentationVolume pred(2, 4, 8);
  for (uint32_t& v : pred.data) v = 9;

  // each half sees the whole volume spill over: (|V| - |g|) / |g| = 1
  CHECK(ue3d(pred, gt) == 1.0);
  // the blob is exactly half inside each half, and half counts
  CHECK(sa3d(pred, gt) == 1.0);
  // a single label has no internal boundary to recall the split with
  CHECK(br3d(pred, gt, 1) == 0.0);
  CHECK(br2d(pred, gt, 1) == 0.0);

  // but a boundary-free ground truth is trivially recalled
  SegmentationVolume flat_gt = pred;
  CHECK(br3d(gt, flat_gt, 1) == 1.0);
}

TEST_CASE("a boundary one voxel off is caught at tolerance 1 but not 0") {
  const int F = 2, H = 5, W = 9;
  SegmentationVolume gt(F, H, W), pred(F, H, W);
  for (int f = 0; f < F; ++f)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        gt.at(f, x, y) = x < 4 ? 1 : 2;
        pred.at(f, x, y) = x < 5 ? 1 : 2;  // split shifted right by one
      }
  CHECK(br3d(pred, gt, 1) == 1.0);
  // at zero tolerance only the shared x=4 column of the gt boundary is hit
  CHECK(br3d(pred, gt, 0) == 0.5);
  CHECK(br2d(pred, gt, 1) == 1.0);
  CHECK(br3d(pred, gt, 2) == 1.0);
  CHECK_THROWS_AS(br3d(pred, gt, -1), ConfigError);

  // the shifted column under- and over-covers: hand-check UE and SA
  // gt1 (40 voxels) is covered only by pred1 (50): bleed (50-40)/40
  // gt2 (50) overlaps pred1 (just 10 inside -> not half-in) and pred2 (40)
  CHECK(ue3d(pred, gt) == doctest::Approx((50 - 40) / 40.0 / 2 + (90 - 50) / 50.0 / 2));
  CHECK(sa3d(pred, gt) == doctest::Approx(0.5 * (40.0 / 40.0) + 0.5 * (40.0 / 50.0)));
}

TEST_CASE("metrics are invariant to relabeling either side") {
  SegmentationVolume pred = testutil::random_volume(3, 6, 7, 4, 50);
  SegmentationVolume gt = testutil::random_volume(3, 6, 7, 3, 51);

  SegmentationVolume pred_renamed = pred;
  for (uint32_t& v : pred_renamed.data) v = v * 37 + 5;
  SegmentationVolume gt_renamed = gt;
  for (uint32_t& v : gt_renamed.data) v = v * 11 + 900;

  MetricReport a = compute_metrics(pred, gt);
  MetricReport b = compute_metrics(pred_renamed, gt_renamed);
  CHECK(a.ue3d == b.ue3d);
  CHECK(a.sa3d == b.sa3d);
  CHECK(a.br3d == b.br3d);
  CHECK(a.ue2d == b.ue2d);
  CHECK(a.sa2d == b.sa2d);
  CHECK(a.br2d == b.br2d);
  CHECK(a.supervoxels == b.supervoxels);
}

TEST_CASE("single-frame volumes make the 2D and 3D families coincide") {
  for (uint64_t seed = 60; seed < 66; ++seed) {
    SegmentationVolume pred = testutil::random_volume(1, 7, 8, 4, seed);
    SegmentationVolume gt = testutil::random_volume(1, 7, 8, 3, seed + 100);
    CHECK(ue2d(pred, gt) == ue3d(pred, gt));
    CHECK(sa2d(pred, gt) == sa3d(pred, gt));
    CHECK(br2d(pred, gt, 1) == br3d(pred, gt, 1));
  }
}

TEST_CASE("all six metrics agree with the exhaustive oracles bitwise") {
  for (uint64_t seed = 0; seed < 25; ++seed) {
    SplitMix64 rng(seed * 7 + 1);
    int F = 1 + static_cast<int>(rng.next() % 3);
    int H = 2 + static_cast<int>(rng.next() % 7);
    int W = 2 + static_cast<int>(rng.next() % 7);
    SegmentationVolume pred = testutil::random_volume(F, H, W, 4, seed * 2 + 11);
    SegmentationVolume gt = testutil::random_volume(F, H, W, 3, seed * 2 + 12);

    CHECK(ue3d(pred, gt) == oracle::ue3d(pred, gt));
    CHECK(sa3d(pred, gt) == oracle::sa3d(pred, gt));
    CHECK(br3d(pred, gt, 1) == oracle::br3d(pred, gt, 1));
    CHECK(ue2d(pred, gt) == oracle::ue2d(pred, gt));
    CHECK(sa2d(pred, gt) == oracle::sa2d(pred, gt));
    CHECK(br2d(pred, gt, 1) == oracle::br2d(pred, gt, 1));
    CHECK(mean_duration(pred) == oracle::mean_duration(pred));
    CHECK(br3d(pred, gt, 1) == br3d_serial(pred, gt, 1));
  }
}

TEST_CASE("mean duration averages label lifespans inclusively") {
  SegmentationVolume v(5, 1, 2);
  // label 1 lives frames 0..2 (span 3), label 2 frames 0..4 (span 5)
  for (int f = 0; f < 5; ++f) {
    v.at(f, 0, 0) = f < 3 ? 1 : 2;
    v.at(f, 1, 0) = 2;
  }
  CHECK(mean_duration(v) == 4.0);
  CHECK(count_supervoxels(v) == 2);
}

TEST_CASE("volumes are assembled from rasters and trajectory labelings alike") {
  SynthParams sp;
  sp.width = 16;
  sp.height = 12;
  sp.frames = 4;
  SyntheticSequence seq = generate_synthetic(sp);
  BuildResult res = build_trajectories(seq.images, seq.fwd, seq.bwd, seq.edges);
  LabelVector labels = testutil::random_labels(res.set.size(), 5, 77);

  SegmentationVolume v = rasterize_volume(res.set, labels);
  REQUIRE(v.F == 4);
  REQUIRE(v.H == 12);
  REQUIRE(v.W == 16);
  std::vector<LabelRaster> rasters;
  for (int f = 1; f <= 4; ++f) rasters.push_back(g_rasterize(res.set, f, labels));
  SegmentationVolume w = volume_from_rasters(rasters);
  CHECK(v.data == w.data);

  // ground-truth rasters stack the same way
  SegmentationVolume g = volume_from_rasters(seq.gt_labels);
  CHECK(g.voxels() == v.voxels());
}

TEST_CASE("dimension and label validation reject malformed input") {
  SegmentationVolume a = testutil::random_volume(2, 4, 4, 3, 1);
  SegmentationVolume b = testutil::random_volume(2, 4, 5, 3, 2);
  CHECK_THROWS_AS(ue3d(a, b), DimensionError);
  CHECK_THROWS_AS(sa2d(a, b), DimensionError);
  CHECK_THROWS_AS(br3d(a, b), DimensionError);

  SegmentationVolume z = a;
  z.data[3] = 0;  // label 0 is reserved for "unassigned"
  CHECK_THROWS_AS(ue3d(z, a), InvalidDataError);
  CHECK_THROWS_AS(ue3d(a, z), InvalidDataError);
  CHECK_THROWS_AS(sa3d(z, a), InvalidDataError);
}

TEST_CASE("report serialization keeps field order and survives a parse") {
  MetricReport r;
  r.ue2d = 0.125;
  r.sa2d = 0.875;
  r.br2d = 1.0;
  r.ue3d = 0.25;
  r.sa3d = 0.75;
  r.br3d = 0.5;
  r.mean_duration = 9.5;
  r.supervoxels = 42;

  std::string js = report_json(r);
  auto parsed = nlohmann::json::parse(js);
  CHECK(parsed["ue2d"] == 0.125);
  CHECK(parsed["sa3d"] == 0.75);
  CHECK(parsed["mean_duration"] == 9.5);
  CHECK(parsed["supervoxels"] == 42);
  CHECK(js.find("\"ue2d\"") < js.find("\"sa2d\""));
  CHECK(js.find("\"br3d\"") < js.find("\"mean_duration\""));

  std::string header = csv_header();
  std::string row = csv_row(16.0, r);
  auto count_fields = [](const std::string& line) {
    return 1 + std::count(line.begin(), line.end(), ',');
  };
  CHECK(count_fields(header) == count_fields(row));
  std::istringstream is(row);
  double s_field;
  char comma;
  is >> s_field >> comma;
  CHECK(s_field == 16.0);
}
