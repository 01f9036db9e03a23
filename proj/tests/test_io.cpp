#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <doctest.h>

#include "supertraj/io.hpp"
#include "supertraj/synthetic.hpp"
#include "test_util.hpp"

using namespace supertraj;
using testutil::TempDir;

TEST_CASE("flow file round trip preserves every float") {
  TempDir td("flo");
  FlowField f(17, 9);
  SplitMix64 rng(7);
  for (size_t i = 0; i < f.u.size(); ++i) {
    f.u[i] = static_cast<float>(rng.uniform(-30, 30));
    f.v[i] = static_cast<float>(rng.uniform(-30, 30));
  }
  std::string p = td.sub("a.flo");
  write_flow_file(f, p);
  FlowField g = read_flow_file(p);
  CHECK(g.width == f.width);
  CHECK(g.height == f.height);
  CHECK(g.u == f.u);
  CHECK(g.v == f.v);

  CHECK_THROWS_AS(read_flow_file(p, 17, 10), DimensionError);
  CHECK_THROWS_AS(read_flow_file(td.sub("missing.flo")), FormatError);
}

TEST_CASE("flow file rejects bad magic, unknown sentinels, and truncation") {
  TempDir td("flo_bad");
  FlowField f(4, 4);
  std::string p = td.sub("a.flo");
  write_flow_file(f, p);

  std::string bytes = testutil::read_file(p);
  {
    std::string corrupt = bytes;
    corrupt[0] = 'X';
    std::ofstream(td.sub("magic.flo"), std::ios::binary) << corrupt;
    CHECK_THROWS_AS(read_flow_file(td.sub("magic.flo")), FormatError);
  }
  {
    std::string truncated = bytes.substr(0, bytes.size() - 7);
    std::ofstream(td.sub("trunc.flo"), std::ios::binary) << truncated;
    CHECK_THROWS_AS(read_flow_file(td.sub("trunc.flo")), FormatError);
  }
  {
    FlowField s(4, 4);
    s.u[5] = 1.5e9f;  // “unknown flow” sentinel
    write_flow_file(s, td.sub("sent.flo"));
    CHECK_THROWS_AS(read_flow_file(td.sub("sent.flo")), InvalidDataError);
  }
}

TEST_CASE("image png round trip is exact for 8-bit content") {
  TempDir td("png");
  ImageFrame img = testutil::noise_image(23, 11, 3);
  std::string p = td.sub("img.png");
  write_image(img, p);
  ImageFrame back = read_image(p);
  REQUIRE(back.width == img.width);
  REQUIRE(back.height == img.height);
  CHECK(back.data == img.data);
}

TEST_CASE("label raster round trip keeps 16-bit values") {
  TempDir td("lbl");
  LabelRaster l(9, 5);
  SplitMix64 rng(11);
  for (uint32_t& v : l.data) v = static_cast<uint32_t>(rng.next() % 65536);
  l.data[0] = 65535;
  std::string p = td.sub("l.png");
  write_label_raster(l, p);
  LabelRaster back = read_label_raster(p);
  CHECK(back.data == l.data);

  LabelRaster too_big(2, 2);
  too_big.data[3] = 70000;
  CHECK_THROWS_AS(write_label_raster(too_big, td.sub("big.png")), InvalidDataError);

  // multi-channel input is not a label raster
  write_image(testutil::noise_image(4, 4, 1), td.sub("rgb.png"));
  CHECK_THROWS_AS(read_label_raster(td.sub("rgb.png")), FormatError);
  CHECK_THROWS_AS(read_edge_map(td.sub("rgb.png")), FormatError);
}

TEST_CASE("edge map round trip is exact on 16-bit lattice values") {
  TempDir td("edge");
  EdgeMap e(7, 6);
  SplitMix64 rng(5);
  for (float& v : e.data)
    v = static_cast<float>(static_cast<double>(rng.next() % 65536) / 65535.0);
  e.data[0] = 0.f;
  e.data[1] = 1.f;
  std::string p = td.sub("e.png");
  write_edge_map(e, p);
  EdgeMap back = read_edge_map(p);
  REQUIRE(back.data.size() == e.data.size());
  for (size_t i = 0; i < e.data.size(); ++i)
    CHECK(back.data[i] == doctest::Approx(e.data[i]).epsilon(1e-6));
  CHECK(back.data[0] == 0.f);
  CHECK(back.data[1] == 1.f);
}

TEST_CASE("trajectory container round trips and re-serializes byte-identically") {
  SynthParams sp;
  sp.width = 24;
  sp.height = 16;
  sp.frames = 5;
  SyntheticSequence seq = generate_synthetic(sp);
  BuildResult res = build_trajectories(seq.images, seq.fwd, seq.bwd, seq.edges);

  TempDir td("strj");
  std::string p1 = td.sub("a.strj"), p2 = td.sub("b.strj");
  write_trajectories(res.set, res.attrs, p1);
  TrajectoryFile tf = read_trajectories(p1);

  REQUIRE(tf.set.size() == res.set.size());
  CHECK(tf.set.F == res.set.F);
  CHECK(tf.set.W == res.set.W);
  CHECK(tf.set.H == res.set.H);
  for (size_t i = 0; i < res.set.size(); ++i) {
    const Trajectory& a = res.set.trajectories[i];
    const Trajectory& b = tf.set.trajectories[i];
    REQUIRE(a.start_frame == b.start_frame);
    REQUIRE(a.length() == b.length());
    for (int k = 0; k < a.length(); ++k) {
      // storage is float32: the read-back value is the narrowed original
      CHECK(b.coords[k].x == static_cast<float>(a.coords[k].x));
      CHECK(b.coords[k].y == static_cast<float>(a.coords[k].y));
    }
  }
  REQUIRE(tf.attrs.mean_color.size() == res.attrs.mean_color.size());

  // a second write of the read-back data must reproduce the bytes exactly
  write_trajectories(tf.set, tf.attrs, p2);
  CHECK(testutil::read_file(p1) == testutil::read_file(p2));
}

TEST_CASE("trajectory container rejects malformed input") {
  SynthParams sp;
  sp.width = 8;
  sp.height = 8;
  sp.frames = 2;
  SyntheticSequence seq = generate_synthetic(sp);
  BuildResult res = build_trajectories(seq.images, seq.fwd, seq.bwd, seq.edges);
  TempDir td("strj_bad");
  std::string p = td.sub("a.strj");
  write_trajectories(res.set, res.attrs, p);
  std::string bytes = testutil::read_file(p);

  {
    std::string corrupt = bytes;
    corrupt[1] = 'X';
    std::ofstream(td.sub("m.strj"), std::ios::binary) << corrupt;
    CHECK_THROWS_AS(read_trajectories(td.sub("m.strj")), FormatError);
  }
  {
    std::ofstream(td.sub("t.strj"), std::ios::binary) << bytes + "xy";
    CHECK_THROWS_AS(read_trajectories(td.sub("t.strj")), FormatError);
  }
  {
    std::string corrupt = bytes;
    corrupt.resize(corrupt.size() - 3);
    std::ofstream(td.sub("s.strj"), std::ios::binary) << corrupt;
    CHECK_THROWS_AS(read_trajectories(td.sub("s.strj")), FormatError);
  }
  {
    // first trajectory's start_frame lives right after the 28-byte header;
    // push it past the frame count
    std::string corrupt = bytes;
    uint32_t bogus = 999;
    std::memcpy(corrupt.data() + 28, &bogus, sizeof bogus);
    std::ofstream(td.sub("r.strj"), std::ios::binary) << corrupt;
    CHECK_THROWS_AS(read_trajectories(td.sub("r.strj")), InvalidDataError);
  }
}

TEST_CASE("label file round trips and rejects corruption") {
  TempDir td("stlb");
  std::vector<uint32_t> labels = testutil::random_labels(997, 40, 2);
  std::string p = td.sub("l.stlb");
  write_labels(labels, p);
  CHECK(read_labels(p) == labels);

  std::string bytes = testutil::read_file(p);
  bytes[0] = 'Q';
  std::ofstream(td.sub("bad.stlb"), std::ios::binary) << bytes;
  CHECK_THROWS_AS(read_labels(td.sub("bad.stlb")), FormatError);
}

TEST_CASE("sobel fallback finds a step edge and matches its serial twin") {
  ImageFrame img(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = x < 16 ? 40.f : 200.f;

  EdgeMap e = sobel_edge_fallback(img);
  EdgeMap es = sobel_edge_fallback_serial(img);
  CHECK(e.data == es.data);

  // strongest response on the two columns astride the step, zero far away
  for (int y = 1; y < 31; ++y) {
    CHECK(e.at(15, y) == 1.0f);
    CHECK(e.at(16, y) == 1.0f);
    CHECK(e.at(4, y) == 0.0f);
  }

  ImageFrame flat(16, 16, 127.f);
  EdgeMap none = sobel_edge_fallback(flat);
  for (float v : none.data) CHECK(v == 0.0f);
}

TEST_CASE("overlay render blackens label boundaries and tints interiors") {
  ImageFrame img(8, 4, 100.f);
  LabelRaster labels(8, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 4; x < 8; ++x) labels.at(x, y) = 2;

  ImageFrame ov = render_overlay(img, labels);
  for (int y = 0; y < 4; ++y) {
    CHECK(ov.at(4, y, 0) == 0.f);  // left-neighbor label change
    CHECK(ov.at(4, y, 1) == 0.f);
    CHECK(ov.at(4, y, 2) == 0.f);
  }
  // interior pixels are a 50/50 mix, never black, and differ across labels
  bool differ = false;
  for (int c = 0; c < 3; ++c) {
    CHECK(ov.at(1, 1, c) > 0.f);
    CHECK(ov.at(6, 1, c) > 0.f);
    differ |= ov.at(1, 1, c) != ov.at(6, 1, c);
  }
  CHECK(differ);

  auto c1 = label_color(7);
  CHECK(label_color(7) == c1);  // stable
  CHECK(label_color(8) != c1);
}

TEST_CASE("avgcolor render of a static scene reproduces the frame") {
  SynthParams sp;
  sp.width = 24;
  sp.height = 18;
  sp.frames = 4;
  sp.motion = {0, 0};
  SyntheticSequence seq = generate_synthetic(sp);
  BuildResult res = build_trajectories(seq.images, seq.fwd, seq.bwd, seq.edges);

  ImageFrame painted = render_avgcolor(res.set, res.attrs.mean_color, 2);
  REQUIRE(painted.width == 24);
  REQUIRE(painted.height == 18);
  // static scene: every trajectory's mean color is its pixel color, so the
  // painting equals the frame up to Lab round-trip rounding
  float max_diff = 0.f;
  for (size_t i = 0; i < painted.data.size(); ++i)
    max_diff = std::max(max_diff, std::abs(painted.data[i] - seq.images[1].data[i]));
  CHECK(max_diff < 0.1f);
}
