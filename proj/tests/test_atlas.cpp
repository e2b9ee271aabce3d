#include <gtest/gtest.h>

#include "folia/atlas.hpp"

using namespace folia;

namespace {
CompactBox kbox(double zlo, double zhi, double xlo = 0.05, double xhi = 0.3, std::string label = "K") {
  return {{{Interval{xlo, xhi}, Interval{0.3, 0.7}, Interval{zlo, zhi}}}, std::move(label)};
}
void expect_cell(const PartitionCell& c, double lo, bool lc, double hi, bool hc) {
  EXPECT_EQ(c.lo, lo);
  EXPECT_EQ(c.hi, hi);
  EXPECT_EQ(c.lo_closed, lc);
  EXPECT_EQ(c.hi_closed, hc);
}
}  // namespace

TEST(Partition, SingleCoveringBox) {
  auto cells = subordinated_partition(default_atlas(), {kbox(0.0, 1.0)});
  ASSERT_EQ(cells.size(), 1u);
  expect_cell(cells[0], 0.0, true, 1.0, true);
}

TEST(Partition, DisjointHeights) {
  auto cells = subordinated_partition(default_atlas(), {kbox(0.0, 0.3), kbox(0.6, 1.0)});
  ASSERT_EQ(cells.size(), 3u);
  expect_cell(cells[0], 0.0, true, 0.3, true);
  expect_cell(cells[1], 0.3, false, 0.6, false);
  expect_cell(cells[2], 0.6, true, 1.0, true);
}

TEST(Partition, OverlappingHeights) {
  auto cells = subordinated_partition(default_atlas(), {kbox(0.0, 0.5), kbox(0.4, 1.0)});
  ASSERT_EQ(cells.size(), 3u);
  expect_cell(cells[0], 0.0, true, 0.4, false);
  expect_cell(cells[1], 0.4, true, 0.5, true);
  expect_cell(cells[2], 0.5, false, 1.0, true);
  EXPECT_EQ(cells[1].inside, (std::vector<bool>{true, true}));
}

TEST(Partition, CellsAreDisjointAndCover) {
  auto cells = subordinated_partition(default_atlas(), {kbox(0.1, 0.45), kbox(0.2, 0.3), kbox(0.5, 0.9)});
  for (int i = 0; i <= 10000; ++i) {
    double z = i / 10000.0;
    int hits = 0;
    for (const auto& c : cells) hits += c.contains(z);
    EXPECT_EQ(hits, 1) << z;
  }
  for (double z : {0.1, 0.2, 0.3, 0.45, 0.5, 0.9}) {
    int hits = 0;
    for (const auto& c : cells) hits += c.contains(z);
    EXPECT_EQ(hits, 1) << z;
  }
}

TEST(Partition, Errors) {
  auto A = default_atlas();
  EXPECT_THROW(subordinated_partition(A, {kbox(0.5, 0.2)}), Error);
  auto B = A;
  B.c2.box.I[2] = {0.0, 0.9};
  EXPECT_THROW(subordinated_partition(B, {kbox(0.1, 0.2)}), Error);
}

TEST(PerturbPlaques, IdentitySlidesGiveIdentity) {
  auto S = build_scene(0.0);
  for (int i = 0; i < 1000; ++i) {
    Point3 p{i / 999.0, 0.25 + 0.5 * ((i * 7) % 1000) / 999.0, ((i * 13) % 1000) / 999.0};
    auto q = S.plaques.psi(p);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(q[k], p[k], 1e-15);
  }
  EXPECT_LE(scene_coherence(S, 2000).residual, 1e-12);
}

TEST(PerturbPlaques, HeightsMoveOnlyInsideActiveCells) {
  auto S = build_scene(1.0);
  double moved = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Point3 p{(i % 100) / 99.0, 0.25 + 0.5 * ((i / 100) % 10) / 9.0, ((i * 37) % 10000) / 9999.0};
    auto q = S.plaques.psi(p);
    EXPECT_EQ(q[0], p[0]);
    EXPECT_EQ(q[1], p[1]);
    bool active = (p[2] >= 0.1 && p[2] <= 0.45) || (p[2] >= 0.5 && p[2] <= 0.9);
    if (!active) {
      EXPECT_NEAR(q[2], p[2], 1e-15) << p[2];
    }
    // stays in its cell
    for (const auto& c : S.cells)
      if (c.contains(p[2])) {
        EXPECT_TRUE(c.contains(q[2]) || std::abs(q[2] - p[2]) < 1e-15);
      }
    moved = std::max(moved, std::abs(q[2] - p[2]));
  }
  EXPECT_GT(moved, 1e-3);
}

TEST(PerturbPlaques, AgreementOnOverlap) {
  auto S = build_scene(1.0);
  EXPECT_LE(overlap_agreement(S.atlas, S.plaques), 1e-10);
  auto bad = build_scene(1.0, 0.9);
  EXPECT_GT(overlap_agreement(bad.atlas, bad.plaques), 1e-3);
}

TEST(PerturbPlaques, PlaquePartitionPreservedOnOverlap) {
  auto S = build_scene(1.0);
  for (int k = 0; k <= 50; ++k) {
    double z = k / 50.0, lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i < 40; ++i) {
      Point3 p{1.0 / 3 + (1.0 / 3) * i / 39.0, 0.25 + 0.5 * ((i * 11) % 40) / 39.0, z};
      double h = S.plaques.psi(p)[2];
      lo = std::min(lo, h), hi = std::max(hi, h);
    }
    EXPECT_LE(hi - lo, 1e-12);
  }
}

TEST(PerturbPlaques, BoundaryMismatchIsGluingError) {
  auto A = default_atlas();
  auto cells = subordinated_partition(A, {kbox(0.1, 0.45)});
  std::vector<WaterSlide> slides;
  for (size_t i = 0; i < cells.size(); ++i) {
    auto f = make_map(Domain::interval(0, 1), [](const Taylor& t) { return 0.9 * t + 0.05; });
    slides.push_back(i == 1 ? slide_from_field(3, 1, 2, [](const std::vector<Taylor>& u) {
      auto o = u;
      o[2] = 0.9 * u[2] + 0.05;
      return o;
    }) : build_water_slide(identity_map(Domain::interval(0, 1))));
    (void)f;
  }
  try {
    perturb_plaques(A, cells, slides);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Gluing);
    EXPECT_NE(std::string(e.what()).find("0.1"), std::string::npos);
  }
  EXPECT_NO_THROW(perturb_plaques(A, cells, slides, false));
  EXPECT_THROW(perturb_plaques(A, cells, {}), Error);
}

TEST(ExtendToBoxes, Cases) {
  auto S = build_scene(1.0);
  ASSERT_EQ(S.box_maps.size(), 2u);
  EXPECT_EQ(S.box_maps[0].kase, "i");
  EXPECT_EQ(S.box_maps[1].kase, "ii");
  std::vector<CompactBox> ks{{{{Interval{0.1, 0.2}, Interval{0.8, 0.9}, Interval{0.1, 0.2}}}, "out"},
                             {{{Interval{0.4, 0.6}, Interval{0.3, 0.7}, Interval{0.2, 0.3}}}, "mid"}};
  auto maps = extend_to_boxes(S.atlas, S.plaques, ks);
  EXPECT_EQ(maps[0].kase, "iii");
  EXPECT_EQ(maps[1].kase, "iv");
  Point3 p{0.15, 0.85, 0.15};
  EXPECT_EQ(maps[0].map(p), p);
  Point3 q{0.5, 0.5, 0.35};
  EXPECT_EQ(maps[1].map(q), S.plaques.psi(q));
  // case (i): identity on the part of K outside U
  std::vector<CompactBox> sticking{{{{Interval{0.05, 0.3}, Interval{0.6, 0.9}, Interval{0.1, 0.45}}}, "edge"}};
  auto m = extend_to_boxes(S.atlas, S.plaques, sticking);
  EXPECT_EQ(m[0].kase, "i");
  Point3 r{0.2, 0.85, 0.3};
  EXPECT_EQ(m[0].map(r), r);
  std::vector<CompactBox> both{{{{Interval{0.1, 0.9}, Interval{0.3, 0.7}, Interval{0.2, 0.3}}}, "wide"}};
  EXPECT_THROW(extend_to_boxes(S.atlas, S.plaques, both), Error);
}

TEST(Coherence, DemoIsTriangularAndMismatchIsFlagged) {
  auto S = build_scene(1.0);
  auto rep = scene_coherence(S);
  EXPECT_EQ(rep.samples, 10000u);
  EXPECT_LE(rep.residual, 1e-8);
  EXPECT_FALSE(rep.flagged);
  auto bad = build_scene(1.0, 0.9);
  auto r2 = scene_coherence(bad);
  EXPECT_GT(r2.residual, 1e-3);
  EXPECT_TRUE(r2.flagged);
}
