#include <gtest/gtest.h>

#include "folia/entropy.hpp"
#include "folia/models.hpp"

using namespace folia;

namespace {
// x/2 and (x+1)/2 on [0,1]; their inverses double each half
PseudogroupSystem ping_pong() {
  auto I = Domain::interval(0.0, 1.0);
  return {Transversal::interval(),
          {LocalMap::monotone("f0", {0.0, 1.0}, affine_map(I, 0.5, 0.0)),
           LocalMap::monotone("f1", {0.0, 1.0}, affine_map(I, 0.5, 0.5))}};
}
PseudogroupSystem rotation(double a) { return {Transversal::circle(), {LocalMap::rotation(a)}}; }
}  // namespace

TEST(SeparatedCount, IdentityIsStaticNet) {
  PseudogroupSystem S{Transversal::interval(), {LocalMap::identity(Transversal::interval())}};
  for (int n : {1, 3, 7}) {
    EXPECT_EQ(separated_count(S, {n, 1.0 / 8, 8}), 9);
    EXPECT_EQ(separated_count(S, {n, 1.0 / 8, 4096}), 9);
  }
  EXPECT_THROW(separated_count(S, {0, 0.1, 16}), Error);
  EXPECT_THROW(separated_count(S, {1, 0.0, 16}), Error);
  EXPECT_THROW(separated_count(S, {1, 0.1, 1}), Error);
}

TEST(SeparatedCount, RotationIsIsometric) {
  auto S = rotation(kGoldenAlpha);
  int s1 = separated_count_bruteforce(S, {1, 1.0 / 64, 4096});
  EXPECT_EQ(s1, 64);
  for (int n = 1; n <= 10; ++n) {
    EXPECT_EQ(separated_count_bruteforce(S, {n, 1.0 / 64, 4096}), s1);
    EXPECT_EQ(separated_count(S, {n, 1.0 / 64, 4096}), s1);
  }
}

TEST(SeparatedCount, PingPongGrowsExponentially) {
  auto S = ping_pong();
  for (int n = 1; n <= 8; ++n) EXPECT_GE(separated_count(S, {n, 1.0 / 16, 1 << 13}), 1 << std::max(0, n - 3));
}

TEST(SeparatedCount, PrunedSearchMatchesOracle) {
  auto P = ping_pong();
  for (int n = 1; n <= 5; ++n)
    EXPECT_EQ(separated_count(P, {n, 1.0 / 16, 256}), separated_count_bruteforce(P, {n, 1.0 / 16, 256})) << n;
  // a nonlinear circle map beside a rotation
  auto C = Domain::circle();
  auto f = make_map(C, [](const Taylor& t) { return t + 0.1 * sin(6.283185307179586 * t) / 6.283185307179586; }, true);
  PseudogroupSystem S{Transversal::circle(), {LocalMap("f", {{0, 1}}, f, {{0, 1}}, make_map(C, [f](const Taylor& t) {
                                                 double x = t.value();
                                                 for (int i = 0; i < 80; ++i) x -= (f(x) - t.value()) / f.derivative(x);
                                                 return Taylor(x, t.order());
                                               })),
                                               LocalMap::rotation(kGoldenAlpha)}};
  for (int n = 1; n <= 4; ++n)
    EXPECT_EQ(separated_count(S, {n, 1.0 / 32, 128}), separated_count_bruteforce(S, {n, 1.0 / 32, 128})) << n;
}

TEST(SeparatedCount, MonotoneInNAndEps) {
  auto S = ping_pong();
  int prev = 0;
  for (int n = 1; n <= 7; ++n) {
    int s = separated_count(S, {n, 1.0 / 16, 2048});
    EXPECT_GE(s, prev);
    prev = s;
  }
  int coarse = separated_count(S, {5, 1.0 / 8, 2048}), fine = separated_count(S, {5, 1.0 / 32, 2048});
  EXPECT_LE(coarse, separated_count(S, {5, 1.0 / 16, 2048}));
  EXPECT_GE(fine, separated_count(S, {5, 1.0 / 16, 2048}));
}

TEST(SeparatedCount, BudgetError) {
  try {
    separated_count(ping_pong(), {8, 1.0 / 16, 1024}, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BudgetExceeded);
    EXPECT_NE(std::string(e.what()).find("100"), std::string::npos);
  }
}

TEST(EntropyEstimate, Slopes) {
  PseudogroupSystem id{Transversal::circle(), {LocalMap::identity(Transversal::circle())}};
  EXPECT_EQ(entropy_estimate(id, 6, {1.0 / 16}, 256).slope(1.0 / 16), 0.0);
  auto rc = entropy_estimate(rotation(kGoldenAlpha), 12, {1.0 / 64}, 4096);
  EXPECT_LE(rc.slope(1.0 / 64), 0.01);
  EXPECT_EQ(rc.rows.size(), 12u);
  auto pc = entropy_estimate(ping_pong(), 8, {1.0 / 16}, 1 << 14);
  EXPECT_GE(pc.slope(1.0 / 16), 0.8 * std::log(2.0));
  EXPECT_LE(pc.slope(1.0 / 16), 1.2 * std::log(2.0));
  EXPECT_THROW(entropy_estimate(id, 1, {0.1}), Error);
}

TEST(EntropyEstimate, UpperHalfSlope) {
  EXPECT_NEAR(upper_half_slope({1, 2, 4, 8, 16, 32}), std::log(2.0), 1e-12);
  EXPECT_EQ(upper_half_slope({5, 5, 5, 5}), 0.0);
}

TEST(Hurder, Verdicts) {
  auto R = rotation(kGoldenAlpha);
  auto same = hurder_report(R, false, R, false, 4, 1.0 / 16, 256);
  EXPECT_EQ(same.before_slope, same.after_slope);
  EXPECT_EQ(same.verdict, "consistent-trivially");
  auto coarse = hurder_report(R, false, R, true, 2, 1.0 / 16, 256);
  EXPECT_EQ(coarse.verdict, "scale too coarse");
  auto up = hurder_report(R, false, ping_pong(), true, 6, 1.0 / 16, 1024);
  EXPECT_EQ(up.verdict, "consistent");
  EXPECT_NE(up.note.find("not a verification"), std::string::npos);
}
