#include <gtest/gtest.h>

#include <set>

#include "folia/pseudogroup.hpp"

using namespace folia;

namespace {
const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

PseudogroupSystem rotation_system(double alpha) {
  return {Transversal::circle(), {LocalMap::rotation(alpha)}};
}

PseudogroupSystem halving_system() {
  auto I = Domain::interval(0.0, 1.0);
  return {Transversal::interval(), {LocalMap::monotone("g", {0.0, 1.0}, affine_map(I, 0.5, 0.0))}};
}

// circle map with an attracting fixed point at 0 plus an irrational rotation
PseudogroupSystem contraction_plus_rotation() {
  auto C = Domain::circle();
  auto f = make_map(C, [](const Taylor& t) { return t - 0.02 * sin(6.283185307179586 * t); }, true);
  auto finv = make_map(C, [f](const Taylor& t) {
    // Newton inverse of an increasing circle lift
    double y = t.value(), x = y;
    for (int i = 0; i < 60; ++i) x -= (f(x) - y) / f.derivative(x);
    int n = t.order();
    Taylor g = Taylor::variable(x, n), target = Taylor::variable(y, n);
    double s = f.derivative(x);
    for (int i = 0; i <= n; ++i) g -= (f(g) - target) / s;
    g[0] = x;
    std::vector<double> d(n + 1);
    for (int k = 0; k <= n; ++k) d[k] = g.derivative(k);
    return t.compose_derivatives(d);
  });
  return {Transversal::circle(),
          {LocalMap("f", {{0, 1}}, f, {{0, 1}}, finv), LocalMap::rotation(kGolden)}};
}
}  // namespace

TEST(ApplyWord, Examples) {
  auto S = rotation_system(0.25);
  EXPECT_EQ(*apply_word(S, Word{}, 0.3).value, 0.3);
  Word r;
  r.push({0, 1});
  EXPECT_DOUBLE_EQ(*apply_word(S, r, 0.25).value, 0.5);
  auto H = halving_system();
  Word gg;
  gg.push({0, 1}).push({0, 1});
  EXPECT_EQ(gg.letters.size(), 1u);
  EXPECT_EQ(gg.length(), 2u);
  EXPECT_DOUBLE_EQ(*apply_word(H, gg, 0.8).value, 0.2);
}

TEST(ApplyWord, DomainExitReportsPrefix) {
  auto H = halving_system();
  Word w;
  w.push({0, -1}).push({0, -1});  // inverse branch 2x is defined on [0, 1/2]
  auto ok = apply_word(H, w, 0.2);
  ASSERT_TRUE(ok.defined());
  EXPECT_DOUBLE_EQ(*ok.value, 0.8);
  auto r1 = apply_word(H, w, 0.4);
  EXPECT_FALSE(r1.defined());
  EXPECT_EQ(r1.failed_prefix, 1u);
  auto r0 = apply_word(H, w, 0.8);
  EXPECT_FALSE(r0.defined());
  EXPECT_EQ(r0.failed_prefix, 0u);
}

TEST(ApplyWord, WordTimesInverseIsIdentity) {
  auto S = contraction_plus_rotation();
  Word w;
  w.push({0, 1}).push({1, 2}).push({0, -1}).push({1, 1}).push({0, 3});
  Word ww = w;
  for (const auto& l : w.inverse().letters) ww.letters.push_back(l);
  for (double x : {0.0, 0.1, 0.37, 0.8, 0.999}) {
    auto r = apply_word(S, ww, x);
    ASSERT_TRUE(r.defined());
    EXPECT_LE(S.transversal.distance(*r.value, x), 1e-10);
  }
}

TEST(Orbit, IdentityOnly) {
  PseudogroupSystem S{Transversal::circle(), {LocalMap::identity(Transversal::circle())}};
  auto o = orbit(S, 0.3, 5);
  ASSERT_EQ(o.size(), 1u);
  EXPECT_EQ(o[0], 0.3);
}

TEST(Orbit, IrrationalRotationCountsAgainstDirectEnumeration) {
  auto S = rotation_system(kGolden);
  for (int n = 0; n <= 10; ++n) {
    auto o = orbit(S, 0.1, n);
    EXPECT_EQ(o.size(), static_cast<size_t>(2 * n + 1));
    std::set<long long> direct;
    for (int k = -n; k <= n; ++k) direct.insert(std::llround(S.transversal.normalize(0.1 + k * kGolden) * 1e9));
    std::set<long long> got;
    for (double p : o) got.insert(std::llround(p * 1e9));
    EXPECT_EQ(direct, got);
  }
  // listing the inverse as a generator does not change the orbit
  PseudogroupSystem S2{Transversal::circle(), {LocalMap::rotation(kGolden), LocalMap::rotation(-kGolden, "Rinv")}};
  EXPECT_EQ(orbit(S2, 0.1, 6).size(), 13u);
}

TEST(Orbit, PeriodFour) {
  auto o = orbit(rotation_system(0.25), 0.0, 4);
  std::sort(o.begin(), o.end());
  ASSERT_EQ(o.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(o[i], 0.25 * i, 1e-15);
}

TEST(Orbit, MonotoneInDepthAndBudget) {
  auto S = contraction_plus_rotation();
  auto small = orbit(S, 0.2, 3), big = orbit(S, 0.2, 4);
  std::set<long long> b;
  for (double p : big) b.insert(std::llround(p * 1e12));
  for (double p : small) EXPECT_TRUE(b.count(std::llround(p * 1e12)));
  try {
    orbit(S, 0.2, 20, SearchLimits{100, 1e-12});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BudgetExceeded);
    EXPECT_NE(std::string(e.what()).find("100"), std::string::npos);
  }
}

TEST(Recurrence, GoldenRotationMatchesArgmin) {
  auto S = rotation_system(kGolden);
  auto w = detect_recurrence(S, 0.0, 10000, 1e-3);
  ASSERT_TRUE(w.has_value());
  EXPECT_LE(w->distance, 1e-3);
  EXPECT_FALSE(w->periodic);
  // brute force over k = 1..1e4 in both directions
  double best = 1.0;
  double x = 0.0, y = 0.0;
  for (int k = 1; k <= 10000; ++k) {
    x = S.transversal.normalize(x + kGolden);
    y = S.transversal.normalize(y - kGolden);
    best = std::min({best, S.transversal.distance(x, 0.0), S.transversal.distance(y, 0.0)});
  }
  EXPECT_NEAR(w->distance, best, 1e-9);
  ASSERT_EQ(w->word.letters.size(), 1u);
  int k = std::abs(w->word.letters[0].power);
  const std::set<int> fib{1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987, 1597, 2584, 4181, 6765};
  EXPECT_TRUE(fib.count(k)) << k;
}

TEST(Recurrence, BestDistanceNonincreasingInDepth) {
  auto S = rotation_system(kGolden);
  double prev = 1.0;
  for (int d : {10, 50, 100, 500, 1000}) {
    auto w = detect_recurrence(S, 0.3, d, 0.5);
    ASSERT_TRUE(w);
    EXPECT_LE(w->distance, prev);
    prev = w->distance;
  }
}

TEST(Recurrence, PeriodThreeExactReturn) {
  auto w = detect_recurrence(rotation_system(1.0 / 3.0), 0.0, 10, 1e-6);
  ASSERT_TRUE(w);
  EXPECT_EQ(w->word.length(), 3u);
  EXPECT_LE(w->distance, 1e-12);
  EXPECT_TRUE(w->periodic);
}

TEST(Recurrence, IdentityOnlyHasNone) {
  PseudogroupSystem S{Transversal::circle(), {LocalMap::identity(Transversal::circle())}};
  EXPECT_FALSE(detect_recurrence(S, 0.4, 10, 1e-3));
  // a non-flagged generator that acts as the identity is excluded by the neighbourhood check
  EXPECT_FALSE(detect_recurrence(rotation_system(0.0), 0.4, 10, 1e-3));
  EXPECT_THROW(detect_recurrence(S, 0.4, 10, 0.0), Error);
}

TEST(Resilience, IrrationalRotationHasNone) {
  ResilienceSearch P;
  P.depth = 12;
  EXPECT_FALSE(detect_resilience(rotation_system(kGolden), P));
}

TEST(Resilience, HalvingAloneHasNone) {
  ResilienceSearch P;
  P.depth = 6;
  EXPECT_FALSE(detect_resilience(halving_system(), P));
}

TEST(Resilience, ContractionWithRotationIsCertifiedAndReverifies) {
  auto S = contraction_plus_rotation();
  ResilienceSearch P;
  P.depth = 6;
  P.return_depth = 2000;
  P.converge_tol = 1e-6;
  auto c = detect_resilience(S, P);
  ASSERT_TRUE(c);
  EXPECT_LE(S.transversal.distance(c->x, 0.0), 1e-10);
  EXPECT_LT(std::abs(c->derivative), 1.0);
  EXPECT_GT(S.transversal.distance(c->x, c->y), 0.0);
  EXPECT_LE(c->distances.back(), 1e-6);
  auto v = verify_certificate(S, *c, P.converge_tol);
  EXPECT_TRUE(v.ok) << v.check << " " << v.residual;
  auto bad = *c;
  bad.x += 1e-3;
  auto v2 = verify_certificate(S, bad, P.converge_tol);
  EXPECT_FALSE(v2.ok);
  EXPECT_EQ(v2.check, "fixed point |h(x) - x|");
  bad = *c;
  bad.distances[1] *= 1.01;
  EXPECT_FALSE(verify_certificate(S, bad, P.converge_tol).ok);
}

TEST(Resilience, ParameterValidation) {
  ResilienceSearch P;
  P.depth = 0;
  EXPECT_THROW(detect_resilience(rotation_system(kGolden), P), Error);
}
