#include <gtest/gtest.h>

#include "folia/models.hpp"

using namespace folia;

TEST(Suspension, GoldenIsRecurrentNotResilient) {
  auto s = suspension_rotation();
  ASSERT_TRUE(s.recurrence);
  EXPECT_EQ(s.recurrence_kind, "recurrent");
  EXPECT_LE(s.recurrence->distance, 1e-3);
  EXPECT_EQ(*apply_word(s.system, s.loop, s.a).value, s.a);
  ResilienceSearch P;
  EXPECT_FALSE(detect_resilience(s.system, P));
}

TEST(Suspension, ZeroAngleIsTrivial) {
  auto s = suspension_rotation(0.0);
  EXPECT_EQ(s.recurrence_kind, "trivial");
  EXPECT_TRUE(s.has_tag("rational"));
}

TEST(Suspension, GeneratorsAreRigidRotations) {
  auto s = suspension_rotation(0.3);
  auto C = Domain::circle();
  EXPECT_EQ(cr_distance(s.system.gens[0].forward(), affine_map(C, 1.0, 0.0), 3, 64), 0.0);
  EXPECT_EQ(cr_distance(s.system.gens[1].forward(), affine_map(C, 1.0, 0.3), 3, 64), 0.0);
  EXPECT_THROW(suspension_rotation(1.0), Error);
}

TEST(ProductFlow, RationalIsFlaggedWithFiniteOrbit) {
  auto s = product_flow(0.5);
  EXPECT_TRUE(s.has_tag("rational"));
  EXPECT_EQ(s.recurrence_kind, "periodic");
  EXPECT_EQ(orbit(s.system, s.a, 50).size(), 2u);
  auto g = product_flow();
  EXPECT_FALSE(g.has_tag("rational"));
  EXPECT_TRUE(g.has_tag("riemannian"));
  EXPECT_TRUE(g.loop.empty());
  ResilienceSearch P;
  EXPECT_FALSE(detect_resilience(g.system, P));
}

TEST(Reeb, TrivialLoopAndContraction) {
  auto s = reeb_boundary();
  EXPECT_EQ(*apply_word(s.system, s.loop, 0.0).value, 0.0);
  Word h20;
  h20.push({1, 20});
  EXPECT_LE(*apply_word(s.system, h20, 0.5).value, 1e-6);
  EXPECT_EQ(orbit(s.system, 0.0, 10).size(), 1u);
  ResilienceSearch P;
  P.depth = 6;
  EXPECT_FALSE(detect_resilience(s.system, P));
  EXPECT_EQ(s.chart().lo, 0.0);
}

TEST(Scenarios, InvariantCheckedEagerly) {
  RecurrentScenario s;
  s.name = "broken";
  s.system = {Transversal::circle(), {LocalMap::rotation(0.1)}};
  s.loop.push({0, 1});  // R moves a: not a loop holonomy at a
  EXPECT_THROW(finalize_scenario(s), Error);
  EXPECT_THROW(scenario_by_name("nope", 0.1, 0, 0.05), Error);
}
