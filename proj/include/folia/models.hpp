#pragma once
// Recurrent scenarios at the transversal level.
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "folia/pseudogroup.hpp"

namespace folia {

inline const double kGoldenAlpha = (std::sqrt(5.0) - 1.0) / 2.0;

struct RecurrentScenario {
  std::string name;
  PseudogroupSystem system;
  double a = 0.0;
  Word loop;  // holonomy along the essential loop at a
  int return_budget = 10000;
  double chart_half_width = 0.05;
  std::string description;
  std::vector<std::string> tags;
  std::optional<RecurrenceWitness> recurrence;
  std::string recurrence_kind;  // recurrent | periodic | trivial

  bool has_tag(const std::string& t) const {
    return std::find(tags.begin(), tags.end(), t) != tags.end();
  }
  // chart box J on the transversal, as a lift interval around a
  Interval chart() const {
    double lo = a - chart_half_width, hi = a + chart_half_width;
    if (!system.transversal.is_circle()) lo = std::max(lo, 0.0), hi = std::min(hi, 1.0);
    return {lo, hi};
  }
};

// Checks the scenario invariants; allow_trivial admits generator sets acting as the identity.
inline RecurrentScenario finalize_scenario(RecurrentScenario s, bool allow_trivial = false) {
  auto fa = apply_word(s.system, s.loop, s.a);
  if (!fa.defined() || s.system.transversal.distance(*fa.value, s.a) > 1e-10)
    fail(ErrorKind::Precondition, "scenario " + s.name + ": loop holonomy does not fix a");
  s.recurrence = detect_recurrence(s.system, s.a, s.return_budget, 1e-3);
  if (s.recurrence) {
    s.recurrence_kind = s.recurrence->periodic ? "periodic" : "recurrent";
  } else if (allow_trivial) {
    s.recurrence_kind = "trivial";
  } else {
    fail(ErrorKind::Precondition, "scenario " + s.name + ": no recurrence witness at depth " +
                                      std::to_string(s.return_budget));
  }
  return s;
}

inline bool near_rational(double alpha, int max_den = 1000) {
  for (int q = 1; q <= max_den; ++q)
    if (std::abs(alpha * q - std::round(alpha * q)) < 1e-12) return true;
  return false;
}

inline RecurrentScenario suspension_rotation(double alpha = kGoldenAlpha, double a = 0.0, double w = 0.05) {
  if (!(alpha >= 0.0 && alpha < 1.0)) fail(ErrorKind::Parameter, "alpha must lie in [0, 1)");
  RecurrentScenario s;
  s.name = "suspension";
  auto T = Transversal::circle();
  s.system = {T, {LocalMap::identity(T, "id"), LocalMap::rotation(alpha, "R")}};
  s.a = T.normalize(a);
  s.loop.push({0, 1});
  s.chart_half_width = w;
  s.description = "suspension of rho: Z -> Diff(S^1) with rho(0) = Id, rho(1) = R_alpha";
  s.tags = {"isometric"};
  if (near_rational(alpha)) s.tags.push_back("rational");
  return finalize_scenario(std::move(s), alpha == 0.0);
}

inline RecurrentScenario product_flow(double alpha = kGoldenAlpha, double a = 0.0, double w = 0.05) {
  if (!(alpha >= 0.0 && alpha < 1.0)) fail(ErrorKind::Parameter, "alpha must lie in [0, 1)");
  RecurrentScenario s;
  s.name = "product_flow";
  auto T = Transversal::circle();
  s.system = {T, {LocalMap::rotation(alpha, "R")}};
  s.a = T.normalize(a);
  s.chart_half_width = w;
  s.description = "irrational flow on the torus times [0,1], cylinder removed (metadata only)";
  s.tags = {"isometric", "riemannian", "zero-entropy-expected", "cylinder-removed"};
  if (near_rational(alpha)) s.tags.push_back("rational");
  return finalize_scenario(std::move(s), alpha == 0.0);
}

inline RecurrentScenario reeb_boundary(double w = 0.05) {
  RecurrentScenario s;
  s.name = "reeb";
  auto T = Transversal::interval();
  auto I = Domain::interval(0.0, 1.0);
  s.system = {T,
              {LocalMap::identity(T, "id"),
               LocalMap("h", {{0.0, 1.0}}, affine_map(I, 0.5, 0.0), {{0.0, 0.5}},
                        affine_map(Domain::interval(0.0, 0.5), 2.0, 0.0))}};
  s.a = 0.0;
  s.loop.push({0, 1});
  s.chart_half_width = w;
  s.description = "Reeb component boundary: trivial loop holonomy and a one-sided contraction toward 0";
  s.tags = {"compact-leaf"};
  return finalize_scenario(std::move(s));
}

inline RecurrentScenario scenario_by_name(const std::string& name, double alpha, double a, double w) {
  if (name == "suspension") return suspension_rotation(alpha, a, w);
  if (name == "product_flow") return product_flow(alpha, a, w);
  if (name == "reeb") return reeb_boundary(w);
  fail(ErrorKind::Input, "unknown model '" + name + "'");
}

}  // namespace folia
