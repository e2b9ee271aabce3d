#pragma once
// Toy m = 3, q = 1 atlas: two overlapping rectangular charts with horizontal plaques, subordinated
// partitions of the height range, per-cell slides glued into psi, box extensions and coherence checks.
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "folia/errors.hpp"
#include "folia/pseudogroup.hpp"
#include "folia/waterslide.hpp"

namespace folia {

using Point3 = std::array<double, 3>;  // (x, y, z); z is the transverse height
using Map3 = std::function<Point3(const Point3&)>;

struct Box3 {
  std::array<Interval, 3> I;
  bool valid() const { return I[0].lo <= I[0].hi && I[1].lo <= I[1].hi && I[2].lo <= I[2].hi; }
  bool contains(const Point3& p) const { return I[0].contains(p[0]) && I[1].contains(p[1]) && I[2].contains(p[2]); }
  bool meets(const Box3& o) const {
    for (int k = 0; k < 3; ++k)
      if (I[k].hi < o.I[k].lo || o.I[k].hi < I[k].lo) return false;
    return true;
  }
  bool inside(const Box3& o) const {
    for (int k = 0; k < 3; ++k)
      if (I[k].lo < o.I[k].lo || I[k].hi > o.I[k].hi) return false;
    return true;
  }
};

struct RectChart {
  Box3 box;
  Point3 to_unit(const Point3& p) const {
    Point3 u;
    for (int k = 0; k < 3; ++k) u[k] = (p[k] - box.I[k].lo) / (box.I[k].hi - box.I[k].lo);
    return u;
  }
  Point3 from_unit(const Point3& u) const {
    Point3 p;
    for (int k = 0; k < 3; ++k) p[k] = box.I[k].lo + u[k] * (box.I[k].hi - box.I[k].lo);
    return p;
  }
};

struct CompactBox {
  Box3 box;
  std::string label;
};

struct PartitionCell {
  double lo, hi;
  bool lo_closed, hi_closed;
  std::vector<bool> inside;  // per K: cell lies in the saturation kappa_j
  bool contains(double z) const {
    return (z > lo || (lo_closed && z == lo)) && (z < hi || (hi_closed && z == hi));
  }
};

struct ToyAtlas {
  RectChart c1, c2;
  double o1_hi = 1.0 / 3.0;  // O1 = {x < o1_hi}
  double o2_lo = 2.0 / 3.0;  // O2 = {x > o2_lo}
  Box3 union_box() const {
    Box3 u = c1.box;
    for (int k = 0; k < 3; ++k) u.I[k] = {std::min(c1.box.I[k].lo, c2.box.I[k].lo), std::max(c1.box.I[k].hi, c2.box.I[k].hi)};
    return u;
  }
  Box3 overlap() const {
    Box3 o;
    for (int k = 0; k < 3; ++k) o.I[k] = {std::max(c1.box.I[k].lo, c2.box.I[k].lo), std::min(c1.box.I[k].hi, c2.box.I[k].hi)};
    return o;
  }
};

inline ToyAtlas default_atlas() {
  ToyAtlas A;
  A.c1.box = {{Interval{0.0, 2.0 / 3.0}, Interval{0.25, 0.75}, Interval{0.0, 1.0}}};
  A.c2.box = {{Interval{1.0 / 3.0, 1.0}, Interval{0.25, 0.75}, Interval{0.0, 1.0}}};
  return A;
}

// ---- subordinated partition --------------------------------------------------------

inline std::vector<PartitionCell> subordinated_partition(const ToyAtlas& A, const std::vector<CompactBox>& Ks) {
  const auto h1 = A.c1.box.I[2], h2 = A.c2.box.I[2];
  if (h1.lo != h2.lo || h1.hi != h2.hi) fail(ErrorKind::Input, "charts do not share the height coordinate");
  if (!A.c1.box.meets(A.c2.box)) fail(ErrorKind::Input, "charts do not overlap");
  const Box3 V = A.union_box();
  // plaque saturation of K_j inside V: its height interval, clipped
  std::vector<std::optional<Interval>> kappa;
  for (const auto& K : Ks) {
    if (!K.box.valid()) fail(ErrorKind::Input, "box " + K.label + " has no rectangular chart image");
    if (!K.box.meets(V)) {
      kappa.push_back(std::nullopt);
      continue;
    }
    kappa.push_back(Interval{std::max(K.box.I[2].lo, h1.lo), std::min(K.box.I[2].hi, h1.hi)});
  }
  std::vector<double> e{h1.lo, h1.hi};
  for (const auto& k : kappa)
    if (k) e.push_back(k->lo), e.push_back(k->hi);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  auto member = [&](double z) {
    std::vector<bool> m;
    for (const auto& k : kappa) m.push_back(k && k->contains(z));
    return m;
  };
  // elementary pieces: each endpoint, then each open gap; merge runs with equal membership
  std::vector<PartitionCell> cells;
  auto add = [&](double lo, double hi, bool lc, bool hc, std::vector<bool> m) {
    if (!cells.empty() && cells.back().inside == m && cells.back().hi == lo && (cells.back().hi_closed != lc)) {
      cells.back().hi = hi, cells.back().hi_closed = hc;
      return;
    }
    cells.push_back({lo, hi, lc, hc, std::move(m)});
  };
  for (size_t i = 0; i < e.size(); ++i) {
    add(e[i], e[i], true, true, member(e[i]));
    if (i + 1 < e.size()) add(e[i], e[i + 1], false, false, member(0.5 * (e[i] + e[i + 1])));
  }
  return cells;
}

// ---- glued perturbation psi --------------------------------------------------------------

struct PlaqueMap {
  Map3 psi1;  // on chart 1: phi_1^{-1} o xi o phi_1
  Map3 psi2;  // on chart 2: height read off psi_1 along the plaque, placed on tau(p)
  Map3 psi;   // on U
  double split_x;  // psi = psi1 for x <= split_x, psi2 beyond
};

// combined slide xi on chart-1 unit coordinates: each cell's slide acts on its height interval
inline double cell_height(const std::vector<PartitionCell>& cells, const std::vector<WaterSlide>& slides, double t,
                          double c, double h) {
  for (size_t i = 0; i < cells.size(); ++i) {
    const auto& C = cells[i];
    if (!C.contains(h) || C.hi == C.lo) continue;
    double s = (h - C.lo) / (C.hi - C.lo);
    double out = slides[i]({t, c, s})[2];
    return C.lo + (C.hi - C.lo) * out;
  }
  return h;
}

inline PlaqueMap perturb_plaques(const ToyAtlas& A, const std::vector<PartitionCell>& cells,
                                 const std::vector<WaterSlide>& slides, bool check = true) {
  if (slides.size() != cells.size()) fail(ErrorKind::Parameter, "need one slide per partition cell");
  for (const auto& s : slides)
    if (s.m != 3) fail(ErrorKind::Parameter, "toy atlas slides must have m = 3");
  if (check) {
    for (size_t i = 0; i < cells.size(); ++i) {
      const auto& C = cells[i];
      if (C.hi == C.lo) continue;
      for (int k = 0; k <= 16; ++k) {
        double t = k / 16.0;
        for (double c : {0.0, 0.5, 1.0}) {
          double lo = slides[i]({t, c, 0.0})[2], hi = slides[i]({t, c, 1.0})[2];
          if (std::abs(lo) > 1e-12) fail(ErrorKind::Gluing, "slide moves the cell boundary height " + std::to_string(C.lo));
          if (std::abs(hi - 1.0) > 1e-12) fail(ErrorKind::Gluing, "slide moves the cell boundary height " + std::to_string(C.hi));
        }
      }
    }
  }
  PlaqueMap P;
  auto c1 = A.c1;
  P.psi1 = [c1, cells, slides](const Point3& p) {
    Point3 u = c1.to_unit(p);
    u[2] = cell_height(cells, slides, u[0], u[1], u[2]);
    return Point3{p[0], p[1], c1.from_unit(u)[2]};
  };
  // reference point of the plaque Q(p) inside chart 1: middle of the overlap
  const auto ov = A.overlap();
  const double xref = 0.5 * (ov.I[0].lo + ov.I[0].hi);
  auto psi1 = P.psi1;
  P.psi2 = [psi1, xref](const Point3& p) { return Point3{p[0], p[1], psi1({xref, p[1], p[2]})[2]}; };
  P.split_x = A.c1.box.I[0].hi;
  auto psi2 = P.psi2;
  double split = P.split_x;
  P.psi = [psi1, psi2, split](const Point3& p) { return p[0] <= split ? psi1(p) : psi2(p); };
  return P;
}

inline double overlap_agreement(const ToyAtlas& A, const PlaqueMap& P, int per_axis = 22) {
  auto ov = A.overlap();
  double worst = 0.0;
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j)
      for (int k = 0; k < per_axis; ++k) {
        Point3 p{ov.I[0].lo + (ov.I[0].hi - ov.I[0].lo) * i / (per_axis - 1),
                 ov.I[1].lo + (ov.I[1].hi - ov.I[1].lo) * j / (per_axis - 1),
                 ov.I[2].lo + (ov.I[2].hi - ov.I[2].lo) * k / (per_axis - 1)};
        auto a = P.psi1(p), b = P.psi2(p);
        for (int d = 0; d < 3; ++d) worst = std::max(worst, std::abs(a[d] - b[d]));
      }
  return worst;
}

// ---- extension to the boxes K -----------------------------------------------------------------

struct BoxMap {
  std::string label;
  std::string kase;  // "i" | "ii" | "iii" | "iv"
  Box3 box;
  Map3 map;
};

inline std::vector<BoxMap> extend_to_boxes(const ToyAtlas& A, const PlaqueMap& P, const std::vector<CompactBox>& Ks) {
  const Box3 U = A.union_box();
  std::vector<BoxMap> out;
  auto id = [](const Point3& p) { return p; };
  for (const auto& K : Ks) {
    bool in_o1 = K.box.meets(U) && K.box.I[0].lo < A.o1_hi;
    bool in_o2 = K.box.meets(U) && K.box.I[0].hi > A.o2_lo;
    if (in_o1 && in_o2) fail(ErrorKind::Precondition, "box " + K.label + " meets both O1 and O2");
    BoxMap b{K.label, "", K.box, id};
    auto psi = P.psi;
    auto psi2 = P.psi2;
    if (!K.box.meets(U)) {
      b.kase = "iii";
    } else if (in_o1) {
      b.kase = "i";
      b.map = [psi, U](const Point3& p) { return U.contains(p) ? psi(p) : p; };
    } else if (in_o2) {
      // plaque-chain retraction: move along tau(p) to the plaque, keep (x, y)
      b.kase = "ii";
      b.map = [psi2, U](const Point3& p) { return U.contains(p) ? psi2(p) : p; };
    } else {
      b.kase = "iv";
      b.map = psi;
    }
    out.push_back(b);
  }
  return out;
}

// ---- coherence -------------------------------------------------------------------------------

// psi of the form (x, y, H(x, y, z)) with H increasing in z: invert by bisection on z
inline Point3 invert_plaque_map(const Map3& f, const Point3& q, double zlo = 0.0, double zhi = 1.0) {
  double lo = zlo, hi = zhi;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (f({q[0], q[1], mid})[2] < q[2] ? lo : hi) = mid;
  }
  double a = f({q[0], q[1], lo})[2], b = f({q[0], q[1], hi})[2];
  return {q[0], q[1], std::abs(a - q[2]) <= std::abs(b - q[2]) ? lo : hi};
}

struct CoherenceReport {
  double residual = 0.0;  // max |d g_3 / d u_1|, |d g_3 / d u_2| over the overlap samples
  size_t samples = 0;
  bool flagged = false;
  double threshold = 1e-8;
};

// transition g = omega_2 o omega_1^{-1}, omega_l = phi_l o psi_{K_l}^{-1}
inline CoherenceReport coherence_check(const ToyAtlas& A, const Map3& psiK1, const Map3& psiK2, int samples = 10000,
                                       double fd_step = 1e-5) {
  CoherenceReport rep;
  auto ov = A.overlap();
  auto g = [&](const Point3& u) {
    Point3 p = psiK1(A.c1.from_unit(u));
    Point3 q = invert_plaque_map(psiK2, p, A.c2.box.I[2].lo, A.c2.box.I[2].hi);
    return A.c2.to_unit(q);
  };
  Point3 lo1 = A.c1.to_unit({ov.I[0].lo, ov.I[1].lo, ov.I[2].lo});
  Point3 hi1 = A.c1.to_unit({ov.I[0].hi, ov.I[1].hi, ov.I[2].hi});
  for (int s = 0; s < samples; ++s) {
    // Halton points in the overlap, a margin of 2 steps from its faces
    auto halton = [](int i, int b) {
      double f = 1.0, r = 0.0;
      for (; i > 0; i /= b) f /= b, r += f * (i % b);
      return r;
    };
    Point3 u;
    int bases[3] = {2, 3, 5};
    for (int k = 0; k < 3; ++k) {
      double m = 2.0 * fd_step;
      u[k] = lo1[k] + m + (hi1[k] - lo1[k] - 2 * m) * halton(s + 1, bases[k]);
    }
    for (int k = 0; k < 2; ++k) {
      Point3 a = u, b = u;
      a[k] += fd_step, b[k] -= fd_step;
      double d = (g(a)[2] - g(b)[2]) / (2.0 * fd_step);
      rep.residual = std::max(rep.residual, std::abs(d));
    }
    ++rep.samples;
  }
  rep.flagged = rep.residual > rep.threshold;
  return rep;
}

// ---- shipped scenes ------------------------------------------------------------------------------

struct AtlasScene {
  ToyAtlas atlas;
  std::vector<CompactBox> boxes;
  std::vector<PartitionCell> cells;
  std::vector<WaterSlide> slides;
  PlaqueMap plaques;
  std::vector<BoxMap> box_maps;
};

inline SmoothMap1D cell_profile(double amplitude) {
  return monotone_mollify({{0.3, 0.3 - 0.1 * amplitude}, {0.5, 0.5}, {0.7, 0.7 + 0.08 * amplitude}}, 0.0, 1.0);
}

// blend_end: chart-1 unit time at which the slide blend is finished; past the overlap start (0.5) the
// slide still varies along plaques inside the overlap and the atlas is not coherent.
inline AtlasScene build_scene(double amplitude = 1.0, double blend_end = 0.45, bool check = true) {
  AtlasScene S;
  S.atlas = default_atlas();
  S.boxes = {{{{Interval{0.05, 0.3}, Interval{0.3, 0.7}, Interval{0.1, 0.45}}}, "K1"},
             {{{Interval{0.7, 0.95}, Interval{0.3, 0.7}, Interval{0.5, 0.9}}}, "K2"}};
  S.cells = subordinated_partition(S.atlas, S.boxes);
  auto blend = make_bump(0.1, blend_end, 1.0);
  for (const auto& C : S.cells) {
    bool active = std::any_of(C.inside.begin(), C.inside.end(), [](bool b) { return b; }) && C.hi > C.lo;
    auto prof = active && amplitude != 0.0 ? cell_profile(amplitude) : identity_map(Domain::interval(0.0, 1.0));
    S.slides.push_back(build_water_slide(prof, 3, 1, 2, blend));
  }
  S.plaques = perturb_plaques(S.atlas, S.cells, S.slides, check);
  S.box_maps = extend_to_boxes(S.atlas, S.plaques, S.boxes);
  return S;
}

inline CoherenceReport scene_coherence(const AtlasScene& S, int samples = 10000) {
  return coherence_check(S.atlas, S.box_maps.at(0).map, S.box_maps.at(1).map, samples);
}

}  // namespace folia
