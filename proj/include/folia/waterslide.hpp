#pragma once
// Water slide box maps: build from a height profile and a bump blend, validate conditions (a)-(d).
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "folia/jetcalc.hpp"

namespace folia {

// Coordinates are ordered (t, c_1..c_{p-1}, y_1..y_{q-1}, x): the slide direction t comes first so the
// entry/exit faces are {t = 0} and {t = 1}; the profile acts on the last coordinate x.
struct WaterSlide {
  using Field = std::function<std::vector<Taylor>(const std::vector<Taylor>&)>;
  int m = 3;
  int q = 1;
  int p = 2;
  int r = 2;
  std::optional<SmoothMap1D> profile;
  std::optional<BumpProfile> blend;
  double t0 = 0.5;
  Field field;

  std::vector<double> operator()(const std::vector<double>& u) const {
    std::vector<Taylor> in;
    for (double v : u) in.emplace_back(v, 0);
    auto out = field(in);
    std::vector<double> o;
    for (const auto& t : out) o.push_back(t.value());
    return o;
  }
  // the profile's exit height map, x -> L(t) x + (1 - L(t)) xi(x) at fixed t
  Taylor blend_at(double t, const Taylor& x) const {
    double L = (*blend)(t);
    return x * L + (*profile)(x) * (1.0 - L);
  }
};

inline void check_slide_dims(int m, int q) {
  if (m < 3) fail(ErrorKind::Precondition, "water slides need m >= 3 (p = 2 plus a transverse height)");
  if (q != m - 2) fail(ErrorKind::Precondition, "this artifact fixes p = 2, so q must be m - 2");
}

// Arbitrary box map on [0,1]^m, e.g. for validating counterexamples.
inline WaterSlide slide_from_field(int m, int q, int r, WaterSlide::Field f) {
  check_slide_dims(m, q);
  WaterSlide w;
  w.m = m, w.q = q, w.p = m - q, w.r = r;
  w.field = std::move(f);
  return w;
}

inline std::optional<double> find_fixed_point(const SmoothMap1D& f, double lo = 0.0, double hi = 1.0) {
  for (double x : f.fixed_points())
    if (x > lo && x < hi) return x;
  const int n = 4096;
  double prev_x = lo + (hi - lo) / n, prev = f(prev_x) - prev_x;
  for (int i = 1; i < n; ++i) {
    double x = lo + (hi - lo) * i / n, d = f(x) - x;
    if (d == 0.0) return x;
    if (i > 1 && (d > 0) != (prev > 0)) {
      double a = prev_x, b = x, da = prev;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (a + b);
        if (mid == a || mid == b) break;
        double dm = f(mid) - mid;
        if (dm == 0.0) return mid;
        if ((dm > 0) == (da > 0)) a = mid, da = dm;
        else b = mid;
      }
      return 0.5 * (a + b);
    }
    prev_x = x, prev = d;
  }
  return std::nullopt;
}

inline WaterSlide build_water_slide(const SmoothMap1D& profile, int m = 3, int q = 1, int r = 2,
                                    std::optional<BumpProfile> blend = std::nullopt) {
  check_slide_dims(m, q);
  if (!(profile.domain() == Domain::interval(0.0, 1.0)))
    fail(ErrorKind::Precondition, "profile must act on I = [0, 1]");
  auto t0 = find_fixed_point(profile);
  if (!t0) fail(ErrorKind::Precondition, "profile has no fixed point in (0, 1)");
  for (int i = 0; i <= 64; ++i)
    if (!(profile.derivative(i / 64.0) > 0.0))
      fail(ErrorKind::Precondition, "profile is not orientation-preserving");
  WaterSlide w;
  w.m = m, w.q = q, w.p = m - q, w.r = r;
  w.profile = profile;
  w.blend = blend ? *blend : make_bump(0.1, 0.9, 1.0);
  w.t0 = *t0;
  auto L = *w.blend;
  w.field = [L, profile, m](const std::vector<Taylor>& u) {
    std::vector<Taylor> out = u;
    Taylor l = L(u[0]);
    out[m - 1] = l * u[m - 1] + (1.0 - l) * profile(u[m - 1]);
    return out;
  };
  return w;
}

struct SlideReport {
  bool a = false, b = false, c = false, d = false;
  double residual_a = 0, residual_b = 0, residual_c = 0, residual_d = 0;
  size_t samples = 0;
  bool pass() const { return a && b && c && d; }
};

namespace detail {
// all points of the regular grid on [0,1]^m with s samples per axis, with coordinate k pinned
template <class F>
void for_grid(int m, int s, int pinned, double pinned_value, F&& f) {
  std::vector<int> idx(m, 0);
  std::vector<double> u(m);
  while (true) {
    for (int i = 0; i < m; ++i) u[i] = i == pinned ? pinned_value : static_cast<double>(idx[i]) / (s - 1);
    f(u);
    int k = 0;
    while (k < m) {
      if (k == pinned) { ++k; continue; }
      if (++idx[k] < s) break;
      idx[k] = 0;
      ++k;
    }
    if (k == m) break;
  }
}
}  // namespace detail

inline SlideReport validate_water_slide(const WaterSlide& ws, int r, int samples) {
  if (samples < 2) fail(ErrorKind::Parameter, "validate needs at least 2 samples per axis");
  const int m = ws.m, p = ws.p;
  SlideReport rep;
  const double tol_d = 1e-9;

  // (a) first p output coordinates equal inputs exactly
  detail::for_grid(m, samples, -1, 0.0, [&](const std::vector<double>& u) {
    auto o = ws(u);
    for (int i = 0; i < p; ++i) rep.residual_a = std::max(rep.residual_a, std::abs(o[i] - u[i]));
    ++rep.samples;
  });
  rep.a = rep.residual_a == 0.0;

  // (b) exit-face heights are a function of the input heights, increasing in x
  {
    bool monotone = true;
    std::vector<double> hu(m);
    int hs = samples;
    // enumerate heights on the last q coordinates, leaf coordinates c on the face t = 1
    std::vector<int> hidx(ws.q, 0);
    while (true) {
      for (int j = 0; j < ws.q; ++j) hu[p + j] = static_cast<double>(hidx[j]) / (hs - 1);
      std::vector<double> lo(ws.q, INFINITY), hi(ws.q, -INFINITY);
      std::vector<int> cidx(p - 1, 0);
      while (true) {
        std::vector<double> u(m);
        u[0] = 1.0;
        for (int j = 1; j < p; ++j) u[j] = static_cast<double>(cidx[j - 1]) / (samples - 1);
        for (int j = 0; j < ws.q; ++j) u[p + j] = hu[p + j];
        auto o = ws(u);
        for (int j = 0; j < ws.q; ++j) lo[j] = std::min(lo[j], o[p + j]), hi[j] = std::max(hi[j], o[p + j]);
        int k = 0;
        while (k < p - 1 && ++cidx[k] >= samples) cidx[k++] = 0;
        if (k == p - 1) break;
      }
      for (int j = 0; j < ws.q; ++j) rep.residual_b = std::max(rep.residual_b, hi[j] - lo[j]);
      int k = 0;
      while (k < ws.q && ++hidx[k] >= hs) hidx[k++] = 0;
      if (k == ws.q) break;
    }
    // monotone in x along a dense line of heights
    double prev = -INFINITY;
    for (int i = 0; i <= 1000; ++i) {
      std::vector<double> u(m, 0.5);
      u[0] = 1.0;
      u[m - 1] = i / 1000.0;
      double d = ws(u)[m - 1];
      if (!(d > prev)) monotone = false;
      prev = d;
    }
    rep.b = rep.residual_b <= 1e-12 && monotone;
    if (!monotone) rep.residual_b = std::max(rep.residual_b, 1.0);
  }

  // (c) identity on a band near the entry face
  {
    double band = ws.blend ? 0.5 * ws.blend->t_flat1 : 0.05;
    const int nt = 5;
    for (int k = 0; k < nt; ++k) {
      double t = band * k / (nt - 1);
      detail::for_grid(m, samples, 0, t, [&](const std::vector<double>& u) {
        auto o = ws(u);
        for (int i = 0; i < m; ++i) rep.residual_c = std::max(rep.residual_c, std::abs(o[i] - u[i]));
      });
    }
    rep.c = rep.residual_c <= 1e-15;
  }

  // (d) leafwise jets of (map - Id), orders 1..r, vanish on the exit face
  detail::for_grid(m, samples, 0, 1.0, [&](const std::vector<double>& u) {
    for (int dir = 0; dir < p; ++dir) {
      std::vector<Taylor> in;
      for (int i = 0; i < m; ++i) in.push_back(i == dir ? Taylor::variable(u[i], r) : Taylor(u[i], r));
      auto o = ws.field(in);
      for (int i = 0; i < m; ++i) {
        Taylor diff = o[i] - in[i];
        for (int k = 1; k <= r; ++k) rep.residual_d = std::max(rep.residual_d, std::abs(diff.derivative(k)));
      }
    }
  });
  rep.d = rep.residual_d <= tol_d;
  return rep;
}

inline double slide_of_height(const WaterSlide& ws, double c) {
  if (!(c >= 0.0 && c <= 1.0)) fail(ErrorKind::Domain, "height outside the box");
  std::vector<double> u(ws.m, 0.5);
  u[0] = 1.0;
  u[ws.m - 1] = c;
  return ws(u)[ws.m - 1];
}

// C^r distance of a profile-built slide to the identity. The displacement (1 - L(t)) (xi(x) - x) is a
// product, so each mixed partial is D^i(1 - L)(t) * D^j(xi - Id)(x).
inline double slide_cr_distance(const WaterSlide& ws, int r, int samples) {
  if (!ws.profile || !ws.blend) fail(ErrorKind::Parameter, "slide_cr_distance needs a profile-built slide");
  std::vector<double> supL(r + 1, 0.0), supP(r + 1, 0.0);
  for (int i = 0; i < samples; ++i) {
    double s = static_cast<double>(i) / (samples - 1);
    Taylor l = 1.0 - (*ws.blend)(Taylor::variable(s, r));
    Taylor x = Taylor::variable(s, r);
    Taylor d = (*ws.profile)(x) - x;
    for (int k = 0; k <= r; ++k) {
      supL[k] = std::max(supL[k], std::abs(l.derivative(k)));
      supP[k] = std::max(supP[k], std::abs(d.derivative(k)));
    }
  }
  double best = 0.0;
  for (int i = 0; i <= r; ++i)
    for (int j = 0; i + j <= r; ++j) best = std::max(best, supL[i] * supP[j]);
  return best;
}

}  // namespace folia
