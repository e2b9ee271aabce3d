#pragma once
// 1-D smooth maps evaluated by truncated Taylor propagation.
#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "folia/errors.hpp"
#include "folia/taylor.hpp"

namespace folia {

inline constexpr int kDefaultOrderCap = 8;

struct Domain {
  enum class Kind { Interval, Circle };
  Kind kind = Kind::Interval;
  double lo = 0.0;
  double hi = 1.0;

  static Domain interval(double a, double b) {
    if (!(a < b)) fail(ErrorKind::Parameter, "empty interval domain");
    return {Kind::Interval, a, b};
  }
  static Domain circle() { return {Kind::Circle, 0.0, 1.0}; }

  bool is_circle() const { return kind == Kind::Circle; }
  bool contains(double x) const {
    if (!std::isfinite(x)) return false;
    return is_circle() || (x >= lo && x <= hi);
  }
  bool operator==(const Domain& o) const { return kind == o.kind && lo == o.lo && hi == o.hi; }
  std::string describe() const {
    std::ostringstream s;
    if (is_circle()) s << "circle";
    else s << "[" << lo << ", " << hi << "]";
    return s.str();
  }
};

struct Jet {
  int order = 0;
  std::vector<double> coefficients;  // value, f', f'', ...
  double operator[](int k) const { return coefficients.at(k); }
};

class SmoothMap1D {
 public:
  using Evaluator = std::function<Taylor(const Taylor&)>;

  SmoothMap1D() : SmoothMap1D(Domain::interval(0, 1), [](const Taylor& t) { return t; }) {}
  SmoothMap1D(Domain d, Evaluator e, bool monotone = false, std::vector<double> fixed = {})
      : dom_(d), eval_(std::move(e)), monotone_(monotone), fixed_(std::move(fixed)) {}

  const Domain& domain() const { return dom_; }
  bool monotone() const { return monotone_; }
  const std::vector<double>& fixed_points() const { return fixed_; }

  Taylor operator()(const Taylor& t) const {
    if (!dom_.contains(t.value()))
      fail(ErrorKind::Domain, "point " + num(t.value()) + " outside " + dom_.describe());
    return eval_(t);
  }
  double operator()(double x) const { return (*this)(Taylor(x, 0)).value(); }
  double derivative(double x) const { return (*this)(Taylor::variable(x, 1))[1]; }

  const Evaluator& evaluator() const { return eval_; }

 private:
  static std::string num(double x) {
    std::ostringstream s;
    s.precision(17);
    s << x;
    return s.str();
  }
  Domain dom_;
  Evaluator eval_;
  bool monotone_ = false;
  std::vector<double> fixed_;
};

template <class F>
SmoothMap1D make_map(Domain d, F f, bool monotone = false, std::vector<double> fixed = {}) {
  return SmoothMap1D(d, SmoothMap1D::Evaluator(std::move(f)), monotone, std::move(fixed));
}

inline SmoothMap1D identity_map(Domain d) {
  return make_map(d, [](const Taylor& t) { return t; }, true);
}

inline SmoothMap1D affine_map(Domain d, double slope, double shift) {
  std::vector<double> fixed;
  if (slope != 1.0) fixed.push_back(shift / (1.0 - slope));
  return make_map(d, [=](const Taylor& t) { return t * slope + shift; }, slope > 0, fixed);
}

// f after g.
inline SmoothMap1D compose(const SmoothMap1D& f, const SmoothMap1D& g) {
  return SmoothMap1D(
      g.domain(), [f, g](const Taylor& t) { return f(g(t)); }, f.monotone() && g.monotone());
}

inline Jet jet_eval(const SmoothMap1D& f, double x, int order, int cap = kDefaultOrderCap) {
  if (order < 0) fail(ErrorKind::Parameter, "negative jet order");
  if (order > cap)
    fail(ErrorKind::UnsupportedOrder,
         "order " + std::to_string(order) + " exceeds cap " + std::to_string(cap));
  Taylor t = f(Taylor::variable(x, order));
  Jet j{order, std::vector<double>(order + 1)};
  for (int k = 0; k <= order; ++k) j.coefficients[k] = t.derivative(k);
  return j;
}

inline std::vector<double> sample_grid(const Domain& d, int samples) {
  std::vector<double> g(samples);
  if (d.is_circle()) {
    for (int i = 0; i < samples; ++i) g[i] = static_cast<double>(i) / samples;
  } else {
    for (int i = 0; i < samples; ++i) g[i] = d.lo + (d.hi - d.lo) * i / (samples - 1);
  }
  return g;
}

inline double cr_distance(const SmoothMap1D& f, const SmoothMap1D& g, int r, int samples) {
  if (!(f.domain() == g.domain()))
    fail(ErrorKind::Domain, "cr_distance: domains " + f.domain().describe() + " and " +
                                g.domain().describe() + " differ");
  if (samples < 2) fail(ErrorKind::Parameter, "cr_distance needs at least 2 samples");
  if (r < 0 || r >= kTaylorCapacity) fail(ErrorKind::UnsupportedOrder, "cr_distance order");
  double best = 0.0;
  for (double x : sample_grid(f.domain(), samples)) {
    Taylor a = f(Taylor::variable(x, r)), b = g(Taylor::variable(x, r));
    for (int k = 0; k <= r; ++k) best = std::max(best, std::abs(a.derivative(k) - b.derivative(k)));
  }
  return best;
}

// ---- smooth steps -------------------------------------------------------

// exp(-1/s) for s > 0, else 0.
inline Taylor flat_exp(const Taylor& s) {
  if (s.value() <= 0.0) return Taylor(0.0, s.order());
  return exp(-1.0 / s);
}

// 0 for s <= 0, 1 for s >= 1, C-infinity transition; max slope 2 at s = 1/2.
inline Taylor smooth_step(const Taylor& s) {
  double v = s.value();
  if (v <= 0.0) return Taylor(0.0, s.order());
  if (v >= 1.0) return Taylor(1.0, s.order());
  Taylor h = flat_exp(s), h2 = flat_exp(1.0 - s);
  return h / (h + h2);
}
inline double smooth_step(double s) { return smooth_step(Taylor(s, 0)).value(); }

namespace detail {
inline double quad(const std::function<double(double)>& f, double a, double b) {
  if (b <= a) return 0.0;
  // fixed composite Gauss-Legendre; adaptive schemes stall on the flat tail near 0
  constexpr int pieces = 4;
  double r = 0.0;
  for (int i = 0; i < pieces; ++i)
    r += boost::math::quadrature::gauss<double, 30>::integrate(f, a + (b - a) * i / pieces,
                                                             a + (b - a) * (i + 1) / pieces);
  return r;
}
// integral of v * S(v) over [0, 1]
inline double step_moment() {
  static const double m = quad([](double v) { return v * smooth_step(v); }, 0.0, 1.0);
  return m;
}
// I_k(s) = integral_0^s (s-v)^{k-1}/(k-1)! S(v) dv, for k = 0 (S itself), 1, 2.
inline double step_integral_value(int k, double s) {
  if (k == 0) return smooth_step(s);
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) {
    if (k == 1) return s - 0.5;
    return 0.5 * s - step_moment() + 0.5 * (s - 1.0) * (s - 1.0);
  }
  if (k == 1) return quad([](double v) { return smooth_step(v); }, 0.0, s);
  return quad([s](double v) { return (s - v) * smooth_step(v); }, 0.0, s);
}
}  // namespace detail

// k-fold integrated smooth step, k in {0, 1, 2}; jets exact up to the quadrature of the value.
inline Taylor step_integral(int k, const Taylor& s) {
  int n = s.order();
  double v = s.value();
  if (k == 0) return smooth_step(s);
  if (v <= 0.0) return Taylor(0.0, n);
  std::vector<double> d(n + 1, 0.0);
  Taylor sj = smooth_step(Taylor::variable(v, std::max(0, n - k)));
  for (int j = 0; j <= n; ++j)
    d[j] = j < k ? detail::step_integral_value(k - j, v) : sj.derivative(j - k);
  return s.compose_derivatives(d);
}

// ---- bump profile -------------------------------------------------------

struct BumpProfile {
  double t_flat1 = 0.1;
  double t_1 = 0.9;
  double end = 1.0;
  SmoothMap1D map;
  double operator()(double t) const { return map(t); }
  Taylor operator()(const Taylor& t) const { return map(t); }
};

inline Taylor bump_value(double t_flat1, double t_1, const Taylor& t) {
  return 1.0 - smooth_step((t - t_flat1) / (t_1 - t_flat1));
}

inline BumpProfile make_bump(double t_flat1 = 0.1, double t_1 = 0.9, double end = 1.0) {
  if (!(t_flat1 < t_1)) fail(ErrorKind::Parameter, "bump needs t_flat1 < t_1");
  if (!(t_flat1 > 0.0) || !(t_1 <= end)) fail(ErrorKind::Parameter, "bump needs 0 < t_flat1 < t_1 <= end");
  auto m = make_map(Domain::interval(0.0, end),
                    [=](const Taylor& t) { return bump_value(t_flat1, t_1, t); });
  return {t_flat1, t_1, end, m};
}

// ---- smoothed piecewise-linear maps ----------------------------------------

// x + sum_i delta_i * R_i(x), R_i a smoothed (x - z_i)_+ that is exact outside [z_i - rho_i, z_i + rho_i].
struct RampSum {
  struct Ramp {
    double z, rho, delta;
  };
  std::vector<Ramp> ramps;

  Taylor operator()(const Taylor& x) const {
    Taylor r = x;
    for (const auto& p : ramps) {
      double v = x.value();
      if (v <= p.z - p.rho) continue;
      if (v >= p.z + p.rho) {
        r += (x - p.z) * p.delta;
      } else {
        double w = 2.0 * p.rho;
        r += step_integral(1, (x - (p.z - p.rho)) / w) * (w * p.delta);
      }
    }
    return r;
  }
};

inline SmoothMap1D monotone_mollify(std::vector<std::pair<double, double>> pairs, double fixed_below,
                                    double fixed_above, std::optional<Domain> domain = std::nullopt) {
  Domain dom = domain ? *domain : Domain::interval(fixed_below, fixed_above);
  if (!(fixed_below < fixed_above)) fail(ErrorKind::Parameter, "mollify needs a' < q2");
  std::sort(pairs.begin(), pairs.end());
  for (auto [u, v] : pairs) {
    if (!(u > fixed_below && u < fixed_above && v > fixed_below && v < fixed_above))
      fail(ErrorKind::Parameter, "pair outside (a', q2)");
  }
  for (size_t i = 1; i < pairs.size(); ++i) {
    if (!(pairs[i].first > pairs[i - 1].first) || !(pairs[i].second > pairs[i - 1].second))
      fail(ErrorKind::Interpolation, "pairs admit no increasing interpolant");
  }
  std::vector<double> fixed{fixed_below, fixed_above};
  for (auto [u, v] : pairs)
    if (u == v) fixed.push_back(u);
  if (pairs.empty()) return identity_map(dom);

  // knots with endpoint anchors
  std::vector<double> k{fixed_below}, y{fixed_below};
  for (auto [u, v] : pairs) k.push_back(u), y.push_back(v);
  k.push_back(fixed_above), y.push_back(fixed_above);
  const size_t n = k.size();
  std::vector<double> chord(n - 1), s(n, 1.0), h(n);
  for (size_t i = 0; i + 1 < n; ++i) chord[i] = (y[i + 1] - y[i]) / (k[i + 1] - k[i]);
  for (size_t j = 1; j + 1 < n; ++j) s[j] = 0.5 * (chord[j - 1] + chord[j]);
  auto interval_cap = [&](size_t i) {
    return std::min(k[i + 1] - k[i], (y[i + 1] - y[i]) / (s[i] + s[i + 1]));
  };
  for (size_t j = 0; j < n; ++j) {
    double cap = std::numeric_limits<double>::infinity();
    if (j > 0) cap = std::min(cap, interval_cap(j - 1));
    if (j + 1 < n) cap = std::min(cap, interval_cap(j));
    h[j] = 0.25 * cap;
  }
  // breakpoints of the piecewise-linear profile with their slope changes
  std::vector<double> z, slope_after;
  for (size_t j = 0; j + 1 < n; ++j) {
    double x0 = k[j] + h[j], x1 = k[j + 1] - h[j + 1];
    double c = ((y[j + 1] - s[j + 1] * h[j + 1]) - (y[j] + s[j] * h[j])) / (x1 - x0);
    z.push_back(x0), slope_after.push_back(c);
    z.push_back(x1), slope_after.push_back(s[j + 1]);
  }
  RampSum rs;
  double prev_slope = 1.0;
  for (size_t i = 0; i < z.size(); ++i) {
    // neighbours include the knots, which sit at distance h from their breakpoints
    double left = i == 0 ? z[i] - fixed_below : z[i] - z[i - 1];
    double right = i + 1 == z.size() ? fixed_above - z[i] : z[i + 1] - z[i];
    left = std::min(left, h[(i + 1) / 2]);
    right = std::min(right, h[(i + 1) / 2]);
    double rho = 0.45 * std::min(left, right);
    double delta = slope_after[i] - prev_slope;
    prev_slope = slope_after[i];
    if (delta != 0.0) rs.ramps.push_back({z[i], rho, delta});
  }
  return make_map(dom, rs, true, fixed);
}

// Bisection inverse of an increasing map on [lo, hi].
inline double invert_monotone(const SmoothMap1D& f, double y, double lo, double hi) {
  double flo = f(lo), fhi = f(hi);
  if (y < flo || y > fhi) fail(ErrorKind::Domain, "value outside the image of the map");
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (f(mid) < y) lo = mid;
    else hi = mid;
  }
  return std::abs(f(lo) - y) <= std::abs(f(hi) - y) ? lo : hi;
}

}  // namespace folia
