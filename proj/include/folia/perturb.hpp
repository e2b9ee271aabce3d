#pragma once
// Resilient-leaf construction at transversal level: sequences b_n / a_n, the slide sigma, the perturbed
// holonomy g = sigma o f, the C^r budget check and the resilience certificate.
#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "folia/errors.hpp"
#include "folia/jetcalc.hpp"
#include "folia/models.hpp"
#include "folia/pseudogroup.hpp"

namespace folia {

// ---- rectangle rescale ----------------------------------------------------

struct RescaleBox {
  std::vector<Interval> axes;  // [alpha_i, beta_i]
};

inline std::vector<double> rect_rescale(const RescaleBox& box, const std::vector<double>& x) {
  if (x.size() != box.axes.size()) fail(ErrorKind::Parameter, "point and box dimensions differ");
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const auto& I = box.axes[i];
    if (!(I.lo < I.hi)) fail(ErrorKind::Parameter, "rescale box needs alpha_i < beta_i");
    if (!I.contains(x[i])) fail(ErrorKind::Domain, "point outside the rescale box");
    out[i] = (I.lo - x[i]) / (I.lo - I.hi);
  }
  return out;
}

// ---- plan ------------------------------------------------------------------

enum class Convention { ProofConsistent, PaperAsWritten };
enum class Spacing { Midpoint, Capture };

inline std::string to_string(Convention c) {
  return c == Convention::ProofConsistent ? "proof-consistent" : "paper-as-written";
}
inline Convention parse_convention(const std::string& s) {
  if (s == "proof-consistent") return Convention::ProofConsistent;
  if (s == "paper-as-written") return Convention::PaperAsWritten;
  fail(ErrorKind::Input, "unknown convention '" + s + "'");
}
inline std::string to_string(Spacing s) { return s == Spacing::Midpoint ? "midpoint" : "capture"; }
inline Spacing parse_spacing(const std::string& s) {
  if (s == "midpoint") return Spacing::Midpoint;
  if (s == "capture") return Spacing::Capture;
  fail(ErrorKind::Input, "unknown spacing '" + s + "'");
}

inline std::string convention_label(Convention c) {
  if (c == Convention::PaperAsWritten) return "convention: paper-as-written — chain not expected to hold";
  return "convention: proof-consistent";
}

struct SpacingRule {
  Spacing policy = Spacing::Midpoint;
  // capture policy: pick the contraction so |g^k(b1) - a| <= 0.8 tol after 0.9 max_iter steps
  int max_iter = 500;
  double converge_tol = 1e-6;
  double min_rate = 1e-4;
};

struct SlidePlan {
  double a = 0.0;
  double a_prime = 0.5;
  std::vector<double> b;     // b_1..b_{N+1}
  std::vector<double> aseq;  // a_n = f(b_n), n = 1..N
  std::vector<double> b_prime, aseq_prime;
  double q2 = 1.0;
  Interval box{0.0, 1.0};
  bool circle = true;
  Convention convention = Convention::ProofConsistent;
  Spacing spacing = Spacing::Midpoint;
  double ratio = 0.5;  // b_{n+1} - a = ratio * (closest of b_n, a_n) - a
  int side = 1;        // b_n > a (1) or b_n < a (-1)
  Word witness;        // witness(a) = b_1 when b_1 came from an orbit search
  bool has_witness = false;

  size_t N() const { return aseq.size(); }
  double width() const { return box.hi - box.lo; }
  // lift around a, then normalize into [0, 1]
  double lift(double x) const {
    if (!circle) return x;
    double d = x - a;
    return a + d - std::floor(d + 0.5);
  }
  double rescale(double x) const { return (lift(x) - box.lo) / width(); }
};

inline SlidePlan build_sequences(const RecurrentScenario& sc, double b1, int N,
                                 Convention conv = Convention::ProofConsistent, SpacingRule rule = {},
                                 std::optional<Word> witness = std::nullopt) {
  if (N < 1) fail(ErrorKind::Parameter, "N must be at least 1");
  const auto& T = sc.system.transversal;
  SlidePlan p;
  p.a = sc.a;
  p.box = sc.chart();
  p.circle = T.is_circle();
  p.convention = conv;
  p.spacing = rule.policy;
  if (witness) p.witness = *witness, p.has_witness = true;

  double d1 = T.displacement(sc.a, b1);
  if (d1 == 0.0) fail(ErrorKind::Precondition, "b1 must differ from a");
  double x1 = p.lift(b1);
  if (!(x1 > p.box.lo && x1 < p.box.hi)) fail(ErrorKind::Chart, "b1 lies outside the chart J");
  p.side = d1 > 0 ? 1 : -1;
  p.a_prime = p.rescale(sc.a);

  if (rule.policy == Spacing::Capture) {
    if (rule.max_iter <= 0 || !(rule.converge_tol > 0)) fail(ErrorKind::Parameter, "capture rule needs max_iter, tol > 0");
    double u = std::abs(d1);
    double rate = std::log(u / (0.8 * rule.converge_tol)) / (0.9 * rule.max_iter);
    rate = std::max(rate, rule.min_rate);
    if (!(rate < 0.5)) fail(ErrorKind::Construction, "capture contraction above 1/2; b1 is too far from a");
    p.ratio = 1.0 - rate;
  }

  p.b.push_back(b1);
  for (int n = 1; n <= N; ++n) {
    double bn = p.b.back();
    auto fa = apply_word(sc.system, sc.loop, bn);
    if (!fa.defined()) fail(ErrorKind::Construction, "f(b_" + std::to_string(n) + ") is undefined");
    double an = *fa.value;
    double xa = p.lift(an);
    double da = T.displacement(sc.a, an), db = T.displacement(sc.a, bn);
    if (!(xa > p.box.lo && xa < p.box.hi) || da * p.side <= 0.0)
      fail(ErrorKind::Construction, "nesting fails at index " + std::to_string(n) + ": f moves b_n out of J");
    p.aseq.push_back(an);
    double inner = std::abs(da) < std::abs(db) ? da : db;
    p.b.push_back(T.normalize(sc.a + p.ratio * inner));
  }
  for (double x : p.b) p.b_prime.push_back(p.rescale(x));
  for (double x : p.aseq) p.aseq_prime.push_back(p.rescale(x));
  // upper cutoff a' + 2 (b1' - a'), clamped into the chart
  p.q2 = std::clamp(p.a_prime + 2.0 * (p.b_prime[0] - p.a_prime), 0.0, 1.0);
  return p;
}

// ---- slide profiles ----------------------------------------------------------

// Psi on the signed axis s = side * (x' - a'): zero outside (-ell_l, ell_r), Psi(s) = s on [0, c].
// Psi'' is a sum of six smoothed steps (bang-bang on each side), so sigma~ = x - eps * Psi is an exact
// linear contraction by (1 - eps) toward a' on the chain region.
struct CaptureProfile {
  double eps = 0.0, c = 0.0, ell_l = 0.45, ell_r = 0.45;
  std::array<double, 6> z{}, rho{}, amp{};

  Taylor psi(const Taylor& s) const {
    double v = s.value();
    if (v <= -ell_l || v >= ell_r) return Taylor(0.0, s.order());
    if (v >= 0.0 && v <= c) return s;
    Taylor r(0.0, s.order());
    for (int i = 0; i < 6; ++i) {
      double w = 2.0 * rho[i];
      if (v <= z[i] - rho[i]) continue;
      r += step_integral(2, (s - (z[i] - rho[i])) / w) * (w * w * amp[i]);
    }
    return r;
  }
};

namespace detail {
inline std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> M, std::array<double, 3> b) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(M[r][c]) > std::abs(M[piv][c])) piv = r;
    std::swap(M[c], M[piv]);
    std::swap(b[c], b[piv]);
    if (M[c][c] == 0.0) fail(ErrorKind::Construction, "singular capture-profile system");
    for (int r = c + 1; r < 3; ++r) {
      double f = M[r][c] / M[c][c];
      for (int k = c; k < 3; ++k) M[r][k] -= f * M[c][k];
      b[r] -= f * b[c];
    }
  }
  std::array<double, 3> x{};
  for (int r = 2; r >= 0; --r) {
    double t = b[r];
    for (int k = r + 1; k < 3; ++k) t -= M[r][k] * x[k];
    x[r] = t / M[r][r];
  }
  return x;
}
}  // namespace detail

inline CaptureProfile make_capture_profile(double eps, double c, double ell_l, double ell_r) {
  if (!(c > 0.0) || !(c < 0.25 * ell_r)) fail(ErrorKind::Construction, "chain extent must lie in (0, ell/4)");
  CaptureProfile P;
  P.eps = eps, P.c = c, P.ell_l = ell_l, P.ell_r = ell_r;
  const double rl = 0.03 * ell_l, rr = 0.03 * ell_r;
  P.rho = {rl, rl, rl, rr, rr, rr};
  const double C2 = 0.5 - detail::step_moment() - 0.125;  // I_2(1) - 1/8
  auto solve_side = [&](int side) {
    std::array<std::array<double, 3>, 3> M{};
    for (int j = 0; j < 3; ++j) {
      int i = 3 * side + j;
      double w = 2.0 * P.rho[i];
      M[0][j] = 1.0;
      M[1][j] = P.z[i];
      M[2][j] = 0.5 * P.z[i] * P.z[i] + w * w * C2;
    }
    auto A = detail::solve3(M, {0.0, side == 0 ? -1.0 : 1.0, 0.0});
    for (int j = 0; j < 3; ++j) P.amp[3 * side + j] = A[j];
  };
  // switch point of the bang-bang Psi'' chosen so both plateaus have equal height
  auto balance = [&](int side, double lo, double hi) {
    for (int it = 0; it < 100; ++it) {
      double mid = 0.5 * (lo + hi);
      P.z[3 * side + 1] = mid;
      solve_side(side);
      double gap = std::abs(P.amp[3 * side]) - std::abs(P.amp[3 * side + 2]);
      (gap > 0 ? lo : hi) = mid;
    }
    P.z[3 * side + 1] = 0.5 * (lo + hi);
    solve_side(side);
  };
  P.z = {-ell_l + rl, 0.0, -rl, c + rr, 0.0, ell_r - rr};
  balance(0, -ell_l + 3 * rl, -3 * rl);
  balance(1, c + 3 * rr, ell_r - 3 * rr);
  return P;
}

struct Slide {
  SmoothMap1D sigma;    // on the transversal
  SmoothMap1D profile;  // sigma~ on the rescaled chart axis [0, 1]
  std::string kind = "identity";  // identity | capture | mollified
  std::optional<CaptureProfile> capture;
};

namespace detail {
// transports a rescaled-axis map back to the transversal: identity outside the chart
inline SmoothMap1D transport(const SlidePlan& p, const SmoothMap1D& prof, const Domain& dom) {
  return make_map(dom, [p, prof](const Taylor& x) {
    double v = x.value();
    double lifted = p.lift(v);
    if (!(lifted > p.box.lo && lifted < p.box.hi)) return x;
    double shift = lifted - v;
    Taylor s = (x + shift - p.box.lo) / p.width();
    return prof(s) * p.width() + (p.box.lo - shift);
  }, true, {p.a});
}
}  // namespace detail

inline Slide identity_slide(const Transversal& T) {
  Slide s;
  s.sigma = identity_map(T.domain());
  s.profile = identity_map(Domain::interval(0.0, 1.0));
  return s;
}

inline Slide build_slide(const SlidePlan& p) {
  Domain dom = p.circle ? Domain::circle() : Domain::interval(0.0, 1.0);
  Domain unit = Domain::interval(0.0, 1.0);
  if (p.N() == 0) return identity_slide(p.circle ? Transversal::circle() : Transversal::interval());
  const double ap = p.a_prime;
  const int side = p.side;
  Slide out;

  // interpolation pairs on the rescaled axis
  std::vector<std::pair<double, double>> pairs;
  for (size_t n = 0; n < p.N(); ++n) {
    if (p.convention == Convention::ProofConsistent) pairs.push_back({p.aseq_prime[n], p.b_prime[n + 1]});
    else pairs.push_back({p.b_prime[n], p.aseq_prime[n]});
  }
  bool collinear = p.convention == Convention::ProofConsistent;
  const auto& T = p.circle ? Transversal::circle() : Transversal::interval();
  for (size_t n = 0; collinear && n < p.N(); ++n) {
    double u = T.displacement(p.a, p.aseq[n]), v = T.displacement(p.a, p.b[n + 1]);
    if (std::abs(v - p.ratio * u) > 1e-9 * std::abs(u)) collinear = false;
  }

  if (p.spacing == Spacing::Capture && collinear) {
    double ell = 0.9 * std::min(ap, 1.0 - ap);
    double c = std::abs(p.b_prime[0] - ap);
    auto P = make_capture_profile(1.0 - p.ratio, c, ell, ell);
    out.capture = P;
    out.kind = "capture";
    out.profile = make_map(unit, [P, ap, side](const Taylor& x) {
      return x - P.psi((x - ap) * static_cast<double>(side)) * (P.eps * side);
    }, true, {ap});
  } else {
    // mirror to the side above a', mollify there, mirror back
    auto m = [ap, side](double x) { return side > 0 ? x : 2.0 * ap - x; };
    std::vector<std::pair<double, double>> mp;
    for (auto [u, v] : pairs) mp.push_back({m(u), m(v)});
    double q2 = side > 0 ? p.q2 : 2.0 * ap - p.q2;
    SmoothMap1D f;
    try {
      f = monotone_mollify(mp, ap, q2, Domain::interval(-1.0, 2.0));
    } catch (const Error& e) {
      fail(ErrorKind::Construction, std::string("slide profile: ") + e.what());
    }
    out.kind = "mollified";
    out.profile = make_map(unit, [f, ap, side](const Taylor& x) {
      if (side > 0) return f(x);
      return 2.0 * ap - f(2.0 * ap - x);
    }, true, {ap});
  }
  out.sigma = detail::transport(p, out.profile, dom);
  return out;
}

// ---- perturbed system --------------------------------------------------------

// Inverse of an increasing map close to the identity: Newton on the value, then on the series.
inline SmoothMap1D newton_inverse(const SmoothMap1D& f, Domain dom) {
  return make_map(dom, [f](const Taylor& t) {
    double y = t.value(), x = y;
    for (int i = 0; i < 100; ++i) {
      double dx = (f(x) - y) / f.derivative(x);
      x -= dx;
      if (std::abs(dx) <= 1e-17 * std::max(1.0, std::abs(x))) break;
    }
    int n = t.order();
    if (n == 0) return Taylor(x, 0);
    Taylor g = Taylor::variable(x, n), target = Taylor::variable(y, n);
    double slope = f.derivative(x);
    for (int it = 0; it <= n; ++it) g -= (f(g) - target) / slope;
    g[0] = x;
    std::vector<double> d(n + 1);
    for (int k = 0; k <= n; ++k) d[k] = g.derivative(k);
    return t.compose_derivatives(d);
  }, true);
}

// Word action as one map on lifts (no normalization between letters).
inline SmoothMap1D word_map(const PseudogroupSystem& S, const Word& w, bool inverse = false) {
  Word u = inverse ? w.inverse() : w;
  return make_map(S.transversal.domain(), [S, u](const Taylor& t) {
    Taylor x = t;
    for (const auto& l : u.letters) {
      int sign = l.power > 0 ? 1 : -1;
      for (int k = 0; k < std::abs(l.power); ++k) x = S.gens[l.gen].branch(sign)(x);
    }
    return x;
  }, true);
}

struct PerturbedSystem {
  RecurrentScenario scenario;
  PseudogroupSystem system;
  size_t g_index = 0;
  Word g_word;  // the single letter g in system
  Slide slide;
  int r = 2;
  double delta = 0.0;
  double achieved = 0.0;
  int samples = 4096;
};

inline double slide_distance(const Slide& s, int r, int samples = 4096) {
  return cr_distance(s.profile, identity_map(Domain::interval(0.0, 1.0)), r, samples);
}

inline PerturbedSystem apply_perturbation(const RecurrentScenario& sc, const Slide& slide, int r, double delta,
                                          int samples = 4096) {
  if (!(delta > 0.0)) fail(ErrorKind::Parameter, "delta must be positive");
  PerturbedSystem ps;
  ps.scenario = sc;
  ps.slide = slide;
  ps.r = r, ps.delta = delta, ps.samples = samples;
  ps.achieved = slide_distance(slide, r, samples);
  if (!(ps.achieved < delta)) {
    std::ostringstream m;
    m.precision(6);
    m << "C^" << r << " distance " << ps.achieved << " >= delta " << delta;
    throw BudgetViolation(ps.achieved, delta, m.str());
  }
  const auto& S = sc.system;
  ps.system = S;
  Domain dom = S.transversal.domain();
  SmoothMap1D f = word_map(S, sc.loop), finv = word_map(S, sc.loop, true);
  SmoothMap1D fwd = compose(slide.sigma, f);
  SmoothMap1D inv = compose(finv, newton_inverse(slide.sigma, dom));
  bool single = sc.loop.letters.size() == 1 && sc.loop.letters[0].power == 1;
  std::vector<Interval> D{{0.0, 1.0}}, I{{0.0, 1.0}};
  if (single) {
    const auto& old = S.gens[sc.loop.letters[0].gen];
    D = old.domain(), I = old.image();
  }
  LocalMap g("g", D, fwd, I, inv);
  if (single) {
    ps.g_index = sc.loop.letters[0].gen;
    ps.system.gens[ps.g_index] = g;
  } else {
    ps.g_index = ps.system.gens.size();
    ps.system.gens.push_back(g);
  }
  ps.g_word.push({ps.g_index, 1});
  auto ga = apply_word(ps.system, ps.g_word, sc.a);
  if (!ga.defined() || S.transversal.distance(*ga.value, sc.a) > 1e-10)
    fail(ErrorKind::Construction, "perturbed holonomy does not fix a");
  return ps;
}

// |g(b_n) - b_{n+1}|, n = 1..N
inline std::vector<double> chain_residuals(const PerturbedSystem& ps, const SlidePlan& p) {
  std::vector<double> out;
  const auto& T = ps.system.transversal;
  for (size_t n = 0; n < p.N(); ++n) {
    auto g = apply_word(ps.system, ps.g_word, p.b[n]);
    out.push_back(g.defined() ? T.distance(*g.value, p.b[n + 1]) : INFINITY);
  }
  return out;
}

inline ResilienceCertificate certify_resilience(const PerturbedSystem& ps, const SlidePlan& p, int max_iter,
                                                double converge_tol = 1e-6) {
  const auto& S = ps.system;
  const auto& T = S.transversal;
  if (max_iter <= 0) throw CertificationFailure("convergence", INFINITY, "max_iter must be positive: no convergence evidence");
  auto ga = apply_word(S, ps.g_word, p.a);
  double r = ga.defined() ? T.distance(*ga.value, p.a) : INFINITY;
  if (r > 1e-10) throw CertificationFailure("fixed point g(a) = a", r, "g does not fix a");
  auto chain = chain_residuals(ps, p);
  for (size_t n = 0; n < chain.size(); ++n)
    if (chain[n] > 1e-9)
      throw CertificationFailure("chain |g(b_n) - b_{n+1}|", chain[n],
                                 "chain fails at n = " + std::to_string(n + 1));
  if (!p.has_witness) throw CertificationFailure("orbit witness", INFINITY, "b1 carries no orbit word");
  auto wy = apply_word(S, p.witness, p.a);
  r = wy.defined() ? T.distance(*wy.value, p.b[0]) : INFINITY;
  if (r > 1e-10) throw CertificationFailure("orbit witness w(a) = b1", r, "b1 is not reached from a");
  auto d = capture_distances(S, ps.g_word, p.a, p.b[0], max_iter, converge_tol);
  if (!d) {
    double z = p.b[0];
    for (int k = 0; k < max_iter; ++k) {
      auto y = apply_word(S, ps.g_word, z);
      if (!y.defined()) break;
      z = *y.value;
    }
    throw CertificationFailure("capture |g^k(b1) - a|", T.distance(z, p.a),
                               "iterates of b1 do not decrease monotonically below tolerance");
  }
  auto J = apply_word_jet(S, ps.g_word, p.a, 1);
  ResilienceCertificate c;
  c.h = ps.g_word;
  c.x = p.a;
  c.derivative = (*J)[1];
  c.y = p.b[0];
  c.connecting = p.witness;
  c.distances = *d;
  return c;
}

// ---- orbit points near a and the retry driver --------------------------------------

struct OrbitReturn {
  double point, offset;
  Word word;
};

// Single-syllable words gen^{+-k}, k <= max_power, landing in (a, a + max_offset]; sorted by offset.
inline std::vector<OrbitReturn> orbit_returns(const RecurrentScenario& sc, long max_power, double max_offset) {
  const auto& S = sc.system;
  const auto& T = S.transversal;
  std::vector<OrbitReturn> out;
  double start = T.normalize(sc.a);
  for (size_t g = 0; g < S.gens.size(); ++g) {
    if (S.gens[g].is_identity()) continue;
    for (int sign : {1, -1}) {
      double z = start;
      for (long k = 1; k <= max_power; ++k) {
        auto y = apply_letter(S, g, sign, z);
        if (!y || *y == z) break;
        z = *y;
        double d = T.displacement(sc.a, z);
        if (d > 0.0 && d <= max_offset) {
          Word w;
          w.push({g, static_cast<int>(sign * k)});
          out.push_back({z, d, w});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& u, const auto& v) { return u.offset < v.offset; });
  return out;
}

struct PerturbParams {
  double b1_offset = 7e-4;
  int N = 8;
  int r = 2;
  double delta = 1e-2;
  Convention convention = Convention::ProofConsistent;
  SpacingRule spacing{Spacing::Capture};
  int max_retries = 10;
  long search_powers = 4'000'000;
  int samples = 4096;
};

struct RetryAttempt {
  double target = 0, b1 = 0, offset = 0, achieved = 0;
  bool ok = false;
};

struct PerturbOutcome {
  std::vector<RetryAttempt> attempts;
  std::optional<SlidePlan> plan;
  std::optional<PerturbedSystem> system;
  bool ok() const { return system.has_value(); }
};

// Halves b1 - a after each budget violation until the C^r distance is below delta.
inline PerturbOutcome perturb_with_retry(const RecurrentScenario& sc, const PerturbParams& P) {
  if (!(P.b1_offset > 0.0)) fail(ErrorKind::Parameter, "b1_offset must be positive");
  auto returns = orbit_returns(sc, P.search_powers, P.b1_offset);
  if (returns.empty())
    fail(ErrorKind::Precondition, "no orbit point of a in (a, a + b1_offset]: nothing to capture");
  PerturbOutcome out;
  double target = P.b1_offset;
  for (int attempt = 0; attempt <= P.max_retries; ++attempt) {
    auto it = std::upper_bound(returns.begin(), returns.end(), target,
                               [](double t, const OrbitReturn& o) { return t < o.offset; });
    if (it == returns.begin()) break;
    const auto& ret = *std::prev(it);
    RetryAttempt A;
    A.target = target, A.b1 = ret.point, A.offset = ret.offset;
    auto plan = build_sequences(sc, ret.point, P.N, P.convention, P.spacing, ret.word);
    auto slide = build_slide(plan);
    try {
      auto ps = apply_perturbation(sc, slide, P.r, P.delta, P.samples);
      A.achieved = ps.achieved, A.ok = true;
      out.attempts.push_back(A);
      out.plan = plan;
      out.system = ps;
      return out;
    } catch (const BudgetViolation& e) {
      A.achieved = e.achieved;
      out.attempts.push_back(A);
    }
    target = 0.5 * ret.offset;
  }
  return out;
}

}  // namespace folia
