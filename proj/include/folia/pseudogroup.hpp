#pragma once
// Finitely generated pseudogroups on a 1-D transversal: words, orbits, recurrence, resilience.
#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "folia/jetcalc.hpp"

namespace folia {

struct Transversal {
  enum class Kind { Circle, Interval };
  Kind kind = Kind::Circle;

  static Transversal circle() { return {Kind::Circle}; }
  static Transversal interval() { return {Kind::Interval}; }
  bool is_circle() const { return kind == Kind::Circle; }
  Domain domain() const { return is_circle() ? Domain::circle() : Domain::interval(0.0, 1.0); }

  double normalize(double x) const {
    if (!is_circle()) return x;
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
  }
  // signed displacement from x to y (wrapped into [-1/2, 1/2) on the circle)
  double displacement(double x, double y) const {
    double d = y - x;
    if (is_circle()) d -= std::floor(d + 0.5);
    return d;
  }
  double distance(double x, double y) const { return std::abs(displacement(x, y)); }
};

struct Interval {
  double lo, hi;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

class LocalMap {
 public:
  LocalMap() = default;
  LocalMap(std::string label, std::vector<Interval> domain, SmoothMap1D forward,
           std::vector<Interval> image, SmoothMap1D inverse, bool identity = false)
      : label_(std::move(label)),
        domain_(std::move(domain)),
        image_(std::move(image)),
        fwd_(std::move(forward)),
        inv_(std::move(inverse)),
        identity_(identity) {}

  static LocalMap identity(const Transversal& T, std::string label = "id") {
    auto m = identity_map(T.domain());
    return LocalMap(std::move(label), {{0.0, 1.0}}, m, {{0.0, 1.0}}, m, true);
  }
  static LocalMap rotation(double alpha, std::string label = "R") {
    auto D = Domain::circle();
    return LocalMap(std::move(label), {{0.0, 1.0}}, affine_map(D, 1.0, alpha), {{0.0, 1.0}},
                    affine_map(D, 1.0, -alpha));
  }
  // Increasing map on [lo, hi]; inverse by bisection unless supplied.
  static LocalMap monotone(std::string label, Interval dom, SmoothMap1D forward,
                           std::optional<SmoothMap1D> inverse = std::nullopt) {
    Interval img{forward(dom.lo), forward(dom.hi)};
    if (!(img.lo < img.hi)) fail(ErrorKind::Parameter, "local map " + label + " is not increasing");
    SmoothMap1D inv;
    if (inverse) {
      inv = *inverse;
    } else {
      SmoothMap1D f = forward;
      inv = make_map(Domain::interval(img.lo, img.hi), [f, dom](const Taylor& t) {
        int n = t.order();
        double x = invert_monotone(f, t.value(), dom.lo, dom.hi);
        if (n == 0) return Taylor(x, 0);
        double slope = f(Taylor::variable(x, 1))[1];
        // fixed-slope Newton on series: each pass fixes one more coefficient of g with f(g(s)) = y0 + s
        Taylor g = Taylor::variable(x, n), target = Taylor::variable(t.value(), n);
        for (int it = 0; it <= n; ++it) g -= (f(g) - target) / slope;
        g[0] = x;
        std::vector<double> d(n + 1);
        for (int k = 0; k <= n; ++k) d[k] = g.derivative(k);
        return t.compose_derivatives(d);
      }, true);
    }
    return LocalMap(std::move(label), {dom}, forward, {img}, inv);
  }

  const std::string& label() const { return label_; }
  bool is_identity() const { return identity_; }
  const SmoothMap1D& forward() const { return fwd_; }
  const SmoothMap1D& inverse() const { return inv_; }
  const std::vector<Interval>& domain() const { return domain_; }
  const std::vector<Interval>& image() const { return image_; }

  bool defined(double x, int sign) const {
    const auto& d = sign > 0 ? domain_ : image_;
    return std::any_of(d.begin(), d.end(), [x](const Interval& I) { return I.contains(x); });
  }
  const SmoothMap1D& branch(int sign) const { return sign > 0 ? fwd_ : inv_; }

 private:
  std::string label_;
  std::vector<Interval> domain_, image_;
  SmoothMap1D fwd_, inv_;
  bool identity_ = false;
};

struct Letter {
  size_t gen = 0;
  int power = 1;  // nonzero; |power| consecutive applications
  bool operator==(const Letter& o) const { return gen == o.gen && power == o.power; }
};

struct Word {
  std::vector<Letter> letters;

  size_t length() const {
    size_t n = 0;
    for (const auto& l : letters) n += static_cast<size_t>(std::abs(l.power));
    return n;
  }
  bool empty() const { return letters.empty(); }
  // appends with run-length merging
  Word& push(Letter l) {
    if (l.power == 0) return *this;
    if (!letters.empty() && letters.back().gen == l.gen) {
      letters.back().power += l.power;
      if (letters.back().power == 0) letters.pop_back();
    } else {
      letters.push_back(l);
    }
    return *this;
  }
  Word inverse() const {
    Word w;
    for (auto it = letters.rbegin(); it != letters.rend(); ++it) w.push({it->gen, -it->power});
    return w;
  }
  Word then(const Word& o) const {
    Word w = *this;
    for (const auto& l : o.letters) w.push(l);
    return w;
  }
  bool operator==(const Word& o) const { return letters == o.letters; }
};

struct PseudogroupSystem {
  Transversal transversal;
  std::vector<LocalMap> gens;

  std::string describe(const Word& w) const {
    if (w.empty()) return "e";
    std::string s;
    for (const auto& l : w.letters) {
      if (!s.empty()) s += " ";
      s += gens.at(l.gen).label();
      if (l.power != 1) s += "^" + std::to_string(l.power);
    }
    return s;
  }
  std::optional<size_t> find(const std::string& label) const {
    for (size_t i = 0; i < gens.size(); ++i)
      if (gens[i].label() == label) return i;
    return std::nullopt;
  }
};

// One application of gen^{sign}; nullopt on a domain exit.
inline std::optional<double> apply_letter(const PseudogroupSystem& S, size_t gen, int sign, double x) {
  const auto& g = S.gens[gen];
  if (!g.defined(x, sign)) return std::nullopt;
  return S.transversal.normalize(g.branch(sign)(x));
}

struct WordResult {
  std::optional<double> value;
  size_t failed_prefix = 0;  // letters (with multiplicity) applied before the exit
  bool defined() const { return value.has_value(); }
};

inline WordResult apply_word(const PseudogroupSystem& S, const Word& w, double x) {
  size_t applied = 0;
  x = S.transversal.normalize(x);
  for (const auto& l : w.letters) {
    int sign = l.power > 0 ? 1 : -1;
    for (int k = 0; k < std::abs(l.power); ++k) {
      auto y = apply_letter(S, l.gen, sign, x);
      if (!y) return {std::nullopt, applied};
      x = *y;
      ++applied;
    }
  }
  return {x, applied};
}

// Jet of the word's action at x; the circle lift is normalized by a constant shift.
inline std::optional<Taylor> apply_word_jet(const PseudogroupSystem& S, const Word& w, double x, int order) {
  Taylor t = Taylor::variable(S.transversal.normalize(x), order);
  for (const auto& l : w.letters) {
    int sign = l.power > 0 ? 1 : -1;
    const auto& g = S.gens[l.gen];
    for (int k = 0; k < std::abs(l.power); ++k) {
      if (!g.defined(t.value(), sign)) return std::nullopt;
      t = g.branch(sign)(t);
      t[0] = S.transversal.normalize(t[0]);
    }
  }
  return t;
}

struct SearchLimits {
  size_t node_budget = 5'000'000;
  double resolution = 1e-12;
};

namespace detail {
struct PointSet {
  double res;
  bool circle;
  std::unordered_map<long long, size_t> keys;
  explicit PointSet(double r, bool c) : res(r), circle(c) {}
  long long key(double x) const {
    long long k = std::llround(x / res);
    if (circle && k == std::llround(1.0 / res)) k = 0;
    return k;
  }
  // index of the existing entry, or -1 after inserting x as entry idx
  long insert(double x, size_t idx) {
    auto [it, fresh] = keys.try_emplace(key(x), idx);
    return fresh ? -1 : static_cast<long>(it->second);
  }
};
}  // namespace detail

struct OrbitNode {
  double point;
  long parent;  // -1 for the root
  Letter letter;
  int depth;
};

struct OrbitTree {
  std::vector<OrbitNode> nodes;
  Word word_to(size_t i) const {
    std::vector<Letter> rev;
    for (long j = static_cast<long>(i); nodes[j].parent >= 0; j = nodes[j].parent)
      rev.push_back(nodes[j].letter);
    Word w;
    for (auto it = rev.rbegin(); it != rev.rend(); ++it) w.push(*it);
    return w;
  }
  std::vector<double> points() const {
    std::vector<double> p;
    p.reserve(nodes.size());
    for (const auto& n : nodes) p.push_back(n.point);
    return p;
  }
};

namespace detail {
// BFS over reduced words; visit(tree, child_point, parent_index, letter, duplicate_of) runs for every
// child, duplicate_of = index of the node it coincides with, or -1 when it is new.
template <class Visit>
OrbitTree bfs_orbit(const PseudogroupSystem& S, double x, int depth, const SearchLimits& lim, Visit&& visit) {
  if (depth < 0) fail(ErrorKind::Parameter, "negative orbit depth");
  OrbitTree tree;
  PointSet seen(lim.resolution, S.transversal.is_circle());
  x = S.transversal.normalize(x);
  tree.nodes.push_back({x, -1, {}, 0});
  seen.insert(x, 0);
  size_t head = 0;
  while (head < tree.nodes.size()) {
    OrbitNode cur = tree.nodes[head];
    if (cur.depth >= depth) break;
    for (size_t g = 0; g < S.gens.size(); ++g) {
      if (S.gens[g].is_identity()) continue;
      for (int sign : {1, -1}) {
        if (cur.parent >= 0 && cur.letter.gen == g && cur.letter.power == -sign) continue;
        auto y = apply_letter(S, g, sign, cur.point);
        if (!y) continue;
        Letter l{g, sign};
        long dup = seen.insert(*y, tree.nodes.size());
        if (dup < 0) {
          if (tree.nodes.size() >= lim.node_budget)
            fail(ErrorKind::BudgetExceeded,
                 "orbit node budget " + std::to_string(lim.node_budget) + " exceeded");
          tree.nodes.push_back({*y, static_cast<long>(head), l, cur.depth + 1});
        }
        if (!visit(tree, *y, static_cast<long>(head), l, dup)) return tree;
      }
    }
    ++head;
  }
  return tree;
}
}  // namespace detail

inline OrbitTree orbit_tree(const PseudogroupSystem& S, double x, int depth, const SearchLimits& lim = {}) {
  return detail::bfs_orbit(S, x, depth, lim, [](const OrbitTree&, double, long, Letter, long) { return true; });
}

inline std::vector<double> orbit(const PseudogroupSystem& S, double x, int depth, const SearchLimits& lim = {}) {
  return orbit_tree(S, x, depth, lim).points();
}

// A letter is inert at z when its generator agrees with the identity on a small sampled neighbourhood.
inline bool letter_inert(const PseudogroupSystem& S, size_t gen, int sign, double z) {
  if (S.gens[gen].is_identity()) return true;
  for (int j = -2; j <= 2; ++j) {
    double p = z + j * 1e-7;
    if (!S.transversal.is_circle()) p = std::clamp(p, 0.0, 1.0);
    auto y = apply_letter(S, gen, sign, S.transversal.normalize(p));
    if (!y) return false;
    if (S.transversal.distance(*y, S.transversal.normalize(p)) > 1e-13) return false;
  }
  return true;
}

// Drops inert letters and cancels adjacent inverse pairs; empty result = identity germ at x.
inline Word effective_word(const PseudogroupSystem& S, const Word& w, double x) {
  std::vector<Letter> stack;
  x = S.transversal.normalize(x);
  for (const auto& l : w.letters) {
    int sign = l.power > 0 ? 1 : -1;
    for (int k = 0; k < std::abs(l.power); ++k) {
      if (!letter_inert(S, l.gen, sign, x)) {
        if (!stack.empty() && stack.back().gen == l.gen && stack.back().power == -sign) stack.pop_back();
        else stack.push_back({l.gen, sign});
      }
      auto y = apply_letter(S, l.gen, sign, x);
      if (!y) return Word{};
      x = *y;
    }
  }
  Word e;
  for (auto s : stack) e.push(s);
  return e;
}

struct RecurrenceWitness {
  Word word;
  double distance = 0.0;
  bool periodic = false;  // exact return (within the deduplication resolution)
};

inline std::optional<RecurrenceWitness> detect_recurrence(const PseudogroupSystem& S, double x, int depth,
                                                          double tol, const SearchLimits& lim = {}) {
  if (!(tol > 0.0)) fail(ErrorKind::Parameter, "recurrence tolerance must be positive");
  x = S.transversal.normalize(x);
  std::optional<RecurrenceWitness> best;
  // returns within tol; a child coinciding with an existing node closes a loop (exact return)
  struct Cand {
    long parent;
    Letter letter;
    long dup;
    double dist;
  };
  std::vector<Cand> cands;
  OrbitTree tree = detail::bfs_orbit(S, x, depth, lim, [&](const OrbitTree&, double y, long parent, Letter l, long dup) {
    double d = S.transversal.distance(x, y);
    if (d <= tol) cands.push_back({parent, l, -1, d});
    if (dup > 0) cands.push_back({parent, l, dup, 0.0});
    return true;
  });
  for (auto& c : cands) {
    if (c.dup < 0) continue;
    Word w = tree.word_to(static_cast<size_t>(c.parent));
    w.push(c.letter);
    w = w.then(tree.word_to(static_cast<size_t>(c.dup)).inverse());
    auto r = apply_word(S, w, x);
    c.dist = r.defined() ? S.transversal.distance(*r.value, x) : INFINITY;
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.dist < b.dist; });
  for (const auto& c : cands) {
    if (!(c.dist <= tol)) break;
    Word w = tree.word_to(static_cast<size_t>(c.parent));
    w.push(c.letter);
    if (c.dup >= 0) w = w.then(tree.word_to(static_cast<size_t>(c.dup)).inverse());
    if (w.empty() || effective_word(S, w, x).empty()) continue;
    best = RecurrenceWitness{w, c.dist, c.dist <= lim.resolution};
    break;
  }
  return best;
}

struct ResilienceSearch {
  int depth = 12;
  int grid = 4096;
  double tol = 1e-10;
  int max_iter = 500;
  double converge_tol = 1e-6;
  long return_depth = 0;  // extra single-generator power search for orbit-mates
  size_t node_budget = 2'000'000;
  size_t max_candidates = 64;
};

struct ResilienceCertificate {
  Word h;
  double x = 0.0;
  double derivative = 0.0;  // h'(x)
  double y = 0.0;
  Word connecting;  // connecting(x) = y
  std::vector<double> distances;  // |h^n(y) - x|, n = 0..N
};

// Iterates h from y; returns distances if they decrease strictly to <= tol within max_iter.
inline std::optional<std::vector<double>> capture_distances(const PseudogroupSystem& S, const Word& h,
                                                            double x, double y, int max_iter, double tol) {
  std::vector<double> d{S.transversal.distance(y, x)};
  double z = y;
  for (int n = 0; n < max_iter && d.back() > tol; ++n) {
    auto r = apply_word(S, h, z);
    if (!r.defined()) return std::nullopt;
    z = *r.value;
    double dn = S.transversal.distance(z, x);
    if (!(dn < d.back())) return std::nullopt;
    d.push_back(dn);
  }
  if (d.back() > tol) return std::nullopt;
  return d;
}

namespace detail {
struct Candidate {
  double point;
  Word word;
  double dist;
};

inline std::optional<double> refine_fixed_point(const PseudogroupSystem& S, const Word& h, double lo, double hi,
                                                double tol) {
  auto disp = [&](double z) -> std::optional<double> {
    auto r = apply_word(S, h, z);
    if (!r.defined()) return std::nullopt;
    return S.transversal.displacement(S.transversal.normalize(z), *r.value);
  };
  auto dlo = disp(lo), dhi = disp(hi);
  if (!dlo || !dhi) return std::nullopt;
  if (*dlo == 0.0) return S.transversal.normalize(lo);
  if (*dhi == 0.0) return S.transversal.normalize(hi);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    auto dm = disp(mid);
    if (!dm) return std::nullopt;
    if (*dm == 0.0) return S.transversal.normalize(mid);
    if ((*dm > 0) == (*dlo > 0)) lo = mid, dlo = dm;
    else hi = mid;
  }
  double x = S.transversal.normalize(0.5 * (lo + hi));
  auto dx = disp(x);
  if (!dx || std::abs(*dx) > tol) return std::nullopt;
  return x;
}
}  // namespace detail

inline std::optional<ResilienceCertificate> detect_resilience(const PseudogroupSystem& S,
                                                              const ResilienceSearch& P) {
  if (P.depth <= 0 || P.grid < 2 || !(P.tol > 0) || P.max_iter <= 0)
    fail(ErrorKind::Parameter, "resilience search parameters must be positive");
  const auto& T = S.transversal;
  std::vector<double> grid = sample_grid(T.domain(), P.grid);
  std::vector<double> probes;
  for (int i = 0; i < 64; ++i) probes.push_back((i + 0.5) / 64.0 + 0.0012);

  // BFS over words, deduplicated by action on the probe points
  struct WNode {
    Word w;
    Letter last;
  };
  std::vector<WNode> frontier{{Word{}, {}}};
  std::unordered_set<std::string> seen_actions;
  auto signature = [&](const Word& w) {
    std::string sig;
    for (double p : probes) {
      auto r = apply_word(S, w, p);
      sig += r.defined() ? std::to_string(std::llround(*r.value * 1e9)) : "u";
      sig += ',';
    }
    return sig;
  };
  seen_actions.insert(signature(Word{}));
  size_t visited = 0;

  auto try_word = [&](const Word& h) -> std::optional<ResilienceCertificate> {
    std::vector<std::optional<double>> disp(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
      auto r = apply_word(S, h, grid[i]);
      if (r.defined()) disp[i] = T.displacement(grid[i], *r.value);
    }
    size_t n = grid.size();
    size_t pairs = T.is_circle() ? n : n - 1;
    for (size_t i = 0; i < pairs; ++i) {
      size_t j = (i + 1) % n;
      if (!disp[i] || !disp[j]) continue;
      double a = *disp[i], b = *disp[j];
      // attracting crossing: displacement goes from >= 0 to <= 0, not identically zero
      if (!(a >= 0.0 && b <= 0.0) || (a == 0.0 && b == 0.0)) continue;
      if (a == 0.0) {
        size_t k = (i + n - 1) % n;
        if (!disp[k] || !(*disp[k] > 0.0)) continue;
      }
      double lo = grid[i], hi = j == 0 ? 1.0 : grid[j];
      auto x = detail::refine_fixed_point(S, h, lo, hi, P.tol);
      if (!x) continue;
      auto jet = apply_word_jet(S, h, *x, 1);
      if (!jet || !(std::abs((*jet)[1]) < 1.0)) continue;
      double deriv = (*jet)[1];

      // orbit-mates of x: BFS orbit plus single-generator powers
      std::vector<detail::Candidate> cands;
      SearchLimits lim{P.node_budget, 1e-12};
      OrbitTree tree = orbit_tree(S, *x, P.depth, lim);
      for (size_t k = 1; k < tree.nodes.size(); ++k) {
        double d = T.distance(tree.nodes[k].point, *x);
        if (d > 1e-12) cands.push_back({tree.nodes[k].point, tree.word_to(k), d});
      }
      if (P.return_depth > 0) {
        for (size_t g = 0; g < S.gens.size(); ++g) {
          if (S.gens[g].is_identity()) continue;
          for (int sign : {1, -1}) {
            double z = *x;
            for (long p = 1; p <= P.return_depth; ++p) {
              auto y = apply_letter(S, g, sign, z);
              if (!y) break;
              if (T.distance(*y, z) == 0.0) break;  // fixed by this generator
              z = *y;
              double d = T.distance(z, *x);
              if (d > 1e-12 && d < 0.5) {
                Word w;
                w.push({g, static_cast<int>(sign * p)});
                cands.push_back({z, w, d});
              }
              if (cands.size() > 4 * P.max_candidates + 4096) {
                std::nth_element(cands.begin(), cands.begin() + P.max_candidates, cands.end(),
                                 [](const auto& u, const auto& v) { return u.dist < v.dist; });
                cands.resize(P.max_candidates);
              }
            }
          }
        }
      }
      std::stable_sort(cands.begin(), cands.end(), [](const auto& u, const auto& v) { return u.dist < v.dist; });
      if (cands.size() > P.max_candidates) cands.resize(P.max_candidates);
      for (const auto& c : cands) {
        auto d = capture_distances(S, h, *x, c.point, P.max_iter, P.converge_tol);
        if (!d) continue;
        return ResilienceCertificate{h, *x, deriv, c.point, c.word, *d};
      }
    }
    return std::nullopt;
  };

  for (int len = 1; len <= P.depth; ++len) {
    std::vector<WNode> next;
    for (const auto& node : frontier) {
      for (size_t g = 0; g < S.gens.size(); ++g) {
        if (S.gens[g].is_identity()) continue;
        for (int sign : {1, -1}) {
          if (!node.w.empty() && node.last.gen == g && node.last.power == -sign) continue;
          Word w = node.w;
          w.push({g, sign});
          if (!seen_actions.insert(signature(w)).second) continue;
          if (++visited > P.node_budget)
            fail(ErrorKind::BudgetExceeded, "resilience word budget " + std::to_string(P.node_budget) + " exceeded");
          if (auto cert = try_word(w)) return cert;
          next.push_back({w, {g, sign}});
        }
      }
    }
    frontier = std::move(next);
    if (frontier.empty()) break;
  }
  return std::nullopt;
}

struct VerifyResult {
  bool ok = true;
  std::string check;
  double residual = 0.0;
};

// Recomputes every stored quantity of a certificate from the generators alone.
inline VerifyResult verify_certificate(const PseudogroupSystem& S, const ResilienceCertificate& c,
                                       double converge_tol, double tol = 1e-10) {
  const auto& T = S.transversal;
  auto hx = apply_word(S, c.h, c.x);
  if (!hx.defined()) return {false, "h(x) undefined", INFINITY};
  double r = T.distance(*hx.value, c.x);
  if (r > tol) return {false, "fixed point |h(x) - x|", r};
  auto J = apply_word_jet(S, c.h, c.x, 1);
  if (!J || !(std::abs((*J)[1]) < 1.0)) return {false, "attracting |h'(x)| < 1", J ? std::abs((*J)[1]) : INFINITY};
  if (T.distance(c.x, c.y) <= 1e-12) return {false, "orbit-mate y != x", 0.0};
  auto wy = apply_word(S, c.connecting, c.x);
  if (!wy.defined()) return {false, "connecting word undefined", INFINITY};
  r = T.distance(*wy.value, c.y);
  if (r > tol) return {false, "connecting word w(x) = y", r};
  if (c.distances.empty()) return {false, "iterate distances missing", INFINITY};
  double z = c.y;
  for (size_t n = 0; n < c.distances.size(); ++n) {
    double d = T.distance(z, c.x);
    if (std::abs(d - c.distances[n]) > tol) return {false, "iterate distance " + std::to_string(n), std::abs(d - c.distances[n])};
    if (n > 0 && !(c.distances[n] < c.distances[n - 1])) return {false, "iterate distances strictly decreasing", c.distances[n]};
    auto hz = apply_word(S, c.h, z);
    if (!hz.defined()) return {false, "iterate undefined", INFINITY};
    z = *hz.value;
  }
  if (c.distances.back() > converge_tol) return {false, "final iterate distance", c.distances.back()};
  return {};
}

}  // namespace folia
