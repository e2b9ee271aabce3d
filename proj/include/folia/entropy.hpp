#pragma once
// Separated-set entropy estimates for finitely generated pseudogroups.
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "folia/errors.hpp"
#include "folia/pseudogroup.hpp"

namespace folia {

struct SeparationScale {
  int n = 1;
  double eps = 1.0 / 64;
  int grid = 4096;
  double jitter = 0.0;  // grid offset in units of 1 / grid, in [0, 1)
};

inline void check_scale(const SeparationScale& s) {
  if (s.n < 1 || !(s.eps > 0.0) || s.grid < 2) fail(ErrorKind::Parameter, "separation scale needs n >= 1, eps > 0, grid >= 2");
  if (!(s.jitter >= 0.0 && s.jitter < 1.0)) fail(ErrorKind::Parameter, "grid jitter must lie in [0, 1)");
}

// interval: k / grid for k = 0..grid; circle: k / grid for k < grid
inline std::vector<double> entropy_grid(const Transversal& T, int grid, double jitter = 0.0) {
  std::vector<double> g;
  int top = T.is_circle() ? grid - 1 : grid;
  for (int k = 0; k <= top; ++k) {
    double x = (k + jitter) / grid;
    if (x <= 1.0) g.push_back(x);
  }
  return g;
}

inline bool is_separated(double d, double eps) { return d >= eps * (1.0 - 1e-12); }

namespace detail {

struct LetterRef {
  size_t gen;
  int sign;
};

inline std::vector<LetterRef> active_letters(const PseudogroupSystem& S) {
  std::vector<LetterRef> out;
  for (size_t g = 0; g < S.gens.size(); ++g)
    if (!S.gens[g].is_identity()) out.push_back({g, 1}), out.push_back({g, -1});
  return out;
}

// Sampled sup |branch'| per letter, padded; used only for pruning.
inline std::vector<double> letter_lipschitz(const PseudogroupSystem& S, const std::vector<LetterRef>& L) {
  std::vector<double> lip;
  for (auto l : L) {
    double m = 0.0;
    for (int i = 0; i <= 4096; ++i) {
      double x = i / 4096.0;
      if (!S.gens[l.gen].defined(x, l.sign)) continue;
      m = std::max(m, std::abs(S.gens[l.gen].branch(l.sign)(Taylor::variable(x, 1))[1]));
    }
    lip.push_back(m == 1.0 ? 1.0 : m * (1.0 + 1e-3));
  }
  return lip;
}

struct Separator {
  const PseudogroupSystem& S;
  std::vector<LetterRef> letters;
  std::vector<double> lip;
  double lmax = 1.0;
  size_t budget;
  size_t used = 0;

  Separator(const PseudogroupSystem& s, size_t b) : S(s), letters(active_letters(s)), budget(b) {
    lip = letter_lipschitz(S, letters);
    for (double v : lip) lmax = std::max(lmax, v);
  }

  // d_n(x, y) >= eps ?  DFS over reduced words, pruned when dist * lmax^rem cannot reach eps.
  bool separated(double x, double y, int n, double eps) {
    const auto& T = S.transversal;
    struct Node {
      double x, y;
      int depth;
      int last;  // index into letters, -1 for the empty word
    };
    std::vector<double> powl(n + 1, 1.0);
    for (int k = 1; k <= n; ++k) powl[k] = powl[k - 1] * lmax;
    std::vector<Node> stack{{x, y, 0, -1}};
    while (!stack.empty()) {
      Node nd = stack.back();
      stack.pop_back();
      double d = T.distance(nd.x, nd.y);
      if (is_separated(d, eps)) return true;
      int rem = n - nd.depth;
      if (rem == 0 || d * powl[rem] < eps * (1.0 - 1e-12)) continue;
      for (size_t k = 0; k < letters.size(); ++k) {
        auto l = letters[k];
        if (nd.last >= 0 && letters[nd.last].gen == l.gen && letters[nd.last].sign == -l.sign) continue;
        auto a = apply_letter(S, l.gen, l.sign, nd.x);
        if (!a) continue;
        auto b = apply_letter(S, l.gen, l.sign, nd.y);
        if (!b) continue;
        if (++used > budget)
          fail(ErrorKind::BudgetExceeded, "entropy word budget " + std::to_string(budget) + " exceeded");
        stack.push_back({*a, *b, nd.depth + 1, static_cast<int>(k)});
      }
    }
    return false;
  }
};

// First-fit over the grid: keep a point iff it is separated from every kept point.
template <class Sep>
int greedy_count(const Transversal& T, const std::vector<double>& pts, double eps, Sep&& sep) {
  std::vector<double> kept;
  for (double x : pts) {
    bool ok = true;
    // only kept points within eps in the plain metric can fail separation
    for (auto it = kept.rbegin(); ok && it != kept.rend() && x - *it < eps; ++it) ok = sep(x, *it);
    if (T.is_circle())
      for (auto it = kept.begin(); ok && it != kept.end() && *it + 1.0 - x < eps; ++it) ok = sep(x, *it);
    if (ok) kept.push_back(x);
  }
  return static_cast<int>(kept.size());
}

}  // namespace detail

inline int separated_count(const PseudogroupSystem& S, const SeparationScale& sc, size_t word_budget = 200'000'000) {
  check_scale(sc);
  detail::Separator sep(S, word_budget);
  auto pts = entropy_grid(S.transversal, sc.grid, sc.jitter);
  return detail::greedy_count(S.transversal, pts, sc.eps,
                              [&](double x, double y) { return sep.separated(x, y, sc.n, sc.eps); });
}

// Oracle: every reduced word of length <= n listed explicitly and applied from scratch, no pruning.
inline std::vector<Word> all_reduced_words(const PseudogroupSystem& S, int n) {
  auto L = detail::active_letters(S);
  std::vector<Word> out{Word{}};
  std::vector<std::pair<Word, int>> layer{{Word{}, -1}};
  for (int len = 1; len <= n; ++len) {
    std::vector<std::pair<Word, int>> next;
    for (const auto& [w, last] : layer)
      for (size_t k = 0; k < L.size(); ++k) {
        if (last >= 0 && L[last].gen == L[k].gen && L[last].sign == -L[k].sign) continue;
        Word u = w;
        u.push({L[k].gen, L[k].sign});
        out.push_back(u);
        next.push_back({u, static_cast<int>(k)});
      }
    layer = std::move(next);
  }
  return out;
}

inline int separated_count_bruteforce(const PseudogroupSystem& S, const SeparationScale& sc) {
  check_scale(sc);
  if (sc.n > 10) fail(ErrorKind::Parameter, "brute-force oracle limited to n <= 10");
  auto words = all_reduced_words(S, sc.n);
  const auto& T = S.transversal;
  auto pts = entropy_grid(T, sc.grid, sc.jitter);
  return detail::greedy_count(T, pts, sc.eps, [&](double x, double y) {
    double d = 0.0;
    for (const auto& w : words) {
      auto a = apply_word(S, w, x), b = apply_word(S, w, y);
      if (a.defined() && b.defined()) d = std::max(d, T.distance(*a.value, *b.value));
    }
    return is_separated(d, sc.eps);
  });
}

struct EntropyRow {
  int n;
  double eps;
  int count;
  double rate;  // log s / n
};

struct EntropyCurve {
  std::vector<EntropyRow> rows;
  std::vector<std::pair<double, double>> slopes;  // (eps, slope)
  std::string metric;
  double slope(double eps) const {
    for (auto [e, s] : slopes)
      if (e == eps) return s;
    fail(ErrorKind::Parameter, "no slope recorded for this epsilon");
  }
};

// least-squares slope of log s(n) over n in [max(1, n_max / 2), n_max]
inline double upper_half_slope(const std::vector<int>& counts) {
  int n_max = static_cast<int>(counts.size());
  int lo = std::max(1, n_max / 2);
  if (std::all_of(counts.begin() + lo - 1, counts.end(), [&](int c) { return c == counts[lo - 1]; })) return 0.0;
  double m = n_max - lo + 1, nbar = 0.0, ybar = 0.0;
  std::vector<double> y;
  for (int n = lo; n <= n_max; ++n) y.push_back(std::log(static_cast<double>(counts[n - 1])));
  for (int n = lo; n <= n_max; ++n) nbar += n / m, ybar += y[n - lo] / m;
  double sxy = 0.0, sxx = 0.0;
  for (int n = lo; n <= n_max; ++n) sxy += (n - nbar) * (y[n - lo] - ybar), sxx += (n - nbar) * (n - nbar);
  return sxx == 0.0 ? 0.0 : sxy / sxx;
}

inline EntropyCurve entropy_estimate(const PseudogroupSystem& S, int n_max, const std::vector<double>& eps_list,
                                     int grid = 4096, bool brute_force = false, double jitter = 0.0) {
  if (n_max < 2) fail(ErrorKind::Parameter, "entropy_estimate needs n_max >= 2");
  EntropyCurve c;
  c.metric = S.transversal.is_circle() ? "circle arc length (period 1)" : "interval |x - y| on [0, 1]";
  for (double eps : eps_list) {
    std::vector<int> counts;
    for (int n = 1; n <= n_max; ++n) {
      SeparationScale sc{n, eps, grid, jitter};
      int s = brute_force ? separated_count_bruteforce(S, sc) : separated_count(S, sc);
      counts.push_back(s);
      c.rows.push_back({n, eps, s, std::log(static_cast<double>(s)) / n});
    }
    c.slopes.push_back({eps, upper_half_slope(counts)});
  }
  return c;
}

struct HurderReport {
  bool before_certificate = false, after_certificate = false;
  double before_slope = 0.0, after_slope = 0.0;
  std::string verdict;  // consistent | scale too coarse | consistent-trivially
  std::string note = "finite-scale entropy proxy of the generating set; not a verification of Hurder's theorem";
  std::string metric;
  SeparationScale scale;
};

inline std::string hurder_verdict(bool after_cert, double before_slope, double after_slope) {
  if (!after_cert) return "consistent-trivially";
  return after_slope > before_slope ? "consistent" : "scale too coarse";
}

inline HurderReport hurder_report(const PseudogroupSystem& before, bool before_cert, const PseudogroupSystem& after,
                                  bool after_cert, int n_max, double eps, int grid) {
  HurderReport r;
  r.before_certificate = before_cert, r.after_certificate = after_cert;
  auto cb = entropy_estimate(before, n_max, {eps}, grid);
  auto ca = entropy_estimate(after, n_max, {eps}, grid);
  r.before_slope = cb.slopes[0].second, r.after_slope = ca.slopes[0].second;
  r.metric = ca.metric;
  r.scale = {n_max, eps, grid};
  r.verdict = hurder_verdict(after_cert, r.before_slope, r.after_slope);
  return r;
}

}  // namespace folia
