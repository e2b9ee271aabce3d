#pragma once
// Independent numerical oracles used by the test suites.
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// k-th central difference divided by h^k.
inline double central_difference(const std::function<double(double)>& f, double x, int k, double h) {
  double binom = 1.0, sum = 0.0;
  for (int j = 0; j <= k; ++j) {
    double sign = (j % 2) ? -1.0 : 1.0;
    sum += sign * binom * f(x + (0.5 * k - j) * h);
    binom = binom * (k - j) / (j + 1);
  }
  return sum / std::pow(h, k);
}

// Richardson tableau over h, h/2, h/4, ...; the central scheme has an even error expansion.
inline double richardson_derivative(const std::function<double(double)>& f, double x, int k,
                                    double h, int levels = 3) {
  if (k == 0) return f(x);
  std::vector<double> row;
  for (int i = 0; i < levels; ++i) row.push_back(central_difference(f, x, k, h / std::pow(2.0, i)));
  for (int lvl = 1; lvl < levels; ++lvl) {
    double p = std::pow(4.0, lvl);
    for (int i = levels - 1; i >= lvl; --i) row[i] = (p * row[i] - row[i - 1]) / (p - 1.0);
  }
  return row.back();
}

// Step sizes balancing truncation and round-off (order 1 uses the 1e-5 baseline).
inline double richardson_step(int k) {
  static const double steps[] = {0.0, 1e-5, 4e-3, 2e-2, 4e-2, 6e-2};
  return steps[k];
}

inline double dense_sup(const std::function<double(double)>& f, double lo, double hi, int n) {
  double best = 0.0;
  for (int i = 0; i < n; ++i) best = std::max(best, std::abs(f(lo + (hi - lo) * i / (n - 1))));
  return best;
}

}  // namespace oracle
