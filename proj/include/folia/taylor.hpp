#pragma once
// Truncated Taylor arithmetic. Coefficients are normalized: c[k] = f^(k)(t0) / k!.
#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "folia/errors.hpp"

namespace folia {

inline constexpr int kTaylorCapacity = 16;

class Taylor {
 public:
  Taylor() = default;
  Taylor(double v, int order) : n_(order) {
    check_order(order);
    c_[0] = v;
  }
  static Taylor constant(double v, int order) { return Taylor(v, order); }
  static Taylor variable(double x, int order) {
    Taylor t(x, order);
    if (order >= 1) t.c_[1] = 1.0;
    return t;
  }

  int order() const { return n_; }
  double value() const { return c_[0]; }
  double operator[](int k) const { return c_[k]; }
  double& operator[](int k) { return c_[k]; }
  std::span<const double> coeffs() const { return {c_.data(), static_cast<size_t>(n_ + 1)}; }

  // Derivative of order k at the expansion point.
  double derivative(int k) const {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return c_[k] * f;
  }

  Taylor with_value(double v) const {
    Taylor t = *this;
    t.c_[0] = v;
    return t;
  }

  Taylor& operator+=(const Taylor& o) {
    for (int k = 0; k <= n_; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Taylor& operator-=(const Taylor& o) {
    for (int k = 0; k <= n_; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Taylor& operator+=(double v) { c_[0] += v; return *this; }
  Taylor& operator-=(double v) { c_[0] -= v; return *this; }
  Taylor& operator*=(double v) {
    for (int k = 0; k <= n_; ++k) c_[k] *= v;
    return *this;
  }
  Taylor& operator/=(double v) { return *this *= (1.0 / v); }
  Taylor& operator*=(const Taylor& o) { return *this = *this * o; }
  Taylor& operator/=(const Taylor& o) { return *this = *this / o; }

  Taylor operator-() const {
    Taylor t = *this;
    for (int k = 0; k <= n_; ++k) t.c_[k] = -t.c_[k];
    return t;
  }

  friend Taylor operator+(Taylor a, const Taylor& b) { return a += b; }
  friend Taylor operator-(Taylor a, const Taylor& b) { return a -= b; }
  friend Taylor operator+(Taylor a, double b) { return a += b; }
  friend Taylor operator+(double b, Taylor a) { return a += b; }
  friend Taylor operator-(Taylor a, double b) { return a -= b; }
  friend Taylor operator-(double b, const Taylor& a) { return (-a) += b; }
  friend Taylor operator*(Taylor a, double b) { return a *= b; }
  friend Taylor operator*(double b, Taylor a) { return a *= b; }
  friend Taylor operator/(Taylor a, double b) { return a /= b; }

  friend Taylor operator*(const Taylor& a, const Taylor& b) {
    Taylor r(0.0, std::min(a.n_, b.n_));
    for (int k = 0; k <= r.n_; ++k) {
      double s = 0.0;
      for (int j = 0; j <= k; ++j) s += a.c_[j] * b.c_[k - j];
      r.c_[k] = s;
    }
    return r;
  }

  friend Taylor operator/(const Taylor& a, const Taylor& b) {
    if (b.c_[0] == 0.0) fail(ErrorKind::Domain, "division by a series with zero constant term");
    Taylor q(0.0, std::min(a.n_, b.n_));
    for (int k = 0; k <= q.n_; ++k) {
      double s = a.c_[k];
      for (int j = 1; j <= k; ++j) s -= b.c_[j] * q.c_[k - j];
      q.c_[k] = s / b.c_[0];
    }
    return q;
  }
  friend Taylor operator/(double a, const Taylor& b) { return Taylor(a, b.n_) / b; }

  friend Taylor exp(const Taylor& a) {
    Taylor e(std::exp(a.c_[0]), a.n_);
    for (int k = 1; k <= a.n_; ++k) {
      double s = 0.0;
      for (int j = 1; j <= k; ++j) s += j * a.c_[j] * e.c_[k - j];
      e.c_[k] = s / k;
    }
    return e;
  }

  friend Taylor log(const Taylor& a) {
    if (!(a.c_[0] > 0.0)) fail(ErrorKind::Domain, "log of a non-positive value");
    Taylor l(std::log(a.c_[0]), a.n_);
    for (int k = 1; k <= a.n_; ++k) {
      double s = a.c_[k];
      for (int j = 1; j < k; ++j) s -= (static_cast<double>(j) / k) * l.c_[j] * a.c_[k - j];
      l.c_[k] = s / a.c_[0];
    }
    return l;
  }

  friend void sincos(const Taylor& a, Taylor& s, Taylor& c) {
    s = Taylor(std::sin(a.c_[0]), a.n_);
    c = Taylor(std::cos(a.c_[0]), a.n_);
    for (int k = 1; k <= a.n_; ++k) {
      double ss = 0.0, cc = 0.0;
      for (int j = 1; j <= k; ++j) {
        ss += j * a.c_[j] * c.c_[k - j];
        cc -= j * a.c_[j] * s.c_[k - j];
      }
      s.c_[k] = ss / k;
      c.c_[k] = cc / k;
    }
  }
  friend Taylor sin(const Taylor& a) {
    Taylor s, c;
    sincos(a, s, c);
    return s;
  }
  friend Taylor cos(const Taylor& a) {
    Taylor s, c;
    sincos(a, s, c);
    return c;
  }

  friend Taylor sqrt(const Taylor& a) {
    if (!(a.c_[0] > 0.0)) fail(ErrorKind::Domain, "sqrt needs a positive value");
    Taylor r(std::sqrt(a.c_[0]), a.n_);
    for (int k = 1; k <= a.n_; ++k) {
      double s = a.c_[k];
      for (int j = 1; j < k; ++j) s -= r.c_[j] * r.c_[k - j];
      r.c_[k] = s / (2.0 * r.c_[0]);
    }
    return r;
  }

  friend Taylor pow(const Taylor& a, int p) {
    if (p < 0) return 1.0 / pow(a, -p);
    Taylor r(1.0, a.n_), base = a;
    while (p) {
      if (p & 1) r = r * base;
      base = base * base;
      p >>= 1;
    }
    return r;
  }

  // f(this) where d[k] = f^(k)(value()) for k = 0..order.
  Taylor compose_derivatives(std::span<const double> d) const {
    Taylor delta = *this;
    delta.c_[0] = 0.0;
    int n = n_;
    std::vector<double> coef(n + 1);
    double fact = 1.0;
    for (int k = 0; k <= n; ++k) {
      if (k > 0) fact *= k;
      coef[k] = k < static_cast<int>(d.size()) ? d[k] / fact : 0.0;
    }
    Taylor r(coef[n], n);
    for (int k = n - 1; k >= 0; --k) {
      r = r * delta;
      r.c_[0] += coef[k];
    }
    return r;
  }

 private:
  static void check_order(int order) {
    if (order < 0 || order >= kTaylorCapacity)
      fail(ErrorKind::UnsupportedOrder, "order " + std::to_string(order) + " outside [0, " +
                                            std::to_string(kTaylorCapacity - 1) + "]");
  }
  std::array<double, kTaylorCapacity> c_{};
  int n_ = 0;
};

}  // namespace folia
