#pragma once

#include "npw/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace npw::roots {

struct Bracketed {
  double root = 0.0;
  double residual = 0.0;  // f(root)
  double lo = 0.0;        // final bracket
  double hi = 0.0;
  int iterations = 0;
};

/// Brent-Dekker hybrid of bisection, secant and inverse quadratic steps on a
/// sign-changing bracket [lo, hi]. Stops when |f| <= f_tol or the bracket
/// collapses to a few ulps.
template <class F>
Bracketed brent(F&& f, double lo, double hi, double f_lo, double f_hi, double f_tol, int max_iter = 200) {
  if (f_lo == 0.0) return {lo, 0.0, lo, lo, 0};
  if (f_hi == 0.0) return {hi, 0.0, hi, hi, 0};
  if ((f_lo > 0.0) == (f_hi > 0.0)) throw BracketError("root not bracketed");

  double a = lo, b = hi, fa = f_lo, fb = f_hi;
  double c = a, fc = fa, d = b - a, e = d;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  int it = 0;
  for (; it < max_iter; ++it) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * eps * std::abs(b);
    const double xm = 0.5 * (c - b);
    if (std::abs(fb) <= f_tol || std::abs(xm) <= tol1 || fb == 0.0) break;

    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
      const double min2 = std::abs(e * q);
      if (2.0 * p < std::min(min1, min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol1 ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
  }
  return {b, fb, std::min(b, c), std::max(b, c), it};
}

}  // namespace npw::roots
