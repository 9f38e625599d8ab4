#pragma once

// Globally adaptive Gauss-Kronrod (7/15) integration with an absolute
// tolerance. Node and weight tables come from Boost.Math; the panel error
// estimate follows the QUADPACK qk15 heuristic.

#include "npw/common.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace npw::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
};

namespace detail {

struct Panel {
  double a, b, value, error, abs_value;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15_panel(F& f, double a, double b) {
  using kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using gauss = boost::math::quadrature::gauss<double, 7>;
  const auto& xk = kronrod::abscissa();
  const auto& wk = kronrod::weights();
  const auto& wg = gauss::weights();

  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double fv[15];
  fv[0] = f(center);
  for (std::size_t i = 1; i < xk.size(); ++i) {
    fv[2 * i - 1] = f(center - half * xk[i]);
    fv[2 * i] = f(center + half * xk[i]);
  }

  double resk = fv[0] * wk[0];
  double resg = fv[0] * wg[0];
  double resabs = std::abs(resk);
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double pair = fv[2 * i - 1] + fv[2 * i];
    resk += wk[i] * pair;
    resabs += wk[i] * (std::abs(fv[2 * i - 1]) + std::abs(fv[2 * i]));
    if (i % 2 == 0) resg += wg[i / 2] * pair;
  }
  const double mean = 0.5 * resk;
  double resasc = wk[0] * std::abs(fv[0] - mean);
  for (std::size_t i = 1; i < xk.size(); ++i)
    resasc += wk[i] * (std::abs(fv[2 * i - 1] - mean) + std::abs(fv[2 * i] - mean));

  const double ah = std::abs(half);
  resasc *= ah;
  resabs *= ah;
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  return Panel{a, b, resk * half, err, resabs};
}

}  // namespace detail

/// Integrates f over [a, b] (b < a allowed) to the absolute tolerance.
/// `breakpoints` inside the interval become initial panel boundaries, which
/// is how jump discontinuities of piecewise integrands are handled.
template <class F>
Result integrate(F&& f, double a, double b, double abs_tol, std::span<const double> breakpoints = {},
                 int max_panels = 4000) {
  if (a == b) return {};
  const double sign = b < a ? -1.0 : 1.0;
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);

  std::vector<double> cuts{lo};
  for (double s : breakpoints)
    if (s > lo && s < hi) cuts.push_back(s);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<detail::Panel> heap;
  double total = 0.0;
  double total_err = 0.0;
  double total_abs = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto p = detail::gk15_panel(f, cuts[i], cuts[i + 1]);
    total += p.value;
    total_err += p.error;
    total_abs += p.abs_value;
    heap.push(p);
  }

  // Tolerances below the round-off level of \int |f| cannot be met; that
  // level is accepted instead.
  constexpr double roundoff = 100.0 * std::numeric_limits<double>::epsilon();
  int panels = static_cast<int>(heap.size());
  while (total_err > std::max(abs_tol, roundoff * total_abs)) {
    if (panels >= max_panels) {
      char msg[160];
      std::snprintf(msg, sizeof msg, "adaptive quadrature did not converge: achieved %.3g for target %.3g", total_err,
                    abs_tol);
      throw QuadratureError(msg, abs_tol, total_err);
    }
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      throw QuadratureError("adaptive quadrature hit panel resolution limit", abs_tol, total_err);
    }
    auto left = detail::gk15_panel(f, worst.a, mid);
    auto right = detail::gk15_panel(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    total_abs += left.abs_value + right.abs_value - worst.abs_value;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // Recompute the sum from the panels to shed accumulated update round-off.
  double sum = 0.0;
  double err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  return Result{sign * sum, err, panels};
}

}  // namespace npw::quad
