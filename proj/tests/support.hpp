#pragma once

#include "npw/npw_metric.hpp"

#include <random>

namespace npw::testing {

inline Vector coords(const SpacetimePoint& p) {
  const auto n = p.x.size();
  Vector c(n + 2);
  c.head(n) = p.x;
  c[n] = p.u;
  c[n + 1] = p.v;
  return c;
}

inline SpacetimePoint point(const Vector& c) {
  const auto n = c.size() - 2;
  return SpacetimePoint{c.head(n), c[n], c[n + 1]};
}

/// Gamma^s_{mn} = 1/2 l^{sr} (d_m l_{rn} + d_n l_{rm} - d_r l_{mn}) with
/// central differences of the assembled metric matrix.
inline ChristoffelTable fd_christoffels(const MetricAssembly& ma, const SpacetimePoint& p, double h = 1e-5) {
  const int m = ma.dim() + 2;
  const Vector c = coords(p);
  std::vector<Matrix> dl(m);
  for (int k = 0; k < m; ++k) {
    Vector cp = c, cm = c;
    cp[k] += h;
    cm[k] -= h;
    dl[k] = (metric_matrix(ma, point(cp)) - metric_matrix(ma, point(cm))) / (2.0 * h);
  }
  const Matrix li = metric_matrix(ma, p).inverse();
  ChristoffelTable g(m);
  for (int s = 0; s < m; ++s)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        double acc = 0.0;
        for (int r = 0; r < m; ++r) acc += li(s, r) * (dl[a](r, b) + dl[b](r, a) - dl[r](a, b));
        g(s, a, b) = 0.5 * acc;
      }
  return g;
}

inline SpacetimePoint random_point(int n, std::mt19937_64& rng, double half_width = 2.0) {
  std::uniform_real_distribution<double> d(-half_width, half_width);
  SpacetimePoint p{Vector(n), d(rng), d(rng)};
  for (int i = 0; i < n; ++i) p.x[i] = d(rng);
  return p;
}

}  // namespace npw::testing
