#include "npw/splitting.hpp"

#include "grid.hpp"
#include "npw/root_finding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace npw {

SplitChart::SplitChart(MetricAssembly ma, double quad_tol, double root_tol)
    : ma_(std::move(ma)), quad_tol_(quad_tol), root_tol_(root_tol) {
  if (!(quad_tol_ > 0.0) || !(root_tol_ > 0.0)) throw Error("splitting tolerances must be positive");
}

double SplitChart::big_f(const Vector& x, double u) const {
  if (u == 0.0) return 0.0;
  return 2.0 * lambda() * u - profile().integral_u(x, 0.0, u, quad_tol_);
}

double SplitChart::big_f_inverse(const Vector& x, double z) const {
  if (z == 0.0) return 0.0;
  const double lam = lambda();
  double lo = z > 0.0 ? z / (2.0 * lam) : z / lam;
  double hi = z > 0.0 ? z / lam : z / (2.0 * lam);
  auto f = [&](double k) { return big_f(x, k) - z; };

  double f_lo = f(lo);
  double f_hi = f(hi);
  // Quadrature round-off can push the analytic bracket ends to the wrong
  // side by a hair; widen a little before giving up.
  const double pad = 1e-9 * (1.0 + std::abs(z)) / lam;
  for (int i = 0; i < 4 && f_lo > 0.0; ++i) f_lo = f(lo -= pad * (1 << i));
  for (int i = 0; i < 4 && f_hi < 0.0; ++i) f_hi = f(hi += pad * (1 << i));
  if (f_lo > 0.0 || f_hi < 0.0) {
    throw BracketError("internal: F_x^{-1} bracket failed for z = " + std::to_string(z));
  }

  const double f_tol = root_tol_ * (1.0 + std::abs(z));
  const auto r = roots::brent(f, lo, hi, f_lo, f_hi, f_tol);
  if (std::abs(r.residual) > f_tol && r.hi - r.lo > 4.0 * std::numeric_limits<double>::epsilon() * std::abs(r.root)) {
    throw BracketError("internal: F_x^{-1} did not converge for z = " + std::to_string(z));
  }
  // One Newton correction with F' = 2 lambda - a in [lambda, 2 lambda]; the
  // step is at most |residual| / lambda, the distance to the true root.
  const double slope = 2.0 * lam - profile().eval(x, r.root);
  return r.root - r.residual / slope;
}

double SplitChart::big_k(const Vector& x, double t, double u) const {
  if (t == 0.0) return u;
  return big_f_inverse(x, t + big_f(x, u));
}

KDerivatives SplitChart::k_derivatives(const Vector& x, double t, double u) const {
  const Profile& a = profile();
  if (!a.smooth()) throw UnsupportedInput("K derivatives need a smooth profile");
  const double lam = lambda();
  const double k = big_k(x, t, u);
  const double denom = 2.0 * lam - a.eval(x, k);
  KDerivatives d;
  d.dt = 1.0 / denom;
  d.du = (2.0 * lam - a.eval(x, u)) / denom;
  d.grad_x = dim() > 0 ? Vector(a.grad_x_integral_u(x, u, k, quad_tol_) / denom) : Vector(0);
  return d;
}

SpacetimePoint SplitChart::flow(double t, const SpacetimePoint& p) const {
  if (t == 0.0) return p;
  const double lam = lambda();
  const double k = big_k(p.x, t, p.u);
  return SpacetimePoint{p.x, k, p.v - lam * p.u - t + lam * k};
}

SpacetimePoint SplitChart::phi(double t, const Vector& x, double u) const {
  const double k = big_k(x, t, u);
  return SpacetimePoint{x, k, -t + lambda() * k};
}

SplitCoords SplitChart::psi(const SpacetimePoint& p) const {
  const double t = tau(ma_, p);
  return SplitCoords{t, p.x, big_k(p.x, -t, p.u)};
}

SplitMetricValue SplitChart::split_metric(double t, const Vector& x, double u) const {
  const int n = dim();
  const double lam = lambda();
  const KDerivatives kd = k_derivatives(x, t, u);
  const double two_lam_minus_big_a = 1.0 / kd.dt;
  const double two_lam_minus_a = 2.0 * lam - profile().eval(x, u);

  SplitMetricValue g;
  g.theta = kd.dt;
  g.H = Matrix::Zero(n + 1, n + 1);
  if (n > 0) {
    g.H.topLeftCorner(n, n) =
        ma_.base().metric_at(x) + two_lam_minus_big_a * kd.grad_x * kd.grad_x.transpose();
    g.H.block(0, n, n, 1) = two_lam_minus_a * kd.grad_x;
    g.H.block(n, 0, 1, n) = two_lam_minus_a * kd.grad_x.transpose();
  }
  g.H(n, n) = two_lam_minus_a * two_lam_minus_a / two_lam_minus_big_a;
  return g;
}

Matrix SplitChart::split_metric_matrix(double t, const Vector& x, double u) const {
  const int n = dim();
  const auto s = split_metric(t, x, u);
  Matrix g = Matrix::Zero(n + 2, n + 2);
  g(0, 0) = -s.theta;
  g.bottomRightCorner(n + 1, n + 1) = s.H;
  return g;
}

Matrix SplitChart::phi_jacobian(double t, const Vector& x, double u, JacobianMode mode) const {
  const int n = dim();
  const double lam = lambda();
  Matrix j = Matrix::Zero(n + 2, n + 2);
  if (mode == JacobianMode::analytic) {
    const KDerivatives kd = k_derivatives(x, t, u);
    for (int i = 0; i < n; ++i) j(i, 1 + i) = 1.0;
    j(n, 0) = kd.dt;
    j(n + 1, 0) = -1.0 + lam * kd.dt;
    for (int i = 0; i < n; ++i) {
      j(n, 1 + i) = kd.grad_x[i];
      j(n + 1, 1 + i) = lam * kd.grad_x[i];
    }
    j(n, n + 1) = kd.du;
    j(n + 1, n + 1) = lam * kd.du;
    return j;
  }

  auto as_vector = [n](const SpacetimePoint& p) {
    Vector out(n + 2);
    out.head(n) = p.x;
    out[n] = p.u;
    out[n + 1] = p.v;
    return out;
  };
  Vector c(n + 2);
  c[0] = t;
  c.segment(1, n) = x;
  c[n + 1] = u;
  for (int col = 0; col < n + 2; ++col) {
    const double h = 1e-5 * std::max(1.0, std::abs(c[col]));
    Vector cp = c, cm = c;
    cp[col] += h;
    cm[col] -= h;
    const Vector fp = as_vector(phi(cp[0], cp.segment(1, n), cp[n + 1]));
    const Vector fm = as_vector(phi(cm[0], cm.segment(1, n), cm[n + 1]));
    j.col(col) = (fp - fm) / (2.0 * h);
  }
  return j;
}

double SplitChart::pullback_residual(double t, const Vector& x, double u, JacobianMode mode) const {
  const Matrix j = phi_jacobian(t, x, u, mode);
  const Matrix l = metric_matrix(ma_, phi(t, x, u));
  const Matrix pulled = j.transpose() * l * j;
  return (pulled - split_metric_matrix(t, x, u)).cwiseAbs().maxCoeff();
}

RiemannBound riemann_lower_bound(std::span<const SplitChart> charts, std::span<const double> epsilons, double T,
                                 const Box& region, std::size_t samples, std::uint64_t seed) {
  if (charts.empty()) throw Error("riemann_lower_bound needs at least one chart");
  if (!epsilons.empty() && epsilons.size() != charts.size()) throw Error("one epsilon per chart required");
  const int n = charts.front().dim();
  if (region.dims() != static_cast<std::size_t>(n) + 1) throw DimensionError("region must be a box in (x, u)");
  double lam = std::numeric_limits<double>::infinity();
  for (const auto& c : charts) {
    if (c.dim() != n) throw DimensionError("charts of a net must share the base");
    lam = std::min(lam, c.lambda());
  }

  RiemannBound out;
  out.alpha = std::numeric_limits<double>::infinity();
  if (n > 0) {
    Box xbox{std::vector<Interval>(region.ranges.begin(), region.ranges.begin() + n)};
    const auto& base = charts.front().assembly().base();
    detail::for_each_uniform_node(xbox, 9, [&](const Vector& x) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(base.metric_at(x), Eigen::EigenvaluesOnly);
      out.alpha = std::min(out.alpha, es.eigenvalues()[0]);
    });
  }

  struct Sample {
    Matrix H;
    Vector v;
  };
  std::vector<Sample> drawn;
  drawn.reserve(samples);
  out.d_per_chart.assign(charts.size(), 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t ci = std::min<std::size_t>(charts.size() - 1, static_cast<std::size_t>(unit(rng) * charts.size()));
    const double t = -T + 2.0 * T * unit(rng);
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = region.ranges[i].lo + region.ranges[i].width() * unit(rng);
    const double u = region.ranges[n].lo + region.ranges[n].width() * unit(rng);
    Vector v(n + 1);
    for (int i = 0; i <= n; ++i) v[i] = normal(rng);

    const SplitChart& chart = charts[ci];
    const KDerivatives kd = chart.k_derivatives(x, t, u);
    if (n > 0) out.d_per_chart[ci] = std::max(out.d_per_chart[ci], kd.grad_x.norm());
    drawn.push_back({chart.split_metric(t, x, u).H, v});
  }
  out.d = *std::max_element(out.d_per_chart.begin(), out.d_per_chart.end());

  out.c = lam / 16.0;
  if (n > 0) {
    out.c = std::min(out.c, out.alpha / 2.0);
    if (out.d > 0.0) out.c = std::min(out.c, out.alpha / (16.0 * out.d * out.d));
  }

  if (epsilons.size() >= 3) {
    // Least-squares slope of log d against log eps.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
      if (out.d_per_chart[i] <= 0.0) continue;
      const double lx = std::log(epsilons[i]);
      const double ly = std::log(out.d_per_chart[i]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++m;
    }
    if (m >= 3) {
      const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
      const double first = out.d_per_chart.front();
      const double last = out.d_per_chart.back();
      if (slope < -0.5 && first > 0.0 && last > 2.0 * first) {
        throw HypothesisViolation("sup |grad_x K_eps| grows like eps^" + std::to_string(slope) +
                                  "; no uniform Riemannian lower bound");
      }
    }
  }

  out.samples = drawn.size();
  out.min_margin = std::numeric_limits<double>::infinity();
  for (const auto& s : drawn) {
    const double vv = s.v.squaredNorm();
    const double margin = (s.v.dot(s.H * s.v) - out.c * vv) / vv;
    out.min_margin = std::min(out.min_margin, margin);
    if (margin < -1e-10) ++out.violations;
  }
  return out;
}

}  // namespace npw
