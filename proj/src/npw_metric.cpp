#include "npw/npw_metric.hpp"

#include <algorithm>
#include <cmath>

namespace npw {

MetricAssembly::MetricAssembly(ManifoldPtr base, Profile profile) : base_(std::move(base)), profile_(std::move(profile)) {
  if (!base_) throw Error("metric assembly without base manifold");
  if (base_->dim() != profile_.dim()) {
    throw DimensionError("profile dimension " + std::to_string(profile_.dim()) + " does not match base dimension " +
                         std::to_string(base_->dim()));
  }
}

Matrix metric_matrix(const MetricAssembly& ma, const SpacetimePoint& p) {
  const int n = ma.dim();
  Matrix l = Matrix::Zero(n + 2, n + 2);
  if (n > 0) l.topLeftCorner(n, n) = ma.base().metric_at(p.x);
  l(n, n) = -ma.profile().eval(p.x, p.u);
  l(n, n + 1) = 1.0;
  l(n + 1, n) = 1.0;
  return l;
}

Matrix inverse_metric_matrix(const MetricAssembly& ma, const SpacetimePoint& p) {
  const int n = ma.dim();
  Matrix li = Matrix::Zero(n + 2, n + 2);
  if (n > 0) li.topLeftCorner(n, n) = ma.base().metric_at(p.x).inverse();
  li(n, n + 1) = 1.0;
  li(n + 1, n) = 1.0;
  li(n + 1, n + 1) = ma.profile().eval(p.x, p.u);
  return li;
}

double inner(const MetricAssembly& ma, const SpacetimePoint& p, const TangentVector& w1, const TangentVector& w2) {
  double s = 0.0;
  if (ma.dim() > 0) s = w1.xi.dot(ma.base().metric_at(p.x) * w2.xi);
  const double a = ma.profile().eval(p.x, p.u);
  return s + w1.alpha * w2.beta + w1.beta * w2.alpha - a * w1.alpha * w2.alpha;
}

Eigenvalues eigenvalues(const MetricAssembly& ma, const SpacetimePoint& p) {
  const double a = ma.profile().eval(p.x, p.u);
  const double root = std::sqrt(0.25 * a * a + 1.0);
  Eigenvalues ev;
  ev.mu1 = -0.5 * a + root;
  // mu1 * mu2 = -1 avoids cancellation in -a/2 - root for large a.
  ev.mu2 = -1.0 / ev.mu1;
  if (ma.dim() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(ma.base().metric_at(p.x), Eigen::EigenvaluesOnly);
    ev.nu = es.eigenvalues();
  } else {
    ev.nu = Vector(0);
  }
  return ev;
}

double mu1_lower_bound(double lambda) { return -0.5 * lambda + std::sqrt(0.25 * lambda * lambda + 1.0); }

Classification classify(const MetricAssembly& ma, const SpacetimePoint& p, const TangentVector& w) {
  const double w2 = w.squared_norm();
  if (w2 == 0.0) throw Error("cannot classify the zero vector");
  Classification c;
  c.norm = inner(ma, p, w, w);
  const double band = 1e-9 * (1.0 + w2);
  if (std::abs(c.norm) <= band) {
    c.character = CausalCharacter::null;
  } else if (c.norm < 0.0) {
    c.character = CausalCharacter::timelike;
  } else {
    c.character = CausalCharacter::spacelike;
    return c;
  }
  // l(d/dv, w) = alpha.
  if (w.alpha > 0.0) {
    c.orientation = TimeOrientation::future;
  } else if (w.alpha < 0.0) {
    c.orientation = TimeOrientation::past;
  } else {
    c.orientation = w.beta > 0.0 ? TimeOrientation::past : TimeOrientation::future;
  }
  return c;
}

ChristoffelTable christoffels(const MetricAssembly& ma, const SpacetimePoint& p) {
  const int n = ma.dim();
  const int iu = n;
  const int iv = n + 1;
  ChristoffelTable g(n + 2);
  const Profile& a = ma.profile();
  if (n > 0) {
    const ChristoffelTable gn = ma.base().christoffel_at(p.x);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(k, i, j) = gn(k, i, j);
    const Vector da = a.grad_x(p.x, p.u);
    const Vector grad = gradient(ma.base(), da, p.x);
    for (int j = 0; j < n; ++j) {
      g(iv, iu, j) = -0.5 * da[j];
      g(iv, j, iu) = -0.5 * da[j];
      g(j, iu, iu) = 0.5 * grad[j];
    }
  }
  g(iv, iu, iu) = -0.5 * a.du(p.x, p.u);
  return g;
}

double tau(const MetricAssembly& ma, const SpacetimePoint& p) { return ma.lambda() * p.u - p.v; }

TangentVector grad_tau(const MetricAssembly& ma, const SpacetimePoint& p) {
  return TangentVector{Vector::Zero(ma.dim()), -1.0, ma.lambda() - ma.profile().eval(p.x, p.u)};
}

}  // namespace npw
