#include "npw/base_manifold.hpp"

#include "npw/quadrature.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace npw {

double ChristoffelTable::max_abs() const {
  double m = 0.0;
  for (double g : data_) m = std::max(m, std::abs(g));
  return m;
}

EuclideanSpace::EuclideanSpace(int n) : n_(n) {
  if (n < 0) throw DimensionError("euclidean dimension must be non-negative");
}

Matrix EuclideanSpace::metric_at(const Vector& /*x*/) const { return Matrix::Identity(n_, n_); }

ChristoffelTable EuclideanSpace::christoffel_at(const Vector& /*x*/) const { return ChristoffelTable(n_); }

double WarpedLine::h(double x) {
  const double t = std::tanh(x);
  return 1.0 + t * t;
}

double WarpedLine::dh(double x) {
  const double t = std::tanh(x);
  return 2.0 * t * (1.0 - t * t);
}

Matrix WarpedLine::metric_at(const Vector& x) const {
  Matrix m(1, 1);
  m(0, 0) = h(x[0]);
  return m;
}

ChristoffelTable WarpedLine::christoffel_at(const Vector& x) const {
  ChristoffelTable g(1);
  g(0, 0, 0) = dh(x[0]) / (2.0 * h(x[0]));
  return g;
}

double WarpedLine::distance(const Vector& x, const Vector& y) const {
  auto speed = [](double s) { return std::sqrt(h(s)); };
  return std::abs(quad::integrate(speed, x[0], y[0], 1e-12).value);
}

CustomManifold::CustomManifold(int n, std::string name, Callbacks cb, double lower_bound, bool declared_complete)
    : n_(n), name_(std::move(name)), cb_(std::move(cb)), lower_bound_(lower_bound), complete_(declared_complete) {
  if (!cb_.metric || !cb_.christoffel || !cb_.distance) throw Error("custom manifold needs all callbacks");
  if (!(lower_bound_ > 0.0)) throw Error("custom manifold lower metric bound must be positive");
}

Vector gradient(const BaseManifold& m, const Vector& df, const Vector& x) {
  if (df.size() != m.dim()) throw DimensionError("covector dimension mismatch");
  if (m.dim() == 0) return Vector(0);
  Eigen::LLT<Matrix> llt(m.metric_at(x));
  if (llt.info() != Eigen::Success) throw Error("internal: metric not positive definite at gradient point");
  return llt.solve(df);
}

ManifoldPtr make_manifold(const std::string& spec) {
  if (spec == "warped_line") return std::make_shared<WarpedLine>();
  const std::string prefix = "euclidean:";
  if (spec.rfind(prefix, 0) == 0) {
    int n = -1;
    const char* first = spec.data() + prefix.size();
    const char* last = spec.data() + spec.size();
    auto [ptr, ec] = std::from_chars(first, last, n);
    if (ec != std::errc{} || ptr != last || n < 0) throw Error("bad manifold spec: " + spec);
    return std::make_shared<EuclideanSpace>(n);
  }
  throw Error("unknown manifold: " + spec);
}

}  // namespace npw
