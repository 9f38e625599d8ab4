#include <doctest.h>

#include "npw/splitting.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace npw;
using npw::testing::random_point;

namespace {

SplitChart chart(const std::string& manifold, const std::string& kind, double amp, double lambda,
                 BoundPolicy policy = BoundPolicy::strict) {
  ManifoldPtr base = make_manifold(manifold);
  return SplitChart(MetricAssembly(base, make_profile(kind, {{"A", amp}, {"c", amp}}, base->dim(), lambda, policy)));
}

Vector vec1(double x) { return Vector::Constant(1, x); }
const Vector none(0);

// a = 0.4 (1 + sin(x / eps)): bounded, with x-gradients of order 1/eps.
class OscillatingModel final : public ProfileModel {
 public:
  explicit OscillatingModel(double eps) : eps_(eps) {}
  int dim() const override { return 1; }
  std::string kind() const override { return "oscillating"; }
  bool smooth() const override { return true; }
  double declared_sup() const override { return 0.8; }
  double eval(const Vector& x, double) const override { return 0.4 * (1.0 + std::sin(x[0] / eps_)); }
  Vector grad_x(const Vector& x, double) const override { return vec1(0.4 * std::cos(x[0] / eps_) / eps_); }
  double du(const Vector&, double) const override { return 0.0; }
  double du2(const Vector&, double) const override { return 0.0; }

 private:
  double eps_;
};

}  // namespace

TEST_CASE("F and its inverse: closed forms") {
  const auto zero = chart("euclidean:0", "constant", 0.0, 1.0);
  CHECK(zero.big_f(none, 3.0) == 6.0);
  CHECK(zero.big_f_inverse(none, 6.0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(zero.big_f(none, 0.0) == 0.0);

  // Heaviside c = 1, lambda = 1: F_0(u) = 2u for u <= 0 and u for u > 0.
  const auto h = chart("euclidean:0", "heaviside", 1.0, 1.0, BoundPolicy::allow_equality);
  CHECK(h.big_f(none, -1.0) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(h.big_f(none, 2.5) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(h.big_f_inverse(none, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(h.big_f_inverse(none, -2.0) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(h.big_k(none, 3.0, -1.0) == doctest::Approx(1.0).epsilon(1e-10));

  // \int_0^pi sin^2 = pi / 2.
  const auto s = chart("euclidean:0", "sine", 1.0, 1.0, BoundPolicy::allow_equality);
  CHECK(s.big_f(none, std::numbers::pi) == doctest::Approx(1.5 * std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("F is increasing with slope between lambda and 2 lambda") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  const auto c = chart("euclidean:1", "bump", 1.0, 1.5);
  const double lam = c.lambda();
  for (int s = 0; s < 1000; ++s) {
    const Vector x = vec1(d(rng));
    double u1 = d(rng), u2 = d(rng);
    if (u1 > u2) std::swap(u1, u2);
    if (u1 == u2) continue;
    const double f1 = c.big_f(x, u1), f2 = c.big_f(x, u2);
    CHECK(f1 < f2);
    const double slope = (f2 - f1) / (u2 - u1);
    CHECK(slope > lam);
    CHECK(slope <= 2.0 * lam + 1e-9);
    if (u1 != 0.0) {
      CHECK(c.big_f(x, u1) / u1 > lam);
      CHECK(c.big_f(x, u1) / u1 <= 2.0 * lam + 1e-12);
    }
  }
}

TEST_CASE("inverse round trips and K bounds") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> d(-4.0, 4.0);
  const auto c = chart("euclidean:1", "sine_x_decay", 1.0, 1.3);
  const double lam = c.lambda();
  for (int s = 0; s < 100; ++s) {
    const Vector x = vec1(d(rng));
    const double u = d(rng), t = d(rng);
    CHECK(std::abs(c.big_f_inverse(x, c.big_f(x, u)) - u) <= 1e-9);
    const double z = t + c.big_f(x, u);
    const double k = c.big_k(x, t, u);
    CHECK(std::abs(c.big_f(x, k) - z) <= c.root_tol() * (1.0 + std::abs(z)) * 1.0001);
    const double lo = z >= 0 ? z / (2 * lam) : z / lam;
    const double hi = z >= 0 ? z / lam : z / (2 * lam);
    CHECK(k >= lo - 1e-10);
    CHECK(k <= hi + 1e-10);
    CHECK(c.big_k(x, 0.0, u) == u);
  }
}

TEST_CASE("K closed forms and group law") {
  const auto zero = chart("euclidean:0", "constant", 0.0, 1.0);
  CHECK(zero.big_k(none, 4.0, 1.0) == doctest::Approx(3.0).epsilon(1e-12));
  const auto cst = chart("euclidean:0", "constant", 0.5, 1.0);
  CHECK(cst.big_k(none, 3.0, 1.0) == doctest::Approx(1.0 + 3.0 / 1.5).epsilon(1e-12));

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  const auto c = chart("warped_line", "bump", 1.0, 1.6);
  for (int i = 0; i < 100; ++i) {
    const Vector x = vec1(d(rng));
    const double s = d(rng), t = d(rng), u = d(rng);
    CHECK(std::abs(c.big_k(x, s, c.big_k(x, t, u)) - c.big_k(x, s + t, u)) <= 1e-8);
  }
}

TEST_CASE("K derivatives") {
  const auto cst = chart("euclidean:1", "constant", 0.5, 1.0);
  const auto kd = cst.k_derivatives(vec1(0.3), 1.2, -0.4);
  CHECK(kd.dt == doctest::Approx(1.0 / 1.5));
  CHECK(kd.du == doctest::Approx(1.0));
  CHECK(kd.grad_x[0] == 0.0);

  const auto sine = chart("euclidean:2", "sine", 1.0, 2.0);
  CHECK(sine.k_derivatives(Vector::Ones(2), 0.7, 0.2).grad_x.norm() == 0.0);

  // Finite-difference oracle for the bump at (x, t, u) = (1, 1, 0).
  const auto b = chart("euclidean:1", "bump", 1.0, 1.0, BoundPolicy::allow_equality);
  const double x = 1.0, t = 1.0, u = 0.0, h = 1e-4;
  const auto d = b.k_derivatives(vec1(x), t, u);
  CHECK(std::abs(d.dt - (b.big_k(vec1(x), t + h, u) - b.big_k(vec1(x), t - h, u)) / (2 * h)) <= 1e-5);
  CHECK(std::abs(d.du - (b.big_k(vec1(x), t, u + h) - b.big_k(vec1(x), t, u - h)) / (2 * h)) <= 1e-5);
  CHECK(std::abs(d.grad_x[0] - (b.big_k(vec1(x + h), t, u) - b.big_k(vec1(x - h), t, u)) / (2 * h)) <= 1e-5);

  const auto nonsmooth = chart("euclidean:0", "heaviside", 1.0, 1.0, BoundPolicy::allow_equality);
  CHECK_THROWS_AS(nonsmooth.k_derivatives(none, 1.0, 0.0), UnsupportedInput);
}

TEST_CASE("flow") {
  const auto zero = chart("euclidean:1", "constant", 0.0, 1.0);
  const SpacetimePoint p{vec1(0.4), 1.0, 2.0};
  const SpacetimePoint q = zero.flow(3.0, p);
  CHECK(q.x == p.x);
  CHECK(q.u == doctest::Approx(2.5));
  CHECK(q.v == doctest::Approx(0.5));
  const SpacetimePoint id = zero.flow(0.0, p);
  CHECK(id.u == p.u);
  CHECK(id.v == p.v);

  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  const auto c = chart("euclidean:2", "sine_x_decay", 1.0, 1.4);
  const auto& ma = c.assembly();
  for (int i = 0; i < 100; ++i) {
    const SpacetimePoint r = random_point(2, rng);
    const double s = d(rng), t = d(rng);
    CHECK(std::abs(tau(ma, c.flow(t, r)) - tau(ma, r) - t) <= 1e-8);
    const SpacetimePoint a = c.flow(s, c.flow(t, r));
    const SpacetimePoint b = c.flow(s + t, r);
    CHECK(std::abs(a.u - b.u) <= 1e-8);
    CHECK(std::abs(a.v - b.v) <= 1e-8);
    CHECK((a.x - b.x).norm() == 0.0);
  }
}

TEST_CASE("Phi and Psi") {
  const auto zero = chart("euclidean:1", "constant", 0.0, 1.0);
  const SpacetimePoint p = zero.phi(2.0, vec1(0.5), 1.0);
  CHECK(p.u == doctest::Approx(2.0));
  CHECK(p.v == doctest::Approx(0.0));
  CHECK(zero.psi(SpacetimePoint{vec1(0.5), 2.0, 3.0}).t == -1.0);

  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  const auto c = chart("warped_line", "bump", 1.0, 1.2);
  const double lam = c.lambda();
  for (int i = 0; i < 100; ++i) {
    const Vector x = vec1(d(rng));
    const double t = d(rng), u = d(rng);
    const SplitCoords back = c.psi(c.phi(t, x, u));
    CHECK(std::abs(back.t - t) <= 1e-8);
    CHECK(std::abs(back.u - u) <= 1e-8);
    CHECK(back.x == x);
    const SpacetimePoint q = random_point(1, rng);
    const SplitCoords sc = c.psi(q);
    const SpacetimePoint again = c.phi(sc.t, sc.x, sc.u);
    CHECK(std::abs(again.u - q.u) <= 1e-8);
    CHECK(std::abs(again.v - q.v) <= 1e-8);
    // The slice t = 0 is S = {v = lambda u}.
    const SpacetimePoint s0 = c.phi(0.0, x, u);
    CHECK(s0.u == u);
    CHECK(s0.v == lam * u);
  }
}

TEST_CASE("split metric closed forms") {
  const auto zero = chart("euclidean:2", "constant", 0.0, 1.5);
  const auto g0 = zero.split_metric(0.3, Vector::Ones(2), -0.2);
  CHECK(g0.theta == doctest::Approx(1.0 / 3.0));
  Matrix h0 = Matrix::Identity(3, 3);
  h0(2, 2) = 3.0;
  CHECK((g0.H - h0).cwiseAbs().maxCoeff() <= 1e-14);

  const auto cst = chart("euclidean:1", "constant", 0.5, 1.5);
  const auto gc = cst.split_metric(-1.0, vec1(0.2), 0.4);
  CHECK(gc.theta == doctest::Approx(1.0 / 2.5));
  CHECK(gc.H(1, 1) == doctest::Approx(2.5));
  CHECK(gc.H(0, 1) == 0.0);
}

TEST_CASE("theta bounds and positive H") {
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  std::normal_distribution<double> nd;
  const auto c = chart("euclidean:1", "bump", 1.0, 1.0, BoundPolicy::allow_equality);
  const double lam = c.lambda();
  for (int i = 0; i < 100; ++i) {
    const Vector x = vec1(d(rng));
    const auto g = c.split_metric(d(rng), x, d(rng));
    CHECK(g.theta >= 1.0 / (2 * lam) - 1e-10);
    CHECK(g.theta <= 1.0 / lam + 1e-10);
    for (int k = 0; k < 10; ++k) {
      Vector v(2);
      v << nd(rng), nd(rng);
      CHECK(v.dot(g.H * v) > 0.0);
    }
  }
}

TEST_CASE("pullback isometry") {
  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  const auto zero = chart("euclidean:2", "constant", 0.0, 1.0);
  const auto cst = chart("euclidean:2", "constant", 0.7, 1.0);
  const auto sxd = chart("euclidean:1", "sine_x_decay", 1.0, 1.0, BoundPolicy::allow_equality);
  const auto warped = chart("warped_line", "bump", 1.0, 1.5);
  for (int i = 0; i < 50; ++i) {
    const double t = d(rng), u = d(rng);
    Vector x2(2);
    x2 << d(rng), d(rng);
    CHECK(zero.pullback_residual(t, x2, u) <= 1e-12);
    CHECK(cst.pullback_residual(t, x2, u) <= 1e-10);
    const Vector x1 = vec1(d(rng));
    CHECK(sxd.pullback_residual(t, x1, u) <= 1e-6);
    CHECK(sxd.pullback_residual(t, x1, u, JacobianMode::finite_difference) <= 1e-4);
    CHECK(warped.pullback_residual(t, x1, u) <= 1e-6);
  }
}

TEST_CASE("uniform Riemannian lower bound") {
  ManifoldPtr flat = make_manifold("euclidean:1");
  const Box region = Box::cube(2, {-1.0, 1.0});
  {
    const std::vector<SplitChart> cs{chart("euclidean:1", "constant", 0.0, 1.0)};
    const auto r = riemann_lower_bound(cs, {}, 2.0, region, 200, 1);
    CHECK(r.alpha == doctest::Approx(1.0));
    CHECK(r.d == 0.0);
    CHECK(r.c == doctest::Approx(1.0 / 16.0));
    CHECK(r.violations == 0);
  }
  {
    const std::vector<SplitChart> cs{chart("euclidean:1", "sine", 0.8, 1.0)};
    const auto r = riemann_lower_bound(cs, {}, 2.0, region, 200, 1);
    CHECK(r.d == 0.0);
    CHECK(r.c == doctest::Approx(1.0 / 16.0));
  }
  {
    RegularizationNet net(make_profile("bump", {{"A", 1.0}}, 1, 2.0));
    std::vector<SplitChart> cs;
    const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
    for (double e : eps) cs.emplace_back(MetricAssembly(flat, net.at(e)));
    const auto r = riemann_lower_bound(cs, eps, 2.0, region, 400, 3);
    CHECK(r.c > 0.0);
    CHECK(r.violations == 0);
    CHECK(r.min_margin >= -1e-10);
  }
  {
    std::vector<SplitChart> cs;
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
    for (double e : eps) cs.emplace_back(MetricAssembly(flat, Profile(std::make_shared<OscillatingModel>(e), 1.0)));
    CHECK_THROWS_AS(riemann_lower_bound(cs, eps, 2.0, region, 400, 3), HypothesisViolation);
  }
}
