// One pass/fail line per acceptance criterion; exits non-zero if any fails.
#include "npw/convergence.hpp"
#include "npw/geodesics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

using namespace npw;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Vector vec1(double x) { return Vector::Constant(1, x); }

Vector draw(const Box& b, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector p(static_cast<Eigen::Index>(b.dims()));
  for (std::size_t i = 0; i < b.dims(); ++i) p[i] = b.ranges[i].lo + b.ranges[i].width() * unit(rng);
  return p;
}

Profile profile(const std::string& kind, const ProfileParams& params, int n, double lambda,
                BoundPolicy policy = BoundPolicy::strict) {
  return make_profile(kind, params, n, lambda, policy);
}

const std::vector<double> kEps{0.2, 0.1, 0.05, 0.025};

// 1. Pullback of l along Phi equals the split metric.
Outcome isometry() {
  const ManifoldPtr base = make_manifold("euclidean:1");
  const std::vector<std::pair<std::string, Profile>> cases{
      {"zero", profile("constant", {{"c", 0.0}}, 1, 1.0)},
      {"constant", profile("constant", {{"c", 1.0}}, 1, 2.0)},
      {"sine", profile("sine", {{"A", 1.0}}, 1, 2.0)},
      {"bump", profile("bump", {{"A", 1.0}}, 1, 2.0)}};
  std::mt19937_64 rng(101);
  const Box box = Box::cube(3, {-2.0, 2.0});
  double worst_a = 0.0, worst_fd = 0.0;
  for (const auto& [name, p] : cases) {
    const SplitChart chart(MetricAssembly(base, p));
    for (int i = 0; i < 50; ++i) {
      const Vector c = draw(box, rng);
      worst_a = std::max(worst_a, chart.pullback_residual(c[0], vec1(c[1]), c[2]));
      worst_fd = std::max(worst_fd, chart.pullback_residual(c[0], vec1(c[1]), c[2], JacobianMode::finite_difference));
    }
  }
  return {worst_a <= 1e-6 && worst_fd <= 1e-4,
          fmt("max residual analytic %.3g (tol 1e-6), finite difference %.3g (tol 1e-4)", worst_a, worst_fd)};
}

// 2. 1/(2 lambda) <= theta <= 1/lambda and K between (t+F)/(2 lambda) and (t+F)/lambda.
Outcome theta_k_bounds() {
  const ManifoldPtr base = make_manifold("euclidean:1");
  const std::vector<SplitChart> charts{SplitChart(MetricAssembly(base, profile("bump", {{"A", 1.0}}, 1, 1.5))),
                                       SplitChart(MetricAssembly(base, profile("sine_x_decay", {{"A", 1.0}}, 1, 1.2)))};
  std::mt19937_64 rng(102);
  const Box box = Box::cube(3, {-3.0, 3.0});
  std::size_t violations = 0, evals = 0;
  for (int i = 0; i < 10000; ++i) {
    const SplitChart& c = charts[i % charts.size()];
    const double lam = c.lambda();
    const double tol = c.root_tol();
    const Vector s = draw(box, rng);
    const Vector x = vec1(s[1]);
    const double t = s[0], u = s[2];
    const double theta = c.split_metric(t, x, u).theta;
    if (theta < 1.0 / (2.0 * lam) - tol || theta > 1.0 / lam + tol || !(theta > 0.0)) ++violations;
    const double z = t + c.big_f(x, u);
    const double k = c.big_k(x, t, u);
    const double lo = z >= 0.0 ? z / (2.0 * lam) : z / lam;
    const double hi = z >= 0.0 ? z / lam : z / (2.0 * lam);
    const double slack = tol * (1.0 + std::abs(z));
    if (k < lo - slack || k > hi + slack) ++violations;
    if (c.big_k(x, 0.0, u) != u) ++violations;
    ++evals;
  }
  return {violations == 0, fmt("%.0f evaluations, %.0f violations", static_cast<double>(evals),
                               static_cast<double>(violations))};
}

// 3. Flow group law, tau equivariance, flow(0, .) = id.
Outcome flow_structure() {
  const ManifoldPtr base = make_manifold("warped_line");
  const SplitChart c(MetricAssembly(base, profile("bump", {{"A", 1.0}}, 1, 1.5)));
  const MetricAssembly& ma = c.assembly();
  std::mt19937_64 rng(103);
  const Box box = Box::cube(5, {-2.0, 2.0});
  double group = 0.0, equiv = 0.0, ident = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vector r = draw(box, rng);
    const double s = r[0], t = r[1];
    const SpacetimePoint p{vec1(r[2]), r[3], r[4]};
    const SpacetimePoint a = c.flow(s, c.flow(t, p));
    const SpacetimePoint b = c.flow(s + t, p);
    group = std::max({group, (a.x - b.x).norm(), std::abs(a.u - b.u), std::abs(a.v - b.v)});
    equiv = std::max(equiv, std::abs(tau(ma, c.flow(t, p)) - tau(ma, p) - t));
    const SpacetimePoint id = c.flow(0.0, p);
    ident = std::max({ident, (id.x - p.x).norm(), std::abs(id.u - p.u), std::abs(id.v - p.v)});
  }
  return {group <= 1e-8 && equiv <= 1e-8 && ident <= c.root_tol(),
          fmt("group law %.3g, tau equivariance %.3g (tol 1e-8), identity %.3g", group, equiv, ident)};
}

// 4. Psi o Phi and Phi o Psi round trips for each member of the Heaviside net.
Outcome round_trips() {
  const ManifoldPtr base = make_manifold("euclidean:1");
  const RegularizationNet net(profile("heaviside", {{"c", 1.0}}, 1, 1.5));
  std::mt19937_64 rng(104);
  const Box box = Box::cube(3, {-2.0, 2.0});
  double worst = 0.0;
  for (double e : kEps) {
    const SplitChart c(MetricAssembly(base, net.at(e)));
    for (int i = 0; i < 100; ++i) {
      const Vector s = draw(box, rng);
      const SplitCoords back = c.psi(c.phi(s[0], vec1(s[1]), s[2]));
      worst = std::max({worst, std::abs(back.t - s[0]), (back.x - vec1(s[1])).norm(), std::abs(back.u - s[2])});
      const Vector q = draw(box, rng);
      const SpacetimePoint p{vec1(q[0]), q[1], q[2]};
      const SplitCoords sc = c.psi(p);
      const SpacetimePoint again = c.phi(sc.t, sc.x, sc.u);
      worst = std::max({worst, (again.x - p.x).norm(), std::abs(again.u - p.u), std::abs(again.v - p.v)});
    }
  }
  return {worst <= 1e-8, fmt("max round-trip residual %.3g over 4 epsilons (tol 1e-8)", worst)};
}

// 5. Every slice tau = k is crossed exactly once; tau strictly monotone.
Outcome cauchy() {
  const std::vector<double> ks{-1.0, 0.0, 1.0};
  const RegularizationNet hnet(profile("heaviside", {{"c", 1.0}}, 0, 1.0, BoundPolicy::allow_equality));
  const std::vector<MetricAssembly> cases{
      MetricAssembly(make_manifold("euclidean:0"), hnet.at(0.05)),
      MetricAssembly(make_manifold("euclidean:1"), profile("bump", {{"A", 1.0}}, 1, 1.5))};
  std::size_t total = 0, good = 0, violations = 0, aborted = 0;
  std::mt19937_64 rng(105);
  for (const auto& ma : cases) {
    const Box region = Box::cube(static_cast<std::size_t>(ma.dim()) + 2, {-1.0, 1.0});
    for (std::size_t g = 0; g < 100; ++g) {
      const GeodesicState init = random_null_state(ma, region, rng, 0.1);
      const CertificationResult r = certify_null_geodesic(ma, init, ks, g);
      for (const auto& v : r.verdicts) {
        ++total;
        if (v.status == CrossingStatus::crossed && v.unique) ++good;
      }
      violations += r.monotonicity.violations;
      aborted += r.trajectory.aborted ? 1 : 0;
    }
  }
  return {good == 600 && total == 600 && violations == 0 && aborted == 0,
          fmt("%.0f of %.0f unique crossings, %.0f monotonicity violations, %.0f aborted", static_cast<double>(good),
              600.0, static_cast<double>(violations), static_cast<double>(aborted))};
}

// 6. Null norm, affine alpha and (for u-independent a) Q2 are conserved.
Outcome conservation() {
  const std::vector<MetricAssembly> cases{
      MetricAssembly(make_manifold("warped_line"), profile("bump", {{"A", 1.0}}, 1, 1.5)),
      MetricAssembly(make_manifold("euclidean:2"), profile("sine_x_decay", {{"A", 1.0}}, 2, 1.5)),
      MetricAssembly(make_manifold("euclidean:1"), profile("x_bump", {{"A", 1.0}}, 1, 1.5)),
      MetricAssembly(make_manifold("euclidean:1"), profile("constant", {{"c", 0.5}}, 1, 1.0))};
  std::mt19937_64 rng(106);
  double q0 = 0.0, aff = 0.0, q2 = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const MetricAssembly& ma = cases[k];
    const bool u_free = k >= 2;
    const Box region = Box::cube(static_cast<std::size_t>(ma.dim()) + 2, {-1.0, 1.0});
    for (int g = 0; g < 50; ++g, ++count) {
      const GeodesicState init = random_null_state(ma, region, rng, 0.1);
      const Trajectory tr = integrate(ma, init, 0.0, 1.0, 1e-10);
      if (tr.aborted) return {false, "integration aborted"};
      const Monitors m0 = monitors(ma, init);
      for (const auto& s : tr.samples) {
        const Monitors m = monitors(ma, s);
        q0 = std::max(q0, std::abs(m.q0 - m0.q0));
        aff = std::max({aff, std::abs(s.velocity.alpha - init.velocity.alpha),
                        std::abs(s.point.u - init.point.u - init.velocity.alpha * s.affine_parameter)});
        if (u_free) q2 = std::max(q2, std::abs(m.q2 - m0.q2));
      }
    }
  }
  return {q0 <= 1e-8 && aff <= 1e-8 && q2 <= 1e-8,
          fmt("%.0f geodesics: null drift %.3g, alpha affinity %.3g, Q2 drift %.3g (tol 1e-8)",
              static_cast<double>(count), q0, aff, q2)};
}

// 7. Closed-form spectrum of l against a numeric eigen-solve.
Outcome eigen_identities() {
  const std::vector<MetricAssembly> cases{
      MetricAssembly(make_manifold("euclidean:2"), profile("bump", {{"A", 1.0}}, 2, 1.5)),
      MetricAssembly(make_manifold("warped_line"), profile("sine_x_decay", {{"A", 2.0}}, 1, 2.5)),
      MetricAssembly(make_manifold("euclidean:0"), profile("sine", {{"A", 1.0}}, 0, 1.0, BoundPolicy::allow_equality))};
  std::mt19937_64 rng(107);
  double eig = 0.0, det = 0.0, mu2 = -std::numeric_limits<double>::infinity();
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 1000; ++i) {
    const MetricAssembly& ma = cases[i % cases.size()];
    const int n = ma.dim();
    const Vector c = draw(Box::cube(static_cast<std::size_t>(n) + 2, {-3.0, 3.0}), rng);
    const SpacetimePoint p{c.head(n), c[n], c[n + 1]};
    const Matrix l = metric_matrix(ma, p);
    const Eigenvalues ev = eigenvalues(ma, p);
    std::vector<double> closed{ev.mu1, ev.mu2};
    for (int k = 0; k < n; ++k) closed.push_back(ev.nu[k]);
    std::sort(closed.begin(), closed.end());
    Eigen::SelfAdjointEigenSolver<Matrix> es(l, Eigen::EigenvaluesOnly);
    for (int k = 0; k < n + 2; ++k) eig = std::max(eig, std::abs(closed[k] - es.eigenvalues()[k]));
    const double det_h = n > 0 ? ma.base().metric_at(p.x).determinant() : 1.0;
    det = std::max(det, std::abs(l.determinant() + det_h) / std::max(1.0, std::abs(det_h)));
    mu2 = std::max(mu2, ev.mu2);
    const double lam = ma.lambda();
    margin = std::min(margin, ev.mu1 - (-0.5 * lam + std::sqrt(0.25 * lam * lam + 1.0)));
  }
  return {eig <= 1e-9 && det <= 1e-12 && mu2 <= -1.0 && margin >= 0.0,
          fmt("eigenvalue error %.3g, det error %.3g, max mu2 %.6g, min mu1 margin %.3g", eig, det, mu2, margin)};
}

// 8. L1 convergence of the Heaviside net on the unit box.
Outcome regularization() {
  const ManifoldPtr base = make_manifold("euclidean:0");
  const RegularizationNet net(profile("heaviside", {{"c", 1.0}}, 0, 1.0, BoundPolicy::allow_equality));
  bool ok = true;
  std::string detail;
  for (Quantity q : {Quantity::a, Quantity::F, Quantity::G, Quantity::K, Quantity::Phi, Quantity::Psi}) {
    const Box box = Box::cube(quantity_box_dims(q, 0), {-0.5, 0.5});
    const ConvergenceReport r = convergence_sweep(net, base, q, box, kEps);
    bool pass;
    if (q == Quantity::a) {
      pass = std::abs(r.fit.slope - 1.0) <= 0.10;
      detail += fmt("a slope %.4f; ", r.fit.slope);
    } else {
      pass = r.strictly_decreasing && r.errors.back() < 1e-3;
      detail += to_string(q) + fmt(" final %.3g", r.errors.back()) +
                (r.strictly_decreasing ? "" : " not decreasing") + "; ";
    }
    if (!pass) detail += "[" + to_string(q) + " fails] ";
    ok = ok && pass;
  }
  return {ok, detail};
}

// 9. sup |d^k a_eps / du^k| ~ eps^{-k}.
Outcome moderateness() {
  const RegularizationNet net(profile("heaviside", {{"c", 1.0}}, 0, 1.0, BoundPolicy::allow_equality));
  const Box box = Box::cube(1, {-0.5, 0.5});
  const double tol[3] = {0.1, 0.1, 0.15};
  double p[3];
  bool ok = true;
  for (int k = 0; k < 3; ++k) {
    p[k] = moderateness_exponent(net, k, box, kEps).p;
    ok = ok && std::abs(p[k] - k) <= tol[k];
  }
  return {ok, fmt("p = %.4f, %.4f, %.4f", p[0], p[1], p[2])};
}

// 10. Uniform lower bound for the split Riemannian metrics of the bump net.
Outcome riemann_bound() {
  const ManifoldPtr base = make_manifold("euclidean:1");
  const RegularizationNet net(profile("bump", {{"A", 1.0}}, 1, 1.5));
  std::vector<SplitChart> charts;
  for (double e : kEps) charts.emplace_back(MetricAssembly(base, net.at(e)));
  const RiemannBound r = riemann_lower_bound(charts, kEps, 2.0, Box::cube(2, {-2.0, 2.0}), 10000, 110);
  return {r.c > 0.0 && r.violations == 0 && r.samples >= 10000,
          fmt("c = %.4g over %.0f samples, %.0f violations, min margin %.3g", r.c, static_cast<double>(r.samples),
              static_cast<double>(r.violations), r.min_margin)};
}

// 11. Splitting of the Lipschitz profile min(1, |x|) H(u).
Outcome lipschitz() {
  const ManifoldPtr base = make_manifold("euclidean:1");
  const Profile lim = profile("lipschitz_heaviside", {{"A", 1.0}}, 1, 1.5);
  const LipschitzSplitting s = lipschitz_splitting(base, lim, Box::cube(2, {0.0, 1.0}));
  const double bound = s.f_bound;
  const double trip = std::max(s.psi_phi_residual, s.phi_psi_residual);
  return {s.f_constant <= bound && trip <= 1e-8,
          fmt("F_0 constant %.4f <= %.4f, round trip %.3g (tol 1e-8)", s.f_constant, bound, trip)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"isometry of the splitting", isometry},
      {"theta and K bounds", theta_k_bounds},
      {"flow structure", flow_structure},
      {"Phi/Psi round trips", round_trips},
      {"Cauchy slice crossings", cauchy},
      {"geodesic conservation", conservation},
      {"eigenvalue identities", eigen_identities},
      {"regularization convergence", regularization},
      {"moderateness exponents", moderateness},
      {"uniform Riemannian lower bound", riemann_bound},
      {"Lipschitz splitting", lipschitz}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu %s: %s (%s) [%.1fs]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
