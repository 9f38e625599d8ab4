#pragma once

#include "npw/npw_metric.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace npw {

/// (dK/dt, dK/du, grad_x K).
struct KDerivatives {
  double dt = 0.0;
  double du = 0.0;
  Vector grad_x;
};

/// Point (t, x, u) of R x S, with S identified with N x R via (x, u, lambda u).
struct SplitCoords {
  double t = 0.0;
  Vector x;
  double u = 0.0;
};

/// g = -theta dt^2 + H_t on R x S; H is indexed (x^1..x^n, u).
struct SplitMetricValue {
  double theta = 0.0;
  Matrix H;
};

enum class JacobianMode { analytic, finite_difference };

/// Explicit splitting M = R x S generated by the normalised gradient flow of
/// tau_lambda. Immutable; every method is re-entrant.
///
/// F_x(u) = \int_0^u (2 lambda - a(x,s)) ds is strictly increasing with
/// lambda |u| <= |F_x(u)| <= 2 lambda |u|, which brackets its inverse, and
/// K_x(t,u) = F_x^{-1}(t + F_x(u)) drives everything else.
class SplitChart {
 public:
  explicit SplitChart(MetricAssembly ma, double quad_tol = 1e-10, double root_tol = 1e-10);

  const MetricAssembly& assembly() const { return ma_; }
  const Profile& profile() const { return ma_.profile(); }
  double lambda() const { return ma_.lambda(); }
  int dim() const { return ma_.dim(); }
  double quad_tol() const { return quad_tol_; }
  double root_tol() const { return root_tol_; }

  double big_f(const Vector& x, double u) const;
  /// Solves F_x(k) = z with |F_x(k) - z| <= root_tol (1 + |z|).
  double big_f_inverse(const Vector& x, double z) const;
  double big_k(const Vector& x, double t, double u) const;
  /// Implicit differentiation of F(x, K) = t + F(x, u); smooth profiles only.
  KDerivatives k_derivatives(const Vector& x, double t, double u) const;

  /// Flow of Y = grad tau / l(grad tau, grad tau).
  SpacetimePoint flow(double t, const SpacetimePoint& p) const;
  /// Phi(t, x, u) = (x, K, -t + lambda K).
  SpacetimePoint phi(double t, const Vector& x, double u) const;
  /// Psi = Phi^{-1} = (tau, Pi): flows p for time v - lambda u onto S.
  SplitCoords psi(const SpacetimePoint& p) const;

  SplitMetricValue split_metric(double t, const Vector& x, double u) const;
  /// Full g in coordinates (t, x^1..x^n, u).
  Matrix split_metric_matrix(double t, const Vector& x, double u) const;
  /// T Phi with rows (x, u, v) and columns (t, x, u).
  Matrix phi_jacobian(double t, const Vector& x, double u, JacobianMode mode) const;
  /// max |J^T l_{Phi} J - g|.
  double pullback_residual(double t, const Vector& x, double u, JacobianMode mode = JacobianMode::analytic) const;

 private:
  MetricAssembly ma_;
  double quad_tol_;
  double root_tol_;
};

struct RiemannBound {
  double c = 0.0;
  double alpha = 0.0;  // min eigenvalue of h over the region (inf for n = 0)
  double d = 0.0;      // sampled sup |grad_x K|
  std::vector<double> d_per_chart;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double min_margin = 0.0;  // min over samples of (H(v,v) - c|v|^2) / |v|^2
};

/// Uniform lower bound H_t(v,v) >= c |v|^2 over t in [-T, T], (x, u) in
/// `region`, and every chart of a regularization net, with
/// c = min(alpha/2, alpha/(16 d^2), lambda/16) (the middle term is dropped
/// when d = 0). When `epsilons` (one per chart, decreasing) is given, growth
/// of d like eps^{-p} with p > 1/2 and a more than twofold increase raises
/// HypothesisViolation.
RiemannBound riemann_lower_bound(std::span<const SplitChart> charts, std::span<const double> epsilons, double T,
                                 const Box& region, std::size_t samples, std::uint64_t seed);

}  // namespace npw
