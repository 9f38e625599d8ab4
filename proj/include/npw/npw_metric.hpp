#pragma once

#include "npw/base_manifold.hpp"
#include "npw/common.hpp"
#include "npw/profile.hpp"

namespace npw {

/// Point (x, u, v) of M = N x R^2.
struct SpacetimePoint {
  Vector x;
  double u = 0.0;
  double v = 0.0;
};

/// Tangent vector (xi, alpha, beta) = (x-dot, u-dot, v-dot).
struct TangentVector {
  Vector xi;
  double alpha = 0.0;
  double beta = 0.0;

  TangentVector operator*(double s) const { return {xi * s, alpha * s, beta * s}; }
  TangentVector operator-() const { return {-xi, -alpha, -beta}; }
  double squared_norm() const { return xi.squaredNorm() + alpha * alpha + beta * beta; }
};

/// l = pi*(h) + 2 du dv - a(x,u) du^2. Coordinates are ordered
/// (x^1..x^n, u, v) everywhere.
class MetricAssembly {
 public:
  MetricAssembly(ManifoldPtr base, Profile profile);

  const BaseManifold& base() const { return *base_; }
  const ManifoldPtr& base_ptr() const { return base_; }
  const Profile& profile() const { return profile_; }
  double lambda() const { return profile_.lambda(); }
  int dim() const { return base_->dim(); }
  /// Index of u and v in (n+2)-component arrays.
  int u_index() const { return dim(); }
  int v_index() const { return dim() + 1; }

 private:
  ManifoldPtr base_;
  Profile profile_;
};

Matrix metric_matrix(const MetricAssembly& ma, const SpacetimePoint& p);
/// Block inverse [h^-1 | 0; 0 | [0, 1; 1, a]].
Matrix inverse_metric_matrix(const MetricAssembly& ma, const SpacetimePoint& p);
/// l_p(w1, w2).
double inner(const MetricAssembly& ma, const SpacetimePoint& p, const TangentVector& w1, const TangentVector& w2);

struct Eigenvalues {
  double mu1 = 0.0;  // positive root of mu^2 + a mu - 1
  double mu2 = 0.0;  // negative root
  Vector nu;         // eigenvalues of h_x, ascending
};
Eigenvalues eigenvalues(const MetricAssembly& ma, const SpacetimePoint& p);

/// -lambda/2 + sqrt(lambda^2/4 + 1): infimum of mu1 over 0 <= a < lambda.
double mu1_lower_bound(double lambda);

enum class CausalCharacter { timelike, null, spacelike };
enum class TimeOrientation { future, past, none };

struct Classification {
  CausalCharacter character = CausalCharacter::spacelike;
  TimeOrientation orientation = TimeOrientation::none;
  double norm = 0.0;  // l(w, w)
};

/// Null band: |l(w,w)| <= 1e-9 (1 + |w|^2). Causal vectors are future
/// directed iff alpha > 0 (d/dv is past directed); null multiples of d/dv
/// are oriented by the sign of beta.
Classification classify(const MetricAssembly& ma, const SpacetimePoint& p, const TangentVector& w);

/// Full (n+2)^3 table Gamma^sigma_{mu nu}; requires a smooth profile.
ChristoffelTable christoffels(const MetricAssembly& ma, const SpacetimePoint& p);

/// tau_lambda = lambda u - v, a temporal function for lambda > sup a.
double tau(const MetricAssembly& ma, const SpacetimePoint& p);
/// grad tau = -d/du + (lambda - a) d/dv.
TangentVector grad_tau(const MetricAssembly& ma, const SpacetimePoint& p);

}  // namespace npw
