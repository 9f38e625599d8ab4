#pragma once

#include "npw/npw_metric.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace npw {

struct GeodesicState {
  SpacetimePoint point;
  TangentVector velocity;
  double affine_parameter = 0.0;
};

/// Conserved quantities along a geodesic:
///   q0 = l(gamma', gamma'), q1 = l(gamma', d/dv) = alpha',
///   q2 = l(gamma', d/du) = beta' - a alpha' (conserved when a is u-independent).
struct Monitors {
  double q0 = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
};

Monitors monitors(const MetricAssembly& ma, const GeodesicState& s);

/// Second derivatives -Gamma^sigma_{mu nu} w^mu w^nu from the Christoffel table.
TangentVector geodesic_rhs(const MetricAssembly& ma, const GeodesicState& s);

struct Trajectory {
  std::vector<GeodesicState> samples;  // strictly increasing affine parameter
  std::size_t steps = 0;
  double tol = 0.0;
  bool aborted = false;
  std::string diagnostic;
};

/// Adaptive Dormand-Prince integration over [span_begin, span_end], which must
/// contain initial.affine_parameter; every accepted step is recorded. On
/// step-size underflow or step exhaustion the partial trajectory is returned
/// with `aborted` set.
Trajectory integrate(const MetricAssembly& ma, const GeodesicState& initial, double span_begin, double span_end,
                     double tol = 1e-10, std::size_t max_steps = 200000);

/// Integrates from `from` to parameter `target` (either direction).
GeodesicState advance(const MetricAssembly& ma, const GeodesicState& from, double target, double tol = 1e-10);

/// Completes (x, u, v, xi, alpha) to a null vector. For alpha != 0 this solves
/// h(xi,xi) + 2 alpha beta - a alpha^2 = 0 for beta; alpha == 0 requires xi == 0
/// and gives beta = -1 (future directed) or +1.
GeodesicState make_null_state(const MetricAssembly& ma, const SpacetimePoint& p, const Vector& xi, double alpha,
                              bool future_if_vertical = true);

/// Random null initial data: (x, u, v) uniform in `region` (coordinates
/// x..., u, v), xi normal, alpha = +-(0.5..1.5); a fraction `vertical_fraction`
/// are multiples of d/dv.
GeodesicState random_null_state(const MetricAssembly& ma, const Box& region, std::mt19937_64& rng,
                                double vertical_fraction = 0.0);

enum class CrossingStatus { crossed, not_yet_crossed, tolerance_failure };

struct Crossing {
  CrossingStatus status = CrossingStatus::not_yet_crossed;
  double t_star = 0.0;
  double residual = 0.0;  // beta(t*) - lambda alpha(t*) + k
  std::size_t sign_changes = 0;
  bool unique = false;
};

/// Locates t* with beta(t*) = lambda alpha(t*) - k, i.e. gamma(t*) on the
/// slice tau_lambda = k, by a sign change over the samples followed by root
/// refinement on re-integrated states. `unique` means exactly one sign change
/// and strictly monotone tau along the trajectory.
Crossing cauchy_crossing(const MetricAssembly& ma, const Trajectory& traj, double lambda, double k, double tol = 1e-10);

struct MonotonicityReport {
  TimeOrientation direction = TimeOrientation::none;
  std::size_t pairs = 0;
  std::size_t violations = 0;
  std::vector<double> violation_parameters;
  double min_rate = 0.0;  // min of orientation * d tau / ds over sample pairs
};

/// tau_lambda must increase strictly along future-directed causal curves and
/// decrease along past-directed ones. With alpha' != 0 the rate is at least
/// lambda |alpha'| / 2; a shortfall counts as a violation as well.
MonotonicityReport tau_monotonicity(const MetricAssembly& ma, const Trajectory& traj);

struct CauchyVerdict {
  std::size_t geodesic_id = 0;
  double k = 0.0;
  double t_star = 0.0;
  bool unique = false;
  CrossingStatus status = CrossingStatus::not_yet_crossed;
};

struct CertificationResult {
  std::vector<CauchyVerdict> verdicts;
  MonotonicityReport monotonicity;
  Trajectory trajectory;
  int extensions = 0;
};

/// Integrates on [s0 - T, s0 + T], doubling T up to `max_extensions` times
/// until every slice tau_lambda = k has been crossed.
CertificationResult certify_null_geodesic(const MetricAssembly& ma, const GeodesicState& initial,
                                          std::span<const double> ks, std::size_t geodesic_id, double initial_span = 2.0,
                                          double tol = 1e-10, int max_extensions = 6);

}  // namespace npw
