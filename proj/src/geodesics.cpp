#include "npw/geodesics.hpp"

#include "npw/root_finding.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace npw {
namespace {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

// y = (x, u, v, xi, alpha, beta)
State pack(const GeodesicState& s) {
  const int n = static_cast<int>(s.point.x.size());
  State y(2 * (n + 2));
  for (int i = 0; i < n; ++i) {
    y[i] = s.point.x[i];
    y[n + 2 + i] = s.velocity.xi[i];
  }
  y[n] = s.point.u;
  y[n + 1] = s.point.v;
  y[2 * n + 2] = s.velocity.alpha;
  y[2 * n + 3] = s.velocity.beta;
  return y;
}

GeodesicState unpack(const State& y, int n, double s) {
  GeodesicState g;
  g.point.x = Vector(n);
  g.velocity.xi = Vector(n);
  for (int i = 0; i < n; ++i) {
    g.point.x[i] = y[i];
    g.velocity.xi[i] = y[n + 2 + i];
  }
  g.point.u = y[n];
  g.point.v = y[n + 1];
  g.velocity.alpha = y[2 * n + 2];
  g.velocity.beta = y[2 * n + 3];
  g.affine_parameter = s;
  return g;
}

struct System {
  const MetricAssembly& ma;
  void operator()(const State& y, State& dy, double) const {
    const int n = ma.dim();
    const int m = n + 2;
    SpacetimePoint p{Vector(n), y[n], y[n + 1]};
    for (int i = 0; i < n; ++i) p.x[i] = y[i];
    const ChristoffelTable g = christoffels(ma, p);
    dy.resize(y.size());
    for (int i = 0; i < m; ++i) dy[i] = y[m + i];
    for (int k = 0; k < m; ++k) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i) {
        const double wi = y[m + i];
        if (wi == 0.0) continue;
        for (int j = 0; j < m; ++j) acc += g(k, i, j) * wi * y[m + j];
      }
      dy[m + k] = -acc;
    }
  }
};

GeodesicState reversed(const GeodesicState& s) { return {s.point, -s.velocity, s.affine_parameter}; }

// Forward integration of length `length` >= 0, recording every step; the
// recorded parameters are offsets from the start.
Trajectory integrate_forward(const MetricAssembly& ma, const GeodesicState& start, double length, double tol,
                             std::size_t max_steps) {
  Trajectory out;
  out.tol = tol;
  out.samples.push_back({start.point, start.velocity, 0.0});
  if (length <= 0.0) return out;

  const int n = ma.dim();
  System sys{ma};
  // A step that jumps over a thin layer of a never samples it. alpha is
  // constant along geodesics, so this caps the u-advance per step exactly.
  const double scale = ma.profile().model().feature_scale();
  const double speed = std::hypot(start.velocity.xi.norm(), start.velocity.alpha);
  const double max_dt = std::isfinite(scale) && speed > 0.0 ? 0.25 * scale / speed : length;
  auto stepper = odeint::make_dense_output(tol, tol, max_dt, odeint::runge_kutta_dopri5<State>());
  stepper.initialize(pack(start), 0.0, std::min({1e-2, 0.1 * length, max_dt}));
  State y(2 * (n + 2));
  const double dt_floor = 1e-14 * std::max(1.0, length);
  while (stepper.current_time() < length) {
    if (out.steps >= max_steps) {
      out.aborted = true;
      out.diagnostic = "step budget exhausted at s = " + std::to_string(stepper.current_time());
      return out;
    }
    try {
      stepper.do_step(sys);
    } catch (const odeint::step_adjustment_error& e) {
      out.aborted = true;
      out.diagnostic = std::string("step size control failed: ") + e.what();
      return out;
    }
    ++out.steps;
    const double t = stepper.current_time();
    if (!std::isfinite(t) || t - stepper.previous_time() < dt_floor) {
      out.aborted = true;
      out.diagnostic = "step size underflow at s = " + std::to_string(stepper.previous_time());
      return out;
    }
    if (t >= length) {
      stepper.calc_state(length, y);
      out.samples.push_back(unpack(y, n, length));
      break;
    }
    out.samples.push_back(unpack(stepper.current_state(), n, t));
    const auto& last = out.samples.back();
    if (!std::isfinite(last.point.u) || !std::isfinite(last.point.v) || !std::isfinite(last.velocity.beta)) {
      out.aborted = true;
      out.diagnostic = "non-finite state at s = " + std::to_string(t);
      out.samples.pop_back();
      return out;
    }
  }
  return out;
}

}  // namespace

Monitors monitors(const MetricAssembly& ma, const GeodesicState& s) {
  const double a = ma.profile().eval(s.point.x, s.point.u);
  return Monitors{inner(ma, s.point, s.velocity, s.velocity), s.velocity.alpha, s.velocity.beta - a * s.velocity.alpha};
}

TangentVector geodesic_rhs(const MetricAssembly& ma, const GeodesicState& s) {
  const State y = pack(s);
  State dy;
  System{ma}(y, dy, 0.0);
  return unpack(dy, ma.dim(), 0.0).velocity;
}

Trajectory integrate(const MetricAssembly& ma, const GeodesicState& initial, double span_begin, double span_end,
                     double tol, std::size_t max_steps) {
  const double s0 = initial.affine_parameter;
  if (!(span_begin <= s0 && s0 <= span_end)) throw Error("integration span must contain the initial parameter");
  if (!(tol > 0.0)) throw Error("integration tolerance must be positive");
  if (initial.point.x.size() != ma.dim() || initial.velocity.xi.size() != ma.dim()) {
    throw DimensionError("initial state does not match the base dimension");
  }

  // Backward half: gamma(s0 - r) solves the same equation with reversed velocity.
  Trajectory back = integrate_forward(ma, reversed(initial), s0 - span_begin, tol, max_steps);
  Trajectory fwd = integrate_forward(ma, initial, span_end - s0, tol, max_steps);

  Trajectory out;
  out.tol = tol;
  out.steps = back.steps + fwd.steps;
  out.aborted = back.aborted || fwd.aborted;
  if (back.aborted) out.diagnostic = "backward: " + back.diagnostic;
  if (fwd.aborted) out.diagnostic += (out.diagnostic.empty() ? "" : "; ") + std::string("forward: ") + fwd.diagnostic;
  out.samples.reserve(back.samples.size() + fwd.samples.size());
  for (auto it = back.samples.rbegin(); it != back.samples.rend(); ++it) {
    GeodesicState g = reversed(*it);
    g.affine_parameter = s0 - it->affine_parameter;
    out.samples.push_back(std::move(g));
  }
  out.samples.back().affine_parameter = s0;
  for (std::size_t i = 1; i < fwd.samples.size(); ++i) {
    GeodesicState g = fwd.samples[i];
    g.affine_parameter = s0 + g.affine_parameter;
    out.samples.push_back(std::move(g));
  }
  return out;
}

GeodesicState advance(const MetricAssembly& ma, const GeodesicState& from, double target, double tol) {
  const double length = target - from.affine_parameter;
  if (length == 0.0) return from;
  const bool backward = length < 0.0;
  State y = pack(backward ? reversed(from) : from);
  auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_adaptive(stepper, System{ma}, y, 0.0, std::abs(length), std::min(1e-2, 0.1 * std::abs(length)));
  GeodesicState out = unpack(y, ma.dim(), target);
  return backward ? reversed(out) : out;
}

GeodesicState make_null_state(const MetricAssembly& ma, const SpacetimePoint& p, const Vector& xi, double alpha,
                              bool future_if_vertical) {
  if (xi.size() != ma.dim()) throw DimensionError("xi does not match the base dimension");
  GeodesicState s;
  s.point = p;
  s.velocity.xi = xi;
  s.velocity.alpha = alpha;
  if (alpha != 0.0) {
    const double hxx = ma.dim() > 0 ? xi.dot(ma.base().metric_at(p.x) * xi) : 0.0;
    const double a = ma.profile().eval(p.x, p.u);
    s.velocity.beta = (a * alpha * alpha - hxx) / (2.0 * alpha);
  } else {
    if (xi.size() > 0 && xi.norm() != 0.0) throw Error("a null vector with alpha = 0 must be vertical");
    s.velocity.beta = future_if_vertical ? -1.0 : 1.0;
  }
  return s;
}

GeodesicState random_null_state(const MetricAssembly& ma, const Box& region, std::mt19937_64& rng,
                                double vertical_fraction) {
  const int n = ma.dim();
  if (region.dims() != static_cast<std::size_t>(n) + 2) throw DimensionError("region must be a box in (x, u, v)");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  SpacetimePoint p{Vector(n), 0.0, 0.0};
  for (int i = 0; i < n; ++i) p.x[i] = region.ranges[i].lo + region.ranges[i].width() * unit(rng);
  p.u = region.ranges[n].lo + region.ranges[n].width() * unit(rng);
  p.v = region.ranges[n + 1].lo + region.ranges[n + 1].width() * unit(rng);
  if (unit(rng) < vertical_fraction) {
    GeodesicState s = make_null_state(ma, p, Vector::Zero(n), 0.0, unit(rng) < 0.5);
    s.velocity.beta *= 0.5 + unit(rng);
    return s;
  }
  Vector xi(n);
  for (int i = 0; i < n; ++i) xi[i] = normal(rng);
  const double alpha = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + unit(rng));
  return make_null_state(ma, p, xi, alpha);
}

Crossing cauchy_crossing(const MetricAssembly& ma, const Trajectory& traj, double lambda, double k, double tol) {
  Crossing out;
  const auto& s = traj.samples;
  if (s.empty()) return out;
  auto g = [&](const GeodesicState& st) { return lambda * st.point.u - st.point.v - k; };

  std::vector<double> vals(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) vals[i] = g(s[i]);
  std::size_t first = s.size();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (vals[i] == 0.0) {
      ++out.sign_changes;
      if (first == s.size()) first = i;
      // Skip the rest of an exactly-zero run so it counts once.
      while (i + 1 < s.size() && vals[i + 1] == 0.0) ++i;
      continue;
    }
    if (i + 1 < s.size() && vals[i + 1] != 0.0 && (vals[i] < 0.0) != (vals[i + 1] < 0.0)) {
      ++out.sign_changes;
      if (first == s.size()) first = i;
    }
  }
  if (out.sign_changes == 0) return out;

  if (vals[first] == 0.0) {
    out.t_star = s[first].affine_parameter;
    out.residual = 0.0;
  } else {
    const GeodesicState& anchor = s[first];
    auto f = [&](double param) { return g(advance(ma, anchor, param, traj.tol)); };
    const double lo = s[first].affine_parameter;
    const double hi = s[first + 1].affine_parameter;
    try {
      const auto r = roots::brent(f, lo, hi, vals[first], vals[first + 1], tol);
      out.t_star = r.root;
      out.residual = r.residual;
    } catch (const Error&) {
      out.status = CrossingStatus::tolerance_failure;
      return out;
    }
  }
  if (!(std::abs(out.residual) <= tol)) {
    out.status = CrossingStatus::tolerance_failure;
    return out;
  }
  out.status = CrossingStatus::crossed;
  out.unique = out.sign_changes == 1 && tau_monotonicity(ma, traj).violations == 0;
  return out;
}

MonotonicityReport tau_monotonicity(const MetricAssembly& ma, const Trajectory& traj) {
  MonotonicityReport out;
  const auto& s = traj.samples;
  if (s.empty()) return out;
  const double lam = ma.lambda();
  // Geodesics keep their causal character, so the orientation of the first
  // sample applies throughout.
  const Classification c = classify(ma, s.front().point, s.front().velocity);
  if (c.character == CausalCharacter::spacelike) throw Error("tau monotonicity needs a causal curve");
  out.direction = c.orientation;
  const double sign = c.orientation == TimeOrientation::future ? 1.0 : -1.0;
  out.min_rate = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const double ds = s[i + 1].affine_parameter - s[i].affine_parameter;
    if (!(ds > 0.0)) continue;
    const double dtau = tau(ma, s[i + 1].point) - tau(ma, s[i].point);
    const double rate = sign * dtau / ds;
    ++out.pairs;
    out.min_rate = std::min(out.min_rate, rate);
    // alpha' is constant along geodesics; the margin applies whenever it is nonzero.
    const double margin = 0.5 * lam * std::abs(s[i].velocity.alpha);
    const double slack = 1e-8 * (1.0 + std::abs(rate));
    if (!(rate > 0.0) || rate < margin - slack) {
      ++out.violations;
      out.violation_parameters.push_back(s[i].affine_parameter);
    }
  }
  if (out.pairs == 0) out.min_rate = 0.0;
  return out;
}

CertificationResult certify_null_geodesic(const MetricAssembly& ma, const GeodesicState& initial,
                                          std::span<const double> ks, std::size_t geodesic_id, double initial_span,
                                          double tol, int max_extensions) {
  CertificationResult out;
  double span = initial_span;
  const double lam = ma.lambda();
  for (int ext = 0;; ++ext) {
    const double s0 = initial.affine_parameter;
    out.trajectory = integrate(ma, initial, s0 - span, s0 + span, tol);
    out.extensions = ext;
    out.verdicts.clear();
    bool all = true;
    for (double k : ks) {
      const Crossing c = cauchy_crossing(ma, out.trajectory, lam, k, tol);
      out.verdicts.push_back({geodesic_id, k, c.t_star, c.unique, c.status});
      if (c.status != CrossingStatus::crossed) all = false;
    }
    if (all || ext >= max_extensions || out.trajectory.aborted) break;
    span *= 2.0;
  }
  out.monotonicity = tau_monotonicity(ma, out.trajectory);
  return out;
}

}  // namespace npw
