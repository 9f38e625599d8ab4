#include "npw/convergence.hpp"

#include "grid.hpp"
#include "npw/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace npw {
namespace {

struct AxisRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

AxisRule composite_gauss(const Interval& r, int panels, std::vector<double> breaks) {
  using Rule = boost::math::quadrature::gauss<double, 5>;
  std::vector<double> x5, w5;
  const auto& ab = Rule::abscissa();
  const auto& wt = Rule::weights();
  for (std::size_t i = ab.size(); i-- > 1;) {
    x5.push_back(-ab[i]);
    w5.push_back(wt[i]);
  }
  for (std::size_t i = 0; i < ab.size(); ++i) {
    x5.push_back(ab[i]);
    w5.push_back(wt[i]);
  }

  std::vector<double> edges;
  for (int i = 0; i <= panels; ++i) edges.push_back(r.lo + r.width() * i / panels);
  for (double b : breaks)
    if (b > r.lo && b < r.hi) edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  AxisRule out;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double c = 0.5 * (edges[p] + edges[p + 1]);
    const double h = 0.5 * (edges[p + 1] - edges[p]);
    if (h <= 0.0) continue;
    for (std::size_t i = 0; i < x5.size(); ++i) {
      out.nodes.push_back(c + h * x5[i]);
      out.weights.push_back(h * w5[i]);
    }
  }
  return out;
}

std::function<double(const Vector&)> volume_weight(const ManifoldPtr& base, int offset) {
  const int n = base->dim();
  if (n == 0 || base->name().rfind("euclidean", 0) == 0) return {};
  return [base, offset, n](const Vector& p) {
    return std::sqrt(base->metric_at(p.segment(offset, n)).determinant());
  };
}

void require_decreasing(std::span<const double> eps, std::size_t min_count) {
  if (eps.size() < min_count) throw Error("at least " + std::to_string(min_count) + " epsilons required");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0)) throw Error("epsilons must be positive");
    if (i > 0 && !(eps[i] < eps[i - 1])) throw Error("epsilons must be strictly decreasing");
  }
}

SplitChart chart_for(const RegularizationNet& net, const ManifoldPtr& base, double eps, double quad_tol,
                     double root_tol) {
  return SplitChart(MetricAssembly(base, net.at(eps)), quad_tol, root_tol);
}

Vector to_vector(const SpacetimePoint& p) {
  const auto n = p.x.size();
  Vector out(n + 2);
  out.head(n) = p.x;
  out[n] = p.u;
  out[n + 1] = p.v;
  return out;
}

Vector to_vector(const SplitCoords& c) {
  const auto n = c.x.size();
  Vector out(n + 2);
  out[0] = c.t;
  out.segment(1, n) = c.x;
  out[n + 1] = c.u;
  return out;
}

// Value of a quantity at a point of its sweep box.
Field quantity_field(const SplitChart& chart, Quantity q) {
  const int n = chart.dim();
  switch (q) {
    case Quantity::a:
      return [&chart, n](const Vector& p) { return Vector::Constant(1, chart.profile().eval(p.head(n), p[n])); };
    case Quantity::F:
      return [&chart, n](const Vector& p) { return Vector::Constant(1, chart.big_f(p.head(n), p[n])); };
    case Quantity::G:
      return [&chart, n](const Vector& p) { return Vector::Constant(1, chart.big_f_inverse(p.head(n), p[n])); };
    case Quantity::K:
      return [&chart, n](const Vector& p) { return Vector::Constant(1, chart.big_k(p.segment(1, n), p[0], p[n + 1])); };
    case Quantity::Phi:
      return [&chart, n](const Vector& p) { return to_vector(chart.phi(p[0], p.segment(1, n), p[n + 1])); };
    case Quantity::Psi:
      return [&chart, n](const Vector& p) {
        return to_vector(chart.psi(SpacetimePoint{p.head(n), p[n], p[n + 1]}));
      };
  }
  throw Error("unknown quantity");
}

double sum_distance(const BaseManifold& base, const Vector& x1, const Vector& x2) {
  return base.dim() > 0 ? base.distance(x1, x2) : 0.0;
}

}  // namespace

double l1_error(const Field& f, const Field& g, const Box& box, const L1Grid& grid,
                const std::function<double(const Vector&)>& weight) {
  const std::size_t d = box.dims();
  if (grid.panels_per_dim < 1) throw Error("l1_error needs at least one panel per axis");
  std::vector<AxisRule> rules;
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> breaks = k < grid.breakpoints.size() ? grid.breakpoints[k] : std::vector<double>{};
    rules.push_back(composite_gauss(box.ranges[k], grid.panels_per_dim, std::move(breaks)));
  }
  Vector p(static_cast<Eigen::Index>(d));
  std::vector<std::size_t> idx(d, 0);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      p[k] = rules[k].nodes[idx[k]];
      w *= rules[k].weights[idx[k]];
    }
    if (weight) w *= weight(p);
    total += w * (f(p) - g(p)).norm();
    std::size_t k = 0;
    while (k < d && ++idx[k] == rules[k].nodes.size()) idx[k++] = 0;
    if (k == d) break;
  }
  return total;
}

double g_inverse_net(const RegularizationNet& net, double eps, const Vector& x, double z, double quad_tol,
                     double root_tol) {
  const ManifoldPtr base = std::make_shared<EuclideanSpace>(net.limit().dim());
  return chart_for(net, base, eps, quad_tol, root_tol).big_f_inverse(x, z);
}

std::string to_string(Quantity q) {
  switch (q) {
    case Quantity::a: return "a";
    case Quantity::F: return "F";
    case Quantity::G: return "G";
    case Quantity::K: return "K";
    case Quantity::Phi: return "Phi";
    case Quantity::Psi: return "Psi";
  }
  return "?";
}

Quantity parse_quantity(const std::string& name) {
  for (Quantity q : {Quantity::a, Quantity::F, Quantity::G, Quantity::K, Quantity::Phi, Quantity::Psi})
    if (to_string(q) == name) return q;
  throw Error("unknown quantity '" + name + "' (expected a, F, G, K, Phi or Psi)");
}

std::size_t quantity_box_dims(Quantity q, int n) {
  const auto base = static_cast<std::size_t>(n);
  switch (q) {
    case Quantity::a:
    case Quantity::F:
    case Quantity::G: return base + 1;
    default: return base + 2;
  }
}

LogLogFit fit_loglog(std::span<const double> xs, std::span<const double> ys, double floor) {
  if (xs.size() != ys.size()) throw Error("fit_loglog: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] > 0.0 && ys[i] > floor && ys[i] > 0.0) {
      lx.push_back(std::log(xs[i]));
      ly.push_back(std::log(ys[i]));
    }
  }
  LogLogFit fit;
  fit.points = lx.size();
  if (fit.points < 2) {
    fit.slope = std::numeric_limits<double>::quiet_NaN();
    fit.intercept = fit.slope;
    return fit;
  }
  const double m = static_cast<double>(fit.points);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - fit.intercept - fit.slope * lx[i];
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / m);
  if (fit.points > 2) fit.slope_stderr = std::sqrt(ss / (m - 2.0) / sxx);
  return fit;
}

ConvergenceReport convergence_sweep(const RegularizationNet& net, ManifoldPtr base, Quantity quantity, const Box& box,
                                    std::span<const double> epsilons, const SweepOptions& options) {
  require_decreasing(epsilons, 4);
  const int n = net.limit().dim();
  if (!base || base->dim() != n) throw DimensionError("base manifold does not match the net");
  const std::size_t d = quantity_box_dims(quantity, n);
  if (box.dims() != d) {
    throw DimensionError("box for quantity " + to_string(quantity) + " needs " + std::to_string(d) + " coordinates");
  }

  ConvergenceReport rep;
  rep.quantity = quantity;
  rep.norm_kind = NormKind::l1_box;
  rep.epsilons.assign(epsilons.begin(), epsilons.end());

  L1Grid grid;
  if (options.panels_per_dim > 0) {
    grid.panels_per_dim = options.panels_per_dim;
  } else {
    double widest = 0.0;
    for (const auto& r : box.ranges) widest = std::max(widest, r.width());
    const double fine = std::ceil(8.0 * widest / epsilons.back());
    const double budget = std::floor(std::pow(1e5, 1.0 / static_cast<double>(d)) / 5.0);
    grid.panels_per_dim = static_cast<int>(std::max(16.0, std::min(fine, budget)));
  }
  grid.breakpoints.assign(d, {});
  const auto breaks = net.limit().u_breakpoints();
  if (quantity == Quantity::a || quantity == Quantity::F) grid.breakpoints[n] = breaks;

  const SplitChart limit = chart_for(net, base, 0.0, options.quad_tol, options.root_tol);
  if (quantity == Quantity::G && n == 0) {
    for (double b : breaks) grid.breakpoints[0].push_back(limit.big_f(Vector(0), b));
  }
  const int x_offset = (quantity == Quantity::K || quantity == Quantity::Phi) ? 1 : 0;
  const auto weight = volume_weight(base, x_offset);
  const Field g = quantity_field(limit, quantity);

  for (double eps : epsilons) {
    const SplitChart chart = chart_for(net, base, eps, options.quad_tol, options.root_tol);
    rep.errors.push_back(l1_error(quantity_field(chart, quantity), g, box, grid, weight));
  }

  rep.floor = std::max(options.quad_tol, options.root_tol) * box.volume();
  rep.fit = fit_loglog(rep.epsilons, rep.errors, 10.0 * rep.floor);
  for (std::size_t i = 1; i < rep.errors.size(); ++i) {
    if (!(rep.errors[i] < rep.errors[i - 1])) rep.strictly_decreasing = false;
    if (rep.errors[i] > 1.05 * rep.errors[i - 1] + rep.floor) {
      rep.monotone = false;
      rep.flagged.push_back(i);
    }
  }
  return rep;
}

ModeratenessReport moderateness_exponent(const RegularizationNet& net, int order, const Box& box,
                                         std::span<const double> epsilons, int points_per_dim) {
  if (order < 0 || order > 2) throw Error("moderateness is available for derivative orders 0, 1 and 2");
  require_decreasing(epsilons, 2);
  ModeratenessReport rep;
  rep.order = order;
  rep.epsilons.assign(epsilons.begin(), epsilons.end());
  int points = points_per_dim;
  if (points <= 0) {
    points = box.dims() == 1 ? static_cast<int>(std::ceil(box.ranges[0].width() / (epsilons.back() / 40.0))) + 1 : 201;
  }
  for (double eps : epsilons) rep.sups.push_back(sup_norm(net.at(eps), box, order, points));
  rep.fit = fit_loglog(rep.epsilons, rep.sups, 0.0);
  rep.p = -rep.fit.slope;
  return rep;
}

HolderValue holder_seminorm(const Field& delta, const Box& box, double alpha, std::size_t sobol_pairs,
                            int grid_points) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("Holder exponent must lie in (0, 1)");
  const std::size_t d = box.dims();
  HolderValue out;
  auto visit = [&](const Vector& p, const Vector& dp, const Vector& q, const Vector& dq) {
    const double dist = (p - q).norm();
    if (dist == 0.0) return;
    out.seminorm = std::max(out.seminorm, (dp - dq).norm() / std::pow(dist, alpha));
    ++out.pairs;
  };

  // Grid values, then all axis and diagonal neighbours.
  std::vector<Vector> pts, vals;
  detail::for_each_uniform_node(box, grid_points, [&](const Vector& p) {
    pts.push_back(p);
    vals.push_back(delta(p));
  });
  for (const auto& v : vals) out.sup = std::max(out.sup, v.norm());
  const int m = std::max(grid_points, 2);
  auto flat = [&](const std::vector<int>& idx) {
    std::size_t f = 0, stride = 1;
    for (std::size_t k = 0; k < d; ++k) {
      f += idx[k] * stride;
      stride *= static_cast<std::size_t>(m);
    }
    return f;
  };
  std::vector<int> idx(d, 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::size_t r = i;
    for (std::size_t k = 0; k < d; ++k) {
      idx[k] = static_cast<int>(r % m);
      r /= m;
    }
    // Offsets in {0, 1}^d \ {0} cover the forward neighbours along axes and diagonals.
    for (std::size_t mask = 1; mask < (std::size_t{1} << d); ++mask) {
      std::vector<int> j = idx;
      bool inside = true;
      for (std::size_t k = 0; k < d; ++k) {
        if (mask & (std::size_t{1} << k)) inside = inside && ++j[k] < m;
      }
      if (!inside) continue;
      const std::size_t f = flat(j);
      visit(pts[i], vals[i], pts[f], vals[f]);
    }
  }

  boost::random::sobol qrng(2 * d);
  qrng.discard(2 * d);
  const double span = static_cast<double>(qrng.max()) - static_cast<double>(qrng.min()) + 1.0;
  Vector p(static_cast<Eigen::Index>(d)), q(static_cast<Eigen::Index>(d));
  for (std::size_t s = 0; s < sobol_pairs; ++s) {
    for (std::size_t k = 0; k < d; ++k) p[k] = box.ranges[k].lo + box.ranges[k].width() * ((qrng() - qrng.min()) / span);
    for (std::size_t k = 0; k < d; ++k) q[k] = box.ranges[k].lo + box.ranges[k].width() * ((qrng() - qrng.min()) / span);
    const Vector dp = delta(p);
    const Vector dq = delta(q);
    out.sup = std::max({out.sup, dp.norm(), dq.norm()});
    visit(p, dp, q, dq);
  }
  return out;
}

HolderValue holder_error_2d(const RegularizationNet& net, double eps, double alpha, const Box& box,
                            std::size_t sobol_pairs, int grid_points) {
  if (net.limit().dim() != 0) throw DimensionError("the Holder error is implemented for M = R^2 (n = 0) only");
  if (box.dims() != 2) throw DimensionError("Holder box must have coordinates (t, u)");
  const ManifoldPtr base = std::make_shared<EuclideanSpace>(0);
  const SplitChart c_eps = chart_for(net, base, eps, 1e-11, 1e-11);
  const SplitChart c_0 = chart_for(net, base, 0.0, 1e-11, 1e-11);
  const Vector x0(0);
  const Field delta = [&](const Vector& p) {
    const SpacetimePoint a = c_eps.phi(p[0], x0, p[1]);
    const SpacetimePoint b = c_0.phi(p[0], x0, p[1]);
    Vector d(2);
    d << a.u - b.u, a.v - b.v;
    return d;
  };
  return holder_seminorm(delta, box, alpha, sobol_pairs, grid_points);
}

LipschitzSplitting lipschitz_splitting(ManifoldPtr base, const Profile& limit, const Box& box,
                                       const LipschitzOptions& options) {
  if (!limit.model().has_lipschitz_modulus()) {
    throw UnsupportedInput("profile '" + limit.model().kind() + "' declares no Lipschitz modulus");
  }
  const int n = limit.dim();
  if (!base || base->dim() != n) throw DimensionError("base manifold does not match the profile");
  if (box.dims() != static_cast<std::size_t>(n) + 1) throw DimensionError("box must have coordinates (x, u)");

  LipschitzSplitting out{SplitChart(MetricAssembly(base, limit), options.quad_tol, options.root_tol), box};
  const SplitChart& chart = out.chart;
  const double lam = limit.lambda();
  const auto& model = limit.model();
  const Interval ur = box.ranges[n];

  auto c = [&](double s) { return *model.lipschitz_modulus(s); };
  const double c_lo = std::min(0.0, ur.lo);
  const double c_hi = std::max(0.0, ur.hi);
  out.modulus_integral = quad::integrate(c, c_lo, c_hi, 1e-12, limit.u_breakpoints()).value;
  out.f_bound = std::max(out.modulus_integral, 2.0 * lam);

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw_x = [&] {
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = box.ranges[i].lo + box.ranges[i].width() * unit(rng);
    return x;
  };
  auto draw_u = [&] { return ur.lo + ur.width() * unit(rng); };
  const double T = options.t_half_width;
  auto draw_t = [&] { return -T + 2.0 * T * unit(rng); };

  out.f_u_min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < options.pairs; ++k) {
    // F along x at fixed u.
    if (n > 0) {
      const Vector x1 = draw_x(), x2 = draw_x();
      const double u = draw_u();
      const double dist = base->distance(x1, x2);
      if (dist > 0.0) {
        out.f_x_constant = std::max(out.f_x_constant, std::abs(chart.big_f(x1, u) - chart.big_f(x2, u)) / dist);
      }
    }
    // F along u at fixed x.
    {
      const Vector x = draw_x();
      const double u1 = draw_u(), u2 = draw_u();
      if (u1 != u2) {
        const double r = std::abs(chart.big_f(x, u1) - chart.big_f(x, u2)) / std::abs(u1 - u2);
        out.f_u_min_ratio = std::min(out.f_u_min_ratio, r);
        out.f_u_max_ratio = std::max(out.f_u_max_ratio, r);
      }
    }
    // General pairs for F, K and Phi.
    const Vector x1 = draw_x(), x2 = draw_x();
    const double u1 = draw_u(), u2 = draw_u();
    const double t1 = draw_t(), t2 = draw_t();
    const double dxu = sum_distance(*base, x1, x2) + std::abs(u1 - u2);
    if (dxu > 0.0) {
      out.f_constant = std::max(out.f_constant, std::abs(chart.big_f(x1, u1) - chart.big_f(x2, u2)) / dxu);
    }
    const double dtxu = dxu + std::abs(t1 - t2);
    const SpacetimePoint p1 = chart.phi(t1, x1, u1);
    const SpacetimePoint p2 = chart.phi(t2, x2, u2);
    if (dtxu > 0.0) {
      out.k_constant = std::max(out.k_constant, std::abs(p1.u - p2.u) / dtxu);
      const double dp = sum_distance(*base, p1.x, p2.x) + std::abs(p1.u - p2.u) + std::abs(p1.v - p2.v);
      out.phi_constant = std::max(out.phi_constant, dp / dtxu);
      if (dp > 0.0) {
        const SplitCoords c1 = chart.psi(p1);
        const SplitCoords c2 = chart.psi(p2);
        const double dc = std::abs(c1.t - c2.t) + sum_distance(*base, c1.x, c2.x) + std::abs(c1.u - c2.u);
        out.psi_constant = std::max(out.psi_constant, dc / dp);
      }
    }

    // Round trips.
    Vector c_in(n + 2);
    c_in[0] = t1;
    c_in.segment(1, n) = x1;
    c_in[n + 1] = u1;
    out.psi_phi_residual = std::max(out.psi_phi_residual, (to_vector(chart.psi(p1)) - c_in).cwiseAbs().maxCoeff());
    const SpacetimePoint q{x2, u2, draw_t()};
    out.phi_psi_residual = std::max(out.phi_psi_residual, [&] {
      const SplitCoords s = chart.psi(q);
      return (to_vector(chart.phi(s.t, s.x, s.u)) - to_vector(q)).cwiseAbs().maxCoeff();
    }());
    ++out.pairs;
  }
  return out;
}

}  // namespace npw
