#pragma once

#include "npw/splitting.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace npw {

using Field = std::function<Vector(const Vector&)>;

/// Composite Gauss-Legendre tensor grid: `panels_per_dim` equal panels per
/// axis (split further at the breakpoints of that axis), five nodes each.
struct L1Grid {
  int panels_per_dim = 64;
  std::vector<std::vector<double>> breakpoints;  // per axis; may be empty
};

/// \int_box |f - g| w, with |.| the Euclidean norm of the value difference.
/// An empty `weight` means w = 1.
double l1_error(const Field& f, const Field& g, const Box& box, const L1Grid& grid = {},
                const std::function<double(const Vector&)>& weight = {});

/// G_eps(x, z) = F_{eps,x}^{-1}(z); eps == 0 uses the limit profile.
double g_inverse_net(const RegularizationNet& net, double eps, const Vector& x, double z, double quad_tol = 1e-10,
                     double root_tol = 1e-10);

enum class Quantity { a, F, G, K, Phi, Psi };
std::string to_string(Quantity q);
Quantity parse_quantity(const std::string& name);
/// Coordinates of the sweep box: (x, u) for a and F, (x, z) for G,
/// (t, x, u) for K and Phi, (x, u, v) for Psi.
std::size_t quantity_box_dims(Quantity q, int n);

enum class NormKind { l1_box, sup_box, holder };

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;  // zero when only two points are fitted
  double residual = 0.0;      // rms of log residuals
  std::size_t points = 0;
};

/// Ordinary least squares of log y against log x over the pairs with y > floor.
LogLogFit fit_loglog(std::span<const double> xs, std::span<const double> ys, double floor = 0.0);

struct ConvergenceReport {
  Quantity quantity = Quantity::a;
  NormKind norm_kind = NormKind::l1_box;
  std::vector<double> epsilons;  // strictly decreasing
  std::vector<double> errors;
  LogLogFit fit;
  double floor = 0.0;         // errors below 10 * floor are left out of the fit
  bool monotone = true;       // non-increasing within a 5% band
  bool strictly_decreasing = true;
  std::vector<std::size_t> flagged;  // indices i where errors[i] > 1.05 errors[i-1]
};

struct SweepOptions {
  int panels_per_dim = 0;  // 0: chosen from the smallest epsilon
  double quad_tol = 1e-10;
  double root_tol = 1e-10;
};

/// L1 errors of the eps-objects against the eps = 0 limit built from a_0
/// itself, over `box` (see quantity_box_dims), weighted by sqrt(det h).
ConvergenceReport convergence_sweep(const RegularizationNet& net, ManifoldPtr base, Quantity quantity, const Box& box,
                                    std::span<const double> epsilons, const SweepOptions& options = {});

struct ModeratenessReport {
  int order = 0;
  std::vector<double> epsilons;
  std::vector<double> sups;
  double p = 0.0;  // sup |d^order a_eps / du^order| ~ eps^{-p}
  LogLogFit fit;
};

/// `points_per_dim` = 0 picks a grid with spacing eps_min / 40 in one
/// dimension and 201 points per axis otherwise.
ModeratenessReport moderateness_exponent(const RegularizationNet& net, int order, const Box& box,
                                         std::span<const double> epsilons, int points_per_dim = 0);

struct HolderValue {
  double sup = 0.0;
  double seminorm = 0.0;
  double total() const { return sup + seminorm; }
  std::size_t pairs = 0;
};

/// sup |delta| + sup_{p != q} |delta(p) - delta(q)| / |p - q|^alpha, over
/// `sobol_pairs` quasi-random pairs plus all nearest-neighbour pairs
/// (axis and diagonal) of a `grid_points`^d grid.
HolderValue holder_seminorm(const Field& delta, const Box& box, double alpha, std::size_t sobol_pairs = 10000,
                            int grid_points = 41);

/// Holder error of Phi_eps - Phi_0 on a (t, u) box; M = R^2 only.
HolderValue holder_error_2d(const RegularizationNet& net, double eps, double alpha, const Box& box,
                            std::size_t sobol_pairs = 10000, int grid_points = 41);

struct LipschitzOptions {
  std::size_t pairs = 2000;
  std::uint64_t seed = 42;
  double t_half_width = 1.0;  // t range of the (t, x, u) box
  double quad_tol = 1e-12;
  double root_tol = 1e-12;
};

/// Splitting built directly on a Lipschitz (non-smooth) a_0 with its
/// empirical Lipschitz constants. Distances are sums d^h(x1,x2) + |u1-u2|
/// (+ |t1-t2| or |v1-v2|), matching |F(p)-F(q)| <= C d^h + 2 lambda |du|.
struct LipschitzSplitting {
  SplitChart chart;
  Box box;                      // (x, u)
  double modulus_integral = 0;  // C = \int c over the u-range joined with 0
  double f_bound = 0;           // max(C, 2 lambda)
  double f_x_constant = 0;      // sup |F(x1,u) - F(x2,u)| / d^h(x1,x2)
  double f_u_min_ratio = 0;     // inf |F(x,u1) - F(x,u2)| / |u1 - u2|
  double f_u_max_ratio = 0;
  double f_constant = 0;        // general pairs
  double k_constant = 0;
  double phi_constant = 0;
  double psi_constant = 0;
  double psi_phi_residual = 0;  // max |Psi(Phi(c)) - c|
  double phi_psi_residual = 0;  // max |Phi(Psi(p)) - p|
  std::size_t pairs = 0;

  double K0(const Vector& x, double t, double u) const { return chart.big_k(x, t, u); }
  SpacetimePoint Phi0(double t, const Vector& x, double u) const { return chart.phi(t, x, u); }
  SplitCoords Psi0(const SpacetimePoint& p) const { return chart.psi(p); }
};

/// Requires a profile that declares a Lipschitz modulus (UnsupportedInput
/// otherwise). `box` has coordinates (x, u).
LipschitzSplitting lipschitz_splitting(ManifoldPtr base, const Profile& limit, const Box& box,
                                       const LipschitzOptions& options = {});

}  // namespace npw
