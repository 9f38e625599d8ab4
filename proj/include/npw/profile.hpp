#pragma once

#include "npw/common.hpp"

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace npw {

/// Evaluation model behind a Profile. Smooth models supply derivatives;
/// non-smooth limits (a_0) supply values, u-breakpoints where they jump or
/// kink, and exact piecewise integrals where known.
class ProfileModel {
 public:
  virtual ~ProfileModel() = default;

  virtual int dim() const = 0;
  virtual std::string kind() const = 0;
  virtual bool smooth() const = 0;
  virtual double declared_sup() const = 0;
  virtual double eval(const Vector& x, double u) const = 0;

  // Defaults are central differences of eval. Non-smooth models may
  // override with almost-everywhere derivatives.
  virtual Vector grad_x(const Vector& x, double u) const;
  virtual double du(const Vector& x, double u) const;
  virtual double du2(const Vector& x, double u) const;

  /// u-values where a(x, .) is not smooth, for every x.
  virtual std::vector<double> u_breakpoints() const { return {}; }

  /// \int_{u0}^{u1} a(x, s) ds. Default: adaptive quadrature split at the breakpoints.
  virtual double integral_u(const Vector& x, double u0, double u1, double tol) const;
  /// \int_{u0}^{u1} grad_x a(x, s) ds.
  virtual Vector grad_x_integral_u(const Vector& x, double u0, double u1, double tol) const;

  /// c(s) with |a(x,s) - a(y,s)| <= c(s) d^h(x,y), when known.
  virtual std::optional<double> lipschitz_modulus(double /*s*/) const { return std::nullopt; }
  virtual bool has_lipschitz_modulus() const { return false; }

  /// Shortest coordinate length over which a can change by O(1); adaptive
  /// integrators must not step across it blindly. Infinite when unknown.
  virtual double feature_scale() const { return std::numeric_limits<double>::infinity(); }
};

enum class BoundPolicy {
  strict,          // sup a < lambda
  allow_equality,  // sup a <= lambda; keeps 2 lambda - a >= lambda > 0
};

/// Profile function a(x,u) >= 0 together with its bound lambda.
class Profile {
 public:
  Profile(std::shared_ptr<const ProfileModel> model, double lambda, BoundPolicy policy = BoundPolicy::strict);

  double operator()(const Vector& x, double u) const { return model_->eval(x, u); }
  double eval(const Vector& x, double u) const { return model_->eval(x, u); }
  Vector grad_x(const Vector& x, double u) const;
  double du(const Vector& x, double u) const;
  double du2(const Vector& x, double u) const;
  double integral_u(const Vector& x, double u0, double u1, double tol) const {
    return model_->integral_u(x, u0, u1, tol);
  }
  Vector grad_x_integral_u(const Vector& x, double u0, double u1, double tol) const;

  int dim() const { return model_->dim(); }
  bool smooth() const { return model_->smooth(); }
  double lambda() const { return lambda_; }
  double declared_sup() const { return model_->declared_sup(); }
  BoundPolicy policy() const { return policy_; }
  std::vector<double> u_breakpoints() const { return model_->u_breakpoints(); }
  const ProfileModel& model() const { return *model_; }
  std::shared_ptr<const ProfileModel> model_ptr() const { return model_; }

  /// Same model with another bound.
  Profile with_lambda(double lambda) const { return Profile(model_, lambda, policy_); }

 private:
  std::shared_ptr<const ProfileModel> model_;
  double lambda_;
  BoundPolicy policy_;
};

using ProfileParams = std::map<std::string, double>;

/// Closed-form kinds:
///   constant             {c}  a = c
///   sine                 {A}  a = A sin^2(u)
///   bump                 {A}  a = A / (1 + |x|^2 + u^2)
///   x_bump               {A}  a = A / (1 + |x|^2)
///   sine_x_decay         {A}  a = A sin^2(u) / (1 + |x|^2)
///   heaviside            {c}  a = c H(u)                       (non-smooth)
///   lipschitz_heaviside  {A}  a = A min(1,|x|) H(u), n >= 1    (non-smooth)
/// H(u) = 1 for u > 0 and 0 otherwise. A missing lambda defaults to
/// 1.5 * declared sup (1 for the zero profile).
std::shared_ptr<const ProfileModel> make_profile_model(const std::string& kind, const ProfileParams& params, int n);
Profile make_profile(const std::string& kind, const ProfileParams& params, int n, std::optional<double> lambda = {},
                     BoundPolicy policy = BoundPolicy::strict);

double default_lambda(double declared_sup);

/// Checks 0 <= a <= declared sup on a grid over `box` (coordinates x..., u)
/// and throws BoundViolation otherwise.
void validate_bounds(const Profile& p, const Box& box, int points_per_dim);

/// Even, non-negative density supported in [-1, 1] with unit mass, plus its
/// first two derivatives.
struct Mollifier {
  std::function<double(double)> density;
  std::function<double(double)> d1;
  std::function<double(double)> d2;

  /// Normalised exp(-1 / (1 - s^2)).
  static Mollifier standard_bump();
};

enum class MollifyMode {
  u_only,   // smear in u with x fixed
  product,  // smear in (x, u) with a product kernel; x treated as Euclidean
};

/// a_eps = a_0 * rho_eps for a (possibly non-smooth) limit a_0.
class RegularizationNet {
 public:
  explicit RegularizationNet(Profile limit, Mollifier mollifier = Mollifier::standard_bump(),
                             MollifyMode mode = MollifyMode::u_only, double quad_tol = 1e-11);

  /// The regularization at scale eps in (0, 1]; eps == 0 returns the limit.
  Profile at(double eps) const;
  const Profile& limit() const { return limit_; }
  const Mollifier& mollifier() const { return mollifier_; }
  MollifyMode mode() const { return mode_; }
  double lambda() const { return limit_.lambda(); }

 private:
  Profile limit_;
  Mollifier mollifier_;
  MollifyMode mode_;
  double quad_tol_;
};

/// Convenience wrapper for RegularizationNet::at.
Profile mollify(const RegularizationNet& net, double eps);

/// sup over a uniform grid on `box` (coordinates x..., u) of
/// |d^order a / du^order|, order in {0, 1, 2}.
double sup_norm(const Profile& p, const Box& box, int derivative_order = 0, int points_per_dim = 201);

}  // namespace npw
