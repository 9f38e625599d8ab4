#include "npw/profile.hpp"

#include "grid.hpp"
#include "npw/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace npw {

// ---------------------------------------------------------------------------
// ProfileModel defaults

Vector ProfileModel::grad_x(const Vector& x, double u) const {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = eval(xp, u);
    xp[i] = x[i] - h;
    const double fm = eval(xp, u);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double ProfileModel::du(const Vector& x, double u) const {
  const double h = 1e-5 * std::max(1.0, std::abs(u));
  return (eval(x, u + h) - eval(x, u - h)) / (2.0 * h);
}

double ProfileModel::du2(const Vector& x, double u) const {
  const double h = 1e-4 * std::max(1.0, std::abs(u));
  return (eval(x, u + h) - 2.0 * eval(x, u) + eval(x, u - h)) / (h * h);
}

double ProfileModel::integral_u(const Vector& x, double u0, double u1, double tol) const {
  const auto breaks = u_breakpoints();
  return quad::integrate([&](double s) { return eval(x, s); }, u0, u1, tol, breaks).value;
}

Vector ProfileModel::grad_x_integral_u(const Vector& x, double u0, double u1, double tol) const {
  const auto breaks = u_breakpoints();
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    out[i] = quad::integrate([&](double s) { return grad_x(x, s)[i]; }, u0, u1, tol, breaks).value;
  return out;
}

// ---------------------------------------------------------------------------
// Profile

Profile::Profile(std::shared_ptr<const ProfileModel> model, double lambda, BoundPolicy policy)
    : model_(std::move(model)), lambda_(lambda), policy_(policy) {
  if (!model_) throw Error("profile without model");
  if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) throw BoundViolation("lambda must be positive and finite");
  const double sup = model_->declared_sup();
  if (!(sup >= 0.0)) throw BoundViolation("declared sup of a profile must be non-negative");
  const bool ok = policy_ == BoundPolicy::strict ? sup < lambda_ : sup <= lambda_;
  if (!ok) {
    throw BoundViolation("profile bound violated: declared sup " + std::to_string(sup) + " vs lambda " +
                         std::to_string(lambda_));
  }
}

Vector Profile::grad_x(const Vector& x, double u) const {
  if (!smooth()) throw UnsupportedInput("grad_x requested on a non-smooth profile");
  return model_->grad_x(x, u);
}

double Profile::du(const Vector& x, double u) const {
  if (!smooth()) throw UnsupportedInput("du requested on a non-smooth profile");
  return model_->du(x, u);
}

double Profile::du2(const Vector& x, double u) const {
  if (!smooth()) throw UnsupportedInput("du2 requested on a non-smooth profile");
  return model_->du2(x, u);
}

Vector Profile::grad_x_integral_u(const Vector& x, double u0, double u1, double tol) const {
  if (!smooth()) throw UnsupportedInput("grad_x integral requested on a non-smooth profile");
  return model_->grad_x_integral_u(x, u0, u1, tol);
}

// ---------------------------------------------------------------------------
// Closed-form models

namespace {

double param(const ProfileParams& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

class ConstantModel final : public ProfileModel {
 public:
  ConstantModel(int n, double c) : n_(n), c_(c) {}
  int dim() const override { return n_; }
  std::string kind() const override { return "constant"; }
  bool smooth() const override { return true; }
  double declared_sup() const override { return c_; }
  double eval(const Vector&, double) const override { return c_; }
  Vector grad_x(const Vector& x, double) const override { return Vector::Zero(x.size()); }
  double du(const Vector&, double) const override { return 0.0; }
  double du2(const Vector&, double) const override { return 0.0; }
  double integral_u(const Vector&, double u0, double u1, double) const override { return c_ * (u1 - u0); }
  Vector grad_x_integral_u(const Vector& x, double, double, double) const override { return Vector::Zero(x.size()); }
  std::optional<double> lipschitz_modulus(double) const override { return 0.0; }
  bool has_lipschitz_modulus() const override { return true; }

 private:
  int n_;
  double c_;
};

// A sin^2(u) / (1 + |x|^2)^decay_power, decay_power in {0, 1}.
class SineModel final : public ProfileModel {
 public:
  SineModel(int n, double amplitude, bool decay) : n_(n), a_(amplitude), decay_(decay) {}
  int dim() const override { return n_; }
  std::string kind() const override { return decay_ ? "sine_x_decay" : "sine"; }
  bool smooth() const override { return true; }
  double declared_sup() const override { return a_; }

  double eval(const Vector& x, double u) const override {
    const double s = std::sin(u);
    return a_ * s * s * weight(x);
  }
  Vector grad_x(const Vector& x, double u) const override {
    if (!decay_) return Vector::Zero(x.size());
    const double s = std::sin(u);
    const double w = weight(x);
    return -2.0 * a_ * s * s * w * w * x;
  }
  double du(const Vector& x, double u) const override { return a_ * std::sin(2.0 * u) * weight(x); }
  double du2(const Vector& x, double u) const override { return 2.0 * a_ * std::cos(2.0 * u) * weight(x); }
  double integral_u(const Vector& x, double u0, double u1, double) const override {
    return a_ * weight(x) * (primitive(u1) - primitive(u0));
  }
  Vector grad_x_integral_u(const Vector& x, double u0, double u1, double) const override {
    if (!decay_) return Vector::Zero(x.size());
    const double w = weight(x);
    return -2.0 * a_ * w * w * (primitive(u1) - primitive(u0)) * x;
  }

 private:
  static double primitive(double u) { return 0.5 * u - 0.25 * std::sin(2.0 * u); }
  double weight(const Vector& x) const { return decay_ ? 1.0 / (1.0 + x.squaredNorm()) : 1.0; }
  int n_;
  double a_;
  bool decay_;
};

// A / (1 + |x|^2 + u^2).
class BumpModel final : public ProfileModel {
 public:
  BumpModel(int n, double amplitude) : n_(n), a_(amplitude) {}
  int dim() const override { return n_; }
  std::string kind() const override { return "bump"; }
  bool smooth() const override { return true; }
  double declared_sup() const override { return a_; }

  double eval(const Vector& x, double u) const override { return a_ / (1.0 + x.squaredNorm() + u * u); }
  Vector grad_x(const Vector& x, double u) const override {
    const double d = 1.0 + x.squaredNorm() + u * u;
    return (-2.0 * a_ / (d * d)) * x;
  }
  double du(const Vector& x, double u) const override {
    const double d = 1.0 + x.squaredNorm() + u * u;
    return -2.0 * a_ * u / (d * d);
  }
  double du2(const Vector& x, double u) const override {
    const double d = 1.0 + x.squaredNorm() + u * u;
    return a_ * (-2.0 / (d * d) + 8.0 * u * u / (d * d * d));
  }
  // \int A / (c^2 + s^2) ds = (A / c) atan(s / c), c^2 = 1 + |x|^2.
  double integral_u(const Vector& x, double u0, double u1, double) const override {
    const double c = std::sqrt(1.0 + x.squaredNorm());
    return a_ / c * (std::atan(u1 / c) - std::atan(u0 / c));
  }
  Vector grad_x_integral_u(const Vector& x, double u0, double u1, double) const override {
    const double c = std::sqrt(1.0 + x.squaredNorm());
    auto dprim_dc = [&](double u) { return -std::atan(u / c) / (c * c) - u / (c * (c * c + u * u)); };
    return (a_ * (dprim_dc(u1) - dprim_dc(u0)) / c) * x;
  }

 private:
  int n_;
  double a_;
};

// A / (1 + |x|^2), independent of u.
class XBumpModel final : public ProfileModel {
 public:
  XBumpModel(int n, double amplitude) : n_(n), a_(amplitude) {}
  int dim() const override { return n_; }
  std::string kind() const override { return "x_bump"; }
  bool smooth() const override { return true; }
  double declared_sup() const override { return a_; }
  double eval(const Vector& x, double) const override { return a_ / (1.0 + x.squaredNorm()); }
  Vector grad_x(const Vector& x, double) const override {
    const double d = 1.0 + x.squaredNorm();
    return (-2.0 * a_ / (d * d)) * x;
  }
  double du(const Vector&, double) const override { return 0.0; }
  double du2(const Vector&, double) const override { return 0.0; }
  double integral_u(const Vector& x, double u0, double u1, double) const override { return eval(x, 0.0) * (u1 - u0); }
  Vector grad_x_integral_u(const Vector& x, double u0, double u1, double) const override {
    return grad_x(x, 0.0) * (u1 - u0);
  }

 private:
  int n_;
  double a_;
};

double positive_part_length(double u0, double u1) { return std::max(u1, 0.0) - std::max(u0, 0.0); }

// amplitude(x) * H(u), with amplitude either constant or A min(1, |x|).
class HeavisideModel final : public ProfileModel {
 public:
  HeavisideModel(int n, double amplitude, bool x_lipschitz) : n_(n), a_(amplitude), lip_(x_lipschitz) {}
  int dim() const override { return n_; }
  std::string kind() const override { return lip_ ? "lipschitz_heaviside" : "heaviside"; }
  bool smooth() const override { return false; }
  double declared_sup() const override { return a_; }
  std::vector<double> u_breakpoints() const override { return {0.0}; }

  double eval(const Vector& x, double u) const override { return u > 0.0 ? amplitude(x) : 0.0; }
  Vector grad_x(const Vector& x, double u) const override {
    if (!lip_ || u <= 0.0) return Vector::Zero(x.size());
    const double r = x.norm();
    if (r >= 1.0 || r == 0.0) return Vector::Zero(x.size());
    return (a_ / r) * x;
  }
  double du(const Vector&, double) const override { return 0.0; }
  double du2(const Vector&, double) const override { return 0.0; }
  double integral_u(const Vector& x, double u0, double u1, double) const override {
    return amplitude(x) * positive_part_length(u0, u1);
  }
  Vector grad_x_integral_u(const Vector& x, double u0, double u1, double) const override {
    return grad_x(x, 1.0) * positive_part_length(u0, u1);
  }
  std::optional<double> lipschitz_modulus(double s) const override {
    if (!lip_) return 0.0;
    return s > 0.0 ? a_ : 0.0;
  }
  bool has_lipschitz_modulus() const override { return true; }

 private:
  double amplitude(const Vector& x) const { return lip_ ? a_ * std::min(1.0, x.norm()) : a_; }
  int n_;
  double a_;
  bool lip_;
};

// ---------------------------------------------------------------------------
// Mollification

class MollifiedModel final : public ProfileModel {
 public:
  MollifiedModel(std::shared_ptr<const ProfileModel> limit, Mollifier m, MollifyMode mode, double eps, double tol)
      : limit_(std::move(limit)), m_(std::move(m)), mode_(mode), eps_(eps), tol_(tol), breaks_(limit_->u_breakpoints()) {}

  int dim() const override { return limit_->dim(); }
  std::string kind() const override { return "mollified_" + limit_->kind(); }
  bool smooth() const override { return true; }
  double declared_sup() const override { return limit_->declared_sup(); }
  double feature_scale() const override { return std::min(eps_, limit_->feature_scale()); }

  double eval(const Vector& x, double u) const override {
    if (mode_ == MollifyMode::product) return product(x, u, -1, 0);
    return smear(u, [&](double w) { return limit_->eval(x, w); }, m_.density);
  }
  double du(const Vector& x, double u) const override {
    if (mode_ == MollifyMode::product) return product(x, u, dim(), 1);
    return smear(u, [&](double w) { return limit_->eval(x, w); }, m_.d1) / eps_;
  }
  double du2(const Vector& x, double u) const override {
    if (mode_ == MollifyMode::product) return product(x, u, dim(), 2);
    return smear(u, [&](double w) { return limit_->eval(x, w); }, m_.d2) / (eps_ * eps_);
  }
  Vector grad_x(const Vector& x, double u) const override {
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (mode_ == MollifyMode::product) {
        g[i] = product(x, u, static_cast<int>(i), 1);
      } else {
        g[i] = smear(u, [&](double w) { return limit_->grad_x(x, w)[i]; }, m_.density);
      }
    }
    return g;
  }

  // \int_{u0}^{u1} a_eps = \int rho(s) \int_{u0 - eps s}^{u1 - eps s} a_0 ds.
  double integral_u(const Vector& x, double u0, double u1, double tol) const override {
    if (mode_ == MollifyMode::product) return ProfileModel::integral_u(x, u0, u1, tol);
    auto f = [&](double s) {
      const double r = m_.density(s);
      return r == 0.0 ? 0.0 : r * limit_->integral_u(x, u0 - eps_ * s, u1 - eps_ * s, tol_);
    };
    return quad::integrate(f, -1.0, 1.0, tol, window_breaks(u0, u1)).value;
  }
  Vector grad_x_integral_u(const Vector& x, double u0, double u1, double tol) const override {
    if (mode_ == MollifyMode::product) return ProfileModel::grad_x_integral_u(x, u0, u1, tol);
    Vector out(x.size());
    const auto breaks = window_breaks(u0, u1);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      auto f = [&](double s) {
        const double r = m_.density(s);
        return r == 0.0 ? 0.0 : r * limit_->grad_x_integral_u(x, u0 - eps_ * s, u1 - eps_ * s, tol_)[i];
      };
      out[i] = quad::integrate(f, -1.0, 1.0, tol, breaks).value;
    }
    return out;
  }

 private:
  // \int_{-1}^{1} g(u - eps s) k(s) ds split where u - eps s crosses a breakpoint.
  template <class G, class K>
  double smear(double u, G&& g, const K& kernel) const {
    std::vector<double> cuts;
    for (double b : breaks_) cuts.push_back((u - b) / eps_);
    auto f = [&](double s) {
      const double k = kernel(s);
      return k == 0.0 ? 0.0 : g(u - eps_ * s) * k;
    };
    return quad::integrate(f, -1.0, 1.0, tol_, cuts).value;
  }

  std::vector<double> window_breaks(double u0, double u1) const {
    std::vector<double> cuts;
    for (double b : breaks_) {
      cuts.push_back((u0 - b) / eps_);
      cuts.push_back((u1 - b) / eps_);
    }
    return cuts;
  }

  // Nested product-kernel convolution over (y_1..y_n, s) in [-1,1]^{n+1}.
  // `deriv` selects the coordinate whose kernel is differentiated `order`
  // times (-1 for none).
  double product(const Vector& x, double u, int deriv, int order) const {
    const int n = dim();
    Vector shifted = x;
    auto kernel = [&](int coord, double s) {
      if (coord != deriv || order == 0) return m_.density(s);
      return order == 1 ? m_.d1(s) / eps_ : m_.d2(s) / (eps_ * eps_);
    };
    std::function<double(int)> level = [&](int coord) -> double {
      if (coord == n) {
        std::vector<double> cuts;
        for (double b : breaks_) cuts.push_back((u - b) / eps_);
        auto f = [&](double s) {
          const double k = kernel(n, s);
          return k == 0.0 ? 0.0 : limit_->eval(shifted, u - eps_ * s) * k;
        };
        return quad::integrate(f, -1.0, 1.0, tol_, cuts).value;
      }
      auto f = [&](double y) {
        const double k = kernel(coord, y);
        if (k == 0.0) return 0.0;
        shifted[coord] = x[coord] - eps_ * y;
        const double inner = level(coord + 1);
        shifted[coord] = x[coord];
        return inner * k;
      };
      return quad::integrate(f, -1.0, 1.0, tol_).value;
    };
    return level(0);
  }

  std::shared_ptr<const ProfileModel> limit_;
  Mollifier m_;
  MollifyMode mode_;
  double eps_;
  double tol_;
  std::vector<double> breaks_;
};

}  // namespace

std::shared_ptr<const ProfileModel> make_profile_model(const std::string& kind, const ProfileParams& params, int n) {
  if (n < 0) throw DimensionError("profile dimension must be non-negative");
  for (const auto& [key, value] : params)
    if (!std::isfinite(value)) throw Error("profile parameter '" + key + "' is not finite");
  auto nonneg = [&](const std::string& key, double fallback) {
    const double v = param(params, key, fallback);
    if (v < 0.0) throw BoundViolation("profile parameter '" + key + "' must be non-negative");
    return v;
  };
  if (kind == "constant") return std::make_shared<ConstantModel>(n, nonneg("c", 0.0));
  if (kind == "sine") return std::make_shared<SineModel>(n, nonneg("A", 1.0), false);
  if (kind == "sine_x_decay") return std::make_shared<SineModel>(n, nonneg("A", 1.0), true);
  if (kind == "bump") return std::make_shared<BumpModel>(n, nonneg("A", 1.0));
  if (kind == "x_bump") return std::make_shared<XBumpModel>(n, nonneg("A", 1.0));
  if (kind == "heaviside") return std::make_shared<HeavisideModel>(n, nonneg("c", 1.0), false);
  if (kind == "lipschitz_heaviside") {
    if (n < 1) throw DimensionError("lipschitz_heaviside needs n >= 1");
    return std::make_shared<HeavisideModel>(n, nonneg("A", 1.0), true);
  }
  throw Error("unknown profile kind: " + kind);
}

double default_lambda(double declared_sup) { return declared_sup > 0.0 ? 1.5 * declared_sup : 1.0; }

Profile make_profile(const std::string& kind, const ProfileParams& params, int n, std::optional<double> lambda,
                     BoundPolicy policy) {
  auto model = make_profile_model(kind, params, n);
  Profile p(model, lambda.value_or(default_lambda(model->declared_sup())), policy);
  const int ppd = n <= 2 ? 9 : 5;
  validate_bounds(p, Box::cube(static_cast<std::size_t>(n) + 1, {-4.0, 4.0}), ppd);
  return p;
}

void validate_bounds(const Profile& p, const Box& box, int points_per_dim) {
  if (box.dims() != static_cast<std::size_t>(p.dim()) + 1) throw DimensionError("validation box must be (x, u)");
  const double sup = p.declared_sup();
  const double slack = 1e-12 * std::max(1.0, sup);
  detail::for_each_uniform_node(box, points_per_dim, [&](const Vector& pt) {
    const Vector x = pt.head(p.dim());
    const double u = pt[p.dim()];
    const double a = p.eval(x, u);
    if (!std::isfinite(a) || a < -slack || a > sup + slack) {
      throw BoundViolation("profile value " + std::to_string(a) + " outside [0, declared sup]");
    }
  });
}

Mollifier Mollifier::standard_bump() {
  auto raw = [](double s) {
    const double q = 1.0 - s * s;
    return q <= 0.0 ? 0.0 : std::exp(-1.0 / q);
  };
  static const double norm = 1.0 / quad::integrate(raw, -1.0, 1.0, 1e-15).value;
  // exp(-1/q) underflows long before q^-4 overflows; q < 1e-3 is exactly 0.
  auto density = [raw](double s) { return norm * raw(s); };
  auto d1 = [density](double s) {
    const double q = 1.0 - s * s;
    if (q < 1e-3) return 0.0;
    return density(s) * (-2.0 * s / (q * q));
  };
  auto d2 = [density](double s) {
    const double q = 1.0 - s * s;
    if (q < 1e-3) return 0.0;
    const double q2 = q * q;
    return density(s) * (4.0 * s * s / (q2 * q2) - 2.0 / q2 - 8.0 * s * s / (q2 * q));
  };
  return Mollifier{density, d1, d2};
}

RegularizationNet::RegularizationNet(Profile limit, Mollifier mollifier, MollifyMode mode, double quad_tol)
    : limit_(std::move(limit)), mollifier_(std::move(mollifier)), mode_(mode), quad_tol_(quad_tol) {
  if (!mollifier_.density || !mollifier_.d1 || !mollifier_.d2) throw Error("mollifier needs density and derivatives");
  if (!(quad_tol_ > 0.0)) throw Error("quadrature tolerance must be positive");
  const double mass = quad::integrate(mollifier_.density, -1.0, 1.0, 1e-13).value;
  if (std::abs(mass - 1.0) > 1e-9) throw Error("mollifier must have unit mass");
  for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    if (mollifier_.density(s) < 0.0 || std::abs(mollifier_.density(s) - mollifier_.density(-s)) > 1e-14)
      throw Error("mollifier must be even and non-negative");
  }
}

Profile RegularizationNet::at(double eps) const {
  if (eps == 0.0) return limit_;
  if (!(eps > 0.0 && eps <= 1.0)) throw Error("mollifier scale must lie in (0, 1]");
  auto model = std::make_shared<MollifiedModel>(limit_.model_ptr(), mollifier_, mode_, eps, quad_tol_);
  return Profile(model, limit_.lambda(), limit_.policy());
}

Profile mollify(const RegularizationNet& net, double eps) { return net.at(eps); }

double sup_norm(const Profile& p, const Box& box, int derivative_order, int points_per_dim) {
  if (box.dims() != static_cast<std::size_t>(p.dim()) + 1) throw DimensionError("sup_norm box must be (x, u)");
  if (derivative_order < 0 || derivative_order > 2) throw UnsupportedInput("sup_norm supports orders 0, 1, 2");
  double sup = 0.0;
  detail::for_each_uniform_node(box, points_per_dim, [&](const Vector& pt) {
    const Vector x = pt.head(p.dim());
    const double u = pt[p.dim()];
    double v = 0.0;
    switch (derivative_order) {
      case 0: v = p.eval(x, u); break;
      case 1: v = p.du(x, u); break;
      default: v = p.du2(x, u); break;
    }
    sup = std::max(sup, std::abs(v));
  });
  return sup;
}

}  // namespace npw
