#include "npw/cli.hpp"

#include "npw/convergence.hpp"
#include "npw/geodesics.hpp"
#include "npw/splitting.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string_view>

namespace npw::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- config helpers -------------------------------------------------------

void allow_keys(const json& j, std::initializer_list<std::string_view> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
      throw ConfigError("unknown key '" + (where.empty() ? "" : where + ".") + it.key() + "'");
    }
  }
}

const json& section(const json& cfg, const char* key) {
  static const json empty = json::object();
  return cfg.contains(key) ? cfg.at(key) : empty;
}

double number(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
  return j.at(key).get<double>();
}

double positive(const json& j, const char* key, double fallback, const std::string& where) {
  const double v = number(j, key, fallback, where);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(where + "." + key + " must be positive");
  return v;
}

std::size_t count(const json& j, const char* key, std::size_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer() || j.at(key).get<long long>() < 1) {
    throw ConfigError(where + "." + key + " must be a positive integer");
  }
  return j.at(key).get<std::size_t>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : j) {
    if (!e.is_number()) throw ConfigError(where + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Interval interval(const json& j, const std::string& where) {
  const auto v = numbers(j, where);
  if (v.size() != 2 || !(v[0] <= v[1])) throw ConfigError(where + " must be [lo, hi] with lo <= hi");
  return {v[0], v[1]};
}

Box box(const json& j, std::size_t dims, const std::string& where) {
  if (!j.is_array() || j.size() != dims) {
    throw ConfigError(where + " must list " + std::to_string(dims) + " intervals");
  }
  Box b;
  for (std::size_t i = 0; i < dims; ++i) b.ranges.push_back(interval(j[i], where + "[" + std::to_string(i) + "]"));
  return b;
}

Box box_or(const json& sec, const char* key, std::size_t dims, Interval side, const std::string& where) {
  return sec.contains(key) ? box(sec.at(key), dims, where + "." + key) : Box::cube(dims, side);
}

std::vector<double> parse_epsilon_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("--epsilons: cannot parse '" + item + "'");
    }
    if (used != item.size()) throw ConfigError("--epsilons: cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--epsilons must list at least one value");
  return out;
}

// ---- output helpers -------------------------------------------------------

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : os_(path) {
    if (!os_) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
  }
  void row(const std::vector<double>& values, const std::string& tail = {}) {
    for (std::size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << g17(values[i]);
    if (!tail.empty()) os_ << (values.empty() ? "" : ",") << tail;
    os_ << '\n';
  }

 private:
  std::ofstream os_;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

json as_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
};

struct Summary {
  std::vector<Check> checks;
  std::vector<Check> diagnostics;  // reported, never fatal

  // value <= tolerance passes
  void at_most(const std::string& name, double value, double tol) { checks.push_back({name, value <= tol, value, tol}); }
  void at_least(const std::string& name, double value, double tol) {
    checks.push_back({name, value >= tol, value, tol});
  }
  void note(const std::string& name, bool pass, double value, double tol) {
    diagnostics.push_back({name, pass, value, tol});
  }
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

json checks_json(const std::vector<Check>& cs) {
  json arr = json::array();
  for (const auto& c : cs) arr.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"tolerance", c.tolerance}});
  return arr;
}

// ---- run context ----------------------------------------------------------

struct Context {
  json cfg;
  std::uint64_t seed = 42;
  std::optional<std::vector<double>> epsilon_override;
  fs::path out_dir;

  ManifoldPtr base;
  std::optional<Profile> limit;
  std::optional<RegularizationNet> net;
  std::optional<Profile> working;  // limit, or its regularization at net.epsilon
  double quad_tol = 1e-10;
  double root_tol = 1e-10;

  int n() const { return base->dim(); }
  SplitChart chart() const { return SplitChart(MetricAssembly(base, *working), quad_tol, root_tol); }
};

void build(Context& ctx) {
  const json& cfg = ctx.cfg;
  allow_keys(cfg, {"manifold", "profile", "net", "splitting", "verify", "split", "geodesic", "cauchy", "converge"}, "");

  std::string manifold = "euclidean:1";
  if (cfg.contains("manifold")) {
    if (!cfg.at("manifold").is_string()) throw ConfigError("manifold must be a string");
    manifold = cfg.at("manifold").get<std::string>();
  }
  try {
    ctx.base = make_manifold(manifold);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const int n = ctx.base->dim();

  const json& prof = section(cfg, "profile");
  allow_keys(prof, {"kind", "params", "lambda", "bound"}, "profile");
  std::string kind = "constant";
  ProfileParams params{{"c", 0.0}};
  if (prof.contains("kind")) {
    if (!prof.at("kind").is_string()) throw ConfigError("profile.kind must be a string");
    kind = prof.at("kind").get<std::string>();
    params.clear();
  }
  if (prof.contains("params")) {
    const json& p = prof.at("params");
    if (!p.is_object()) throw ConfigError("profile.params must be an object");
    params.clear();
    for (auto it = p.begin(); it != p.end(); ++it) {
      if (!it.value().is_number()) throw ConfigError("profile.params." + it.key() + " must be a number");
      params[it.key()] = it.value().get<double>();
    }
  }
  std::optional<double> lambda;
  if (prof.contains("lambda")) lambda = positive(prof, "lambda", 1.0, "profile");
  BoundPolicy policy = BoundPolicy::strict;
  if (prof.contains("bound")) {
    const auto b = prof.at("bound").is_string() ? prof.at("bound").get<std::string>() : std::string{};
    if (b == "strict") {
      policy = BoundPolicy::strict;
    } else if (b == "allow_equality") {
      policy = BoundPolicy::allow_equality;
    } else {
      throw ConfigError("profile.bound must be \"strict\" or \"allow_equality\"");
    }
  }
  try {
    ctx.limit = make_profile(kind, params, n, lambda, policy);
  } catch (const BoundViolation& e) {
    throw ConfigError(e.what());
  } catch (const Error& e) {
    throw ConfigError(std::string("profile: ") + e.what());
  }

  const json& net = section(cfg, "net");
  allow_keys(net, {"mollifier_epsilons", "mode", "epsilon"}, "net");
  MollifyMode mode = MollifyMode::u_only;
  if (net.contains("mode")) {
    const auto m = net.at("mode").is_string() ? net.at("mode").get<std::string>() : std::string{};
    if (m == "u_only") {
      mode = MollifyMode::u_only;
    } else if (m == "product") {
      mode = MollifyMode::product;
    } else {
      throw ConfigError("net.mode must be \"u_only\" or \"product\"");
    }
  }
  ctx.net.emplace(*ctx.limit, Mollifier::standard_bump(), mode);
  ctx.working = *ctx.limit;
  if (net.contains("epsilon")) {
    const double eps = positive(net, "epsilon", 0.1, "net");
    if (eps > 1.0) throw ConfigError("net.epsilon must lie in (0, 1]");
    ctx.working = ctx.net->at(eps);
  }

  const json& sp = section(cfg, "splitting");
  allow_keys(sp, {"quad_tol", "root_tol"}, "splitting");
  ctx.quad_tol = positive(sp, "quad_tol", 1e-10, "splitting");
  ctx.root_tol = positive(sp, "root_tol", 1e-10, "splitting");
}

std::vector<double> sweep_epsilons(const Context& ctx, const json& sec) {
  if (ctx.epsilon_override) return *ctx.epsilon_override;
  if (sec.contains("epsilons")) return numbers(sec.at("epsilons"), "converge.epsilons");
  const json& net = section(ctx.cfg, "net");
  if (net.contains("mollifier_epsilons")) return numbers(net.at("mollifier_epsilons"), "net.mollifier_epsilons");
  return {0.2, 0.1, 0.05, 0.025};
}

void require_smooth(const Context& ctx, const char* what) {
  if (!ctx.working->smooth()) {
    throw ConfigError(std::string(what) + " needs a smooth profile; set net.epsilon to regularize '" +
                      ctx.limit->model().kind() + "'");
  }
}

bool u_independent(const Profile& p) {
  const std::string k = p.model().kind();
  return k == "constant" || k == "x_bump";
}

// ---- subcommands ----------------------------------------------------------

void cmd_verify(const Context& ctx, Summary& sum) {
  const json& sec = section(ctx.cfg, "verify");
  allow_keys(sec, {"samples", "box", "t_range", "pullback_tol"}, "verify");
  const int n = ctx.n();
  const std::size_t samples = count(sec, "samples", 20, "verify");
  const Box region = box_or(sec, "box", n + 2, {-2.0, 2.0}, "verify");
  const Interval trange = sec.contains("t_range") ? interval(sec.at("t_range"), "verify.t_range") : Interval{-2.0, 2.0};
  const double pullback_tol = positive(sec, "pullback_tol", 1e-6, "verify");

  const MetricAssembly ma(ctx.base, *ctx.working);
  const double lam = ma.lambda();
  const double mu1_floor = mu1_lower_bound(lam);
  const double mu1_printed = -0.5 * lam + std::sqrt(0.5 * lam * lam + 1.0);
  std::mt19937_64 rng(ctx.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  double eig_err = 0, det_err = 0, mu2_excess = -std::numeric_limits<double>::infinity();
  double mu1_margin = std::numeric_limits<double>::infinity(), printed_margin = mu1_margin;
  double grad_tau_max = -std::numeric_limits<double>::infinity();
  json points = json::array();
  for (std::size_t s = 0; s < samples; ++s) {
    SpacetimePoint p{Vector(n), 0.0, 0.0};
    for (int i = 0; i < n; ++i) p.x[i] = region.ranges[i].lo + region.ranges[i].width() * unit(rng);
    p.u = region.ranges[n].lo + region.ranges[n].width() * unit(rng);
    p.v = region.ranges[n + 1].lo + region.ranges[n + 1].width() * unit(rng);

    const Matrix l = metric_matrix(ma, p);
    const Eigenvalues ev = eigenvalues(ma, p);
    Eigen::SelfAdjointEigenSolver<Matrix> es(l, Eigen::EigenvaluesOnly);
    std::vector<double> closed{ev.mu1, ev.mu2};
    for (int i = 0; i < n; ++i) closed.push_back(ev.nu[i]);
    std::sort(closed.begin(), closed.end());
    for (int i = 0; i < n + 2; ++i) eig_err = std::max(eig_err, std::abs(closed[i] - es.eigenvalues()[i]));

    const double det_h = n > 0 ? ctx.base->metric_at(p.x).determinant() : 1.0;
    const double det_check = l.determinant() + det_h;
    det_err = std::max(det_err, std::abs(det_check) / std::max(1.0, std::abs(det_h)));
    mu2_excess = std::max(mu2_excess, ev.mu2 + 1.0);
    mu1_margin = std::min(mu1_margin, ev.mu1 - mu1_floor);
    printed_margin = std::min(printed_margin, ev.mu1 - mu1_printed);
    const TangentVector gt = grad_tau(ma, p);
    const double gt_norm = inner(ma, p, gt, gt);
    grad_tau_max = std::max(grad_tau_max, gt_norm);

    Vector coords(n + 2);
    coords.head(n) = p.x;
    coords[n] = p.u;
    coords[n + 1] = p.v;
    points.push_back({{"point", as_json(coords)},
                      {"eigenvalues", {{"mu1", ev.mu1}, {"mu2", ev.mu2}, {"nu", as_json(ev.nu)}}},
                      {"det_check", det_check},
                      {"tau", tau(ma, p)},
                      {"grad_tau_norm", gt_norm}});
  }
  write_json(ctx.out_dir / "verify.json", points);

  sum.at_most("eigenvalues_closed_form", eig_err, 1e-9);
  sum.at_most("det_l_plus_det_h", det_err, 1e-12);
  sum.at_most("mu2_le_minus_one", mu2_excess, 0.0);
  sum.at_least("mu1_ge_lower_bound", mu1_margin, 0.0);
  sum.at_most("grad_tau_timelike", grad_tau_max, 0.0);
  sum.note("mu1_printed_lambda_sq_over_2_bound", printed_margin >= 0.0, printed_margin, 0.0);

  if (!ctx.working->smooth()) {
    sum.note("pullback_skipped_non_smooth_profile", true, 0.0, 0.0);
    return;
  }
  const SplitChart chart = ctx.chart();
  double residual = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double t = trange.lo + trange.width() * unit(rng);
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = region.ranges[i].lo + region.ranges[i].width() * unit(rng);
    const double u = region.ranges[n].lo + region.ranges[n].width() * unit(rng);
    residual = std::max(residual, chart.pullback_residual(t, x, u));
  }
  sum.at_most("pullback_residual", residual, pullback_tol);
}

void cmd_split(const Context& ctx, Summary& sum) {
  const json& sec = section(ctx.cfg, "split");
  allow_keys(sec, {"t", "x", "u", "points", "pullback_tol"}, "split");
  require_smooth(ctx, "split");
  const int n = ctx.n();
  const Interval tr = sec.contains("t") ? interval(sec.at("t"), "split.t") : Interval{-1.0, 1.0};
  const Box xb = box_or(sec, "x", n, {-1.0, 1.0}, "split");
  const Interval ur = sec.contains("u") ? interval(sec.at("u"), "split.u") : Interval{-1.0, 1.0};
  const int points = static_cast<int>(count(sec, "points", 5, "split"));
  const double pullback_tol = positive(sec, "pullback_tol", 1e-6, "split");

  Box grid{{tr}};
  for (const auto& r : xb.ranges) grid.ranges.push_back(r);
  grid.ranges.push_back(ur);

  std::vector<std::string> header{"t"};
  for (int i = 1; i <= n; ++i) header.push_back("x" + std::to_string(i));
  header.push_back("u");
  header.push_back("theta");
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) header.push_back("H_" + std::to_string(i) + std::to_string(j));
  header.push_back("pullback_residual");
  CsvWriter csv(ctx.out_dir / "split.csv", header);

  const SplitChart chart = ctx.chart();
  const double lam = chart.lambda();
  double worst = 0, theta_margin = std::numeric_limits<double>::infinity();
  double h_min_eig = std::numeric_limits<double>::infinity();
  double grad_err = 0, printed_err = 0;
  const double fd = 1e-4;
  // Regular grid traversal: t fastest.
  std::vector<int> idx(grid.dims(), 0);
  const int m = std::max(points, 1);
  while (true) {
    Vector c(grid.dims());
    for (std::size_t k = 0; k < grid.dims(); ++k) {
      const auto& r = grid.ranges[k];
      c[k] = m == 1 ? 0.5 * (r.lo + r.hi) : r.lo + r.width() * idx[k] / (m - 1);
    }
    const double t = c[0];
    const Vector x = c.segment(1, n);
    const double u = c[n + 1];
    const SplitMetricValue g = chart.split_metric(t, x, u);
    const double res = chart.pullback_residual(t, x, u);
    worst = std::max(worst, res);
    theta_margin = std::min(theta_margin, g.theta - 1.0 / (2.0 * lam));
    Eigen::SelfAdjointEigenSolver<Matrix> es(g.H, Eigen::EigenvaluesOnly);
    h_min_eig = std::min(h_min_eig, es.eigenvalues()[0]);

    if (n > 0) {
      const KDerivatives kd = chart.k_derivatives(x, t, u);
      const double big_a = chart.profile().eval(x, chart.big_k(x, t, u));
      const Vector printed = -chart.profile().grad_x_integral_u(x, 0.0, u, chart.quad_tol()) / (2.0 * lam - big_a);
      for (int i = 0; i < n; ++i) {
        Vector xp = x, xm = x;
        xp[i] += fd;
        xm[i] -= fd;
        const double d = (chart.big_k(xp, t, u) - chart.big_k(xm, t, u)) / (2.0 * fd);
        grad_err = std::max(grad_err, std::abs(kd.grad_x[i] - d));
        printed_err = std::max(printed_err, std::abs(printed[i] - d));
      }
    }

    std::vector<double> row(c.data(), c.data() + c.size());
    row.push_back(g.theta);
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) row.push_back(g.H(i, j));
    row.push_back(res);
    csv.row(row);

    std::size_t k = 0;
    while (k < grid.dims() && ++idx[k] == m) idx[k++] = 0;
    if (k == grid.dims()) break;
  }
  sum.at_most("pullback_residual", worst, pullback_tol);
  sum.at_least("theta_ge_one_over_two_lambda", theta_margin, -ctx.root_tol);
  sum.at_least("H_positive_definite", h_min_eig, 0.0);
  if (n > 0) {
    sum.at_most("grad_x_K_vs_finite_difference", grad_err, 1e-5);
    sum.note("grad_x_K_printed_form_vs_finite_difference", printed_err <= 1e-5, printed_err, 1e-5);
  }
}

void cmd_geodesic(const Context& ctx, Summary& sum) {
  const json& sec = section(ctx.cfg, "geodesic");
  allow_keys(sec, {"x", "u", "v", "xi", "alpha", "beta", "span", "tol", "conservation_tol"}, "geodesic");
  require_smooth(ctx, "geodesic");
  const int n = ctx.n();
  auto vec = [&](const char* key) {
    if (!sec.contains(key)) return Vector(Vector::Zero(n));
    const auto v = numbers(sec.at(key), std::string("geodesic.") + key);
    if (static_cast<int>(v.size()) != n) throw ConfigError(std::string("geodesic.") + key + " needs " + std::to_string(n) + " entries");
    return Vector(Eigen::Map<const Vector>(v.data(), n));
  };
  const SpacetimePoint p{vec("x"), number(sec, "u", 0.0, "geodesic"), number(sec, "v", 0.0, "geodesic")};
  const Vector xi = vec("xi");
  const double alpha = number(sec, "alpha", 1.0, "geodesic");
  const Interval span = sec.contains("span") ? interval(sec.at("span"), "geodesic.span") : Interval{0.0, 1.0};
  if (!span.contains(0.0)) throw ConfigError("geodesic.span must contain 0 (the initial parameter)");
  const double tol = positive(sec, "tol", 1e-10, "geodesic");
  const double ctol = positive(sec, "conservation_tol", 1e-8, "geodesic");

  const MetricAssembly ma(ctx.base, *ctx.working);
  GeodesicState init;
  if (sec.contains("beta")) {
    init.point = p;
    init.velocity = TangentVector{xi, alpha, number(sec, "beta", 0.0, "geodesic")};
  } else {
    init = make_null_state(ma, p, xi, alpha);
  }
  const Trajectory traj = integrate(ma, init, span.lo, span.hi, tol);

  std::vector<std::string> header{"t"};
  for (int i = 1; i <= n; ++i) header.push_back("x" + std::to_string(i));
  for (const char* h : {"u", "v", "Q0", "Q1", "Q2", "tau"}) header.push_back(h);
  CsvWriter csv(ctx.out_dir / "geodesic.csv", header);

  const Monitors m0 = monitors(ma, traj.samples.front());
  double d0 = 0, d1 = 0, d2 = 0;
  for (const auto& s : traj.samples) {
    const Monitors m = monitors(ma, s);
    d0 = std::max(d0, std::abs(m.q0 - m0.q0));
    d1 = std::max(d1, std::abs(m.q1 - m0.q1));
    d2 = std::max(d2, std::abs(m.q2 - m0.q2));
    std::vector<double> row{s.affine_parameter};
    for (int i = 0; i < n; ++i) row.push_back(s.point.x[i]);
    for (double v : {s.point.u, s.point.v, m.q0, m.q1, m.q2, tau(ma, s.point)}) row.push_back(v);
    csv.row(row);
  }
  sum.at_most("integration_aborted", traj.aborted ? 1.0 : 0.0, 0.0);
  sum.at_most("Q0_drift", d0, ctol);
  sum.at_most("Q1_drift", d1, ctol);
  if (u_independent(*ctx.working)) {
    sum.at_most("Q2_drift", d2, ctol);
  } else {
    sum.note("Q2_drift_u_dependent_profile", true, d2, ctol);
  }
}

void cmd_cauchy(const Context& ctx, Summary& sum) {
  const json& sec = section(ctx.cfg, "cauchy");
  allow_keys(sec, {"geodesics", "k", "region", "span", "tol", "vertical_fraction"}, "cauchy");
  require_smooth(ctx, "cauchy");
  const int n = ctx.n();
  const std::size_t count_g = count(sec, "geodesics", 100, "cauchy");
  const std::vector<double> ks = sec.contains("k") ? numbers(sec.at("k"), "cauchy.k") : std::vector<double>{-1.0, 0.0, 1.0};
  const Box region = box_or(sec, "region", n + 2, {-1.0, 1.0}, "cauchy");
  const double span = positive(sec, "span", 2.0, "cauchy");
  const double tol = positive(sec, "tol", 1e-10, "cauchy");
  const double vertical = number(sec, "vertical_fraction", 0.0, "cauchy");
  if (vertical < 0.0 || vertical > 1.0) throw ConfigError("cauchy.vertical_fraction must lie in [0, 1]");

  const MetricAssembly ma(ctx.base, *ctx.working);
  std::mt19937_64 rng(ctx.seed);
  json verdicts = json::array();
  std::size_t unique = 0, violations = 0, aborted = 0;
  for (std::size_t g = 0; g < count_g; ++g) {
    const GeodesicState init = random_null_state(ma, region, rng, vertical);
    const CertificationResult r = certify_null_geodesic(ma, init, ks, g, span, tol);
    for (const auto& v : r.verdicts) {
      const bool ok = v.status == CrossingStatus::crossed && v.unique;
      unique += ok ? 1 : 0;
      const char* status = v.status == CrossingStatus::crossed           ? "crossed"
                           : v.status == CrossingStatus::not_yet_crossed ? "not_yet_crossed"
                                                                         : "tolerance_failure";
      verdicts.push_back({{"geodesic_id", v.geodesic_id},
                          {"k", v.k},
                          {"t_star", v.status == CrossingStatus::crossed ? json(v.t_star) : json(nullptr)},
                          {"unique", ok},
                          {"status", status}});
    }
    violations += r.monotonicity.violations;
    aborted += r.trajectory.aborted ? 1 : 0;
  }
  write_json(ctx.out_dir / "cauchy.json", verdicts);
  const double expected = static_cast<double>(count_g * ks.size());
  sum.checks.push_back({"unique_crossings", static_cast<double>(unique) == expected, static_cast<double>(unique), expected});
  sum.at_most("tau_monotonicity_violations", static_cast<double>(violations), 0.0);
  sum.at_most("aborted_integrations", static_cast<double>(aborted), 0.0);
}

void cmd_converge(const Context& ctx, Summary& sum) {
  const json& sec = section(ctx.cfg, "converge");
  allow_keys(sec, {"quantity", "box", "epsilons", "panels_per_dim", "expected_slope", "max_final_error"}, "converge");
  Quantity q = Quantity::a;
  if (sec.contains("quantity")) {
    if (!sec.at("quantity").is_string()) throw ConfigError("converge.quantity must be a string");
    try {
      q = parse_quantity(sec.at("quantity").get<std::string>());
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  const int n = ctx.n();
  const Box b = box_or(sec, "box", quantity_box_dims(q, n), {-0.5, 0.5}, "converge");
  const std::vector<double> eps = sweep_epsilons(ctx, sec);
  if (eps.size() < 4) throw ConfigError("converge needs at least 4 epsilons");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0 && eps[i] <= 1.0) || (i > 0 && !(eps[i] < eps[i - 1]))) {
      throw ConfigError("epsilons must be strictly decreasing values in (0, 1]");
    }
  }
  SweepOptions opt;
  opt.quad_tol = ctx.quad_tol;
  opt.root_tol = ctx.root_tol;
  if (sec.contains("panels_per_dim")) opt.panels_per_dim = static_cast<int>(count(sec, "panels_per_dim", 1, "converge"));

  const ConvergenceReport rep = convergence_sweep(*ctx.net, ctx.base, q, b, eps, opt);
  CsvWriter csv(ctx.out_dir / "converge.csv", {"epsilon", "error", "quantity"});
  for (std::size_t i = 0; i < rep.errors.size(); ++i) csv.row({rep.epsilons[i], rep.errors[i]}, to_string(q));
  write_json(ctx.out_dir / "converge.json", {{"quantity", to_string(q)},
                                             {"slope", rep.fit.slope},
                                             {"slope_stderr", rep.fit.slope_stderr},
                                             {"residual", rep.fit.residual},
                                             {"fitted_points", rep.fit.points},
                                             {"monotone", rep.monotone},
                                             {"strictly_decreasing", rep.strictly_decreasing},
                                             {"epsilons", rep.epsilons},
                                             {"errors", rep.errors}});

  bool finite = std::all_of(rep.errors.begin(), rep.errors.end(), [](double e) { return std::isfinite(e); });
  sum.at_most("errors_finite", finite ? 0.0 : 1.0, 0.0);
  sum.at_most("non_monotone_steps", static_cast<double>(rep.flagged.size()), 0.0);
  if (sec.contains("expected_slope")) {
    const auto v = numbers(sec.at("expected_slope"), "converge.expected_slope");
    if (v.size() != 2 || !(v[1] > 0.0)) throw ConfigError("converge.expected_slope must be [slope, tolerance]");
    const double dev = std::abs(rep.fit.slope - v[0]);
    sum.checks.push_back({"slope", dev <= v[1], rep.fit.slope, v[1]});
  }
  if (sec.contains("max_final_error")) {
    sum.at_most("final_error", rep.errors.back(), positive(sec, "max_final_error", 1.0, "converge"));
  }
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Metric splitting and causality checks for NPW spacetimes", "npw"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = "npw_out";
  std::uint64_t seed = 42;
  std::string eps_text;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "sampling seed")->capture_default_str();
  app.add_option("--epsilons", eps_text, "comma-separated epsilon list overriding the config");
  const std::vector<std::pair<const char*, const char*>> subs{
      {"verify", "metric identities at random points"},
      {"split", "split metric on a (t, x, u) grid"},
      {"geodesic", "integrate one geodesic"},
      {"cauchy", "certify slice crossings of random null geodesics"},
      {"converge", "L1 convergence sweep of a regularization net"}};
  for (const auto& [name, desc] : subs) app.add_subcommand(name, desc)->fallthrough();

  std::vector<std::string> argv_store{"npw"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  Context ctx;
  ctx.seed = seed;
  ctx.out_dir = out_dir;
  try {
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw ConfigError("cannot read config " + config_path);
      ctx.cfg = json::parse(is);
    } else {
      ctx.cfg = json::object();
    }
    if (!eps_text.empty()) ctx.epsilon_override = parse_epsilon_list(eps_text);
    build(ctx);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  }

  Summary sum;
  try {
    fs::create_directories(ctx.out_dir);
    if (sub == "verify") cmd_verify(ctx, sum);
    if (sub == "split") cmd_split(ctx, sum);
    if (sub == "geodesic") cmd_geodesic(ctx, sum);
    if (sub == "cauchy") cmd_cauchy(ctx, sum);
    if (sub == "converge") cmd_converge(ctx, sum);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailed;
  }

  json hashed{{"config", ctx.cfg}, {"seed", ctx.seed}, {"subcommand", sub}};
  if (ctx.epsilon_override) hashed["epsilons"] = *ctx.epsilon_override;
  const json summary{{"version", kVersion},
                     {"config_hash", fnv1a_hex(hashed.dump())},
                     {"subcommand", sub},
                     {"seed", ctx.seed},
                     {"checks", checks_json(sum.checks)},
                     {"diagnostics", checks_json(sum.diagnostics)}};
  write_json(ctx.out_dir / "summary.json", summary);

  for (const auto& c : sum.checks) {
    out << (c.pass ? "pass " : "FAIL ") << c.name << " value=" << g17(c.value) << " tolerance=" << g17(c.tolerance)
        << '\n';
  }
  if (!sum.all_pass()) {
    for (const auto& c : sum.checks)
      if (!c.pass) err << "check failed: " << c.name << '\n';
    return kCheckFailed;
  }
  return kOk;
}

}  // namespace npw::cli
