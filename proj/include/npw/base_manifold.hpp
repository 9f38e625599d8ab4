#pragma once

#include "npw/common.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace npw {

/// Connection coefficients Gamma^k_{ij} of a d-dimensional chart.
class ChristoffelTable {
 public:
  explicit ChristoffelTable(int dim = 0) : dim_(dim), data_(static_cast<std::size_t>(dim) * dim * dim, 0.0) {}

  int dim() const { return dim_; }
  double& operator()(int k, int i, int j) { return data_[index(k, i, j)]; }
  double operator()(int k, int i, int j) const { return data_[index(k, i, j)]; }
  double max_abs() const;

 private:
  std::size_t index(int k, int i, int j) const {
    return (static_cast<std::size_t>(k) * dim_ + i) * dim_ + j;
  }
  int dim_;
  std::vector<double> data_;
};

/// Evaluation interface for a complete Riemannian base (N, h) in a single
/// global chart. Everything the wave-type constructions need from N goes
/// through here.
class BaseManifold {
 public:
  virtual ~BaseManifold() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual Matrix metric_at(const Vector& x) const = 0;
  virtual ChristoffelTable christoffel_at(const Vector& x) const = 0;
  /// Constant c > 0 with h_x >= c I on the whole chart.
  virtual double metric_lower_bound() const = 0;
  /// Riemannian distance d^h.
  virtual double distance(const Vector& x, const Vector& y) const = 0;
  /// Completeness is declared, never checked.
  virtual bool complete() const { return true; }
};

using ManifoldPtr = std::shared_ptr<const BaseManifold>;

/// Flat R^n (n may be 0, giving M = R^2).
class EuclideanSpace final : public BaseManifold {
 public:
  explicit EuclideanSpace(int n);
  int dim() const override { return n_; }
  std::string name() const override { return "euclidean:" + std::to_string(n_); }
  Matrix metric_at(const Vector& x) const override;
  ChristoffelTable christoffel_at(const Vector& x) const override;
  double metric_lower_bound() const override { return 1.0; }
  double distance(const Vector& x, const Vector& y) const override { return (x - y).norm(); }

 private:
  int n_;
};

/// The real line with h(x) = 1 + tanh(x)^2, so 1 <= h < 2.
class WarpedLine final : public BaseManifold {
 public:
  int dim() const override { return 1; }
  std::string name() const override { return "warped_line"; }
  Matrix metric_at(const Vector& x) const override;
  ChristoffelTable christoffel_at(const Vector& x) const override;
  double metric_lower_bound() const override { return 1.0; }
  double distance(const Vector& x, const Vector& y) const override;

  static double h(double x);
  static double dh(double x);
};

/// User-supplied base built from callables.
class CustomManifold final : public BaseManifold {
 public:
  struct Callbacks {
    std::function<Matrix(const Vector&)> metric;
    std::function<ChristoffelTable(const Vector&)> christoffel;
    std::function<double(const Vector&, const Vector&)> distance;
  };
  CustomManifold(int n, std::string name, Callbacks cb, double lower_bound, bool declared_complete);

  int dim() const override { return n_; }
  std::string name() const override { return name_; }
  Matrix metric_at(const Vector& x) const override { return cb_.metric(x); }
  ChristoffelTable christoffel_at(const Vector& x) const override { return cb_.christoffel(x); }
  double metric_lower_bound() const override { return lower_bound_; }
  double distance(const Vector& x, const Vector& y) const override { return cb_.distance(x, y); }
  bool complete() const override { return complete_; }

 private:
  int n_;
  std::string name_;
  Callbacks cb_;
  double lower_bound_;
  bool complete_;
};

/// h_x^{-1} df. Throws npw::Error if h_x is not positive definite.
Vector gradient(const BaseManifold& m, const Vector& df, const Vector& x);

/// Parses "euclidean:<n>" or "warped_line".
ManifoldPtr make_manifold(const std::string& spec);

}  // namespace npw
