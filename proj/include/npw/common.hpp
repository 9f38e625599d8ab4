#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace npw {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adaptive quadrature ran out of panels before reaching its target.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double target, double achieved)
      : Error(what), target_(target), achieved_(achieved) {}
  double target() const { return target_; }
  double achieved() const { return achieved_; }

 private:
  double target_;
  double achieved_;
};

class BracketError : public Error {
 public:
  using Error::Error;
};

/// A profile violates 0 <= a < lambda.
class BoundViolation : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A standing hypothesis failed numerically (e.g. unbounded grad_x K across a net).
class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

class UnsupportedInput : public Error {
 public:
  using Error::Error;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double s) const { return lo <= s && s <= hi; }
};

/// Axis-aligned compact box; coordinate meaning is set by the caller.
struct Box {
  std::vector<Interval> ranges;

  static Box cube(std::size_t dims, Interval side) {
    return Box{std::vector<Interval>(dims, side)};
  }
  std::size_t dims() const { return ranges.size(); }
  double volume() const {
    double v = 1.0;
    for (const auto& r : ranges) v *= r.width();
    return v;
  }
  double diameter() const {
    double s = 0.0;
    for (const auto& r : ranges) s += r.width() * r.width();
    return std::sqrt(s);
  }
};

}  // namespace npw
