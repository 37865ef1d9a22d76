#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "singlq/error.hpp"
#include "singlq/linalg.hpp"

namespace singlq {

struct ExpMode {
  double rate = 1.0;  // per unit time, > 0
  Vector coef;
};

/// A vector signal f(t) = Σⱼ coefⱼ·exp(−rateⱼ·t). Every disturbance, feedforward
/// term and value function in this library lives in this class, which keeps
/// all infinite-horizon integrals closed-form.
class ExpSignal {
 public:
  ExpSignal() = default;
  explicit ExpSignal(Eigen::Index dimension) : dimension_(dimension) {}
  ExpSignal(Eigen::Index dimension, std::vector<ExpMode> modes)
      : dimension_(dimension) {
    for (auto& m : modes) add_mode(m.rate, std::move(m.coef));
  }

  static ExpSignal zero(Eigen::Index dimension) { return ExpSignal(dimension); }

  Eigen::Index dimension() const { return dimension_; }
  const std::vector<ExpMode>& modes() const { return modes_; }
  bool empty() const { return modes_.empty(); }

  void add_mode(double rate, Vector coef) {
    require(std::isfinite(rate) && rate > 0.0, ErrorCode::kInvalidArgument,
            "exponential rate must be positive, got " + std::to_string(rate));
    require(coef.size() == dimension_, ErrorCode::kDimensionMismatch,
            "mode coefficient of size " + std::to_string(coef.size()) +
                " in a signal of dimension " + std::to_string(dimension_));
    modes_.push_back({rate, std::move(coef)});
  }

  Vector operator()(double t) const {
    Vector v = Vector::Zero(dimension_);
    for (const auto& m : modes_) v += m.coef * std::exp(-m.rate * t);
    return v;
  }

  Vector derivative(double t) const {
    Vector v = Vector::Zero(dimension_);
    for (const auto& m : modes_) v -= m.rate * m.coef * std::exp(-m.rate * t);
    return v;
  }

  /// Scalar value of a one-dimensional signal.
  double scalar(double t) const {
    require(dimension_ == 1, ErrorCode::kDimensionMismatch,
            "scalar() on a signal of dimension " + std::to_string(dimension_));
    return (*this)(t)(0);
  }

  /// Smallest rate, +∞ for the zero signal.
  double min_rate() const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& m : modes_) r = std::min(r, m.rate);
    return r;
  }

  /// Σⱼ‖coefⱼ‖, so that ‖f(t)‖ ≤ coef_bound()·exp(−min_rate()·t).
  double coef_bound() const {
    double a = 0.0;
    for (const auto& m : modes_) a += m.coef.norm();
    return a;
  }

  /// Mode-wise image M·f(t).
  ExpSignal mapped(const Matrix& m) const {
    require(m.cols() == dimension_, ErrorCode::kDimensionMismatch,
            "cannot map a signal of dimension " + std::to_string(dimension_) +
                " through a " + detail::shape(m) + " matrix");
    ExpSignal out(m.rows());
    for (const auto& mode : modes_) out.add_mode(mode.rate, m * mode.coef);
    return out;
  }

  ExpSignal segment(Eigen::Index start, Eigen::Index length) const {
    require(start >= 0 && length >= 0 && start + length <= dimension_,
            ErrorCode::kDimensionMismatch, "signal segment out of range");
    ExpSignal out(length);
    for (const auto& mode : modes_)
      out.add_mode(mode.rate, mode.coef.segment(start, length));
    return out;
  }

  ExpSignal scaled(double factor) const {
    ExpSignal out(dimension_);
    for (const auto& mode : modes_) out.add_mode(mode.rate, factor * mode.coef);
    return out;
  }

  ExpSignal operator+(const ExpSignal& other) const {
    require(other.dimension_ == dimension_, ErrorCode::kDimensionMismatch,
            "adding signals of different dimensions");
    ExpSignal out = *this;
    for (const auto& mode : other.modes_) out.add_mode(mode.rate, mode.coef);
    return out;
  }

  ExpSignal operator-() const { return scaled(-1.0); }

 private:
  Eigen::Index dimension_ = 0;
  std::vector<ExpMode> modes_;
};

/// Block vector (top; bottom) of two signals sharing nothing but time.
inline ExpSignal stack(const ExpSignal& top, const ExpSignal& bottom) {
  const Eigen::Index n = top.dimension() + bottom.dimension();
  ExpSignal out(n);
  for (const auto& m : top.modes()) {
    Vector c = Vector::Zero(n);
    c.head(top.dimension()) = m.coef;
    out.add_mode(m.rate, std::move(c));
  }
  for (const auto& m : bottom.modes()) {
    Vector c = Vector::Zero(n);
    c.tail(bottom.dimension()) = m.coef;
    out.add_mode(m.rate, std::move(c));
  }
  return out;
}

}  // namespace singlq
