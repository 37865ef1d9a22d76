#pragma once

#include <functional>
#include <utility>

#include "singlq/exp_signal.hpp"
#include "singlq/linalg.hpp"

namespace singlq {

/// u = law(z, t).
using FeedbackLaw = std::function<Vector(const Vector&, double)>;

/// u(z, t) = gain·z + offset(t).
struct AffineFeedback {
  Matrix gain;
  ExpSignal offset;

  AffineFeedback() = default;
  AffineFeedback(Matrix k, ExpSignal v) : gain(std::move(k)), offset(std::move(v)) {
    require(offset.dimension() == gain.rows(), ErrorCode::kDimensionMismatch,
            "feedforward dimension does not match the gain");
  }

  Vector operator()(const Vector& z, double t) const {
    return gain * z + offset(t);
  }

  FeedbackLaw law() const {
    return [self = *this](const Vector& z, double t) { return self(z, t); };
  }
};

/// Stacks two affine laws acting on the same state: u = (top(z, t); bottom(z, t)).
inline AffineFeedback stack(const AffineFeedback& top,
                            const AffineFeedback& bottom) {
  require(top.gain.cols() == bottom.gain.cols(), ErrorCode::kDimensionMismatch,
          "stacked laws act on different state sizes");
  Matrix k(top.gain.rows() + bottom.gain.rows(), top.gain.cols());
  k << top.gain, bottom.gain;
  return {std::move(k), stack(top.offset, bottom.offset)};
}

}  // namespace singlq
