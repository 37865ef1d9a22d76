#pragma once

// Closed forms for the feedforward vector h and the scalar offset s of an LQ
// problem with exponential disturbance f(t) = Σⱼ cⱼ e^{−γⱼt}:
//
//   dh/dt = −𝓐ᵀh − P f,        h(+∞) = 0   ⇒  hⱼ = (γⱼI − 𝓐ᵀ)⁻¹ P cⱼ
//   ds/dt = −2hᵀf + hᵀS h,      s(+∞) = 0

#include "singlq/exp_signal.hpp"
#include "singlq/linalg.hpp"

namespace singlq {

inline ExpSignal feedforward_modes(const Matrix& closed_loop, const Matrix& p,
                                   const ExpSignal& f) {
  const Matrix at = closed_loop.transpose();
  ExpSignal h(p.rows());
  for (const auto& mode : f.modes())
    h.add_mode(mode.rate, solve_shifted_linear(at, mode.rate, p * mode.coef));
  return h;
}

inline ExpSignal value_offset(const ExpSignal& h, const ExpSignal& f,
                              const Matrix& s) {
  ExpSignal out(1);
  for (const auto& hi : h.modes()) {
    for (const auto& fj : f.modes()) {
      const double rate = hi.rate + fj.rate;
      out.add_mode(rate, Vector::Constant(1, 2.0 * hi.coef.dot(fj.coef) / rate));
    }
    for (const auto& hj : h.modes()) {
      const double rate = hi.rate + hj.rate;
      out.add_mode(rate,
                   Vector::Constant(1, -hi.coef.dot(s * hj.coef) / rate));
    }
  }
  return out;
}

/// zᵀPz + 2h(0)ᵀz + s(0).
inline double quadratic_value(const Matrix& p, const ExpSignal& h,
                              const ExpSignal& s, const Vector& z) {
  return z.dot(p * z) + 2.0 * h(0.0).dot(z) + (s.empty() ? 0.0 : s.scalar(0.0));
}

}  // namespace singlq
