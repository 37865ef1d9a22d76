#pragma once

// Unit-mass tracking problem d²x̃/dt² = u with cost
// ∫ d₁(x̃ − ã₁e^{−γt})² + d₂(dx̃/dt − ã₂e^{−γt})² dt, written in the shifted
// coordinates x = x̃ − ã₁e^{−γt}, y = dx̃/dt − ã₂e^{−γt}:
//
//   dx/dt = y + a₁e^{−γt},  dy/dt = u + a₂e^{−γt},  J = ∫ d₁x² + d₂y².

#include "singlq/problem_model.hpp"

namespace singlq {

struct TrackingData {
  double a1 = 4.0;
  double a2 = 2.0;
  double gamma = 1.0;
  double x0 = 2.0;
  double y0 = 1.0;
  double d1 = 2.0;
  double d2 = 1.0;
};

/// Shifted-coordinate data from the nominal-trajectory amplitudes ã₁, ã₂ and
/// the initial position and velocity x̃₀, ỹ₀.
inline TrackingData tracking_from_nominal(double a1_nom, double a2_nom,
                                          double gamma, double x_init,
                                          double v_init, double d1, double d2) {
  TrackingData t;
  t.a1 = a1_nom * gamma + a2_nom;
  t.a2 = a2_nom * gamma;
  t.gamma = gamma;
  t.x0 = x_init - a1_nom;
  t.y0 = v_init - a2_nom;
  t.d1 = d1;
  t.d2 = d2;
  return t;
}

inline RawProblem tracking_raw(const TrackingData& t = {}) {
  RawProblem p;
  p.n = 2;
  p.r = 1;
  p.q = 0;
  p.A = (Matrix(2, 2) << 0, 1, 0, 0).finished();
  p.B = (Matrix(2, 1) << 0, 1).finished();
  p.D = (Matrix(2, 2) << t.d1, 0, 0, t.d2).finished();
  p.g = Vector(0);
  p.disturbance = ExpSignal(2);
  p.disturbance.add_mode(t.gamma, (Vector(2) << t.a1, t.a2).finished());
  p.z0 = (Vector(2) << t.x0, t.y0).finished();
  return p;
}

/// The same problem already in transformed form (the transform is I here).
inline Oocp tracking_oocp(const TrackingData& t = {}) {
  const RawProblem p = tracking_raw(t);
  return make_oocp(p.n, p.r, p.q, p.A, p.B, p.D, p.g, p.disturbance, p.z0,
                   Matrix::Zero(1, 1));
}

}  // namespace singlq
