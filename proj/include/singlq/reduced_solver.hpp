#pragma once

// Zero-order asymptotics of the cheap-control problem: the reduced problem
// on x (dimension n−r+q) with S₀ = A₂D₂⁻¹A₂ᵀ + S₁ = B̄Θ⁻¹B̄ᵀ, the limits
// P₁₀, P₂₀ = P₁₀A₂D₂^{−1/2}, P₃₀ = D₂^{1/2}, the feedforward terms h₁₀, h₂₀,
// s₀, the value J̄, and the two minimizing feedback laws.

#include <algorithm>
#include <cmath>
#include <limits>

#include "singlq/feedback.hpp"
#include "singlq/feedforward.hpp"
#include "singlq/linalg.hpp"
#include "singlq/problem_model.hpp"

namespace singlq {

struct ReducedSolution {
  Matrix P10;
  Matrix P20;
  Matrix P30;
  Matrix S1;
  Matrix S0;
  Matrix Bbar;
  Matrix Theta;
  Matrix Acl0;
  Matrix D2_inv_sqrt;
  ExpSignal f1;
  ExpSignal h10;
  ExpSignal h20;
  ExpSignal s0;
  double Jbar = 0.0;
  double alpha = 0.0;
  double mu = 0.0;
  /// ‖A₂D₂⁻¹A₂ᵀ + S₁ − B̄Θ⁻¹B̄ᵀ‖_F.
  double s0_form_gap = 0.0;

  /// (h₁₀(t); h₂₀(t)) as one n-dimensional signal.
  ExpSignal h0() const {
    const Eigen::Index m = h10.dimension();
    const Eigen::Index k = h20.dimension();
    ExpSignal out(m + k);
    for (std::size_t j = 0; j < h10.modes().size(); ++j) {
      Vector c(m + k);
      c << h10.modes()[j].coef, h20.modes()[j].coef;
      out.add_mode(h10.modes()[j].rate, std::move(c));
    }
    return out;
  }

  /// P₀(ε) = [[P₁₀, εP₂₀], [εP₂₀ᵀ, εP₃₀]].
  Matrix P0(double epsilon) const {
    const Eigen::Index m = P10.rows();
    const Eigen::Index k = P30.rows();
    Matrix p(m + k, m + k);
    p << P10, epsilon * P20, epsilon * P20.transpose(), epsilon * P30;
    return p;
  }
};

struct ZeroOrderResiduals {
  double eq1 = 0.0;  // P₁₀A₁ + A₁ᵀP₁₀ − P₁₀S₁P₁₀ − P₂₀P₂₀ᵀ + D₁
  double eq2 = 0.0;  // P₁₀A₂ − P₂₀P₃₀
  double eq3 = 0.0;  // D₂ − P₃₀²
  double max() const { return std::max({eq1, eq2, eq3}); }
};

inline ZeroOrderResiduals zero_order_residuals(const Oocp& o,
                                               const ReducedSolution& rs) {
  ZeroOrderResiduals r;
  const Matrix a1 = o.A1();
  r.eq1 = (rs.P10 * a1 + a1.transpose() * rs.P10 - rs.P10 * rs.S1 * rs.P10 -
           rs.P20 * rs.P20.transpose() + o.D1)
              .norm();
  r.eq2 = (rs.P10 * o.A2() - rs.P20 * rs.P30).norm();
  r.eq3 = (o.D2 - rs.P30 * rs.P30).norm();
  return r;
}

inline ReducedSolution solve_reduced(const Oocp& o,
                                     const AreOptions& are = {}) {
  check_oocp_dimensions(o);
  const int m = o.slow_dim();
  ReducedSolution rs;
  const Matrix a1 = o.A1();
  const Matrix a2 = o.A2();

  rs.D2_inv_sqrt = spd_inv_sqrt(o.D2);
  const Matrix d2_inv = rs.D2_inv_sqrt * rs.D2_inv_sqrt;
  const Matrix btilde = o.Btilde();
  rs.S1 = btilde * o.g.head(o.q).cwiseInverse().asDiagonal() *
          btilde.transpose();
  rs.S0 = symmetrize(a2 * d2_inv * a2.transpose() + rs.S1);
  rs.Bbar = o.Bbar();
  rs.Theta = o.Theta();
  const Matrix s0_alt =
      rs.Bbar * rs.Theta.ldlt().solve(rs.Bbar.transpose());
  rs.s0_form_gap = (rs.S0 - s0_alt).norm();
  require(rs.s0_form_gap <= 1e-10 * std::max(1.0, rs.S0.norm()),
          ErrorCode::kStructureViolation,
          "the two forms of S0 disagree by " + std::to_string(rs.s0_form_gap));

  rs.P10 = solve_are(a1, rs.S0, o.D1, are);
  rs.Acl0 = a1 - rs.S0 * rs.P10;
  rs.P30 = spd_sqrt(o.D2);
  rs.P20 = rs.P10 * a2 * rs.D2_inv_sqrt;

  rs.f1 = o.disturbance.segment(0, m);
  rs.h10 = feedforward_modes(rs.Acl0, rs.P10, rs.f1);
  rs.h20 = rs.h10.mapped(rs.D2_inv_sqrt * a2.transpose());
  rs.s0 = value_offset(rs.h10, rs.f1, rs.S0);
  rs.Jbar = quadratic_value(rs.P10, rs.h10, rs.s0, o.x0());

  rs.alpha = m == 0 ? std::numeric_limits<double>::infinity()
                    : -0.99 * spectral_abscissa(rs.Acl0).abscissa;
  rs.mu = std::min(rs.alpha, o.disturbance.min_rate());
  return rs;
}

/// ū*(x̄, t) = −Θ⁻¹B̄ᵀ(P₁₀x̄ + h₁₀(t)), acting on the reduced state.
inline AffineFeedback reduced_feedback(const ReducedSolution& rs) {
  const Matrix m = -rs.Theta.ldlt().solve(rs.Bbar.transpose());
  return {m * rs.P10, rs.h10.mapped(m)};
}

/// u_{ε,1}: upper block −[K₁x + εK₂y + H₃h₁₀ + εH₁h₂₀] with
/// K₁ = H₃P₁₀ + εH₁P₂₀ᵀ, K₂ = H₃P₂₀ + H₁P₃₀; lower block
/// −(1/ε)[P₂₀ᵀx + P₃₀y + h₂₀].
inline AffineFeedback minimizing_feedback_1(const ReducedSolution& rs,
                                            const Oocp& o, double epsilon) {
  require(epsilon > 0.0, ErrorCode::kInvalidArgument, "epsilon must be > 0");
  const int m = o.slow_dim();
  const int k = o.fast_dim();
  const int q = o.q;
  const Matrix h3 = o.H3();
  const Matrix h1 = o.H1();
  const Matrix k1 = h3 * rs.P10 + epsilon * h1 * rs.P20.transpose();
  const Matrix k2 = h3 * rs.P20 + h1 * rs.P30;

  Matrix gain(q + k, m + k);
  gain << -k1, -epsilon * k2, -rs.P20.transpose() / epsilon,
      -rs.P30 / epsilon;
  Matrix map = Matrix::Zero(q + k, m + k);
  map.topLeftCorner(q, m) = -h3;
  map.topRightCorner(q, k) = -epsilon * h1;
  map.bottomRightCorner(k, k) = -Matrix::Identity(k, k) / epsilon;
  return {std::move(gain), rs.h0().mapped(map)};
}

/// u_{ε,2}: upper block ū₁*(x, t) = −G̃⁻¹B̃ᵀ(P₁₀x + h₁₀(t)); lower block as in
/// u_{ε,1}.
inline AffineFeedback minimizing_feedback_2(const ReducedSolution& rs,
                                            const Oocp& o, double epsilon) {
  AffineFeedback u = minimizing_feedback_1(rs, o, epsilon);
  const int m = o.slow_dim();
  const int k = o.fast_dim();
  const int q = o.q;
  const Matrix h3 = o.H3();
  u.gain.topLeftCorner(q, m) = -h3 * rs.P10;
  u.gain.topRightCorner(q, k).setZero();
  Matrix map = Matrix::Zero(q + k, m + k);
  map.topLeftCorner(q, m) = -h3;
  map.bottomRightCorner(k, k) = -Matrix::Identity(k, k) / epsilon;
  u.offset = rs.h0().mapped(map);
  return u;
}

}  // namespace singlq
