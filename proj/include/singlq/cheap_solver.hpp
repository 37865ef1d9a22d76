#pragma once

// Exact solution of the regularized (partial cheap control) problem for a
// fixed ε > 0: the singular controls get weight ε², S(ε) = B(G+𝓔)⁻¹Bᵀ, and
//
//   PA + AᵀP − PS(ε)P + D = 0,   u*_ε = −(G+𝓔)⁻¹Bᵀ(Pz + h(t)).

#include <algorithm>
#include <cmath>
#include <tuple>

#include "singlq/feedback.hpp"
#include "singlq/feedforward.hpp"
#include "singlq/linalg.hpp"
#include "singlq/problem_model.hpp"
#include "singlq/reduced_solver.hpp"

namespace singlq {

struct CheapOptions {
  double epsilon_max = 1.0;
  /// Below this ε the solve runs Newton–Kleinman from the zero-order seed.
  double newton_threshold = 1e-2;
  int max_newton_steps = 60;
  AreOptions are;
};

struct CheapSolution {
  double epsilon = 0.0;
  Matrix P;
  Matrix Acl;
  Matrix S;
  ExpSignal h;
  ExpSignal s;
  double Jstar = 0.0;
  Matrix P1;
  Matrix P2;
  Matrix P3;

  /// h = (h₁; εh₂).
  ExpSignal h1(int slow_dim) const { return h.segment(0, slow_dim); }
  ExpSignal h2(int slow_dim) const {
    return h.segment(slow_dim, h.dimension() - slow_dim).scaled(1.0 / epsilon);
  }
};

/// S(ε) = B(G+𝓔)⁻¹Bᵀ.
inline Matrix assemble_S(const Oocp& o, double epsilon) {
  require(epsilon > 0.0, ErrorCode::kInvalidArgument, "epsilon must be > 0");
  const Vector w_inv = o.control_weight(epsilon).diagonal().cwiseInverse();
  return symmetrize(o.B * w_inv.asDiagonal() * o.B.transpose());
}

/// Block closed forms: S₁ = diag(0, G̃⁻¹), S₂ = (0; H₁), S₃(ε) = ε²H₂ + I,
/// with S(ε) = [[S₁, S₂], [S₂ᵀ, S₃(ε)/ε²]].
inline Matrix block_S1(const Oocp& o) {
  Matrix s = Matrix::Zero(o.slow_dim(), o.slow_dim());
  for (int k = 0; k < o.q; ++k)
    s(o.n - o.r + k, o.n - o.r + k) = 1.0 / o.g(k);
  return s;
}

inline Matrix block_S2(const Oocp& o) {
  Matrix s = Matrix::Zero(o.slow_dim(), o.fast_dim());
  s.bottomRows(o.q) = o.H1();
  return s;
}

inline Matrix block_S3(const Oocp& o, double epsilon) {
  return epsilon * epsilon * o.H2() +
         Matrix::Identity(o.fast_dim(), o.fast_dim());
}

/// (G+𝓔)⁻¹Bᵀ = [[H₃, H₁], [0, I/ε²]].
inline Matrix weighted_input_map(const Oocp& o, double epsilon) {
  const int m = o.slow_dim();
  const int k = o.fast_dim();
  Matrix w = Matrix::Zero(o.r, o.n);
  w.topLeftCorner(o.q, m) = o.H3();
  w.topRightCorner(o.q, k) = o.H1();
  w.bottomRightCorner(k, k) =
      Matrix::Identity(k, k) / (epsilon * epsilon);
  return w;
}

/// (P₁, P₂, P₃) with P = [[P₁, εP₂], [εP₂ᵀ, εP₃]].
inline std::tuple<Matrix, Matrix, Matrix> extract_blocks(const Matrix& p,
                                                         double epsilon,
                                                         int slow_dim) {
  require(epsilon > 0.0, ErrorCode::kInvalidArgument, "epsilon must be > 0");
  const Eigen::Index m = slow_dim;
  const Eigen::Index k = p.rows() - m;
  return {p.topLeftCorner(m, m), p.topRightCorner(m, k) / epsilon,
          p.bottomRightCorner(k, k) / epsilon};
}

inline Matrix assemble_blocks(const Matrix& p1, const Matrix& p2,
                              const Matrix& p3, double epsilon) {
  Matrix p(p1.rows() + p3.rows(), p1.rows() + p3.rows());
  p << p1, epsilon * p2, epsilon * p2.transpose(), epsilon * p3;
  return p;
}

struct BlockResiduals {
  double eq1 = 0.0;
  double eq2 = 0.0;
  double eq3 = 0.0;
  double max() const { return std::max({eq1, eq2, eq3}); }
};

/// Residuals of the three block Riccati equations written in (P₁, P₂, P₃)
/// and the closed-form blocks of S(ε); no full n×n product is formed.
inline BlockResiduals block_residuals(const Oocp& o, double epsilon,
                                      const Matrix& p1, const Matrix& p2,
                                      const Matrix& p3) {
  const double e = epsilon;
  const Matrix a1 = o.A1(), a2 = o.A2(), a3 = o.A3(), a4 = o.A4();
  const Matrix s1 = block_S1(o), s2 = block_S2(o), s3 = block_S3(o, e);
  const Matrix p2t = p2.transpose();

  const Matrix r1 = p1 * a1 + e * p2 * a3 + a1.transpose() * p1 +
                    e * a3.transpose() * p2t - p1 * s1 * p1 -
                    e * p2 * s2.transpose() * p1 - e * p1 * s2 * p2t -
                    p2 * s3 * p2t + o.D1;
  const Matrix r2 = p1 * a2 + e * p2 * a4 + e * a1.transpose() * p2 +
                    e * a3.transpose() * p3 - e * p1 * s1 * p2 -
                    e * e * p2 * s2.transpose() * p2 - e * p1 * s2 * p3 -
                    p2 * s3 * p3;
  const Matrix r3 = e * p2t * a2 + e * p3 * a4 + e * a2.transpose() * p2 +
                    e * a4.transpose() * p3 - e * e * p2t * s1 * p2 -
                    e * e * p3 * s2.transpose() * p2 -
                    e * e * p2t * s2 * p3 - p3 * s3 * p3 + o.D2;
  return {r1.norm(), r2.norm(), r3.norm()};
}

namespace detail {

inline Matrix newton_from_seed(const Oocp& o, double epsilon, const Matrix& s,
                               Matrix p, int max_steps, double tol) {
  const Matrix a = o.A;
  const Matrix d = o.D();
  const double scale = 1.0 + d.norm();
  auto block_error = [&](const Matrix& x) {
    auto [p1, p2, p3] = extract_blocks(x, epsilon, o.slow_dim());
    return block_residuals(o, epsilon, p1, p2, p3).max() / scale;
  };
  double err = block_error(p);
  for (int it = 0; it < max_steps && err > 1e-14; ++it) {
    const Matrix closed = a - s * p;
    require(spectral_abscissa(closed).hurwitz(),
            ErrorCode::kNoStabilizingSolution,
            "Newton iterate is not stabilizing");
    Matrix next = solve_lyapunov(closed, d + p * s * p);
    const double next_err = block_error(next);
    if (!(next_err < err) && err < tol) break;
    p = std::move(next);
    err = next_err;
  }
  if (!(err < tol)) {
    fail(ErrorCode::kNoStabilizingSolution,
         "Newton iteration stalled at block residual " + format_number(err));
  }
  return p;
}

}  // namespace detail

inline CheapSolution solve_pccp(const Oocp& o, double epsilon,
                                const CheapOptions& options = {}) {
  require(epsilon > 0.0 && epsilon <= options.epsilon_max,
          ErrorCode::kInvalidArgument,
          "epsilon " + format_number(epsilon) + " outside (0, " +
              format_number(options.epsilon_max) + "]");
  check_oocp_dimensions(o);
  CheapSolution sol;
  sol.epsilon = epsilon;
  sol.S = assemble_S(o, epsilon);
  const Matrix d = o.D();

  if (epsilon >= options.newton_threshold) {
    sol.P = solve_are(o.A, sol.S, d, options.are);
  } else {
    const ReducedSolution rs = solve_reduced(o, options.are);
    sol.P = symmetrize(detail::newton_from_seed(
        o, epsilon, sol.S, rs.P0(epsilon), options.max_newton_steps,
        1e-9));
  }
  sol.Acl = o.A - sol.S * sol.P;
  require(spectral_abscissa(sol.Acl).hurwitz(),
          ErrorCode::kNoStabilizingSolution,
          "closed-loop matrix is not Hurwitz");
  std::tie(sol.P1, sol.P2, sol.P3) = extract_blocks(sol.P, epsilon, o.slow_dim());

  sol.h = feedforward_modes(sol.Acl, sol.P, o.disturbance);
  sol.s = value_offset(sol.h, o.disturbance, sol.S);
  sol.Jstar = quadratic_value(sol.P, sol.h, sol.s, o.z0);
  return sol;
}

/// u*_ε(z, t) = −(G+𝓔)⁻¹Bᵀ(Pz + h(t)).
inline AffineFeedback cheap_feedback(const CheapSolution& sol, const Oocp& o) {
  const Matrix w = -weighted_input_map(o, sol.epsilon);
  return {w * sol.P, sol.h.mapped(w)};
}

}  // namespace singlq
