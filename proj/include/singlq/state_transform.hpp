#pragma once

// Z = T·z with T = (ℒ, ℬ₂), ℒ = B̃_c − ℬ₂ℋ, ℋ = (ℬ₂ᵀ𝒟ℬ₂)⁻¹ℬ₂ᵀ𝒟B̃_c and
// B̃_c = (B_c, ℬ₁). In z the cost matrix is block-diagonal and the control
// matrix has the fixed (0; Ĩ₁), ℋB₁ + Ĩ₂ structure.

#include <utility>

#include "singlq/feedback.hpp"
#include "singlq/linalg.hpp"
#include "singlq/problem_model.hpp"

namespace singlq {

inline constexpr double kTransformConditionLimit = 1e12;

struct TransformData {
  Matrix Bc;        // n×(n−r)
  Matrix Btilde_c;  // (B_c, ℬ₁), n×(n−r+q)
  Matrix Hcal;      // (r−q)×(n−r+q)
  Matrix Lcal;      // n×(n−r+q)
  Matrix T;
  Matrix Tinv;
};

inline TransformData build_transform(const RawProblem& p) {
  detail::check_raw_dimensions(p);
  TransformData td;
  td.Bc = complement_basis(p.B);
  td.Btilde_c.resize(p.n, p.n - p.r + p.q);
  td.Btilde_c << td.Bc, p.B1();

  const Matrix b2 = p.B2();
  const Matrix m = b2.transpose() * p.D * b2;
  Eigen::FullPivLU<Matrix> lu(m);
  require(lu.isInvertible(), ErrorCode::kSingularTransform,
          "B2^T D B2 is singular");
  td.Hcal = lu.solve(b2.transpose() * p.D * td.Btilde_c);
  td.Lcal = td.Btilde_c - b2 * td.Hcal;

  td.T.resize(p.n, p.n);
  td.T << td.Lcal, b2;
  Eigen::JacobiSVD<Matrix> svd(td.T);
  const Vector& s = svd.singularValues();
  const double cond = s(s.size() - 1) == 0.0 ? INFINITY : s(0) / s(s.size() - 1);
  if (!(cond <= kTransformConditionLimit)) {
    fail(ErrorCode::kSingularTransform,
         "condition number of T is " + format_number(cond));
  }
  td.Tinv = td.T.partialPivLu().inverse();
  return td;
}

/// The transformed problem (A, B, D₁, D₂, f, z₀).
inline Oocp transform_problem(const RawProblem& p, const TransformData& td) {
  const int m = p.n - p.r + p.q;
  const int k = p.r - p.q;
  Matrix a = td.Tinv * p.A * td.T;
  Matrix b = td.Tinv * p.B;
  Matrix d = symmetrize(td.T.transpose() * p.D * td.T);
  const double off = max_abs(d.topRightCorner(m, k));
  if (off > 1e-9 * std::max(1.0, d.norm())) {
    fail(ErrorCode::kStructureViolation,
         "transformed D is not block-diagonal (off-block " +
             format_number(off) + ")");
  }
  d.topRightCorner(m, k).setZero();
  d.bottomLeftCorner(k, m).setZero();
  return make_oocp(p.n, p.r, p.q, std::move(a), std::move(b), d, p.g,
                   p.disturbance.mapped(td.Tinv), td.Tinv * p.z0, td.Hcal);
}

inline Oocp transform_problem(const RawProblem& p) {
  return transform_problem(p, build_transform(p));
}

/// U(Z, t) = u(T⁻¹Z, t).
inline FeedbackLaw lift_control(FeedbackLaw u, const TransformData& td) {
  return [u = std::move(u), tinv = td.Tinv](const Vector& z, double t) {
    return u(tinv * z, t);
  };
}

inline AffineFeedback lift_control(const AffineFeedback& u,
                                   const TransformData& td) {
  return {u.gain * td.Tinv, u.offset};
}

}  // namespace singlq
