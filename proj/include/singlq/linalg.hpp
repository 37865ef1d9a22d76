#pragma once

// Dense real linear algebra used throughout the solver: symmetric square
// roots, spectral abscissa, Sylvester/Lyapunov solves, the stabilizing
// solution of the continuous algebraic Riccati equation, complement bases
// and the matrix exponential.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "singlq/error.hpp"

namespace singlq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Singular values below this fraction of the largest one count as zero.
inline constexpr double kRankTolerance = 1e-10;

namespace detail {

inline std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

inline double norm_or_one(const Matrix& m) {
  return std::max(1.0, m.norm());
}

}  // namespace detail

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Largest absolute entry; 0 for an empty matrix.
inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double asymmetry(const Matrix& m) {
  return m.rows() == m.cols() ? max_abs(m - m.transpose()) : INFINITY;
}

inline bool is_symmetric(const Matrix& m, double tol) {
  return m.rows() == m.cols() && asymmetry(m) <= tol;
}

inline Matrix symmetrize(const Matrix& m) {
  return 0.5 * (m + m.transpose());
}

// ---------------------------------------------------------------------------
// Spectrum

struct SpectralReport {
  double abscissa = 0.0;
  double margin_tolerance = 1e-12;

  bool hurwitz() const { return abscissa < -margin_tolerance; }
};

inline Eigen::VectorXcd eigenvalues(const Matrix& m) {
  require(m.rows() == m.cols(), ErrorCode::kDimensionMismatch,
          "eigenvalues of non-square matrix " + detail::shape(m));
  if (m.size() == 0) return Eigen::VectorXcd(0);
  require(all_finite(m), ErrorCode::kEigenFailure, "non-finite matrix entry");
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  require(es.info() == Eigen::Success, ErrorCode::kEigenFailure,
          "eigenvalue iteration did not converge");
  return es.eigenvalues();
}

/// max Re λ(M). An empty matrix has abscissa −∞.
inline SpectralReport spectral_abscissa(const Matrix& m,
                                        double margin_tolerance = 1e-12) {
  SpectralReport report;
  report.margin_tolerance = margin_tolerance;
  const Eigen::VectorXcd ev = eigenvalues(m);
  report.abscissa = ev.size() == 0 ? -std::numeric_limits<double>::infinity()
                                   : ev.real().maxCoeff();
  return report;
}

// ---------------------------------------------------------------------------
// Symmetric square roots

namespace detail {

inline Matrix symmetric_root(const Matrix& m, double sym_tol,
                             bool allow_semidefinite, bool inverse) {
  require(m.rows() == m.cols(), ErrorCode::kDimensionMismatch,
          "square root of non-square matrix " + shape(m));
  require(is_symmetric(m, sym_tol * norm_or_one(m)), ErrorCode::kNotSymmetric,
          "asymmetry " + format_number(asymmetry(m)));
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  require(es.info() == Eigen::Success, ErrorCode::kEigenFailure,
          "symmetric eigendecomposition failed");
  Vector w = es.eigenvalues();
  const double floor = -1e-12 * m.norm();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) < floor) {
      fail(ErrorCode::kNotPositiveDefinite,
           "eigenvalue " + format_number(w(i)) + " is negative");
    }
    if (w(i) <= 0.0) {
      if (!allow_semidefinite || inverse) {
        fail(ErrorCode::kNotPositiveDefinite,
             "eigenvalue " + format_number(w(i)) + " is not positive");
      }
      w(i) = 0.0;
    }
    w(i) = inverse ? 1.0 / std::sqrt(w(i)) : std::sqrt(w(i));
  }
  const Matrix& v = es.eigenvectors();
  return symmetrize(v * w.asDiagonal() * v.transpose());
}

}  // namespace detail

/// Unique symmetric positive-definite R with R·R = M.
inline Matrix spd_sqrt(const Matrix& m, double sym_tol = 1e-10) {
  return detail::symmetric_root(m, sym_tol, false, false);
}

/// Inverse of spd_sqrt(M).
inline Matrix spd_inv_sqrt(const Matrix& m, double sym_tol = 1e-10) {
  return detail::symmetric_root(m, sym_tol, false, true);
}

/// PSD square root; eigenvalues in [−1e-12‖M‖, 0] are clamped to zero.
inline Matrix psd_sqrt(const Matrix& m, double sym_tol = 1e-10) {
  return detail::symmetric_root(m, sym_tol, true, false);
}

// ---------------------------------------------------------------------------
// Rank, complements, shifted solves

inline Eigen::Index numerical_rank(const Matrix& m,
                                   double rel_tol = kRankTolerance) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) ++rank;
  }
  return rank;
}

/// Flip column signs so that the first entry above round-off is positive.
inline void canonicalize_column_signs(Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double scale = m.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (std::abs(m(i, j)) > 1e-12 * scale) {
        if (m(i, j) < 0) m.col(j) *= -1.0;
        break;
      }
    }
  }
}

/// Orthonormal basis of the orthogonal complement of col(B), so that (Bc, B)
/// is nonsingular. B must have full column rank.
inline Matrix complement_basis(const Matrix& b) {
  const Eigen::Index n = b.rows();
  const Eigen::Index r = b.cols();
  require(r <= n, ErrorCode::kRankDeficient,
          "more columns than rows in " + detail::shape(b));
  require(numerical_rank(b) == r, ErrorCode::kRankDeficient,
          "matrix " + detail::shape(b) + " does not have full column rank");
  if (r == n) return Matrix(n, 0);
  Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeFullU);
  Matrix bc = svd.matrixU().rightCols(n - r);
  canonicalize_column_signs(bc);
  return bc;
}

/// v = (γI − M)⁻¹ c. Throws SingularShift when γ sits (numerically) on the
/// spectrum of M.
inline Vector solve_shifted_linear(const Matrix& m, double gamma,
                                   const Vector& c) {
  require(m.rows() == m.cols() && m.rows() == c.size(),
          ErrorCode::kDimensionMismatch,
          "shifted solve with " + detail::shape(m) + " and vector of size " +
              std::to_string(c.size()));
  const Eigen::Index n = m.rows();
  if (n == 0) return Vector(0);
  const Matrix shifted = gamma * Matrix::Identity(n, n) - m;
  Eigen::JacobiSVD<Matrix> svd(shifted);
  const Vector& s = svd.singularValues();
  const double smin = s(n - 1);
  if (smin == 0.0 || s(0) / smin > 1e14) {
    fail(ErrorCode::kSingularShift,
         "shift " + format_number(gamma) +
             " collides with the spectrum (condition " +
             format_number(smin == 0.0 ? INFINITY : s(0) / smin) + ")");
  }
  Eigen::PartialPivLU<Matrix> lu(shifted);
  Vector v = lu.solve(c);
  // One step of iterative refinement.
  v += lu.solve(c - shifted * v);
  return v;
}

// ---------------------------------------------------------------------------
// Sylvester and Lyapunov equations (Bartels–Stewart on complex Schur forms)

/// Solves A·X + X·B = C.
inline Matrix solve_sylvester(const Matrix& a, const Matrix& b,
                              const Matrix& c) {
  require(a.rows() == a.cols() && b.rows() == b.cols() &&
              c.rows() == a.rows() && c.cols() == b.rows(),
          ErrorCode::kDimensionMismatch,
          "sylvester dimensions " + detail::shape(a) + ", " +
              detail::shape(b) + ", " + detail::shape(c));
  const Eigen::Index m = a.rows();
  const Eigen::Index n = b.rows();
  if (m == 0 || n == 0) return Matrix::Zero(m, n);

  Eigen::ComplexSchur<Matrix> sa(a);
  Eigen::ComplexSchur<Matrix> sb(b);
  require(sa.info() == Eigen::Success && sb.info() == Eigen::Success,
          ErrorCode::kEigenFailure, "Schur decomposition failed");
  const ComplexMatrix& ta = sa.matrixT();
  const ComplexMatrix& ua = sa.matrixU();
  const ComplexMatrix& tb = sb.matrixT();
  const ComplexMatrix& ub = sb.matrixU();

  const ComplexMatrix f = ua.adjoint() * c.cast<Complex>() * ub;
  ComplexMatrix y(m, n);
  const double scale = std::max(ta.norm(), tb.norm());
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXcd rhs = f.col(j);
    for (Eigen::Index k = 0; k < j; ++k) rhs -= tb(k, j) * y.col(k);
    ComplexMatrix lhs = ta;
    lhs.diagonal().array() += tb(j, j);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::abs(lhs(i, i)) <= 1e-14 * std::max(1.0, scale)) {
        fail(ErrorCode::kSingularShift,
             "Sylvester operator is singular (λ(A) + λ(B) ≈ 0)");
      }
    }
    y.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
  }
  return (ua * y * ub.adjoint()).real();
}

/// Solves Aᵀ·X + X·A + Q = 0 and returns the symmetrized X.
inline Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
  return symmetrize(solve_sylvester(a.transpose(), a, -q));
}

// ---------------------------------------------------------------------------
// Algebraic Riccati equation  P·A + Aᵀ·P − P·S·P + D = 0

inline Matrix are_residual_matrix(const Matrix& a, const Matrix& s,
                                  const Matrix& d, const Matrix& p) {
  return p * a + a.transpose() * p - p * s * p + d;
}

/// ‖PA + AᵀP − PSP + D‖_F / max(1, ‖D‖_F).
inline double are_relative_residual(const Matrix& a, const Matrix& s,
                                    const Matrix& d, const Matrix& p) {
  return are_residual_matrix(a, s, d, p).norm() / detail::norm_or_one(d);
}

namespace detail {

inline void complex_givens(Complex f, Complex g, double& c, Complex& s) {
  const double af = std::abs(f);
  const double ag = std::abs(g);
  if (ag == 0.0) {
    c = 1.0;
    s = 0.0;
    return;
  }
  if (af == 0.0) {
    c = 0.0;
    s = std::conj(g) / ag;
    return;
  }
  const double nrm = std::hypot(af, ag);
  c = af / nrm;
  s = (f / af) * std::conj(g) / nrm;
}

/// Reorders a complex Schur form T = Uᴴ H U so that the eigenvalues with
/// negative real part lead. Returns how many there are.
inline Eigen::Index reorder_stable_first(ComplexMatrix& t, ComplexMatrix& u) {
  const Eigen::Index n = t.rows();
  auto stable = [&](Eigen::Index k) { return t(k, k).real() < 0.0; };
  Eigen::Index placed = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!stable(k)) continue;
    // Bubble entry k up to position `placed` by adjacent swaps.
    for (Eigen::Index j = k; j > placed; --j) {
      const Eigen::Index p = j - 1;
      const Complex t11 = t(p, p);
      const Complex t22 = t(j, j);
      double c;
      Complex s;
      complex_givens(t(p, j), t22 - t11, c, s);
      // Rows p, j from column j+1 on.
      for (Eigen::Index col = j + 1; col < n; ++col) {
        const Complex x = t(p, col);
        const Complex y = t(j, col);
        t(p, col) = c * x + s * y;
        t(j, col) = c * y - std::conj(s) * x;
      }
      // Columns p, j in rows above p.
      for (Eigen::Index row = 0; row < p; ++row) {
        const Complex x = t(row, p);
        const Complex y = t(row, j);
        t(row, p) = c * x + std::conj(s) * y;
        t(row, j) = c * y - s * x;
      }
      t(p, p) = t22;
      t(j, j) = t11;
      for (Eigen::Index row = 0; row < n; ++row) {
        const Complex x = u(row, p);
        const Complex y = u(row, j);
        u(row, p) = c * x + std::conj(s) * y;
        u(row, j) = c * y - s * x;
      }
    }
    ++placed;
  }
  return placed;
}

}  // namespace detail

/// Orthonormal basis (columns) of the stable invariant subspace of H, via an
/// ordered complex Schur decomposition.
inline ComplexMatrix stable_invariant_subspace(const Matrix& h) {
  Eigen::ComplexSchur<Matrix> schur(h);
  require(schur.info() == Eigen::Success, ErrorCode::kEigenFailure,
          "Schur decomposition of the Hamiltonian failed");
  ComplexMatrix t = schur.matrixT();
  ComplexMatrix u = schur.matrixU();
  const Eigen::Index k = detail::reorder_stable_first(t, u);
  return u.leftCols(k);
}

struct AreOptions {
  int max_newton_steps = 8;
  double residual_tolerance = 1e-10;
};

/// Newton–Kleinman iteration from a stabilizing initial guess. Stops when the
/// residual no longer decreases or max_steps is reached.
inline Matrix refine_are_newton(const Matrix& a, const Matrix& s,
                                const Matrix& d, Matrix p, int max_steps) {
  double best = are_relative_residual(a, s, d, p);
  for (int it = 0; it < max_steps; ++it) {
    const Matrix closed = a - s * p;
    if (!spectral_abscissa(closed).hurwitz()) break;
    Matrix next;
    try {
      next = solve_lyapunov(closed, d + p * s * p);
    } catch (const Error&) {
      break;
    }
    const double res = are_relative_residual(a, s, d, next);
    if (!(res < best)) break;
    p = std::move(next);
    best = res;
    if (best < 1e-15) break;
  }
  return p;
}

/// Stabilizing symmetric PSD solution of P·A + Aᵀ·P − P·S·P + D = 0.
///
/// Stable invariant subspace of the Hamiltonian [[A, −S], [−D, −Aᵀ]],
/// followed by Newton–Kleinman refinement. Throws NoStabilizingSolution when
/// the subspace is deficient, the result is not stabilizing, or the residual
/// stays above the tolerance.
inline Matrix solve_are(const Matrix& a, const Matrix& s, const Matrix& d,
                        const AreOptions& options = {}) {
  const Eigen::Index n = a.rows();
  require(a.cols() == n && s.rows() == n && s.cols() == n && d.rows() == n &&
              d.cols() == n,
          ErrorCode::kDimensionMismatch,
          "ARE dimensions " + detail::shape(a) + ", " + detail::shape(s) +
              ", " + detail::shape(d));
  if (n == 0) return Matrix(0, 0);
  require(all_finite(a) && all_finite(s) && all_finite(d),
          ErrorCode::kNoStabilizingSolution, "non-finite ARE data");

  Matrix h(2 * n, 2 * n);
  h << a, -s, -d, -a.transpose();
  const ComplexMatrix basis = stable_invariant_subspace(h);
  if (basis.cols() != n) {
    fail(ErrorCode::kNoStabilizingSolution,
         "Hamiltonian has " + std::to_string(basis.cols()) +
             " stable eigenvalues, expected " + std::to_string(n));
  }
  const ComplexMatrix u1 = basis.topRows(n);
  const ComplexMatrix u2 = basis.bottomRows(n);
  Eigen::FullPivLU<ComplexMatrix> lu(u1);
  if (!lu.isInvertible()) {
    fail(ErrorCode::kNoStabilizingSolution,
         "stable subspace is not a graph subspace");
  }
  // P = U2·U1⁻¹  ⇔  U1ᵀ·Pᵀ = U2ᵀ
  const ComplexMatrix pc =
      u1.transpose().fullPivLu().solve(u2.transpose()).transpose();
  Matrix p = symmetrize(pc.real());
  p = refine_are_newton(a, s, d, p, options.max_newton_steps);

  const double res = are_relative_residual(a, s, d, p);
  if (!(res < options.residual_tolerance)) {
    fail(ErrorCode::kNoStabilizingSolution,
         "Riccati residual " + format_number(res) + " above tolerance");
  }
  if (!spectral_abscissa(a - s * p).hurwitz()) {
    fail(ErrorCode::kNoStabilizingSolution,
         "closed-loop matrix A − S·P is not Hurwitz");
  }
  return p;
}

// ---------------------------------------------------------------------------
// Matrix exponential

/// exp(M·t) by Padé scaling and squaring.
inline Matrix expm(const Matrix& m, double t) {
  require(m.rows() == m.cols(), ErrorCode::kDimensionMismatch,
          "expm of non-square matrix " + detail::shape(m));
  if (m.size() == 0) return m;
  require(all_finite(m), ErrorCode::kOverflow, "non-finite matrix entry");
  const Matrix mt = m * t;
  if (mt.norm() > 700.0 && spectral_abscissa(m).abscissa * t > 0.0) {
    fail(ErrorCode::kOverflow, "exp(M·t) overflows: ‖Mt‖ = " +
                                   std::to_string(mt.norm()));
  }
  Matrix result = mt.exp();
  require(all_finite(result), ErrorCode::kOverflow,
          "exp(M·t) is not finite");
  return result;
}

// ---------------------------------------------------------------------------
// Hautus tests

/// Smallest singular value of [M − λI, N] (λ complex).
inline double hautus_sigma_min(const Matrix& m, Complex lambda,
                               const Matrix& n_block) {
  const Eigen::Index n = m.rows();
  ComplexMatrix pencil(n, n + n_block.cols());
  pencil.leftCols(n) = m.cast<Complex>();
  pencil.leftCols(n).diagonal().array() -= lambda;
  if (n_block.cols() > 0) pencil.rightCols(n_block.cols()) = n_block.cast<Complex>();
  Eigen::JacobiSVD<ComplexMatrix> svd(pencil);
  const Vector& s = svd.singularValues();
  return s.size() < n ? 0.0 : s(n - 1);
}

struct HautusResult {
  bool pass = true;
  /// Minimum of σ_min([M − λI, N]) over the non-stable eigenvalues λ; +∞ when
  /// M has no such eigenvalue.
  double witness = std::numeric_limits<double>::infinity();
};

/// Stabilizability of (M, N): every eigenvalue with Re λ ≥ 0 must satisfy
/// σ_min([M − λI, N]) > threshold.
inline HautusResult hautus_stabilizable(const Matrix& m, const Matrix& n_block,
                                        double threshold = 1e-8) {
  HautusResult result;
  if (m.rows() == 0) return result;
  const Eigen::VectorXcd ev = eigenvalues(m);
  const double marginal = -1e-9 * detail::norm_or_one(m);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i).real() < marginal) continue;
    const double sigma = hautus_sigma_min(m, ev(i), n_block);
    result.witness = std::min(result.witness, sigma);
  }
  result.pass = result.witness > threshold;
  return result;
}

/// Detectability of (M, F) ⇔ stabilizability of (Mᵀ, Fᵀ).
inline HautusResult hautus_detectable(const Matrix& m, const Matrix& f,
                                      double threshold = 1e-8) {
  return hautus_stabilizable(m.transpose(), f.transpose(), threshold);
}

}  // namespace singlq
