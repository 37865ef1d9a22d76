#pragma once

// Test-only reference computations. None of these share code paths with the
// library solvers they check.

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// AᵀX + XA + Q = 0 through the n²×n² Kronecker system.
inline Matrix lyapunov_kron(const Matrix& a, const Matrix& q) {
  const Eigen::Index n = a.rows();
  const Matrix id = Matrix::Identity(n, n);
  Matrix big(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      big.block(i * n, j * n, n, n) = a(j, i) * id;
      if (i == j) big.block(i * n, j * n, n, n) += a.transpose();
    }
  // vec is column-major: vec(XA) = (Aᵀ⊗I)vec(X), vec(AᵀX) = (I⊗Aᵀ)vec(X).
  Eigen::Map<const Vector> qv(q.data(), n * n);
  Vector xv = big.fullPivLu().solve(-qv);
  Matrix x = Eigen::Map<Matrix>(xv.data(), n, n);
  return 0.5 * (x + x.transpose());
}

inline bool hurwitz(const Matrix& a) {
  if (a.size() == 0) return true;
  return Eigen::EigenSolver<Matrix>(a, false).eigenvalues().real().maxCoeff() < 0;
}

/// Newton–Kleinman for PA + AᵀP − PSP + D = 0. The seed is 0 when A is
/// Hurwitz and otherwise Bass's P₀ = X⁻¹ with
/// −(A + βI)X − X(A + βI)ᵀ + 2S = 0.
inline Matrix newton_kleinman(const Matrix& a, const Matrix& s, const Matrix& d,
                              int steps = 60) {
  const Eigen::Index n = a.rows();
  Matrix p = Matrix::Zero(n, n);
  if (!hurwitz(a)) {
    const double beta = a.norm() + 1.0;
    const Matrix shifted = -(a + beta * Matrix::Identity(n, n));
    // shifted·X + X·shiftedᵀ + 2S = 0  ⇔  lyapunov_kron(shiftedᵀ, 2S)
    const Matrix x = lyapunov_kron(shifted.transpose(), 2.0 * s);
    p = x.inverse();
  }
  for (int k = 0; k < steps; ++k) {
    const Matrix closed = a - s * p;
    const Matrix next = lyapunov_kron(closed, d + p * s * p);
    const double change = (next - p).norm();
    p = next;
    if (change <= 1e-15 * (1.0 + p.norm())) break;
  }
  return p;
}

/// z(t) of dz/dt = Mz + Σ cⱼe^{−γⱼt} in closed form via expm and the
/// resolvent (γⱼ not in −σ(M)).
struct AffineFlow {
  Matrix m;
  std::vector<std::pair<double, Vector>> modes;
  Vector z0;

  Vector operator()(double t) const {
    const Eigen::Index n = m.rows();
    Vector part0 = Vector::Zero(n), part = Vector::Zero(n);
    for (const auto& [rate, c] : modes) {
      const Vector v = -(m + rate * Matrix::Identity(n, n)).lu().solve(c);
      part0 += v;
      part += v * std::exp(-rate * t);
    }
    return Matrix((m * t).exp()) * (z0 - part0) + part;
  }
};

/// Composite Simpson on [0, T] with N (even) panels.
inline double simpson(const std::function<double(double)>& f, double t_end,
                      int panels) {
  const double h = t_end / panels;
  double acc = f(0.0) + f(t_end);
  for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return acc * h / 3.0;
}

}  // namespace oracle
