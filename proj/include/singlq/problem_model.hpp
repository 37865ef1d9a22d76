#pragma once

// Problem data: the untransformed singular LQ problem
//
//   dZ/dt = 𝒜Z + ℬU + ℱ(t),  𝒥(U) = ∫ ZᵀDZ + UᵀGU dt,  G = diag(g₁..g_q, 0..0)
//
// and its transformed form (Oocp) in which z = (x, y), x of size n−r+q and
// y of size r−q, D is block-diagonal, and B has the fixed structure
// B₁ = (0; Ĩ₁), B₂ = ℋB₁ + Ĩ₂. Also the (A1)–(A7) validators.

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "singlq/error.hpp"
#include "singlq/exp_signal.hpp"
#include "singlq/linalg.hpp"

namespace singlq {

inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kHautusThreshold = 1e-8;
inline constexpr double kSymmetryTolerance = 1e-12;

struct RawProblem {
  int n = 0;
  int r = 0;
  int q = 0;
  Matrix A;  // 𝒜, n×n
  Matrix B;  // ℬ, n×r
  Matrix D;  // 𝒟, n×n symmetric PSD
  Vector g;  // g₁..g_q
  ExpSignal disturbance;
  Vector z0;

  Matrix G() const {
    Matrix w = Matrix::Zero(r, r);
    for (int k = 0; k < q; ++k) w(k, k) = g(k);
    return w;
  }
  Matrix B1() const { return B.leftCols(q); }
  Matrix B2() const { return B.rightCols(r - q); }
};

/// The transformed problem. Slow block x has size n−r+q, fast block y has
/// size r−q.
struct Oocp {
  int n = 0;
  int r = 0;
  int q = 0;
  Matrix A;
  Matrix B;
  Matrix Hcal;  // ℋ, (r−q)×(n−r+q)
  Matrix D1;
  Matrix D2;
  Vector g;
  ExpSignal disturbance;
  Vector z0;

  int slow_dim() const { return n - r + q; }
  int fast_dim() const { return r - q; }

  Matrix A1() const { return A.topLeftCorner(slow_dim(), slow_dim()); }
  Matrix A2() const { return A.topRightCorner(slow_dim(), fast_dim()); }
  Matrix A3() const { return A.bottomLeftCorner(fast_dim(), slow_dim()); }
  Matrix A4() const { return A.bottomRightCorner(fast_dim(), fast_dim()); }
  Matrix B1() const { return B.topRows(slow_dim()); }
  Matrix B2() const { return B.bottomRows(fast_dim()); }

  Matrix D() const {
    Matrix d = Matrix::Zero(n, n);
    d.topLeftCorner(slow_dim(), slow_dim()) = D1;
    d.bottomRightCorner(fast_dim(), fast_dim()) = D2;
    return d;
  }

  Matrix G() const {
    Matrix w = Matrix::Zero(r, r);
    for (int k = 0; k < q; ++k) w(k, k) = g(k);
    return w;
  }

  /// G + 𝓔 with 𝓔 = diag(0..0, ε²..ε²).
  Matrix control_weight(double epsilon) const {
    Matrix w = G();
    for (int k = q; k < r; ++k) w(k, k) = epsilon * epsilon;
    return w;
  }

  /// G̃ = diag(g₁..g_q).
  Matrix Gtilde() const { return g.head(q).asDiagonal(); }

  /// H₃ = (O_{q×(n−r)}, G̃⁻¹).
  Matrix H3() const {
    Matrix h = Matrix::Zero(q, slow_dim());
    for (int k = 0; k < q; ++k) h(k, n - r + k) = 1.0 / g(k);
    return h;
  }
  /// H₁ = H₃ℋᵀ.
  Matrix H1() const { return H3() * Hcal.transpose(); }
  /// H₂ = ℋ·(O; H₁).
  Matrix H2() const {
    Matrix s2 = Matrix::Zero(slow_dim(), fast_dim());
    s2.bottomRows(q) = H1();
    return Hcal * s2;
  }
  /// B̃ = (O_{(n−r)×q}; I_q).
  Matrix Btilde() const {
    Matrix b = Matrix::Zero(slow_dim(), q);
    b.bottomRows(q) = Matrix::Identity(q, q);
    return b;
  }
  /// B̄ = (B̃, A₂).
  Matrix Bbar() const {
    Matrix b(slow_dim(), r);
    b << Btilde(), A2();
    return b;
  }
  /// Θ = diag(G̃, D₂).
  Matrix Theta() const {
    Matrix t = Matrix::Zero(r, r);
    t.topLeftCorner(q, q) = Gtilde();
    t.bottomRightCorner(fast_dim(), fast_dim()) = D2;
    return t;
  }

  Vector x0() const { return z0.head(slow_dim()); }
  Vector y0() const { return z0.tail(fast_dim()); }
};

// ---------------------------------------------------------------------------
// Assumption reports

struct AssumptionEntry {
  std::string id;
  bool pass = false;
  double witness = 0.0;
  std::string message;
};

struct AssumptionReport {
  std::vector<AssumptionEntry> entries;

  bool all_pass() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const AssumptionEntry& e) { return e.pass; });
  }

  const AssumptionEntry* find(const std::string& id) const {
    for (const auto& e : entries)
      if (e.id == id) return &e;
    return nullptr;
  }

  void append(const AssumptionReport& other) {
    entries.insert(entries.end(), other.entries.begin(), other.entries.end());
  }
};

namespace detail {

inline double min_sym_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline void check_raw_dimensions(const RawProblem& p) {
  const bool ok =
      p.n > 0 && p.q >= 0 && p.q < p.r && p.r <= p.n && p.A.rows() == p.n &&
      p.A.cols() == p.n && p.B.rows() == p.n && p.B.cols() == p.r &&
      p.D.rows() == p.n && p.D.cols() == p.n && p.g.size() == p.q &&
      p.disturbance.dimension() == p.n && p.z0.size() == p.n;
  require(ok, ErrorCode::kDimensionMismatch,
          "inconsistent problem dimensions (n=" + std::to_string(p.n) +
              ", r=" + std::to_string(p.r) + ", q=" + std::to_string(p.q) +
              ")");
}

}  // namespace detail

/// (A1)–(A5) on the untransformed data.
inline AssumptionReport validate_raw(const RawProblem& p) {
  detail::check_raw_dimensions(p);
  AssumptionReport report;

  {
    Eigen::JacobiSVD<Matrix> svd(p.B);
    const Vector& s = svd.singularValues();
    const Eigen::Index rank = numerical_rank(p.B);
    const double rel = (s.size() == 0 || s(0) == 0.0) ? 0.0 : s(s.size() - 1) / s(0);
    report.entries.push_back(
        {"A1", rank == p.r, rel,
         "rank(B) = " + std::to_string(rank) + " of " + std::to_string(p.r) +
             "; witness is sigma_min/sigma_max"});
  }
  {
    const double sym = asymmetry(p.D);
    const double lmin = detail::min_sym_eigenvalue(p.D);
    const bool symmetric = sym <= kSymmetryTolerance * std::max(1.0, p.D.norm());
    const bool psd = lmin >= -kPsdTolerance * p.D.norm();
    std::string msg = "min eigenvalue(D) = " + format_number(lmin);
    if (!symmetric) msg += "; D is not symmetric";
    report.entries.push_back({"A2", symmetric && psd, lmin, msg});
  }
  {
    const double gmin =
        p.q == 0 ? std::numeric_limits<double>::infinity() : p.g.minCoeff();
    report.entries.push_back({"A3", gmin > 0.0, gmin,
                              p.q == 0 ? "vacuous (q = 0)"
                                       : "min g_k = " + format_number(gmin)});
  }
  {
    const double rmin = p.disturbance.min_rate();
    report.entries.push_back(
        {"A4", rmin > 0.0, rmin,
         p.disturbance.empty()
             ? "zero disturbance"
             : "|F(t)| <= " + format_number(p.disturbance.coef_bound()) +
                   " exp(-" + format_number(rmin) + " t)"});
  }
  {
    const Matrix b2 = p.B2();
    const Matrix m = b2.transpose() * p.D * b2;
    double witness = std::numeric_limits<double>::infinity();
    if (m.size() > 0) {
      Eigen::EigenSolver<Matrix> es(m, false);
      witness = es.eigenvalues().cwiseAbs().minCoeff();
    }
    report.entries.push_back({"A5", witness > 1e-10, witness,
                              "min |eigenvalue(B2^T D B2)| = " +
                                  format_number(witness)});
  }
  return report;
}

/// Thin factor F₁ with F₁ᵀF₁ = D₁; F₁ has rank(D₁) rows.
inline Matrix factor_d1(const Matrix& d1) {
  require(d1.rows() == d1.cols(), ErrorCode::kDimensionMismatch,
          "D1 must be square");
  require(is_symmetric(d1, 1e-10 * std::max(1.0, d1.norm())),
          ErrorCode::kNotPsd, "D1 is not symmetric");
  const Eigen::Index m = d1.rows();
  if (m == 0) return Matrix(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(d1));
  const Vector& w = es.eigenvalues();
  const double scale = d1.norm();
  if (w(0) < -kPsdTolerance * scale) {
    fail(ErrorCode::kNotPsd,
         "D1 has eigenvalue " + format_number(w(0)));
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < m; ++i)
    if (w(i) > kRankTolerance * scale) keep.push_back(i);
  Matrix f(static_cast<Eigen::Index>(keep.size()), m);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const Eigen::Index i = keep[k];
    f.row(static_cast<Eigen::Index>(k)) =
        std::sqrt(w(i)) * es.eigenvectors().col(i).transpose();
  }
  return f;
}

inline void check_oocp_dimensions(const Oocp& o) {
  const int m = o.slow_dim();
  const int k = o.fast_dim();
  const bool ok =
      o.n > 0 && o.q >= 0 && o.q < o.r && o.r <= o.n && o.A.rows() == o.n &&
      o.A.cols() == o.n && o.B.rows() == o.n && o.B.cols() == o.r &&
      o.Hcal.rows() == k && o.Hcal.cols() == m && o.D1.rows() == m &&
      o.D1.cols() == m && o.D2.rows() == k && o.D2.cols() == k &&
      o.g.size() == o.q && o.disturbance.dimension() == o.n &&
      o.z0.size() == o.n;
  require(ok, ErrorCode::kDimensionMismatch,
          "inconsistent OOCP dimensions (n=" + std::to_string(o.n) +
              ", r=" + std::to_string(o.r) + ", q=" + std::to_string(o.q) +
              ")");
}

/// Views a transformed problem as untransformed data (T = I), so the (A1)–(A5)
/// checks apply to it directly.
inline RawProblem as_raw(const Oocp& o) {
  check_oocp_dimensions(o);
  RawProblem p;
  p.n = o.n;
  p.r = o.r;
  p.q = o.q;
  p.A = o.A;
  p.B = o.B;
  p.D = o.D();
  p.g = o.g;
  p.disturbance = o.disturbance;
  p.z0 = o.z0;
  return p;
}

/// (A6) stabilizability of (A₁, B̄) and (A7) detectability of (A₁, F₁).
inline AssumptionReport validate_reduced(const Oocp& o) {
  check_oocp_dimensions(o);
  AssumptionReport report;
  const Matrix a1 = o.A1();
  const HautusResult a6 = hautus_stabilizable(a1, o.Bbar(), kHautusThreshold);
  report.entries.push_back(
      {"A6", a6.pass, a6.witness,
       "min sigma_min([A1 - lambda I, Bbar]) over Re(lambda) >= 0"});
  Matrix f1;
  try {
    f1 = factor_d1(o.D1);
  } catch (const Error& e) {
    report.entries.push_back({"A7", false, 0.0, e.what()});
    return report;
  }
  const HautusResult a7 = hautus_detectable(a1, f1, kHautusThreshold);
  report.entries.push_back(
      {"A7", a7.pass, a7.witness,
       "min sigma_min([A1^T - lambda I, F1^T]) over Re(lambda) >= 0"});
  return report;
}

/// Checks that B has upper block (0; I) and D is block-diagonal, and zeroes
/// round-off in the structural entries. ℋ is rebuilt from B when `hcal` is
/// empty; only its last q columns are identifiable from B, the rest are set
/// to zero.
inline Oocp make_oocp(int n, int r, int q, Matrix a, Matrix b, const Matrix& d,
                      Vector g, ExpSignal disturbance, Vector z0,
                      std::optional<Matrix> hcal = std::nullopt,
                      double tol = 1e-9) {
  require(n > 0 && q >= 0 && q < r && r <= n, ErrorCode::kDimensionMismatch,
          "need 0 <= q < r <= n");
  require(a.rows() == n && a.cols() == n && b.rows() == n && b.cols() == r &&
              d.rows() == n && d.cols() == n && g.size() == q &&
              disturbance.dimension() == n && z0.size() == n,
          ErrorCode::kDimensionMismatch, "OOCP data has inconsistent sizes");
  const int m = n - r + q;
  const int k = r - q;
  const double bscale = std::max(1.0, b.norm());

  Matrix b1_expected = Matrix::Zero(m, r);
  for (int i = 0; i < q; ++i) b1_expected(n - r + i, i) = 1.0;
  if (max_abs(b.topRows(m) - b1_expected) > tol * bscale) {
    fail(ErrorCode::kStructureViolation,
         "upper block of B is not (0; [I_q, 0])");
  }
  if (max_abs(b.bottomRightCorner(k, k) - Matrix::Identity(k, k)) >
      tol * bscale) {
    fail(ErrorCode::kStructureViolation,
         "lower-right block of B is not the identity");
  }
  Matrix h = hcal ? *hcal : Matrix::Zero(k, m);
  require(h.rows() == k && h.cols() == m, ErrorCode::kDimensionMismatch,
          "H has the wrong shape");
  if (!hcal) h.rightCols(q) = b.bottomLeftCorner(k, q);
  if (max_abs(b.bottomLeftCorner(k, q) - h.rightCols(q)) > tol * bscale) {
    fail(ErrorCode::kStructureViolation, "B2 differs from H*B1 + I2");
  }
  b.topRows(m) = b1_expected;
  b.bottomRightCorner(k, k) = Matrix::Identity(k, k);
  b.bottomLeftCorner(k, q) = h.rightCols(q);

  const double dscale = std::max(1.0, d.norm());
  require(asymmetry(d) <= tol * dscale, ErrorCode::kStructureViolation,
          "D is not symmetric");
  const double off = max_abs(d.topRightCorner(m, k));
  if (off > tol * dscale) {
    fail(ErrorCode::kStructureViolation,
         "D is not block-diagonal (off-block " + format_number(off) + ")");
  }

  Oocp o;
  o.n = n;
  o.r = r;
  o.q = q;
  o.A = std::move(a);
  o.B = std::move(b);
  o.Hcal = std::move(h);
  o.D1 = symmetrize(d.topLeftCorner(m, m));
  o.D2 = symmetrize(d.bottomRightCorner(k, k));
  o.g = std::move(g);
  o.disturbance = std::move(disturbance);
  o.z0 = std::move(z0);
  return o;
}

/// (A1)–(A7) for an already transformed problem.
inline AssumptionReport validate_all(const Oocp& o) {
  AssumptionReport report = validate_raw(as_raw(o));
  report.append(validate_reduced(o));
  return report;
}

}  // namespace singlq
