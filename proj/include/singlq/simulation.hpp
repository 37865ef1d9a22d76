#pragma once

// Closed-loop simulation of dz/dt = Az + Bu + f(t) under a feedback law,
// with the running cost ∫ zᵀDz + uᵀGu carried as an extra state of the same
// Dormand–Prince 5(4) pair. Also the slow/fast asymptotic reference and the
// transition-matrix decay probe.

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <vector>

#include "singlq/error.hpp"
#include "singlq/feedback.hpp"
#include "singlq/linalg.hpp"
#include "singlq/problem_model.hpp"
#include "singlq/reduced_solver.hpp"

namespace singlq {

struct LinearPlant {
  Matrix A;
  Matrix B;
  Matrix D;  // state weight
  Matrix G;  // control weight
  ExpSignal f;

  static LinearPlant from_oocp(const Oocp& o) {
    return {o.A, o.B, o.D(), o.G(), o.disturbance};
  }
  static LinearPlant from_raw(const RawProblem& p) {
    return {p.A, p.B, p.D, p.G(), p.disturbance};
  }
  /// The reduced problem dx̄/dt = A₁x̄ + B̄ū + f₁ with weights (D₁, Θ).
  static LinearPlant reduced(const Oocp& o, const ReducedSolution& rs) {
    return {o.A1(), rs.Bbar, o.D1, rs.Theta, rs.f1};
  }

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
};

struct SimulationOptions {
  /// Final time; 0 selects 10/decay_hint.
  double horizon = 0.0;
  double decay_hint = 1.0;
  /// Relative local error per step; absolute tolerance is 1e-3·tol.
  double tol = 1e-8;
  double initial_step = 0.0;
  /// Time scale of the fastest transient (e.g. ε); caps the first step at a
  /// tenth of it.
  double fast_scale = 0.0;
  /// Nonzero switches error control off and integrates with this step.
  double fixed_step = 0.0;
  double max_step = std::numeric_limits<double>::infinity();
  /// Times the integrator must land on exactly.
  std::vector<double> output_times;
  long max_steps = 5'000'000;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> controls;
  std::vector<double> running_cost;
  std::vector<double> integrand;
  double tail_bound = 0.0;
  /// Fitted decay rate of the integrand over the last 10% of the span.
  double tail_rate = 0.0;

  std::size_t index_of(double t) const {
    auto it = std::lower_bound(times.begin(), times.end(),
                               t - 1e-12 * (1.0 + std::abs(t)));
    require(it != times.end() && std::abs(*it - t) <= 1e-9 * (1.0 + std::abs(t)),
            ErrorCode::kInvalidArgument,
            "time " + format_number(t) + " is not on the trajectory grid");
    return static_cast<std::size_t>(it - times.begin());
  }
  const Vector& state_at(double t) const { return states[index_of(t)]; }
  const Vector& control_at(double t) const { return controls[index_of(t)]; }
  double final_time() const { return times.back(); }
};

namespace detail {

// Dormand–Prince 5(4) tableau.
struct Dopri {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/// Integrates the closed loop on [0, horizon]. The state vector carries the
/// running cost as its last entry.
inline Trajectory simulate(const LinearPlant& plant, const FeedbackLaw& law,
                           const Vector& z0,
                           const SimulationOptions& opts = {}) {
  const Eigen::Index n = plant.states();
  require(z0.size() == n, ErrorCode::kDimensionMismatch,
          "initial state has the wrong size");
  const double horizon =
      opts.horizon > 0.0 ? opts.horizon : 10.0 / opts.decay_hint;
  require(std::isfinite(horizon) && horizon > 0.0, ErrorCode::kInvalidArgument,
          "horizon must be positive");
  require(opts.tol > 0.0, ErrorCode::kInvalidArgument, "tol must be positive");

  std::vector<double> stops;
  for (double t : opts.output_times)
    if (t > 0.0 && t < horizon) stops.push_back(t);
  stops.push_back(horizon);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  Vector u_last;
  double cost_rate_last = 0.0;
  auto rhs = [&](double t, const Vector& y) {
    const Vector z = y.head(n);
    Vector u = law(z, t);
    require(u.size() == plant.inputs(), ErrorCode::kDimensionMismatch,
            "feedback law returned a control of the wrong size");
    Vector dy(n + 1);
    dy.head(n) = plant.A * z + plant.B * u + plant.f(t);
    dy(n) = z.dot(plant.D * z) + u.dot(plant.G * u);
    cost_rate_last = dy(n);
    u_last = std::move(u);
    return dy;
  };

  Trajectory traj;
  Vector y(n + 1);
  y << z0, 0.0;
  double t = 0.0;
  Vector k1 = rhs(t, y);
  auto record = [&]() {
    traj.times.push_back(t);
    traj.states.push_back(y.head(n));
    traj.controls.push_back(u_last);
    traj.running_cost.push_back(y(n));
    traj.integrand.push_back(cost_rate_last);
  };
  record();

  const bool fixed = opts.fixed_step > 0.0;
  const double rtol = opts.tol;
  const double atol = 1e-3 * opts.tol;
  double h;
  if (fixed) {
    h = opts.fixed_step;
  } else if (opts.initial_step > 0.0) {
    h = opts.initial_step;
  } else {
    const double d0 = y.head(n).norm();
    const double d1 = k1.head(n).norm();
    h = (d0 > 1e-5 && d1 > 1e-5) ? 0.01 * d0 / d1 : 1e-6;
    h = std::min(h, 0.01 * horizon);
    if (opts.fast_scale > 0.0) h = std::min(h, 0.1 * opts.fast_scale);
  }
  h = std::min(h, opts.max_step);

  using T = detail::Dopri;
  std::size_t next_stop = 0;
  long steps = 0;
  while (next_stop < stops.size()) {
    require(++steps <= opts.max_steps, ErrorCode::kStepUnderflow,
            "step budget exhausted at t = " + format_number(t));
    const double target = stops[next_stop];
    bool hits = false;
    double step = h;
    if (t + step >= target - 1e-12 * (1.0 + target)) {
      step = target - t;
      hits = true;
    }
    if (!fixed && step < 1e-14) {
      fail(ErrorCode::kStepUnderflow,
           "step size " + format_number(step) + " at t = " + format_number(t));
    }

    const Vector k2 = rhs(t + T::c2 * step, y + step * (T::a21 * k1));
    const Vector k3 =
        rhs(t + T::c3 * step, y + step * (T::a31 * k1 + T::a32 * k2));
    const Vector k4 = rhs(t + T::c4 * step,
                          y + step * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
    const Vector k5 =
        rhs(t + T::c5 * step, y + step * (T::a51 * k1 + T::a52 * k2 +
                                          T::a53 * k3 + T::a54 * k4));
    const Vector k6 =
        rhs(t + step, y + step * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 +
                                  T::a64 * k4 + T::a65 * k5));
    const Vector y_new =
        y + step * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 +
                    T::b6 * k6);
    const double t_new = hits ? target : t + step;
    const Vector k7 = rhs(t_new, y_new);

    double err = 0.0;
    if (!fixed) {
      const Vector e = step * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 +
                               T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
      for (Eigen::Index i = 0; i <= n; ++i) {
        const double sc =
            atol + rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
        err = std::max(err, std::abs(e(i)) / sc);
      }
      if (!std::isfinite(err)) err = 1e10;
    }

    if (fixed || err <= 1.0) {
      t = t_new;
      y = y_new;
      k1 = k7;  // FSAL; also leaves u_last and cost_rate_last at t_new
      if (!y.allFinite() || y.head(n).norm() > 1e12) {
        fail(ErrorCode::kDivergence,
             "state norm exceeds 1e12 at t = " + format_number(t));
      }
      record();
      if (hits) ++next_stop;
      if (!fixed) {
        const double factor =
            err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h = std::min(step * factor, opts.max_step);
        if (hits) h = std::max(h, step);
      }
    } else {
      h = step * std::max(0.2, 0.9 * std::pow(err, -0.2));
      // Restore the cached control at the current point.
      k1 = rhs(t, y);
    }
  }
  return traj;
}

namespace detail {

/// Least-squares decay rate of log(integrand) over the last 10% of the span,
/// widened to the last three samples when that window holds fewer.
/// Returns {rate, usable}; unusable when the integrand is zero there.
inline std::pair<double, bool> fit_tail_rate(const Trajectory& traj) {
  const std::size_t size = traj.times.size();
  std::size_t first = size;
  while (first > 0 && traj.times[first - 1] >= 0.9 * traj.times.back()) --first;
  if (size - first < 3) first = size < 3 ? 0 : size - 3;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = first; i < size; ++i) {
    const double v = traj.integrand[i];
    if (!(v > 1e-300)) continue;
    const double x = traj.times[i];
    const double ly = std::log(v);
    sx += x;
    sy += ly;
    sxx += x * x;
    sxy += x * ly;
    ++count;
  }
  if (count < 2) return {0.0, false};
  const double denom = count * sxx - sx * sx;
  if (!(denom > 0.0)) return {0.0, false};
  const double slope = (count * sxy - sx * sy) / denom;
  return {-slope, true};
}

/// True when the integrand over the last 10% of the span contributes less
/// than 1e-14 of the accumulated cost; the fitted rate there is noise.
inline bool tail_negligible(const Trajectory& traj) {
  const double t_end = traj.times.back();
  double peak = 0.0;
  for (std::size_t i = traj.times.size(); i-- > 0 && traj.times[i] >= 0.9 * t_end;)
    peak = std::max(peak, traj.integrand[i]);
  return peak * 0.1 * t_end <= 1e-14 * traj.running_cost.back();
}

}  // namespace detail

/// running_cost(T) + tail_bound, with tail_bound = integrand(T)/λ̂ for the
/// fitted integrand decay rate λ̂. Sets traj.tail_bound and traj.tail_rate.
inline double evaluate_cost(Trajectory& traj) {
  require(!traj.times.empty(), ErrorCode::kInvalidArgument, "empty trajectory");
  const double last = traj.integrand.back();
  if (!(last > 0.0)) {
    traj.tail_bound = 0.0;
    traj.tail_rate = std::numeric_limits<double>::infinity();
    return traj.running_cost.back();
  }
  const auto [rate, usable] = detail::fit_tail_rate(traj);
  if (!usable || detail::tail_negligible(traj)) {
    traj.tail_bound = 0.0;
    traj.tail_rate = std::numeric_limits<double>::infinity();
    return traj.running_cost.back();
  }
  if (!(rate > 0.0)) {
    fail(ErrorCode::kTailNotDecaying,
         "integrand is not decaying at the end of the horizon (fitted rate " +
             format_number(rate) + ")");
  }
  traj.tail_rate = rate;
  traj.tail_bound = last / rate;
  return traj.running_cost.back() + traj.tail_bound;
}

struct CostEstimate {
  double value = 0.0;
  double tail_bound = 0.0;
  Trajectory trajectory;
};

/// Simulates and evaluates the infinite-horizon cost, doubling the horizon
/// once when the tail is above 1e-3 of the total.
inline CostEstimate simulate_cost(const LinearPlant& plant,
                                  const FeedbackLaw& law, const Vector& z0,
                                  SimulationOptions opts = {}) {
  CostEstimate est;
  for (int attempt = 0; attempt < 2; ++attempt) {
    est.trajectory = simulate(plant, law, z0, opts);
    est.value = evaluate_cost(est.trajectory);
    est.tail_bound = est.trajectory.tail_bound;
    if (est.tail_bound <= 1e-3 * std::abs(est.value)) break;
    opts.horizon = 2.0 * est.trajectory.final_time();
  }
  return est;
}

inline void write_csv(std::ostream& os, const Trajectory& traj) {
  const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
  const Eigen::Index r = traj.controls.empty() ? 0 : traj.controls.front().size();
  os << "t";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",z_" << i;
  for (Eigen::Index i = 1; i <= r; ++i) os << ",u_" << i;
  os << ",running_cost\n";
  const auto old_precision = os.precision(17);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << traj.times[k];
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << traj.states[k](i);
    for (Eigen::Index i = 0; i < r; ++i) os << ',' << traj.controls[k](i);
    os << ',' << traj.running_cost[k] << '\n';
  }
  os.precision(old_precision);
}

// ---------------------------------------------------------------------------
// Slow/fast asymptotic reference

/// x₀ᵒ(t): dx/dt = 𝓐₀x − S₀h₁₀(t) + f₁(t), x(0) = x₀;
/// y₀ᵒ(t) = −D₂⁻¹A₂ᵀ(P₁₀x₀ᵒ(t) + h₁₀(t));
/// y₀ᵇ(τ) = exp(−D₂^{1/2}τ)(y₀ − y₀ᵒ(0)), τ = t/ε.
class AsymptoticTrajectory {
 public:
  AsymptoticTrajectory(const ReducedSolution& rs, const Oocp& o, double epsilon)
      : epsilon_(epsilon), acl0_(rs.Acl0), p10_(rs.P10), h10_(rs.h10) {
    require(epsilon > 0.0, ErrorCode::kInvalidArgument, "epsilon must be > 0");
    const ExpSignal forcing = rs.h10.mapped(-rs.S0) + rs.f1;
    particular_ = ExpSignal(forcing.dimension());
    for (const auto& mode : forcing.modes()) {
      particular_.add_mode(mode.rate,
                           solve_shifted_linear(-acl0_, mode.rate, -mode.coef));
    }
    homogeneous0_ = o.x0() - particular_(0.0);
    const Matrix d2_inv = rs.D2_inv_sqrt * rs.D2_inv_sqrt;
    y_map_ = -d2_inv * o.A2().transpose();
    layer_generator_ = -rs.P30;
    layer0_ = o.y0() - y_outer(0.0);
  }

  double epsilon() const { return epsilon_; }

  Vector x_outer(double t) const {
    return expm(acl0_, t) * homogeneous0_ + particular_(t);
  }
  Vector y_outer(double t) const {
    return y_map_ * (p10_ * x_outer(t) + h10_(t));
  }
  Vector y_layer(double tau) const {
    return expm(layer_generator_, tau) * layer0_;
  }
  /// x₀ᵇ ≡ 0.
  Vector x_layer(double) const { return Vector::Zero(acl0_.rows()); }
  Vector y_approx(double t) const {
    return y_outer(t) + y_layer(t / epsilon_);
  }
  /// Decay rate of the layer term: smallest eigenvalue of D₂^{1/2}.
  double beta() const {
    if (layer_generator_.size() == 0) return INFINITY;
    Eigen::SelfAdjointEigenSolver<Matrix> es(-layer_generator_);
    return es.eigenvalues()(0);
  }

 private:
  double epsilon_;
  Matrix acl0_;
  Matrix p10_;
  ExpSignal h10_;
  ExpSignal particular_;
  Vector homogeneous0_;
  Matrix y_map_;
  Matrix layer_generator_;
  Vector layer0_;
};

inline AsymptoticTrajectory asymptotic_reference(const ReducedSolution& rs,
                                                 const Oocp& o,
                                                 double epsilon) {
  return AsymptoticTrajectory(rs, o, epsilon);
}

// ---------------------------------------------------------------------------
// Transition-matrix decay probe

struct DecayProbeReport {
  std::vector<double> times;
  /// ‖Ψᵢ(t)‖₂ for the four blocks, per time.
  std::vector<std::array<double, 4>> block_norms;
  double kappa = 0.0;
  double omega = 0.0;
  /// sup_t ‖Ψᵢ(t)‖e^{κt}, i = 1..3.
  std::array<double, 3> weighted_sup{};
  /// Ψ₄ envelope c₁εe^{−κt} + c₂e^{−ωt/ε}.
  double c1 = 0.0;
  double c2 = 0.0;
  double identity_gap = 0.0;  // ‖Ψ(0) − I‖
  bool violation = false;
};

namespace detail {

inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace detail

/// Ψ(t, ε) = exp(Ct) with C = Λ⁻¹𝓐ᵀΛ, Λ = diag(I, εI), for a closed-loop
/// matrix 𝓐 whose lower block rows scale as 1/ε. Blocks 1–3 are checked
/// against a e^{−κt}, a taken from the first half of the grid; Ψ₄ against a
/// fitted c₁εe^{−κt} + c₂e^{−ωt/ε}. Any excess beyond 10× flags a violation.
inline DecayProbeReport transition_decay_probe(const Matrix& acl, int slow_dim,
                                               double epsilon, double horizon,
                                               int points = 200) {
  require(acl.rows() == acl.cols() && slow_dim >= 0 && slow_dim <= acl.rows(),
          ErrorCode::kDimensionMismatch, "bad probe dimensions");
  require(epsilon > 0.0 && horizon > 0.0, ErrorCode::kInvalidArgument,
          "epsilon and horizon must be positive");
  const Eigen::Index n = acl.rows();
  const Eigen::Index m = slow_dim;
  const Eigen::Index k = n - m;
  Vector lambda = Vector::Ones(n);
  lambda.tail(k).setConstant(epsilon);
  const Matrix c =
      lambda.cwiseInverse().asDiagonal() * acl.transpose() * lambda.asDiagonal();

  DecayProbeReport rep;
  rep.kappa = 0.99 * -spectral_abscissa(c).abscissa;
  const Matrix a4 = epsilon * acl.bottomRightCorner(k, k);
  rep.omega = k == 0 ? INFINITY : 0.99 * -spectral_abscissa(a4).abscissa;
  require(rep.kappa > 0.0 && rep.omega > 0.0, ErrorCode::kInvalidArgument,
          "closed-loop generator is not Hurwitz");

  std::vector<double> grid;
  const int half = points / 2;
  for (int i = 0; i < half; ++i) grid.push_back(horizon * i / (half - 1));
  const double lo = std::log(1e-2 * epsilon);
  const double hi = std::log(horizon);
  for (int i = 0; i < points - half; ++i)
    grid.push_back(std::exp(lo + (hi - lo) * i / (points - half - 1)));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  rep.times = grid;

  for (double t : grid) {
    const Matrix psi = expm(c, t);
    if (t == 0.0) rep.identity_gap = (psi - Matrix::Identity(n, n)).norm();
    rep.block_norms.push_back({detail::spectral_norm(psi.topLeftCorner(m, m)),
                               detail::spectral_norm(psi.topRightCorner(m, k)),
                               detail::spectral_norm(psi.bottomLeftCorner(k, m)),
                               detail::spectral_norm(psi.bottomRightCorner(k, k))});
  }

  const double t_half = 0.5 * horizon;
  for (int b = 0; b < 3; ++b) {
    double early = 0.0, late = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double w = rep.block_norms[i][b] * std::exp(rep.kappa * grid[i]);
      double& slot = grid[i] <= t_half ? early : late;
      slot = std::max(slot, w);
    }
    rep.weighted_sup[b] = std::max(early, late);
    if (late > 10.0 * early + 1e-12) rep.violation = true;
  }

  // Ψ₄ envelope: nonnegative least squares on two basis functions, relative
  // to the observed norm.
  if (k > 0) {
    Eigen::MatrixX2d basis(grid.size(), 2);
    Vector target(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double v = std::max(rep.block_norms[i][3], 1e-300);
      basis(i, 0) = epsilon * std::exp(-rep.kappa * grid[i]) / v;
      basis(i, 1) = std::exp(-rep.omega * grid[i] / epsilon) / v;
      target(i) = 1.0;
    }
    Eigen::Vector2d coef = basis.colPivHouseholderQr().solve(target);
    if (coef(0) < 0.0 || coef(1) < 0.0) {
      const int keep = coef(0) < 0.0 ? 1 : 0;
      coef.setZero();
      coef(keep) = basis.col(keep).dot(target) / basis.col(keep).squaredNorm();
    }
    rep.c1 = coef(0);
    rep.c2 = coef(1);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double env = rep.c1 * epsilon * std::exp(-rep.kappa * grid[i]) +
                         rep.c2 * std::exp(-rep.omega * grid[i] / epsilon);
      if (rep.block_norms[i][3] > 10.0 * env + 1e-12) rep.violation = true;
    }
  }
  return rep;
}

}  // namespace singlq
