#pragma once

// ε-sweeps: exact solves, minimizing-sequence simulations and the O(ε)
// ratio diagnostics over a decreasing list of ε.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "singlq/cheap_solver.hpp"
#include "singlq/reduced_solver.hpp"
#include "singlq/simulation.hpp"

namespace singlq {

inline const std::vector<double>& default_epsilons() {
  static const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  return eps;
}

struct FirstOrderCheck {
  std::vector<double> ratios;  // error/ε
  double spread = 0.0;         // max ratio / min ratio
  bool below_floor = false;    // every error under the round-off floor
  bool pass = false;
};

/// error(ε) = O(ε) in the sense max(error/ε)/min(error/ε) ≤ factor. A sweep
/// whose errors all sit below `floor` is exact to round-off and passes.
inline FirstOrderCheck check_first_order(const std::vector<double>& eps,
                                         const std::vector<double>& errors,
                                         double factor = 4.0,
                                         double floor = 0.0) {
  require(eps.size() == errors.size() && eps.size() >= 2,
          ErrorCode::kInvalidArgument, "need at least two sweep points");
  FirstOrderCheck c;
  c.below_floor = true;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    c.ratios.push_back(errors[i] / eps[i]);
    if (!(errors[i] <= floor)) c.below_floor = false;
  }
  const auto [lo, hi] = std::minmax_element(c.ratios.begin(), c.ratios.end());
  c.spread = *lo > 0.0 ? *hi / *lo : INFINITY;
  c.pass = c.below_floor || (std::isfinite(c.spread) && c.spread <= factor);
  return c;
}

/// Round-off floor for errors of quantities of size `scale`.
inline double roundoff_floor(double scale) { return 1e-10 * (1.0 + scale); }

/// 0 plus 29 log-spaced points on [1e-3, 6/μ].
inline std::vector<double> sweep_time_grid(double mu, int points = 30) {
  std::vector<double> t{0.0};
  const double lo = std::log(1e-3);
  const double hi = std::log(6.0 / mu);
  for (int i = 0; i < points - 1; ++i)
    t.push_back(std::exp(lo + (hi - lo) * i / (points - 2)));
  return t;
}

struct SweepOptions {
  std::vector<double> epsilons = default_epsilons();
  double tol = 1e-9;
  /// 0 picks 20/μ.
  double horizon = 0.0;
  bool simulate = true;
  /// 0 = serial; negative = read SINGLQ_THREADS (unset → hardware threads).
  int threads = -1;
  CheapOptions cheap;
};

struct SweepEntry {
  double epsilon = 0.0;
  std::string status = "ok";
  double Jstar = NAN;
  double J1 = NAN;
  double J2 = NAN;
  double J1_tail = NAN;
  double J2_tail = NAN;
  double P_error[3] = {NAN, NAN, NAN};
  double h_error[2] = {NAN, NAN};
  double s_error = NAN;
  double x_error = NAN;  // sup ‖x − x₀ᵒ‖e^{μt} along u_{ε,1}
  double y_error = NAN;  // sup ‖y − y₀ᵒ − y₀ᵇ(t/ε)‖e^{μt}
  double max_u_lower = NAN;
  double u0_lower = NAN;  // first lower control component at (z₀, 0)
  double are_residual = NAN;
  double block_residual = NAN;
  double closed_loop_abscissa = NAN;
  Trajectory trajectory1;
};

struct SweepReport {
  std::vector<SweepEntry> entries;  // decreasing ε
  double Jbar = 0.0;
  double mu = 0.0;
  std::vector<double> time_grid;

  std::vector<double> epsilons() const {
    std::vector<double> e;
    for (const auto& x : entries) e.push_back(x.epsilon);
    return e;
  }
  template <class F>
  std::vector<double> column(F f) const {
    std::vector<double> v;
    for (const auto& x : entries) v.push_back(f(x));
    return v;
  }
  bool all_ok() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const SweepEntry& e) { return e.status == "ok"; });
  }
};

inline int sweep_threads(int requested) {
  if (requested >= 0) return requested;
  if (const char* env = std::getenv("SINGLQ_THREADS")) {
    try {
      return std::max(0, std::stoi(env));
    } catch (const std::exception&) {
      return 0;
    }
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

namespace detail {

inline void run_sweep_entry(const Oocp& o, const ReducedSolution& rs,
                            const std::vector<double>& grid,
                            const SweepOptions& opts, SweepEntry& e) {
  const int m = o.slow_dim();
  const double eps = e.epsilon;
  const CheapSolution sol = solve_pccp(o, eps, opts.cheap);
  e.Jstar = sol.Jstar;
  e.are_residual = are_relative_residual(o.A, sol.S, o.D(), sol.P);
  e.block_residual =
      block_residuals(o, eps, sol.P1, sol.P2, sol.P3).max() / (1.0 + o.D().norm());
  e.closed_loop_abscissa = spectral_abscissa(sol.Acl).abscissa;
  e.P_error[0] = (sol.P1 - rs.P10).norm();
  e.P_error[1] = (sol.P2 - rs.P20).norm();
  e.P_error[2] = (sol.P3 - rs.P30).norm();

  const ExpSignal h1 = sol.h1(m);
  const ExpSignal h2 = sol.h2(m);
  e.h_error[0] = e.h_error[1] = e.s_error = 0.0;
  for (double t : grid) {
    const double w = std::exp(rs.mu * t);
    e.h_error[0] = std::max(e.h_error[0], (h1(t) - rs.h10(t)).norm() * w);
    e.h_error[1] = std::max(e.h_error[1], (h2(t) - rs.h20(t)).norm() * w);
    e.s_error = std::max(e.s_error, std::abs(sol.s.scalar(t) - rs.s0.scalar(t)));
  }

  const AffineFeedback u1 = minimizing_feedback_1(rs, o, eps);
  const Vector u0 = u1(o.z0, 0.0);
  e.u0_lower = u0.size() > o.q ? u0(o.q) : NAN;
  if (!opts.simulate) return;

  const LinearPlant plant = LinearPlant::from_oocp(o);
  SimulationOptions so;
  so.tol = opts.tol;
  so.horizon = opts.horizon > 0.0 ? opts.horizon : 20.0 / rs.mu;
  so.fast_scale = eps;
  so.output_times = grid;
  CostEstimate c1 = simulate_cost(plant, u1.law(), o.z0, so);
  e.J1 = c1.value;
  e.J1_tail = c1.tail_bound;
  const AffineFeedback u2 = minimizing_feedback_2(rs, o, eps);
  const CostEstimate c2 = simulate_cost(plant, u2.law(), o.z0, so);
  e.J2 = c2.value;
  e.J2_tail = c2.tail_bound;

  const Trajectory& tr = c1.trajectory;
  e.max_u_lower = 0.0;
  for (const Vector& u : tr.controls)
    e.max_u_lower = std::max(e.max_u_lower, u.tail(o.fast_dim()).norm());

  const AsymptoticTrajectory ref = asymptotic_reference(rs, o, eps);
  e.x_error = e.y_error = 0.0;
  for (double t : grid) {
    const Vector& z = tr.state_at(t);
    const double w = std::exp(rs.mu * t);
    e.x_error = std::max(e.x_error, (z.head(m) - ref.x_outer(t)).norm() * w);
    e.y_error =
        std::max(e.y_error, (z.tail(o.fast_dim()) - ref.y_approx(t)).norm() * w);
  }
  e.trajectory1 = std::move(c1.trajectory);
}

}  // namespace detail

/// Solves and (optionally) simulates every ε. Failures are recorded per entry
/// in `status`; the report is always complete.
inline SweepReport run_sweep(const Oocp& o, const SweepOptions& opts = {}) {
  SweepReport rep;
  std::vector<double> eps = opts.epsilons;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  const ReducedSolution rs = solve_reduced(o, opts.cheap.are);
  rep.Jbar = rs.Jbar;
  rep.mu = rs.mu;
  rep.time_grid = sweep_time_grid(rs.mu);
  rep.entries.resize(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) rep.entries[i].epsilon = eps[i];

  auto work = [&](std::size_t i) {
    SweepEntry& e = rep.entries[i];
    try {
      detail::run_sweep_entry(o, rs, rep.time_grid, opts, e);
    } catch (const std::exception& ex) {
      e.status = ex.what();
    }
  };
  const int threads =
      std::min<int>(sweep_threads(opts.threads), static_cast<int>(eps.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < eps.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < eps.size();) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  return rep;
}

}  // namespace singlq
