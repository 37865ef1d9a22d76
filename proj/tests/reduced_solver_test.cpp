#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "singlq/cheap_solver.hpp"
#include "singlq/reduced_solver.hpp"
#include "singlq/simulation.hpp"
#include "singlq/state_transform.hpp"
#include "singlq/sweep.hpp"
#include "singlq/tracking_example.hpp"
#include "support/random_problems.hpp"

namespace singlq {
namespace {

const double kSqrt2 = std::sqrt(2.0);

// Tracking problem with a₁ = 4, a₂ = 2, γ = 1, x₀ = 2, y₀ = 1, d₁ = 2, d₂ = 1.
// Here S₀ = A₂D₂⁻¹A₂ᵀ = 1, so P₁₀ solves −P² + 2 = 0.
TEST(SolveReduced, TrackingClosedForms) {
  const ReducedSolution rs = solve_reduced(tracking_oocp());
  EXPECT_NEAR(rs.S0(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(rs.P10(0, 0), kSqrt2, 1e-12);
  EXPECT_NEAR(rs.P20(0, 0), kSqrt2, 1e-12);
  EXPECT_NEAR(rs.P30(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(rs.Acl0(0, 0), -kSqrt2, 1e-12);
  // h₁₀(0) = 4P₁₀/(1 + √2) = 8 − 4√2.
  EXPECT_NEAR(rs.h10(0.0)(0), 8.0 - 4.0 * kSqrt2, 1e-12);
  EXPECT_NEAR(rs.h20(0.0)(0), 8.0 - 4.0 * kSqrt2, 1e-12);
  // s₀(0) = (2·4·h − h²)/2 with h = h₁₀(0).
  const double h = 8.0 - 4.0 * kSqrt2;
  EXPECT_NEAR(rs.s0.scalar(0.0), (8.0 * h - h * h) / 2.0, 1e-12);
  EXPECT_NEAR(rs.s0.scalar(0.0), 16.0 * kSqrt2 - 16.0, 1e-12);
  EXPECT_NEAR(rs.Jbar, 16.0 + 4.0 * kSqrt2, 1e-12);
  EXPECT_NEAR(rs.mu, 1.0, 0.0);
  EXPECT_NEAR(rs.alpha, 0.99 * kSqrt2, 1e-12);
}

TEST(SolveReduced, ZeroOrderResidualsAndForms) {
  std::mt19937 rng(41);
  for (testing_support::RandomSpec spec :
       {testing_support::RandomSpec{4, 2, 1, 1}, {5, 3, 2, 2}, {6, 3, 1, 1}}) {
    const Oocp o = transform_problem(testing_support::random_raw(rng, spec));
    const ReducedSolution rs = solve_reduced(o);
    EXPECT_LT(zero_order_residuals(o, rs).max(), 1e-9);
    EXPECT_LE(rs.s0_form_gap, 1e-10);
    EXPECT_TRUE(spectral_abscissa(rs.Acl0).hurwitz());
    EXPECT_TRUE((rs.P30 * rs.P30).isApprox(o.D2, 1e-12));
    for (double t : {0.0, 0.5, 3.0})
      EXPECT_TRUE(rs.h20(t).isApprox(
          rs.D2_inv_sqrt * o.A2().transpose() * rs.h10(t), 1e-12));
  }
}

TEST(SolveReduced, ZeroDisturbance) {
  Oocp o = tracking_oocp();
  o.disturbance = ExpSignal(2);
  const ReducedSolution rs = solve_reduced(o);
  EXPECT_TRUE(rs.h10.empty());
  EXPECT_EQ(rs.s0.scalar(0.0), 0.0);
  EXPECT_NEAR(rs.Jbar, o.x0().dot(rs.P10 * o.x0()), 1e-14);
}

TEST(SolveReduced, JbarEqualsReducedClosedLoopCost) {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 3; ++trial) {
    const Oocp o = trial == 0
                       ? tracking_oocp()
                       : transform_problem(testing_support::random_raw(rng, {4, 2, 1, 1}));
    const ReducedSolution rs = solve_reduced(o);
    SimulationOptions so;
    so.tol = 1e-12;
    so.horizon = 40.0 / rs.mu;
    const CostEstimate j0 = simulate_cost(LinearPlant::reduced(o, rs),
                                          reduced_feedback(rs).law(), o.x0(), so);
    EXPECT_NEAR(j0.value, rs.Jbar, 1e-8 * (1.0 + std::abs(rs.Jbar)));
  }
}

TEST(ReducedFeedback, BlocksAndKernel) {
  const Oocp o = tracking_oocp();
  const ReducedSolution rs = solve_reduced(o);
  const AffineFeedback u = reduced_feedback(rs);
  const Vector x = Vector::Constant(1, 0.7);
  EXPECT_NEAR(u(x, 0.4)(0), -(rs.P10(0, 0) * 0.7 + rs.h10(0.4)(0)), 1e-14);
  const Vector xk = Vector::Constant(1, -rs.h10(0.4)(0) / rs.P10(0, 0));
  EXPECT_NEAR(u(xk, 0.4)(0), 0.0, 1e-14);
}

TEST(ReducedFeedback, ReducedTrajectoryObeysClosedLoopOde) {
  std::mt19937 rng(43);
  const Oocp o = transform_problem(testing_support::random_raw(rng, {5, 3, 1, 2}));
  const ReducedSolution rs = solve_reduced(o);
  SimulationOptions so;
  so.tol = 1e-11;
  so.horizon = 5.0;
  so.max_step = 0.01;
  const Trajectory tr =
      simulate(LinearPlant::reduced(o, rs), reduced_feedback(rs).law(), o.x0(), so);
  for (std::size_t i = 1; i + 1 < tr.times.size(); i += 37) {
    const double dt = tr.times[i + 1] - tr.times[i - 1];
    const Vector dx = (tr.states[i + 1] - tr.states[i - 1]) / dt;
    const double t = tr.times[i];
    const Vector rhs = rs.Acl0 * tr.states[i] - rs.S0 * rs.h10(t) + rs.f1(t);
    EXPECT_LE((dx - rhs).norm(), 1e-3 * (1.0 + rhs.norm()));
  }
}

TEST(MinimizingFeedback, TrackingLaw) {
  const Oocp o = tracking_oocp();
  const ReducedSolution rs = solve_reduced(o);
  const AffineFeedback u1 = minimizing_feedback_1(rs, o, 0.1);
  const double h20 = rs.h20(0.0)(0);
  EXPECT_NEAR(u1(o.z0, 0.0)(0), -(kSqrt2 * 2.0 + 1.0 + h20) / 0.1, 1e-10);
  const Vector z = (Vector(2) << -0.2, 0.9).finished();
  EXPECT_NEAR(u1(z, 1.3)(0),
              -(kSqrt2 * z(0) + z(1) + h20 * std::exp(-1.3)) / 0.1, 1e-10);
  const AffineFeedback u2 = minimizing_feedback_2(rs, o, 0.1);
  EXPECT_TRUE(u2.gain.isApprox(u1.gain));
  EXPECT_NEAR(u2(z, 1.3)(0), u1(z, 1.3)(0), 1e-12);
}

TEST(MinimizingFeedback, UpperBlocksDifferByOrderEpsilon) {
  std::mt19937 rng(44);
  const Oocp o = transform_problem(testing_support::random_raw(rng, {5, 3, 1, 1}));
  const ReducedSolution rs = solve_reduced(o);
  const int m = o.slow_dim();
  const int q = o.q;
  for (double eps : {0.1, 0.01}) {
    const AffineFeedback u1 = minimizing_feedback_1(rs, o, eps);
    const AffineFeedback u2 = minimizing_feedback_2(rs, o, eps);
    for (int k = 0; k < 10; ++k) {
      const Vector z = testing_support::gaussian(rng, o.n, 1);
      const double t = 0.3 * k;
      const Vector x = z.head(m), y = z.tail(o.fast_dim());
      const Vector expected =
          -eps * (o.H1() * rs.P20.transpose() * x +
                  (o.H3() * rs.P20 + o.H1() * rs.P30) * y + o.H1() * rs.h20(t));
      EXPECT_LE(((u1(z, t) - u2(z, t)).head(q) - expected).norm(), 1e-10);
      EXPECT_LE((u1(z, t) - u2(z, t)).tail(o.fast_dim()).norm(), 1e-10);
    }
  }
  // Identity: u_{ε,1} = −(G+𝓔)⁻¹Bᵀ(P₀(ε)z + (h₁₀; εh₂₀)).
  const double eps = 0.05;
  const AffineFeedback u1 = minimizing_feedback_1(rs, o, eps);
  const Matrix w = weighted_input_map(o, eps);
  EXPECT_LE((u1.gain + w * rs.P0(eps)).norm(), 1e-10 * (1.0 + u1.gain.norm()));
  Vector hv(o.n);
  hv << rs.h10(0.2), eps * rs.h20(0.2);
  EXPECT_LE((u1.offset(0.2) + w * hv).norm(), 1e-10 * (1.0 + hv.norm() / eps));
}

TEST(MinimizingFeedback, ZeroStateNoDisturbance) {
  Oocp o = tracking_oocp();
  o.disturbance = ExpSignal(2);
  const ReducedSolution rs = solve_reduced(o);
  EXPECT_EQ(minimizing_feedback_2(rs, o, 0.1)(Vector::Zero(2), 0.5)(0), 0.0);
}

TEST(FirstOrderCheck, RatioAndFloor) {
  const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  EXPECT_TRUE(check_first_order(eps, {0.4, 0.2, 0.1, 0.05}).pass);
  EXPECT_FALSE(check_first_order(eps, {0.4, 0.1, 0.025, 0.006}).pass);
  EXPECT_TRUE(check_first_order(eps, {1e-16, 0.0, 3e-16, 1e-16}, 4.0, 1e-10).pass);
  EXPECT_FALSE(check_first_order(eps, {1e-16, 0.0, 3e-16, 1e-16}).pass);
}

TEST(Sweep, TrackingConvergesToJbar) {
  SweepOptions so;
  so.threads = 0;
  const SweepReport rep = run_sweep(tracking_oocp(), so);
  ASSERT_TRUE(rep.all_ok());
  const auto eps = rep.epsilons();
  double prev = INFINITY;
  for (const auto& e : rep.entries) {
    EXPECT_LT(e.J1, prev);
    prev = e.J1;
    EXPECT_NEAR(e.J2, e.J1, 1e-12 * e.J1);
  }
  const double jb = rep.Jbar;
  EXPECT_TRUE(check_first_order(
      eps, rep.column([jb](const SweepEntry& e) { return std::abs(e.J1 - jb); })).pass);
  for (int i : {0, 2}) {
    EXPECT_TRUE(check_first_order(
        eps, rep.column([i](const SweepEntry& e) { return e.P_error[i]; })).pass);
  }
  // P₂*(ε) = √2 for every ε on this problem.
  for (const auto& e : rep.entries) EXPECT_LT(e.P_error[1], roundoff_floor(1.0));
}

}  // namespace
}  // namespace singlq
