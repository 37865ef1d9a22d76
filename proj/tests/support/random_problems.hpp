#pragma once

// Seeded random problem instances that satisfy A1–A7.

#include <algorithm>
#include <random>

#include "singlq/problem_model.hpp"
#include "singlq/state_transform.hpp"

namespace testing_support {

using singlq::Matrix;
using singlq::Vector;

inline Matrix gaussian(std::mt19937& rng, Eigen::Index rows, Eigen::Index cols,
                       double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

struct RandomSpec {
  int n = 4;
  int r = 2;
  int q = 1;
  int modes = 1;
};

/// D = CᵀC + 0.5I is positive definite, so A2, A5 and A7 hold by
/// construction; A1 and A6 are checked and the draw repeated when they fail.
inline singlq::RawProblem random_raw(std::mt19937& rng, const RandomSpec& spec) {
  std::uniform_real_distribution<double> rate(0.5, 2.0);
  std::uniform_real_distribution<double> weight(0.5, 2.0);
  for (;;) {
    singlq::RawProblem p;
    p.n = spec.n;
    p.r = spec.r;
    p.q = spec.q;
    p.A = gaussian(rng, p.n, p.n, 1.0 / std::sqrt(double(p.n)));
    p.B = gaussian(rng, p.n, p.r);
    const Matrix c = gaussian(rng, p.n, p.n, 1.0 / std::sqrt(double(p.n)));
    p.D = c.transpose() * c + 0.5 * Matrix::Identity(p.n, p.n);
    p.D = 0.5 * (p.D + p.D.transpose());
    p.g = Vector(p.q);
    for (int k = 0; k < p.q; ++k) p.g(k) = weight(rng);
    p.disturbance = singlq::ExpSignal(p.n);
    for (int k = 0; k < spec.modes; ++k)
      p.disturbance.add_mode(rate(rng), gaussian(rng, p.n, 1));
    p.z0 = gaussian(rng, p.n, 1);
    if (!singlq::validate_raw(p).all_pass()) continue;
    try {
      const singlq::Oocp o = singlq::transform_problem(p);
      if (!singlq::validate_reduced(o).all_pass()) continue;
    } catch (const singlq::Error&) {
      continue;
    }
    return p;
  }
}

/// The instance set used by the sweep checks: n ≤ 6, r ≤ 3, q ≤ 2.
inline std::vector<singlq::RawProblem> sweep_instances(unsigned seed = 20240611,
                                                       int count = 5) {
  std::mt19937 rng(seed);
  const RandomSpec specs[] = {{3, 2, 1, 1}, {4, 2, 1, 2}, {5, 3, 2, 1},
                              {6, 3, 1, 2}, {4, 3, 2, 1}};
  std::vector<singlq::RawProblem> out;
  for (int i = 0; i < count; ++i) out.push_back(random_raw(rng, specs[i % 5]));
  return out;
}

}  // namespace testing_support
