//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <random>

#include <Eigen/Core>

namespace fracopt::test {

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937 &rng,
                                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = dist(rng);
  return v;
}

inline double rel_diff(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

} // namespace fracopt::test
