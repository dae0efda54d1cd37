//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <vector>

#include "fracopt/shifted_solver.hpp"

namespace fracopt {

/// Sinc quadrature for the Balakrishnan integral of the inverse fractional
/// power: nodes alpha_l = e^{kl} and weights
/// w_l = (sin(s pi) / pi) k e^{(1-s) k l}, l = -N_minus .. N_plus, with
/// N_plus = ceil(pi^2 / (4 s k^2)) and N_minus = ceil(pi^2 / (4 (1-s) k^2)).
struct SincQuadrature {
  double s = 0.5;
  double k = 1.0;
  int n_plus = 0;
  int n_minus = 0;

  int size() const noexcept { return n_plus + n_minus + 1; }
  double shift(int l) const;
  /// Evaluated in log space, finite for every l in range.
  double weight(int l) const;
  ShiftList shifts() const;
};

SincQuadrature make_sinc_quadrature(double s, double k);

/// k = c_k / ln(2/h) or k = c_k / ln(1/h). With c_k = 1 the latter gives
/// N_alpha = 58, 158, 308, ... on the 4x4, 8x8, 16x16, ... unit square meshes.
enum class StepRule { log_two_over_h, log_one_over_h };

/// Step balanced with the finite element error, k in O(1/|ln h|).
SincQuadrature quadrature_for_mesh(double s, double h, double c_k,
                                   StepRule rule = StepRule::log_two_over_h);

} // namespace fracopt
