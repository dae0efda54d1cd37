//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <vector>

namespace fracopt {

/// Quadrature rule on the reference simplex in barycentric coordinates.
/// Weights sum to one, so a cell integral is |T| * sum_q w_q f(x_q).
struct SimplexQuadrature {
  int dim = 2;
  int degree = 0;
  std::vector<std::array<double, 4>> barycentric;
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
};

/// Collapsed (Duffy) tensor Gauss-Legendre rule, exact for polynomials of
/// total degree <= `degree` on triangles (dim 2) and tetrahedra (dim 3).
/// Rules are computed once per (dim, degree) and cached.
const SimplexQuadrature &simplex_quadrature(int dim, int degree);

} // namespace fracopt
