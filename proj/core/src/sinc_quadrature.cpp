//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "fracopt/sinc_quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fracopt {

double SincQuadrature::shift(int l) const { return std::exp(k * l); }

double SincQuadrature::weight(int l) const {
  using std::numbers::pi;
  return std::exp(std::log(k) + std::log(std::sin(s * pi) / pi) +
                  (1.0 - s) * k * l);
}

ShiftList SincQuadrature::shifts() const {
  ShiftList list;
  list.l_min = -n_minus;
  list.alpha.reserve(static_cast<std::size_t>(size()));
  for (int l = -n_minus; l <= n_plus; ++l)
    list.alpha.push_back(shift(l));
  return list;
}

SincQuadrature make_sinc_quadrature(double s, double k) {
  using std::numbers::pi;
  if (!(s > 0.0 && s < 1.0))
    throw std::invalid_argument("fractional power s must lie in (0, 1)");
  if (!(k > 0.0))
    throw std::invalid_argument("sinc step k must be positive");
  SincQuadrature q;
  q.s = s;
  q.k = k;
  q.n_plus = static_cast<int>(std::ceil(pi * pi / (4.0 * s * k * k)));
  q.n_minus = static_cast<int>(std::ceil(pi * pi / (4.0 * (1.0 - s) * k * k)));
  return q;
}

SincQuadrature quadrature_for_mesh(double s, double h, double c_k,
                                   StepRule rule) {
  if (!(h > 0.0) || !(c_k > 0.0))
    throw std::invalid_argument("quadrature_for_mesh: h and c_k must be positive");
  const double scale = rule == StepRule::log_two_over_h ? 2.0 : 1.0;
  if (!(h < scale))
    throw std::invalid_argument("quadrature_for_mesh: h too large for the step rule");
  return make_sinc_quadrature(s, c_k / std::log(scale / h));
}

} // namespace fracopt
