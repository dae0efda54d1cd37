//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "fracopt/simplex_quadrature.hpp"

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>

namespace fracopt {

namespace {

template <int N>
std::vector<std::pair<double, double>> gauss_01_impl() {
  using rule = boost::math::quadrature::gauss<double, N>;
  const auto &x = rule::abscissa();
  const auto &w = rule::weights();
  std::vector<std::pair<double, double>> out;
  // Boost stores the nonnegative half of the symmetric rule.
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.emplace_back(0.5 * (1.0 + x[i]), 0.5 * w[i]);
    if (x[i] != 0.0)
      out.emplace_back(0.5 * (1.0 - x[i]), 0.5 * w[i]);
  }
  return out;
}

std::vector<std::pair<double, double>> gauss_01(int n) {
  switch (n) {
  case 1: return gauss_01_impl<1>();
  case 2: return gauss_01_impl<2>();
  case 3: return gauss_01_impl<3>();
  case 4: return gauss_01_impl<4>();
  case 5: return gauss_01_impl<5>();
  case 6: return gauss_01_impl<6>();
  default: throw std::invalid_argument("unsupported Gauss rule size");
  }
}

SimplexQuadrature build(int dim, int degree) {
  SimplexQuadrature q;
  q.dim = dim;
  q.degree = degree;
  // The collapse Jacobian adds dim-1 to the degree in the first direction.
  const int n = (degree + dim - 1) / 2 + 1;
  const auto g = gauss_01(n);
  if (dim == 2) {
    for (auto [u, wu] : g)
      for (auto [v, wv] : g) {
        const double x = u, y = v * (1.0 - u);
        q.barycentric.push_back({1.0 - x - y, x, y, 0.0});
        q.weights.push_back(2.0 * wu * wv * (1.0 - u));
      }
  } else {
    for (auto [u, wu] : g)
      for (auto [v, wv] : g)
        for (auto [w, ww] : g) {
          const double x = u, y = v * (1.0 - u), z = w * (1.0 - u) * (1.0 - v);
          q.barycentric.push_back({1.0 - x - y - z, x, y, z});
          q.weights.push_back(6.0 * wu * wv * ww * (1.0 - u) * (1.0 - u) *
                              (1.0 - v));
        }
  }
  return q;
}

} // namespace

const SimplexQuadrature &simplex_quadrature(int dim, int degree) {
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("simplex quadrature: dim must be 2 or 3");
  if (degree < 0 || degree > 9)
    throw std::invalid_argument("simplex quadrature: degree out of range");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, SimplexQuadrature> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find({dim, degree});
  if (it == cache.end())
    it = cache.emplace(std::pair {dim, degree}, build(dim, degree)).first;
  return it->second;
}

} // namespace fracopt
