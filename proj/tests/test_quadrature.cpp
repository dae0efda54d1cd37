//
// fracopt - finite elements for fractional optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fracopt/mesh.hpp"
#include "fracopt/simplex_quadrature.hpp"
#include "fracopt/sinc_quadrature.hpp"

using namespace fracopt;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

// Exact integral of x^a y^b z^c over the reference simplex.
double monomial_integral(int dim, int a, int b, int c) {
  return dim == 2 ? factorial(a) * factorial(b) / factorial(a + b + 2)
                  : factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3);
}

} // namespace

TEST_SUITE("quadrature") {

TEST_CASE("simplex rules integrate monomials exactly up to their degree") {
  for (int dim : {2, 3})
    for (int degree = 0; degree <= 8; ++degree) {
      const SimplexQuadrature &rule = simplex_quadrature(dim, degree);
      CHECK(rule.degree >= degree);
      double wsum = 0.0;
      for (double w : rule.weights) {
        CHECK(w > 0.0);
        wsum += w;
      }
      CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
      const double ref_volume = dim == 2 ? 0.5 : 1.0 / 6.0;
      for (int a = 0; a <= degree; ++a)
        for (int b = 0; a + b <= degree; ++b)
          for (int c = 0; a + b + c <= degree; c += (dim == 3 ? 1 : degree + 1)) {
            double q = 0.0;
            for (std::size_t i = 0; i < rule.size(); ++i) {
              // barycentric (l0, l1, l2, l3) -> x = l1, y = l2, z = l3
              const auto &l = rule.barycentric[i];
              q += rule.weights[i] * std::pow(l[1], a) * std::pow(l[2], b) *
                   (dim == 3 ? std::pow(l[3], c) : 1.0);
            }
            CHECK(q * ref_volume ==
                  doctest::Approx(monomial_integral(dim, a, b, c)).epsilon(1e-13));
          }
    }
}

TEST_CASE("sinc counts follow the ceiling formulas") {
  auto q = make_sinc_quadrature(0.5, 0.5);
  CHECK(q.n_plus == 20);
  CHECK(q.n_minus == 20);
  CHECK(q.size() == 41);

  q = make_sinc_quadrature(0.05, 1.0);
  CHECK(q.n_plus == 50);
  CHECK(q.n_minus == 3);
  CHECK(q.size() == 54);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ks(0.1, 2.0);
  for (int i = 0; i < 50; ++i) {
    const double k = ks(rng);
    auto h = make_sinc_quadrature(0.5, k);
    CHECK(h.n_plus == h.n_minus);
    for (double s : {0.05, 0.1, 0.25, 0.75, 0.95}) {
      auto p = make_sinc_quadrature(s, k);
      const double pi2 = std::numbers::pi * std::numbers::pi;
      CHECK(p.n_plus == static_cast<int>(std::ceil(pi2 / (4 * s * k * k))));
      CHECK(p.n_minus == static_cast<int>(std::ceil(pi2 / (4 * (1 - s) * k * k))));
    }
  }
}

TEST_CASE("sinc weights positive, shifts increasing, finite in log space") {
  for (double s : {0.05, 0.1, 0.25, 0.5, 0.75, 0.95}) {
    auto q = make_sinc_quadrature(s, 0.1);
    const ShiftList sh = q.shifts();
    CHECK(sh.l_min == -q.n_minus);
    CHECK(sh.l_max() == q.n_plus);
    for (int l = -q.n_minus; l <= q.n_plus; ++l) {
      CHECK(q.weight(l) > 0.0);
      CHECK(std::isfinite(q.weight(l)));
      CHECK(q.shift(l) == doctest::Approx(std::exp(q.k * l)).epsilon(1e-12));
      const double w = std::sin(s * std::numbers::pi) / std::numbers::pi * q.k *
                       std::exp((1 - s) * q.k * l);
      CHECK(q.weight(l) == doctest::Approx(w).epsilon(1e-12));
      if (l > sh.l_min)
        CHECK(sh.at(l) > sh.at(l - 1));
    }
  }
}

TEST_CASE("step rule from the mesh size") {
  const double h = std::sqrt(2.0) / 16;
  auto q = quadrature_for_mesh(0.3, h, 1.1);
  CHECK(q.k == doctest::Approx(1.1 / std::log(2.0 / h)));
  auto p = quadrature_for_mesh(0.3, h, 1.0, StepRule::log_one_over_h);
  CHECK(p.k == doctest::Approx(1.0 / std::log(1.0 / h)));
  CHECK_THROWS(quadrature_for_mesh(0.3, -1.0, 1.1));
  CHECK_THROWS(quadrature_for_mesh(0.3, h, 0.0));
}

TEST_CASE("system counts of the k = 1/ln(1/h) rule on square and cube meshes") {
  // N_alpha for s = 0.05 (equal for s = 0.95) and s = 0.5
  struct Row { int dim, m, n05, n50; };
  const Row rows[] = {
      {2, 4, 58, 13},     {2, 8, 158, 31},     {2, 16, 308, 61},
      {2, 32, 508, 99},   {2, 64, 757, 145},   {2, 128, 1056, 203},
      {2, 256, 1406, 269}, {2, 512, 1806, 345}, {2, 1024, 2254, 429},
      {2, 2048, 2753, 525}, {3, 4, 38, 9},     {3, 8, 124, 25},
      {3, 16, 258, 51},   {3, 32, 444, 85},    {3, 64, 678, 131},
      {3, 128, 964, 185}};
  for (const Row &r : rows) {
    const double h = std::sqrt(static_cast<double>(r.dim)) / r.m;
    CAPTURE(r.dim);
    CAPTURE(r.m);
    CHECK(quadrature_for_mesh(0.05, h, 1.0, StepRule::log_one_over_h).size() == r.n05);
    CHECK(quadrature_for_mesh(0.95, h, 1.0, StepRule::log_one_over_h).size() == r.n05);
    CHECK(quadrature_for_mesh(0.5, h, 1.0, StepRule::log_one_over_h).size() == r.n50);
  }
}

TEST_CASE("invalid sinc parameters are rejected") {
  CHECK_THROWS(make_sinc_quadrature(0.0, 1.0));
  CHECK_THROWS(make_sinc_quadrature(1.0, 1.0));
  CHECK_THROWS(make_sinc_quadrature(0.5, 0.0));
}

}
