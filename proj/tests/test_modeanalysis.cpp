#include "blowuplab/modeanalysis.hpp"

#include "doctest.h"

#include <cmath>

using namespace blowuplab;

namespace {

cplx pochhammer(cplx a, int n) {
  cplx r = 1.0;
  for (int i = 0; i < n; ++i) r *= a + double(i);
  return r;
}

// z(1-z) w'' + (c - (a+b+1) z) w' - ab w relative to the size of its terms, w'' from a centred difference of w'
double hypergeom_ode_residual(const FrobeniusExpansion& f, const HypergeomParams& h, double z) {
  const double e = 1e-5 * z;
  const cplx w2 = (evaluate_branch(f, z + e).deriv - evaluate_branch(f, z - e).deriv) / (2 * e);
  const BranchValue v = evaluate_branch(f, z);
  const cplx t1 = z * (1 - z) * w2, t2 = (h.c - (h.a + h.b + 1.0) * z) * v.deriv, t3 = -h.a * h.b * v.value;
  return std::abs(t1 + t2 + t3) / (std::abs(t1) + std::abs(t2) + std::abs(t3));
}

}  // namespace

TEST_CASE("2F1 partial sums against closed forms") {
  for (double z : {-0.5, 0.3, 0.7}) {
    const SeriesValue v = hypergeom_2F1(1.0, 1.0, 2.0, z, 400);
    CHECK(std::abs(v.value - (-std::log1p(-z) / z)) < 1e-13);
    const SeriesValue w = hypergeom_2F1(cplx(0.3, 0.2), 1.5, 1.5, z, 400);
    CHECK(std::abs(w.value - std::pow(cplx(1.0 - z), -cplx(0.3, 0.2))) < 1e-13);
  }
  CHECK_THROWS(hypergeom_2F1(1.0, 1.0, -2.0, 0.5, 10));
}

TEST_CASE("series coefficient ratio and log accumulation agree") {
  const double p = 0.75, s = std::sqrt(1.0 - p);
  const cplx lam(0.4, 1.1);
  cplx prod = 1.0;
  for (long n = 0; n < 30; ++n) {
    const cplx expected = (lam + double(n)) * (lam + double(n) - 1.0) / (double(n + 1) * (lam + s + double(n)));
    CHECK(std::abs(series_coeff_ratio(p, lam, n) - expected) < 1e-14 * std::abs(expected));
    prod *= expected;
  }
  CHECK(std::abs(std::exp(series_coeff_log(p, lam, 30)) - prod) < 1e-12 * std::abs(prod));
}

TEST_CASE("indicial roots") {
  // s(s-1) + p0 s + q0 = (s - 2)(s + 0.5)
  const IndicialRoots r = indicial_roots(-0.5, -1.0);
  CHECK(std::abs(r.s1 - 2.0) < 1e-14);
  CHECK(std::abs(r.s2 + 0.5) < 1e-14);
}

TEST_CASE("Frobenius coefficients reproduce the hypergeometric series") {
  const HypergeomParams h{cplx(0.3, 0.4), 1.2, 0.7};
  const int N = 25;
  const LocalData d = hypergeom_local_data(h, false, 60);
  const FrobeniusExpansion f = frobenius_coeffs(d, 0.0, N);
  for (int n = 0; n < N; ++n) {
    const cplx expected = pochhammer(h.a, n) * pochhammer(h.b, n) / (pochhammer(h.c, n) * std::tgamma(n + 1.0));
    CHECK(std::abs(f.coeffs[n] - expected) < 1e-12 * std::max(1.0, std::abs(expected)));
  }
  const FrobeniusExpansion f60 = frobenius_coeffs(d, 0.0, 60);
  const FrobeniusExpansion g = frobenius_coeffs(d, 1.0 - h.c, 60);
  for (double z : {0.1, 0.4}) {
    CHECK(hypergeom_ode_residual(f60, h, z) < 1e-9);
    CHECK(hypergeom_ode_residual(g, h, z) < 1e-9);
  }
}

TEST_CASE("logarithmic Frobenius branch solves the equation") {
  const HypergeomParams h{0.5, 0.25, 2.0};
  const int N = 80;
  const LocalData d = hypergeom_local_data(h, false, N);
  const FrobeniusExpansion f = frobenius_log_branch(d, 0.0, -1.0, N);
  for (double z : {0.05, 0.2, 0.45}) CHECK(hypergeom_ode_residual(f, h, z) < 1e-9);
}

TEST_CASE("connection defect vanishes exactly at the symmetry modes") {
  for (double p : {0.25, 0.5, 0.75}) {
    CHECK(connection_defect(p, 0.0).defect < 1e-10);
    CHECK(connection_defect(p, 1.0).defect < 1e-10);
    CHECK(connection_defect(p, cplx(0.5, 0.5)).defect > 1e-3);
    CHECK(connection_defect(p, 2.0).defect > 1e-3);
  }
}

TEST_CASE("p = 1 eigenspaces") {
  CHECK(smooth_eigenspace_dim(1.0, 0.0) == 2);
  CHECK(smooth_eigenspace_dim(1.0, 1.0) == 1);
  CHECK(smooth_eigenspace_dim(1.0, 0.5) == 0);
}

TEST_CASE("parallel mode scan equals the serial reference") {
  const auto grid = lambda_grid(0.0, 1.0, -0.5, 0.5, 0.25);
  CHECK(grid.size() == 25);
  const auto a = mode_scan(0.75, grid, 40);
  const auto b = mode_scan_serial(0.75, grid, 40);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].lambda == b[i].lambda);
    CHECK(a[i].defect == b[i].defect);
  }
}

TEST_CASE("Lorentz hypergeometric parameters") {
  const HypergeomParams h = lorentz_hypergeom_params(0.75, cplx(0.3, 0.1));
  CHECK(std::abs(h.a - cplx(0.3, 0.1)) == 0.0);
  CHECK(std::abs(h.b - cplx(-0.7, 0.1)) < 1e-15);
  CHECK(std::abs(h.c - cplx(-0.2, 0.1)) < 1e-15);
}
