#include "blowuplab/profiles.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace blowuplab;

namespace {

double direct_profile(double p, int q, double kappa, double T, double x0, double x, double t) {
  return -p * std::log(T - t + q * std::sqrt(1.0 - p) * (x - x0)) + p * std::log(T) + kappa;
}

}  // namespace

TEST_CASE("profile values and derivatives match the closed form") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-0.7, 0.7);
  for (double p : {0.25, 0.6, 1.0}) {
    for (int q : {1, -1}) {
      const ProfileParams prm{p, q, 0.4, 1.5, 0.2};
      for (int i = 0; i < 20; ++i) {
        const double t = 0.5 * (U(rng) + 0.7);
        const double x = prm.x0 + U(rng) * (prm.T - t);
        const ProfileValue v = eval_profile(prm, {x, t});
        CHECK(v.u == doctest::Approx(direct_profile(p, q, 0.4, 1.5, 0.2, x, t)).epsilon(1e-14));
        const double h = 1e-5;
        const double ut = (direct_profile(p, q, 0.4, 1.5, 0.2, x, t + h) - direct_profile(p, q, 0.4, 1.5, 0.2, x, t - h)) / (2 * h);
        const double ux = (direct_profile(p, q, 0.4, 1.5, 0.2, x + h, t) - direct_profile(p, q, 0.4, 1.5, 0.2, x - h, t)) / (2 * h);
        CHECK(v.u_t == doctest::Approx(ut).epsilon(1e-8));
        CHECK(v.u_x == doctest::Approx(ux).epsilon(1e-8).scale(1.0));
      }
    }
  }
}

TEST_CASE("profile takes the value kappa at the blow-up point at t = 0") {
  for (double p : {0.3, 0.75, 1.0}) {
    const ProfileParams prm{p, 1, -0.8, 2.5, 1.0};
    CHECK(eval_profile(prm, {1.0, 0.0}).u == doctest::Approx(-0.8).epsilon(1e-15));
  }
}

TEST_CASE("invalid profile parameters are rejected") {
  CHECK_THROWS_AS(eval_profile({1.5, 1, 0, 1, 0}, {0, 0}), DomainError);
  CHECK_THROWS_AS(eval_profile({0.0, 1, 0, 1, 0}, {0, 0}), DomainError);
  CHECK_THROWS_AS(eval_profile({0.5, 2, 0, 1, 0}, {0, 0}), DomainError);
  CHECK_THROWS_AS(eval_profile({0.5, 1, 0, -1, 0}, {0, 0}), DomainError);
}

TEST_CASE("pde residual of the exact profile converges at fourth order") {
  const ProfileParams prm{0.75, 1, 0.0, 1.0, 0.0};
  const ConePoint pt{0.1, 0.3};
  const double r1 = pde_residual(prm, pt, 4e-3);
  const double r2 = pde_residual(prm, pt, 2e-3);
  CHECK(std::log2(r1 / r2) == doctest::Approx(4.0).epsilon(0.02));
  CHECK(pde_residual_extrapolated(prm, pt, 1e-3) < 1e-9);
}

TEST_CASE("pde residual on fields with known residual") {
  auto everywhere = [](double, double t) { return t < 1.0; };
  const FirstDerivField ode = [](double, double t) { return ProfileValue{-std::log(1.0 - t), 1.0 / (1.0 - t), 0.0}; };
  CHECK(pde_residual_extrapolated(ode, {0.0, 0.4}, 1e-3, everywhere) < 1e-9);
  const FirstDerivField square = [](double x, double) { return ProfileValue{x * x, 0.0, 2.0 * x}; };
  CHECK(pde_residual(square, {0.3, 0.2}, 1e-3, everywhere) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("pde residual refuses stencils leaving the cone") {
  const ProfileParams prm{0.5, 1, 0.0, 1.0, 0.0};
  CHECK_THROWS_AS(pde_residual(prm, {0.0, 0.001}, 1e-3), DomainError);
  CHECK_THROWS_AS(pde_residual(prm, {0.499, 0.5}, 1e-3), DomainError);
}

TEST_CASE("similarity residuals") {
  for (double y : {-1.0, -0.3, 0.0, 0.5, 1.0}) {
    const SimilarityField prof = [](double tau, double yy) { return similarity_profile(0.5, 0.2, tau, yy); };
    CHECK(similarity_residual(prof, {1.0, y}, 1e-3) < 1e-9);
    const SimilarityField ode = [](double tau, double) { return SimilarityValue{tau, 1.0, 0.0}; };
    CHECK(similarity_residual(ode, {0.5, y}, 1e-3) < 1e-12);
    const SimilarityField lin = [](double, double yy) { return SimilarityValue{yy, 0.0, 1.0}; };
    CHECK(similarity_residual(lin, {0.5, y}, 1e-3) == doctest::Approx(std::abs(2 * y - y * y)).scale(1.0).epsilon(1e-9));
  }
}

TEST_CASE("similarity coordinates round trip") {
  const ProfileParams prm{0.75, 1, 0.0, 2.0, -0.5};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = 1.99 * U(rng);
    const double x = prm.x0 + (2.0 * U(rng) - 1.0) * (prm.T - t);
    REQUIRE(in_cone(prm, {x, t}));
    const ConePoint back = from_similarity(prm, to_similarity(prm, {x, t}));
    worst = std::max({worst, std::abs(back.x - x), std::abs(back.t - t)});
  }
  CHECK(worst < 1e-12);
  CHECK_THROWS_AS(to_similarity(prm, {0.0, 2.0}), DomainError);
}

TEST_CASE("Riccati particular solutions") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-0.999, 0.999);
  for (int i = 0; i < 100; ++i) {
    const double y = U(rng);
    CHECK(std::abs(riccati_residual(0.6, 1, y)) < 1e-10);
    CHECK(std::abs(riccati_residual(0.6, -1, y)) < 1e-10);
  }
  CHECK(riccati_pole(0.75) == doctest::Approx(2.0));
  const double inside = riccati_pole(-0.5);
  CHECK(std::abs(inside) < 1.0);
  CHECK_THROWS_AS(riccati_particular(-0.5, 1, inside), DomainError);
}

TEST_CASE("self-similar denominator p_c") {
  for (double c : {-5.0, -1.0, 0.0, 2.0, 5.0}) {
    CHECK(exact_ss_denominator(c, 0.0) == doctest::Approx(-c / 4.0));
    CHECK(exact_ss_denominator(c, 1.0) == 0.5);
    CHECK(exact_ss_denominator(c, -1.0) == -0.5);
    for (double y : {-0.9, -0.2, 0.4, 0.95}) {
      CHECK(exact_ss_denominator(-c, -y) == doctest::Approx(-exact_ss_denominator(c, y)).epsilon(1e-13));
    }
  }
  const double r5 = find_denominator_zero(5.0);
  CHECK(r5 > 0.0);
  CHECK(r5 < 1.0);
  CHECK(find_denominator_zero(-5.0) == doctest::Approx(-r5).epsilon(1e-12));
  CHECK(find_denominator_zero(0.0) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("general Riccati denominator h_c") {
  for (double p : {0.5, 0.75}) {
    const double s = std::sqrt(1.0 - p);
    CHECK(general_riccati_denominator(p, 2.0, 1.0) == doctest::Approx(1.0 - s));
    CHECK(general_riccati_denominator(p, 2.0, -1.0) == doctest::Approx(-1.0 + s));
    CHECK(general_riccati_denominator(p, 1.0, 0.0) == 0.0);
    // h_{1/c}(-y) = -h_c(y)
    for (double y : {-0.7, 0.1, 0.8}) {
      CHECK(general_riccati_denominator(p, 0.5, -y) ==
            doctest::Approx(-general_riccati_denominator(p, 2.0, y)).epsilon(1e-13));
    }
    const double r = find_general_denominator_zero(p, 2.0);
    CHECK(find_general_denominator_zero(p, 0.5) == doctest::Approx(-r).epsilon(1e-11));
    CHECK(std::abs(general_riccati_denominator(p, 2.0, r)) < 1e-11);
  }
}

TEST_CASE("Lorentz boost and boosted ODE blow-up") {
  for (double g : {-0.6, 0.3, 0.8}) {
    const LorentzPoint a = lorentz_map(g, 0.3, 0.2);
    const LorentzPoint b = lorentz_inverse(g, a.x, a.t);
    CHECK(b.x == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(b.t == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(a.t * a.t - a.x * a.x == doctest::Approx(0.2 * 0.2 - 0.3 * 0.3).epsilon(1e-13));

    const double T = 1.3, x0 = 0.1, c2 = 0.7;
    const double p = 1.0 - g * g;
    const ProfileParams prm{p, g > 0 ? 1 : -1, c2 + p * std::log(std::sqrt(1.0 - g * g)) - p * std::log(T), T, x0};
    for (double t : {0.0, 0.4, 0.9}) {
      for (double xi : {-0.5, 0.0, 0.5}) {
        const double x = x0 + xi * (T - t);
        CHECK(boosted_ode_solution(g, T, x0, c2, x, t) == doctest::Approx(eval_profile(prm, {x, t}).u).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(lorentz_map(1.0, 0, 0), DomainError);
}

TEST_CASE("bisection") {
  CHECK(bisect_root([](double x) { return x * x - 2.0; }, 0.0, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(bisect_root([](double x) { return x * x + 1.0; }, -1.0, 1.0), DomainError);
}
