#include "blowuplab/cheb.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>

using namespace blowuplab;

namespace {

Eigen::VectorXd unit(int n, int k) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e(k) = 1.0;
  return e;
}

}  // namespace

TEST_CASE("Gauss-Lobatto grid, nodal derivative and quadrature") {
  const ChebGrid g(24);
  REQUIRE(g.size() == 25);
  for (int j = 0; j <= 24; ++j) CHECK(g.nodes(j) == doctest::Approx(std::cos(std::numbers::pi * j / 24)));
  const Eigen::VectorXd f = g.nodes.array().pow(5);
  const Eigen::VectorXd df = g.D * f;
  for (int j = 0; j <= 24; ++j) CHECK(df(j) == doctest::Approx(5 * std::pow(g.nodes(j), 4)).scale(1.0).epsilon(1e-11));
  CHECK(g.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(g.weights.dot(g.nodes.array().pow(4).matrix()) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(g.weights.dot(g.nodes.array().exp().matrix()) == doctest::Approx(std::exp(1.0) - std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("nodal and modal transforms are inverse") {
  const ChebGrid g(16);
  const Eigen::VectorXd t3 = (4.0 * g.nodes.array().cube() - 3.0 * g.nodes.array()).matrix();
  const Eigen::VectorXd c = g.to_modal(t3);
  CHECK((c - unit(17, 3)).norm() < 1e-14);
  const Eigen::VectorXd v = g.nodes.array().sin();
  CHECK((g.to_nodal(g.to_modal(v)) - v).norm() < 1e-14);
}

TEST_CASE("Clenshaw evaluation reproduces cos(k arccos x)") {
  for (int k : {0, 1, 5, 12}) {
    for (double x : {-1.0, -0.3, 0.77, 1.0}) {
      CHECK(cheb::evaluate(unit(13, k), x) == doctest::Approx(std::cos(k * std::acos(x))).scale(1.0).epsilon(1e-13));
    }
  }
  CHECK(cheb::value_at_minus_one(Eigen::VectorXd(unit(8, 3) + 2 * unit(8, 4))) == doctest::Approx(1.0));
}

TEST_CASE("coefficient derivative and multiplication by y") {
  // T4 = 8x^4 - 8x^2 + 1
  const Eigen::VectorXd d = cheb::derivative(unit(8, 4));
  const Eigen::VectorXd dm = cheb::diff_matrix(8) * unit(8, 4);
  const Eigen::VectorXd yt = cheb::ymul_matrix(8) * unit(8, 4);
  for (double x : {-0.9, 0.1, 0.6}) {
    CHECK(cheb::evaluate(d, x) == doctest::Approx(32 * x * x * x - 16 * x).scale(1.0));
    CHECK(cheb::evaluate(dm, x) == doctest::Approx(32 * x * x * x - 16 * x).scale(1.0));
    CHECK(cheb::evaluate(yt, x) == doctest::Approx(x * (8 * std::pow(x, 4) - 8 * x * x + 1)).scale(1.0));
  }
}

TEST_CASE("series of 1/(1+sy) and log(1+sy)") {
  for (double s : {0.3, 0.5, 0.866}) {
    const int m = cheb::series_length(s, 10);
    const Eigen::VectorXd r = cheb::recip_coeffs(s, m);
    const Eigen::VectorXd l = cheb::log_coeffs(s, m);
    for (double y : {-1.0, -0.4, 0.2, 1.0}) {
      CHECK(cheb::evaluate(r, y) == doctest::Approx(1.0 / (1.0 + s * y)).epsilon(1e-14));
      CHECK(cheb::evaluate(l, y) == doctest::Approx(std::log1p(s * y)).scale(1.0).epsilon(1e-14));
    }
  }
  CHECK(cheb::series_length(0.9, 10) > cheb::series_length(0.5, 10));
}

TEST_CASE("interpolation, products and resizing") {
  const Eigen::VectorXd e = cheb::interpolate([](double y) { return std::exp(y); }, 24);
  for (double y : {-1.0, 0.3, 0.9}) CHECK(cheb::evaluate(e, y) == doctest::Approx(std::exp(y)).epsilon(1e-14));

  const Eigen::VectorXd a = cheb::interpolate([](double y) { return 1 + y - y * y; }, 3);
  const Eigen::VectorXd b = cheb::interpolate([](double y) { return y * y * y; }, 4);
  const Eigen::VectorXd ab = cheb::product(a, b, 8);
  const Eigen::VectorXd abm = cheb::product_matrix(a, 8) * cheb::resized(b, 8);
  for (double y : {-0.8, 0.25, 1.0}) {
    CHECK(cheb::evaluate(ab, y) == doctest::Approx((1 + y - y * y) * y * y * y).scale(1.0).epsilon(1e-14));
    CHECK(cheb::evaluate(abm, y) == doctest::Approx((1 + y - y * y) * y * y * y).scale(1.0).epsilon(1e-14));
  }
  CHECK(cheb::resized(a, 2).size() == 2);
  CHECK(cheb::resized(a, 6).tail(3).norm() == 0.0);
}

TEST_CASE("Gram matrix of Chebyshev polynomials") {
  const Eigen::MatrixXd G = cheb::gram_matrix(9);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 9; ++j) {
      double expected = 0.0;
      if ((i + j) % 2 == 0) expected = 1.0 / (1.0 - (i + j) * (i + j)) + 1.0 / (1.0 - (i - j) * (i - j));
      CHECK(G(i, j) == doctest::Approx(expected).scale(1.0).epsilon(1e-14));
    }
  }
}
