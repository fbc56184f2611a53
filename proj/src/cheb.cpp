#include "blowuplab/cheb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace blowuplab {

ChebGrid::ChebGrid(int order) : N(order) {
  const int n = N + 1;
  const double pi = std::numbers::pi;
  nodes.resize(n);
  for (int j = 0; j < n; ++j) nodes(j) = std::cos(pi * j / N);

  Eigen::VectorXd c(n);
  for (int j = 0; j < n; ++j) c(j) = ((j == 0 || j == N) ? 2.0 : 1.0) * ((j % 2) ? -1.0 : 1.0);
  D.setZero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) D(i, j) = (c(i) / c(j)) / (nodes(i) - nodes(j));
    }
    D(i, i) = -D.row(i).sum();
  }

  // Clenshaw-Curtis weights
  weights.setZero(n);
  const Eigen::Index inner = N - 1;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(std::max<Eigen::Index>(inner, 0));
  auto theta = [&](int j) { return pi * j / N; };
  if (N % 2 == 0) {
    weights(0) = weights(N) = 1.0 / (double(N) * N - 1.0);
    for (int k = 1; k < N / 2; ++k) {
      for (int j = 1; j < N; ++j) v(j - 1) -= 2.0 * std::cos(2.0 * k * theta(j)) / (4.0 * k * k - 1.0);
    }
    for (int j = 1; j < N; ++j) v(j - 1) -= std::cos(N * theta(j)) / (double(N) * N - 1.0);
  } else {
    weights(0) = weights(N) = 1.0 / (double(N) * N);
    for (int k = 1; k <= (N - 1) / 2; ++k) {
      for (int j = 1; j < N; ++j) v(j - 1) -= 2.0 * std::cos(2.0 * k * theta(j)) / (4.0 * k * k - 1.0);
    }
  }
  for (int j = 1; j < N; ++j) weights(j) = 2.0 * v(j - 1) / N;
}

Eigen::VectorXd ChebGrid::to_modal(const Eigen::VectorXd& values) const {
  const int n = N + 1;
  const double pi = std::numbers::pi;
  Eigen::VectorXd c(n);
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const double w = (j == 0 || j == N) ? 0.5 : 1.0;
      acc += w * values(j) * std::cos(pi * double(j) * k / N);
    }
    c(k) = 2.0 * acc / N;
  }
  c(0) *= 0.5;
  c(N) *= 0.5;
  return c;
}

Eigen::VectorXd ChebGrid::to_nodal(const Eigen::VectorXd& coeffs) const {
  Eigen::VectorXd v(N + 1);
  for (int j = 0; j <= N; ++j) v(j) = cheb::evaluate(coeffs, nodes(j));
  return v;
}

namespace cheb {

Eigen::MatrixXd diff_matrix(int n) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (int j = 1; j < n; ++j) {
    for (int k = j - 1; k >= 0; k -= 2) D(k, j) = 2.0 * j;
    if (j % 2 == 1) D(0, j) = j;
  }
  return D;
}

Eigen::MatrixXd ymul_matrix(int n) {
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, n);
  if (n > 1) Y(1, 0) = 1.0;
  for (int j = 1; j < n; ++j) {
    Y(j - 1, j) += 0.5;
    if (j + 1 < n) Y(j + 1, j) += 0.5;
  }
  return Y;
}

Eigen::MatrixXd product_matrix(const Eigen::VectorXd& v, int n) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double h = 0.5 * v(i);
      if (i + j < n) M(i + j, j) += h;
      const Eigen::Index d = i > j ? i - j : j - i;
      if (d < n) M(d, j) += h;
    }
  }
  return M;
}

Eigen::MatrixXd gram_matrix(int n) {
  auto I = [](int k) { return (k % 2) ? 0.0 : 2.0 / (1.0 - double(k) * k); };
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = 0.5 * (I(i + j) + I(std::abs(i - j)));
  return G;
}

Eigen::VectorXd recip_coeffs(double s, int m) {
  const double sp = std::sqrt(1.0 - s * s);
  const double r = s / (1.0 + sp);
  Eigen::VectorXd a(m);
  double rk = 1.0;
  for (int k = 0; k < m; ++k) {
    a(k) = 2.0 * rk / sp;
    rk *= -r;
  }
  a(0) *= 0.5;
  return a;
}

Eigen::VectorXd log_coeffs(double s, int m) {
  const double sp = std::sqrt(1.0 - s * s);
  const double r = s / (1.0 + sp);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
  if (m == 0) return a;
  a(0) = -std::log1p(r * r);
  double rk = 1.0;
  for (int k = 1; k < m; ++k) {
    rk *= r;
    a(k) = 2.0 * ((k % 2) ? 1.0 : -1.0) * rk / k;
  }
  return a;
}

int series_length(double s, int n) {
  const double r = s / (1.0 + std::sqrt(1.0 - s * s));
  if (r <= 0.0) return n + 4;
  return n + std::min(4000, int(std::ceil(-40.0 / std::log(r))) + 4);
}

Eigen::VectorXd interpolate(const std::function<double(double)>& f, int m) {
  ChebGrid g(m - 1);
  Eigen::VectorXd v(m);
  for (int j = 0; j < m; ++j) v(j) = f(g.nodes(j));
  return g.to_modal(v);
}

}  // namespace cheb
}  // namespace blowuplab
