#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>

namespace blowuplab {

/// Chebyshev-Gauss-Lobatto grid y_j = cos(pi j / N) with nodal differentiation matrix,
/// Clenshaw-Curtis weights and the nodal <-> coefficient transforms.
struct ChebGrid {
  int N = 0;
  Eigen::VectorXd nodes;
  Eigen::MatrixXd D;
  Eigen::VectorXd weights;

  explicit ChebGrid(int order);

  int size() const { return N + 1; }
  Eigen::VectorXd to_modal(const Eigen::VectorXd& values) const;
  Eigen::VectorXd to_nodal(const Eigen::VectorXd& coeffs) const;
};

namespace cheb {

/// Coefficient-space derivative matrix, n x n (degree n-1 polynomials).
Eigen::MatrixXd diff_matrix(int n);
/// Multiplication by y in coefficient space, truncated to n coefficients.
Eigen::MatrixXd ymul_matrix(int n);
/// Matrix of q -> trunc_n(v * q).
Eigen::MatrixXd product_matrix(const Eigen::VectorXd& v, int n);
/// Gram matrix G_ij = int_{-1}^{1} T_i T_j dy.
Eigen::MatrixXd gram_matrix(int n);

/// Coefficients of 1/(1 + s y), |s| < 1, first m terms.
Eigen::VectorXd recip_coeffs(double s, int m);
/// Coefficients of log(1 + s y), |s| < 1, first m terms.
Eigen::VectorXd log_coeffs(double s, int m);
/// Number of coefficients after which the series of 1/(1 + s y) and log(1 + s y) fall below 1e-17.
int series_length(double s, int n);
/// Chebyshev coefficients of f by interpolation at m CGL points (degree m-1).
Eigen::VectorXd interpolate(const std::function<double(double)>& f, int m);

/// Coefficients of the derivative, same length (last entry zero).
template <class Vec>
Vec derivative(const Vec& c) {
  const Eigen::Index n = c.size();
  Vec d = Vec::Zero(n);
  if (n < 2) return d;
  d(n - 2) = 2.0 * double(n - 1) * c(n - 1);
  for (Eigen::Index k = n - 3; k >= 0; --k) {
    d(k) = (k + 2 < n ? d(k + 2) : typename Vec::Scalar(0)) + 2.0 * double(k + 1) * c(k + 1);
  }
  d(0) *= 0.5;
  return d;
}

/// Truncated Chebyshev product, T_i T_j = (T_{i+j} + T_{|i-j|}) / 2, first m coefficients.
template <class Vec>
Vec product(const Vec& a, const Vec& b, Eigen::Index m) {
  Vec c = Vec::Zero(m);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) == typename Vec::Scalar(0)) continue;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      const auto h = 0.5 * a(i) * b(j);
      if (i + j < m) c(i + j) += h;
      const Eigen::Index d = i > j ? i - j : j - i;
      if (d < m) c(d) += h;
    }
  }
  return c;
}

/// Clenshaw evaluation of sum c_k T_k(x).
template <class Vec>
typename Vec::Scalar evaluate(const Vec& c, double x) {
  using S = typename Vec::Scalar;
  S b1(0), b2(0);
  for (Eigen::Index k = c.size() - 1; k >= 1; --k) {
    const S b0 = 2.0 * x * b1 - b2 + c(k);
    b2 = b1;
    b1 = b0;
  }
  return (c.size() > 0 ? c(0) : S(0)) + x * b1 - b2;
}

template <class Vec>
typename Vec::Scalar value_at_minus_one(const Vec& c) {
  typename Vec::Scalar v(0);
  for (Eigen::Index k = 0; k < c.size(); ++k) v += (k % 2 == 0 ? 1.0 : -1.0) * c(k);
  return v;
}

/// Resize with zero padding or truncation.
template <class Vec>
Vec resized(const Vec& c, Eigen::Index m) {
  Vec r = Vec::Zero(m);
  const Eigen::Index k = std::min(m, c.size());
  r.head(k) = c.head(k);
  return r;
}

}  // namespace cheb
}  // namespace blowuplab
