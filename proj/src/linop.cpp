#include "blowuplab/linop.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace blowuplab {

StateVector StateVector::from_flat(const Eigen::VectorXcd& v) {
  const Eigen::Index n = v.size() / 2;
  return {v.head(n), v.tail(n)};
}

Eigen::VectorXcd StateVector::flat() const {
  Eigen::VectorXcd v(q1.size() + q2.size());
  v << q1, q2;
  return v;
}

EnergyInner::EnergyInner(int n, int k) : n_(n), k_(k), G_(cheb::gram_matrix(n)) {}

cplx EnergyInner::operator()(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) const {
  Eigen::VectorXcd a1 = a.head(n_), b1 = b.head(n_);
  Eigen::VectorXcd a2 = a.tail(n_), b2 = b.tail(n_);
  cplx acc = cheb::value_at_minus_one(a1) * std::conj(cheb::value_at_minus_one(b1));
  for (int j = 0; j <= k_; ++j) {
    a1 = cheb::derivative(a1);
    b1 = cheb::derivative(b1);
    acc += b1.dot(G_ * a1);
  }
  for (int j = 0; j <= k_; ++j) {
    if (j > 0) {
      a2 = cheb::derivative(a2);
      b2 = cheb::derivative(b2);
    }
    acc += b2.dot(G_ * a2);
  }
  return acc;
}

double EnergyInner::operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  Eigen::VectorXd a1 = a.head(n_), b1 = b.head(n_);
  Eigen::VectorXd a2 = a.tail(n_), b2 = b.tail(n_);
  double acc = cheb::value_at_minus_one(a1) * cheb::value_at_minus_one(b1);
  for (int j = 0; j <= k_; ++j) {
    a1 = cheb::derivative(a1);
    b1 = cheb::derivative(b1);
    acc += b1.dot(G_ * a1);
  }
  for (int j = 0; j <= k_; ++j) {
    if (j > 0) {
      a2 = cheb::derivative(a2);
      b2 = cheb::derivative(b2);
    }
    acc += b2.dot(G_ * a2);
  }
  return acc;
}

double EnergyInner::norm(const Eigen::VectorXd& a) const { return std::sqrt(std::max(0.0, (*this)(a, a))); }

double EnergyInner::norm(const Eigen::VectorXcd& a) const {
  return std::sqrt(std::max(0.0, (*this)(a, a).real()));
}

cplx energy_inner(int k, const StateVector& q, const StateVector& r) {
  if (q.n() != r.n()) throw std::invalid_argument("state sizes differ");
  return EnergyInner(int(q.n()), k)(q.flat(), r.flat());
}

Eigen::MatrixXd assemble_Lp(double p, int N) {
  if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("p must lie in (0,1]");
  const int n = N + 1;
  const double s = std::sqrt(1.0 - p);
  const Eigen::MatrixXd D = cheb::diff_matrix(n);
  const Eigen::MatrixXd YD = cheb::ymul_matrix(n) * D;
  Eigen::VectorXd V = 2.0 * p * cheb::recip_coeffs(s, 2 * n);
  V(0) -= 1.0;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  L.topLeftCorner(n, n) = -YD;
  L.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  L.bottomLeftCorner(n, n) = D * D;
  L.bottomRightCorner(n, n) = -YD + cheb::product_matrix(V, n);
  return L;
}

Eigen::MatrixXd assemble_free_wave_modified(int N) {
  const int n = N + 1;
  const Eigen::MatrixXd D = cheb::diff_matrix(n);
  const Eigen::MatrixXd YD = cheb::ymul_matrix(n) * D;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  L.topLeftCorner(n, n) = -YD;
  for (int j = 0; j < n; ++j) L(0, j) -= (j % 2 == 0) ? 1.0 : -1.0;
  L.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  L.bottomLeftCorner(n, n) = D * D;
  L.bottomRightCorner(n, n) = -YD - Eigen::MatrixXd::Identity(n, n);
  return L;
}

EigenTriple eigen_triple(double p, int N) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("eigen triple requires p in (0,1)");
  const int n = N + 1;
  const double s = std::sqrt(1.0 - p);
  const int M = cheb::series_length(s, n);
  const Eigen::VectorXd A = cheb::recip_coeffs(s, M);
  const Eigen::VectorXd A2 = cheb::product(A, A, M);

  EigenTriple t;
  t.f0 = Eigen::VectorXd::Zero(2 * n);
  t.f0(0) = 1.0;

  t.f1.resize(2 * n);
  t.f1 << -p * s * A.head(n), -p * s * A2.head(n);

  Eigen::VectorXd lin(2);
  lin << 2.0 * s, 2.0 - p;
  const Eigen::VectorXd second = cheb::product(lin, A2, M) / (2.0 * s);
  const Eigen::VectorXd first = -cheb::log_coeffs(s, M) - p / (2.0 * (1.0 - p)) * A;
  t.g0.resize(2 * n);
  t.g0 << first.head(n), second.head(n);
  return t;
}

double TripleResiduals::max() const { return std::max({f0, f1, g0, g0_sq}); }

TripleResiduals eigen_triple_residuals(double p, int N, int k) {
  const Eigen::MatrixXd L = assemble_Lp(p, N);
  const EigenTriple t = eigen_triple(p, N);
  const EnergyInner E(N + 1, k);
  TripleResiduals r;
  r.f0 = E.norm(Eigen::VectorXd(L * t.f0)) / E.norm(t.f0);
  r.f1 = E.norm(Eigen::VectorXd(L * t.f1 - t.f1)) / E.norm(t.f1);
  const Eigen::VectorXd Lg = L * t.g0;
  r.g0 = E.norm(Eigen::VectorXd(Lg - t.f0)) / E.norm(t.g0);
  r.g0_sq = E.norm(Eigen::VectorXd(L * Lg)) / E.norm(t.g0);
  return r;
}

double free_wave_dissipativity_check(int N, int k, int trials, unsigned long seed,
                                     bool second_component_only) {
  const int n = N + 1;
  const Eigen::MatrixXd Lt = assemble_free_wave_modified(N);
  const EnergyInner E(n, k);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int deg = N / 2;
  double worst = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXcd q = Eigen::VectorXcd::Zero(2 * n);
    for (int j = 0; j <= deg; ++j) {
      if (!second_component_only) q(j) = cplx(normal(rng), normal(rng));
      q(n + j) = cplx(normal(rng), normal(rng));
    }
    const Eigen::VectorXcd Lq = Lt.cast<cplx>() * q;
    const double ratio = E(Lq, q).real() / E(q, q).real();
    worst = std::max(worst, ratio);
  }
  return worst;
}

namespace {

double spectral_norm(const Eigen::MatrixXd& M) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

RieszResult finish_riesz(std::vector<Eigen::MatrixXcd>& parts, const std::vector<double>& rconds) {
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(parts[0].rows(), parts[0].cols());
  for (const auto& m : parts) acc += m;
  RieszResult r;
  r.P = acc.real();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(r.P);
  const Eigen::VectorXd sv = svd.singularValues();
  const double nrm = sv(0);
  r.rank = int((sv.array() > 1e-6 * nrm).count());
  r.idempotency = spectral_norm(r.P * r.P - r.P) / nrm;
  r.min_rcond = *std::min_element(rconds.begin(), rconds.end());
  return r;
}

void contour_node(const Eigen::MatrixXd& L, const Contour& c, int j, Eigen::MatrixXcd& out,
                  double& rcond) {
  const Eigen::Index m = L.rows();
  const double th = 2.0 * std::numbers::pi * j / c.points;
  const cplx e = std::polar(1.0, th);
  const cplx z = c.center + c.radius * e;
  Eigen::MatrixXcd A = -L.cast<cplx>();
  A.diagonal().array() += z;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
  rcond = lu.rcond();
  out = lu.inverse() * (c.radius * e / double(c.points));
  (void)m;
}

}  // namespace

RieszResult riesz_projection(const Eigen::MatrixXd& L, const Contour& c) {
  std::vector<Eigen::MatrixXcd> parts(c.points);
  std::vector<double> rconds(c.points);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < c.points; ++j) contour_node(L, c, j, parts[j], rconds[j]);
  return finish_riesz(parts, rconds);
}

RieszResult riesz_projection_serial(const Eigen::MatrixXd& L, const Contour& c) {
  std::vector<Eigen::MatrixXcd> parts(c.points);
  std::vector<double> rconds(c.points);
  for (int j = 0; j < c.points; ++j) contour_node(L, c, j, parts[j], rconds[j]);
  return finish_riesz(parts, rconds);
}

SymmetryProjectors symmetry_projectors(const Eigen::MatrixXd& L, int points) {
  return {riesz_projection(L, {0.0, 0.25, points}).P, riesz_projection(L, {1.0, 0.5, points}).P};
}

double SpectrumReport::robust_fraction() const {
  if (robust.empty()) return 0.0;
  return double(std::count(robust.begin(), robust.end(), true)) / double(robust.size());
}

SpectrumReport spectrum(double p, int N, int k, double match_tol) {
  if (N < 32) throw std::invalid_argument("spectrum requires N >= 32");
  SpectrumReport rep;
  rep.N = N;
  rep.p = p;
  const Eigen::MatrixXd L = assemble_Lp(p, N);
  Eigen::EigenSolver<Eigen::MatrixXd> es(L, true);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigen-solver failure");
  Eigen::EigenSolver<Eigen::MatrixXd> es2(assemble_Lp(p, 2 * N), false);
  if (es2.info() != Eigen::Success) throw std::runtime_error("eigen-solver failure");
  const Eigen::VectorXcd ev = es.eigenvalues();
  const Eigen::VectorXcd ev2 = es2.eigenvalues();
  const Eigen::MatrixXcd V = es.eigenvectors();
  const EnergyInner E(N + 1, k);
  const Eigen::MatrixXcd Lc = L.cast<cplx>();

  double max_re = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const cplx lam = ev(i);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < ev2.size(); ++j) best = std::min(best, std::abs(ev2(j) - lam));
    const bool ok = best < match_tol;
    const Eigen::VectorXcd v = V.col(i);
    const double res = E.norm(Eigen::VectorXcd(Lc * v - lam * v)) / E.norm(v);
    rep.eigenvalues.push_back(lam);
    rep.residuals.push_back(res);
    rep.robust.push_back(ok);
    if (!ok) continue;
    if (std::abs(lam) < 1e-6) ++rep.cluster0;
    if (std::abs(lam - 1.0) < 1e-6) ++rep.cluster1;
    if (std::abs(lam) < 1e-4 || std::abs(lam - 1.0) < 1e-4) continue;
    max_re = std::max(max_re, lam.real());
  }
  rep.gap_raw = -max_re;
  rep.gap_omega0 = std::min(0.5, rep.gap_raw);
  rep.contaminated = rep.robust_fraction() < 0.25;
  double radius0 = rep.gap_omega0 / 2.0;
  if (rep.gap_omega0 < 0.05) {
    rep.gap_fallback = true;
    radius0 = 0.025;
  }
  rep.rank_P0 = riesz_projection(L, {0.0, radius0, 64}).rank;
  rep.rank_P1 = riesz_projection(L, {1.0, 0.5, 64}).rank;
  return rep;
}

SemigroupReport semigroup_action_check(double p, int N, int k, double tau_check,
                                       const std::vector<double>& tau_samples, unsigned long seed) {
  SemigroupReport rep;
  const Eigen::MatrixXd L = assemble_Lp(p, N);
  const SpectrumReport sp = spectrum(p, N, k);
  rep.omega0 = sp.gap_omega0;
  const double r0 = sp.gap_fallback ? 0.025 : sp.gap_omega0 / 2.0;
  const Eigen::MatrixXd P0 = riesz_projection(L, {0.0, r0, 64}).P;
  const Eigen::MatrixXd P1 = riesz_projection(L, {1.0, 0.5, 64}).P;
  rep.projector_product = spectral_norm(P0 * P1) / (spectral_norm(P0) * spectral_norm(P1));

  if (tau_check > 10.0) throw std::domain_error("semigroup check capped at tau <= 10");
  const Eigen::MatrixXd Et = (tau_check * L).exp();
  const double et = std::exp(tau_check);
  rep.err_P1 = spectral_norm(Et * P1 - et * P1) / (et * spectral_norm(P1));
  rep.err_P0 = spectral_norm(Et * P0 - (P0 + tau_check * L * P0)) / spectral_norm(P0);

  const int n = N + 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd q(2 * n);
  for (int j = 0; j < n; ++j) {
    const double decay = std::pow(0.5, j);
    q(j) = normal(rng) * decay;
    q(n + j) = normal(rng) * decay;
  }
  const Eigen::VectorXd qt = q - P0 * q - P1 * q;
  const EnergyInner E(n, k);
  for (double tau : tau_samples) {
    if (tau > 10.0) throw std::domain_error("semigroup check capped at tau <= 10");
    const Eigen::VectorXd v = (tau * L).exp() * qt;
    rep.taus.push_back(tau);
    rep.stable_norms.push_back(E.norm(v));
  }
  const int m = int(rep.taus.size());
  if (m >= 2) {
    Eigen::MatrixXd X(m, 2);
    Eigen::VectorXd yv(m);
    for (int i = 0; i < m; ++i) {
      X(i, 0) = rep.taus[i];
      X(i, 1) = 1.0;
      yv(i) = std::log(rep.stable_norms[i]);
    }
    rep.stable_slope = X.colPivHouseholderQr().solve(yv)(0);
  }
  return rep;
}

namespace {

const double kSqrt3 = std::sqrt(3.0);

double appendixB_g(double y) {
  return (1.0 - y) / (2.0 + y) * std::log1p(y / 2.0) + (-y * y + 3.0 * y + 7.0) / ((2.0 + y) * (2.0 + y));
}

double log_slope(const std::function<double(double)>& f, double lo, double hi, int m) {
  Eigen::MatrixXd X(m, 2);
  Eigen::VectorXd yv(m);
  for (int i = 0; i < m; ++i) {
    const double t = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (m - 1));
    X(i, 0) = std::log(t);
    X(i, 1) = 1.0;
    yv(i) = std::log(std::abs(f(t)));
  }
  return X.colPivHouseholderQr().solve(yv)(0);
}

}  // namespace

double appendixB_dv1(double c, double y) {
  const double pi = std::numbers::pi;
  const double delta = c + 3.0 * kSqrt3 * pi / 2.0;
  double core;
  if (2.0 * y + 1.0 > 0.0) {
    core = delta - 3.0 * kSqrt3 * std::atan(std::sqrt(3.0 - 3.0 * y * y) / (2.0 * y + 1.0));
  } else {
    core = c + 3.0 * kSqrt3 * std::atan((2.0 * y + 1.0) / std::sqrt(3.0 - 3.0 * y * y));
  }
  const double y2 = (y + 2.0) * (y + 2.0);
  const double ln2 = std::log(2.0);
  return std::sqrt(y + 1.0) * core / (std::sqrt(1.0 - y) * y2) +
         (-y * ln2 + (y - 1.0) * std::log(y + 2.0) - 3.0 + ln2) / y2;
}

double appendixB_d2v1(double c, double y) {
  return (appendixB_g(y) + y * (1.0 + 2.0 * y) / (y + 2.0) * appendixB_dv1(c, y)) / (1.0 - y * y);
}

double appendixB_u1(double y) {
  const double arg = kSqrt3 * std::sqrt(1.0 - y * y) / (2.0 * y + 1.0);
  return 3.0 * std::log(y + 2.0) / (4.0 * (y + 2.0)) +
         3.0 * kSqrt3 * std::sqrt(y + 1.0) / (4.0 * std::sqrt(1.0 - y) * (y + 2.0)) * std::atan(arg);
}

AppendixBReport appendixB_no_second_jordan_block() {
  const double pi = std::numbers::pi;
  AppendixBReport r;
  r.c_forced = -3.0 * kSqrt3 * pi / 2.0;
  const double c = r.c_forced;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo, mean = 0.0;
  const int m = 21;
  for (int i = 0; i < m; ++i) {
    const double t = std::exp(std::log(1e-6) + (std::log(1e-4) - std::log(1e-6)) * i / (m - 1));
    const double v = appendixB_dv1(c, 1.0 - t);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v / m;
    r.singular_coeff_at_window = std::max(r.singular_coeff_at_window, std::sqrt(t) * std::abs(v));
  }
  r.dv1_variation = (hi - lo) / std::abs(mean);

  r.slope_at_plus_one = log_slope([c](double t) { return appendixB_d2v1(c, 1.0 - t); }, 1e-6, 1e-4, m);
  r.slope_at_minus_one = log_slope([c](double t) { return appendixB_d2v1(c, -1.0 + t); }, 1e-6, 1e-4, m);

  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 1>;
  auto rhs = [](const State& w, State& dw, double y) {
    dw[0] = (appendixB_g(y) + y * (1.0 + 2.0 * y) / (y + 2.0) * w[0]) / (1.0 - y * y);
  };
  for (double end : {0.9, -0.9}) {
    std::vector<double> ys;
    for (int i = 0; i <= 18; ++i) ys.push_back(end * i / 18.0);
    State w{appendixB_dv1(c, 0.0)};
    auto stepper = odeint::make_dense_output(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_times(stepper, rhs, w, ys.begin(), ys.end(), end > 0 ? 1e-3 : -1e-3,
                            [&](const State& st, double y) {
                              r.ode_crosscheck = std::max(r.ode_crosscheck, std::abs(st[0] - appendixB_dv1(c, y)));
                            });
  }

  const double eta = 1e-10;
  r.jump = appendixB_u1(-0.5 + eta) - appendixB_u1(-0.5 - eta);
  const double y0 = -0.5;
  const double prefactor = 3.0 * kSqrt3 * std::sqrt(y0 + 1.0) / (4.0 * std::sqrt(1.0 - y0) * (y0 + 2.0));
  r.jump_expected = pi * prefactor;
  r.arg_left = kSqrt3 * std::sqrt(1.0 - 0.25) / (2.0 * (-0.5 - 1e-12) + 1.0);
  r.arg_right = kSqrt3 * std::sqrt(1.0 - 0.25) / (2.0 * (-0.5 + 1e-12) + 1.0);
  return r;
}

}  // namespace blowuplab
