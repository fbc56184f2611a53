#include "blowuplab/evolve.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace blowuplab {

namespace {

double legendre_series(const std::vector<double>& c, double y) {
  double pm1 = 1.0, pk = y, acc = c.empty() ? 0.0 : c[0];
  if (c.size() > 1) acc += c[1] * y;
  for (std::size_t l = 1; l + 1 < c.size(); ++l) {
    const double pn = ((2.0 * l + 1.0) * y * pk - double(l) * pm1) / (l + 1.0);
    pm1 = pk;
    pk = pn;
    acc += c[l + 1] * pn;
  }
  return acc;
}

double bump(double z) {
  if (std::abs(z) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - z * z));
}

void hash_mix(std::size_t& h, double v) { h ^= std::hash<double>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); }

Eigen::VectorXd modal_coefficients(const std::function<double(double)>& f, int n, int native) {
  if (native > 0 && native <= n) {
    return cheb::resized(cheb::interpolate(f, std::max(native, 2)), n);
  }
  return cheb::resized(cheb::interpolate(f, 4 * n), n);
}

}  // namespace

PerturbationData::PerturbationData(const Perturbation& spec, int k) {
  if (spec.epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  fingerprint_ = std::hash<unsigned long>{}(spec.seed);
  hash_mix(fingerprint_, spec.epsilon);
  hash_mix(fingerprint_, double(spec.family == PerturbationFamily::Bump));

  if (spec.family == PerturbationFamily::Legendre) {
    if (spec.degree < 0) throw ConfigError("perturbation degree must be >= 0");
    std::vector<double> cf(spec.degree + 1), cg(spec.degree + 1);
    for (auto& c : cf) c = normal(rng);
    for (auto& c : cg) c = normal(rng);
    f_ = [cf](double y) { return legendre_series(cf, y); };
    g_ = [cg](double y) { return legendre_series(cg, y); };
    native_modes_ = spec.degree + 1;
    hash_mix(fingerprint_, spec.degree);
  } else {
    if (!(spec.width > 0.0)) throw ConfigError("bump width must be > 0");
    const double af = normal(rng), ag = normal(rng);
    const double c = spec.center, w = spec.width;
    f_ = [=](double y) { return af * bump((y - c) / w); };
    g_ = [=](double y) { return ag * bump((y - c) / w); };
    native_modes_ = 0;
    hash_mix(fingerprint_, c);
    hash_mix(fingerprint_, w);
  }

  if (spec.epsilon == 0.0) {
    scale_ = 0.0;
    return;
  }
  scale_ = 1.0;
  const int N0 = 64;
  const double unit = EnergyInner(N0 + 1, k).norm(coefficients(N0));
  if (!(unit > 0.0)) throw NumericalFailure("perturbation has zero energy norm");
  scale_ = spec.epsilon / unit;
}

PerturbationData PerturbationData::from_coefficients(const Eigen::VectorXd& flat) {
  PerturbationData d;
  const Eigen::Index n = flat.size() / 2;
  const Eigen::VectorXd c1 = flat.head(n), c2 = flat.tail(n);
  d.f_ = [c1](double y) { return cheb::evaluate(c1, y); };
  d.g_ = [c2](double y) { return cheb::evaluate(c2, y); };
  d.native_modes_ = int(n);
  d.scale_ = flat.isZero(0.0) ? 0.0 : 1.0;
  d.fingerprint_ = 0;
  for (Eigen::Index i = 0; i < flat.size(); ++i) hash_mix(d.fingerprint_, flat(i));
  return d;
}

double PerturbationData::f(double y) const { return scale_ == 0.0 ? 0.0 : scale_ * f_(y); }
double PerturbationData::g(double y) const { return scale_ == 0.0 ? 0.0 : scale_ * g_(y); }

Eigen::VectorXd PerturbationData::coefficients(int N, double T) const {
  const int n = N + 1;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * n);
  if (scale_ == 0.0) return v;
  v.head(n) = scale_ * modal_coefficients([&](double y) { return f_(T * y); }, n, native_modes_);
  v.tail(n) = scale_ * T * modal_coefficients([&](double y) { return g_(T * y); }, n, native_modes_);
  return v;
}

void EvolveConfig::validate() const {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError(fmt::format("p = {} outside (0,1)", p));
  if (!(T > 0.0)) throw ConfigError(fmt::format("T = {} must be > 0", T));
  if (N < 16) throw ConfigError(fmt::format("N = {} must be >= 16", N));
  if (!(tau_max > 0.0 && tau_max <= kMaxTau)) throw ConfigError(fmt::format("tau_max = {} outside (0,{}]", tau_max, kMaxTau));
  if (dt < 0.0) throw ConfigError("dt must be >= 0");
  if (!(cfl > 0.0 && cfl <= kMaxCfl)) throw ConfigError(fmt::format("cfl = {} outside (0,{}]", cfl, kMaxCfl));
  if (dt * N * N > kMaxCfl) throw ConfigError(fmt::format("dt N^2 = {} exceeds {}", dt * N * N, kMaxCfl));
  if (k < 1) throw ConfigError("k must be >= 1");
  if (perturbation.epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
}

TimeGrid time_grid(const EvolveConfig& cfg, double tau) {
  const double dt0 = cfg.dt > 0.0 ? cfg.dt : cfg.cfl / (double(cfg.N) * cfg.N);
  TimeGrid g;
  if (tau <= 0.0) return g;
  g.steps = int(std::ceil(tau / dt0 - 1e-12));
  g.steps += g.steps % 2;
  g.dt = tau / g.steps;
  return g;
}

Eigen::VectorXd filter_weights(int n, double strength, double fraction) {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(n);
  const int jc = int(std::floor(n * (1.0 - fraction)));
  if (jc >= n - 1) return s;
  const double alpha = -std::log(strength);
  for (int j = jc + 1; j < n; ++j) {
    const double eta = double(j - jc) / double(n - 1 - jc);
    s(j) = std::exp(-alpha * std::pow(eta, 8));
  }
  return s;
}

namespace {

template <class Vec>
Vec nonlinear_term(const Vec& q) {
  const Eigen::Index n = q.size() / 2;
  Vec out = Vec::Zero(q.size());
  const Vec q2 = q.tail(n);
  out.tail(n) = cheb::product(q2, q2, n);
  return out;
}

template <class Vec>
Vec apply_filter(const Vec& q, const Eigen::VectorXd& sigma) {
  const Eigen::Index n = sigma.size();
  Vec r = q;
  r.head(n).array() *= sigma.array();
  r.tail(n).array() *= sigma.array();
  return r;
}

}  // namespace

Eigen::VectorXd nonlinearity(const Eigen::VectorXd& q) { return nonlinear_term(q); }

SimilarityStepper::SimilarityStepper(Eigen::MatrixXd L, bool filter, bool linear)
    : L_(std::move(L)), sigma_(filter_weights(int(L_.rows() / 2))), filter_(filter), linear_(linear) {}

Eigen::VectorXd SimilarityStepper::rhs(const Eigen::VectorXd& q) const {
  Eigen::VectorXd r = L_ * q;
  if (!linear_) r += nonlinear_term(q);
  return r;
}

Eigen::VectorXcd SimilarityStepper::rhs(const Eigen::VectorXcd& q) const {
  Eigen::VectorXcd r = L_.cast<cplx>() * q;
  if (!linear_) r += nonlinear_term(q);
  return r;
}

Eigen::VectorXd SimilarityStepper::step(const Eigen::VectorXd& q, double dt) const {
  const Eigen::VectorXd k1 = rhs(q);
  const Eigen::VectorXd k2 = rhs(Eigen::VectorXd(q + 0.5 * dt * k1));
  const Eigen::VectorXd k3 = rhs(Eigen::VectorXd(q + 0.5 * dt * k2));
  const Eigen::VectorXd k4 = rhs(Eigen::VectorXd(q + dt * k3));
  Eigen::VectorXd r = q + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return filter_ ? apply_filter(r, sigma_) : r;
}

Eigen::VectorXcd SimilarityStepper::step(const Eigen::VectorXcd& q, double dt) const {
  const Eigen::VectorXcd k1 = rhs(q);
  const Eigen::VectorXcd k2 = rhs(Eigen::VectorXcd(q + 0.5 * dt * k1));
  const Eigen::VectorXcd k3 = rhs(Eigen::VectorXcd(q + 0.5 * dt * k2));
  const Eigen::VectorXcd k4 = rhs(Eigen::VectorXcd(q + dt * k3));
  Eigen::VectorXcd r = q + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return filter_ ? apply_filter(r, sigma_) : r;
}

namespace {

void check_growth(double before, double after, double tau) {
  if (!std::isfinite(after) || after > 10.0 * before + 1e-300) {
    throw NumericalFailure(fmt::format("similarity evolution unstable at tau = {:.6g}: norm {:.3e} -> {:.3e}", tau,
                                       before, after));
  }
}

}  // namespace

StateVector step_similarity(const StateVector& q, double p, double dt, bool filter) {
  const SimilarityStepper stepper(assemble_Lp(p, int(q.n()) - 1), filter);
  const Eigen::VectorXcd v = q.flat();
  const Eigen::VectorXcd r = stepper.step(v, dt);
  check_growth(v.norm(), r.norm(), dt);
  return StateVector::from_flat(r);
}

Trajectory evolve_state(const SimilarityStepper& stepper, const Eigen::VectorXd& q0, const TimeGrid& grid) {
  Trajectory tr;
  tr.taus.reserve(grid.steps + 1);
  tr.states.reserve(grid.steps + 1);
  tr.taus.push_back(0.0);
  tr.states.push_back(q0);
  Eigen::VectorXd q = q0;
  double nq = q.norm();
  for (int i = 1; i <= grid.steps; ++i) {
    q = stepper.step(q, grid.dt);
    const double nn = q.norm();
    check_growth(nq, nn, i * grid.dt);
    nq = nn;
    tr.taus.push_back(i * grid.dt);
    tr.states.push_back(q);
  }
  return tr;
}

DecayFit fit_decay(const std::vector<double>& taus, const std::vector<double>& norms, double lo, double hi) {
  DecayFit fit;
  fit.taus = taus;
  fit.norms = norms;
  fit.fit_window = {lo, hi};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < taus.size() && i < norms.size(); ++i) {
    if (taus[i] < lo || taus[i] > hi || !(norms[i] > 0.0)) continue;
    const double x = taus[i], y = std::log(norms[i]);
    pts.emplace_back(x, y);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 3) return fit;
  const double det = m * sxx - sx * sx;
  fit.fitted_rate = (m * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.fitted_rate * sx) / m;
  const double ybar = sy / m;
  double ss_res = 0, ss_tot = 0;
  for (auto [x, y] : pts) {
    const double e = y - (fit.intercept + fit.fitted_rate * x);
    ss_res += e * e;
    ss_tot += (y - ybar) * (y - ybar);
  }
  fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return fit;
}

double l2_norm(const Eigen::VectorXd& q) {
  const Eigen::Index n = q.size() / 2;
  const Eigen::MatrixXd G = cheb::gram_matrix(int(n));
  const Eigen::VectorXd a = q.head(n), b = q.tail(n);
  return std::sqrt(std::max(0.0, a.dot(G * a) + b.dot(G * b)));
}

DecayFit evolve_from_state(const EvolveConfig& cfg, const Eigen::VectorXd& q0) {
  cfg.validate();
  const int n = cfg.N + 1;
  if (q0.size() != 2 * n) throw ConfigError("initial state size does not match N");
  const SimilarityStepper stepper(assemble_Lp(cfg.p, cfg.N), cfg.filter);
  const TimeGrid grid = time_grid(cfg, cfg.tau_max);
  const EnergyInner E(n, cfg.k);
  const Eigen::MatrixXd G = cheb::gram_matrix(n);
  auto l2 = [&](const Eigen::VectorXd& q) {
    const Eigen::VectorXd a = q.head(n), b = q.tail(n);
    return std::sqrt(std::max(0.0, a.dot(G * a) + b.dot(G * b)));
  };

  std::vector<double> taus{0.0}, norms{E.norm(q0)}, norms_l2{l2(q0)};
  Eigen::VectorXd q = q0;
  double nq = q.norm();
  for (int i = 1; i <= grid.steps; ++i) {
    q = stepper.step(q, grid.dt);
    const double nn = q.norm();
    check_growth(nq, nn, i * grid.dt);
    nq = nn;
    taus.push_back(i * grid.dt);
    norms.push_back(E.norm(q));
    norms_l2.push_back(l2(q));
  }
  DecayFit fit = fit_decay(taus, norms, 2.0, 0.8 * cfg.tau_max);
  fit.norms_L2 = std::move(norms_l2);
  return fit;
}

DuhamelIntegrals duhamel_integrals(const Trajectory& traj) {
  const std::size_t m = traj.states.size();
  if (m < 3 || (m - 1) % 2 != 0) throw NumericalFailure("Simpson quadrature needs an even number of steps");
  const double h = traj.taus[1] - traj.taus[0];
  const Eigen::Index len = traj.states.front().size();
  DuhamelIntegrals I{Eigen::VectorXd::Zero(len), Eigen::VectorXd::Zero(len), Eigen::VectorXd::Zero(len), 0.0};
  double peak = 0.0;
  for (std::size_t i = 0; i < m; ++i) peak = std::max(peak, traj.states[i].norm());
  const double last = traj.states.back().norm();
  if (last > 0.0 && last >= peak) {
    throw NumericalFailure(fmt::format("trajectory is not decaying: norm {:.3e} at the horizon", last));
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double w = h / 3.0 * ((i == 0 || i == m - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0));
    const double tau = traj.taus[i];
    const Eigen::VectorXd Nq = nonlinear_term(traj.states[i]);
    I.I0 += w * Nq;
    I.I1 -= w * tau * Nq;
    I.I2 += w * std::exp(-tau) * Nq;
  }
  I.tail_bound = (1.0 + traj.taus.back()) * nonlinear_term(traj.states.back()).norm();
  return I;
}

Eigen::VectorXd duhamel_correction(const DuhamelIntegrals& I, const Eigen::MatrixXd& L, const SymmetryProjectors& P) {
  return P.P0 * I.I0 + L * (P.P0 * I.I1) + P.P1 * I.I2;
}

DecayFit evolve_perturbation(const EvolveConfig& cfg, Projection projection) {
  cfg.validate();
  const PerturbationData data(cfg.perturbation, cfg.k);
  Eigen::VectorXd q0 = data.coefficients(cfg.N, cfg.T);
  if (projection == Projection::None || data.is_zero()) return evolve_from_state(cfg, q0);

  const Eigen::MatrixXd L = assemble_Lp(cfg.p, cfg.N);
  const SymmetryProjectors P = symmetry_projectors(L);
  const Eigen::VectorXd base = q0 - P.P0 * q0 - P.P1 * q0;
  q0 = base;
  if (projection == Projection::LyapunovPerron) {
    const SimilarityStepper stepper(L, cfg.filter);
    const TimeGrid grid = time_grid(cfg, cfg.tau_max);
    for (int it = 0; it < 6; ++it) {
      const Eigen::VectorXd next = base - duhamel_correction(duhamel_integrals(evolve_state(stepper, q0, grid)), L, P);
      const double change = (next - q0).norm();
      q0 = next;
      if (change <= 1e-15 * base.norm()) break;
    }
  }
  return evolve_from_state(cfg, q0);
}

DecayFit evolve_perturbation(const EvolveConfig& cfg, bool project_out_unstable) {
  return evolve_perturbation(cfg, project_out_unstable ? Projection::LyapunovPerron : Projection::None);
}

namespace {

template <class F>
double integrate(F f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 12, 1e-14);
}

double factorial(int j) { return std::tgamma(j + 1.0); }

}  // namespace

double smallness_functional(double p, double kappa, double T, double x0, int k) {
  (void)x0;
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("p must lie in (0,1]");
  if (!(T > 0.0)) throw DomainError("T must be > 0");
  const double s = std::sqrt(1.0 - p);
  // x = x0 + T z, z in (-1, 1)
  auto u = [&](double z) { return -p * std::log1p(s * z) + kappa; };
  const double a = 0.5 * integrate(u, -1.0, 1.0);

  double first = T * integrate([&](double z) { return std::pow(u(z) - a, 2); }, -1.0, 1.0);
  for (int j = 1; j <= k + 1; ++j) {
    const double c = p * factorial(j - 1) * std::pow(s / T, j);
    first += T * integrate([&](double z) { return std::pow(c * std::pow(1.0 + s * z, -j), 2); }, -1.0, 1.0);
  }
  double second = 0.0;
  for (int j = 0; j <= k; ++j) {
    const double c = p * factorial(j) * std::pow(s / T, j) / T;
    second += T * integrate(
                      [&](double z) {
                        const double v = c * std::pow(1.0 + s * z, -(j + 1));
                        return j == 0 ? std::pow(v - 1.0 / T, 2) : v * v;
                      },
                      -1.0, 1.0);
  }
  return std::pow(T, -0.5 + (k + 1)) * std::sqrt(first) + std::pow(T, -0.5 + k) * std::sqrt(second);
}

double ode_distance(double p, double kappa, double a, double tau) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("p must lie in (0,1]");
  const double s = std::sqrt(1.0 - p);
  const double sq = integrate(
      [&](double y) {
        const double d = (p - 1.0) * tau - p * std::log1p(s * y) + kappa - a;
        return d * d;
      },
      -1.0, 1.0);
  return std::sqrt(sq);
}

InstabilityReport ode_blowup_instability(const std::vector<double>& p_values, double kappa,
                                         const std::vector<double>& a_values, int k, double T, double tau_far) {
  InstabilityReport rep;
  rep.p_values = p_values;
  std::vector<double> taus{0.0};
  const int per_octave = 4;
  const int octaves = int(std::ceil(std::log2(tau_far)));
  for (int i = 0; i <= octaves * per_octave; ++i) taus.push_back(tau_far * std::exp2(-double(octaves * per_octave - i) / per_octave));

  for (double p : p_values) {
    rep.smallness.push_back(smallness_functional(p, kappa, T, 0.0, k));
    for (double a : a_values) {
      DivergenceCurve c;
      c.p = p;
      c.a = a;
      c.taus = taus;
      for (double t : taus) c.distance.push_back(ode_distance(p, kappa, a, t));
      const std::size_t m = taus.size();
      const std::size_t half = m - 1 - per_octave;
      c.far_slope = (c.distance[m - 1] - c.distance[half]) / (taus[m - 1] - taus[half]);
      c.expected_slope = std::abs(p - 1.0) * std::sqrt(2.0);
      c.increasing = true;
      for (std::size_t i = 0; i + 1 < m; ++i) {
        if (taus[i] >= 0.25 * tau_far) c.increasing = c.increasing && c.distance[i + 1] > c.distance[i];
      }
      rep.curves.push_back(std::move(c));
    }
  }
  std::vector<std::pair<double, double>> ps;
  for (std::size_t i = 0; i < p_values.size(); ++i) ps.emplace_back(p_values[i], rep.smallness[i]);
  std::sort(ps.begin(), ps.end());
  rep.smallness_decreasing = ps.size() >= 2;
  for (std::size_t i = 0; i + 1 < ps.size(); ++i) rep.smallness_decreasing = rep.smallness_decreasing && ps[i + 1].second < ps[i].second;
  return rep;
}

namespace {

struct PhysicalSolver {
  double p, s, kappa, T, x0, a;
  ChebGrid grid;
  Eigen::MatrixXd D2;
  Eigen::VectorXd xi;

  PhysicalSolver(const EvolveConfig& cfg, double slope)
      : p(cfg.p), s(std::sqrt(1.0 - cfg.p)), kappa(cfg.kappa), T(cfg.T), x0(cfg.x0), a(slope), grid(cfg.N),
        D2(grid.D * grid.D), xi(grid.nodes) {}

  double profile_u(double x, double t) const { return -p * std::log(T - t + s * (x - x0)) + p * std::log(T) + kappa; }
  double profile_ut(double x, double t) const { return p / (T - t + s * (x - x0)); }

  void rhs(const Eigen::VectorXd& w, const Eigen::VectorXd& v, double t, Eigen::VectorXd& dw,
           Eigen::VectorXd& dv) const {
    const double l = a * (T - t);
    const Eigen::VectorXd adv = a * xi / l;
    dw = v - adv.cwiseProduct(grid.D * w);
    dv = (D2 * w) / (l * l) + v.cwiseProduct(v) - adv.cwiseProduct(grid.D * v);
  }

  void step(Eigen::VectorXd& w, Eigen::VectorXd& v, double t, double dt) const {
    Eigen::VectorXd k1w, k1v, k2w, k2v, k3w, k3v, k4w, k4v;
    rhs(w, v, t, k1w, k1v);
    rhs(w + 0.5 * dt * k1w, v + 0.5 * dt * k1v, t + 0.5 * dt, k2w, k2v);
    rhs(w + 0.5 * dt * k2w, v + 0.5 * dt * k2v, t + 0.5 * dt, k3w, k3v);
    rhs(w + dt * k3w, v + dt * k3v, t + dt, k4w, k4v);
    w += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }

  double spectral_radius() const {
    const int n = grid.size();
    const double l = a * T;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    const Eigen::MatrixXd adv = (a / l) * xi.asDiagonal() * grid.D;
    J.topLeftCorner(n, n) = -adv;
    J.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    J.bottomLeftCorner(n, n) = D2 / (l * l);
    J.bottomRightCorner(n, n) = -adv;
    return Eigen::EigenSolver<Eigen::MatrixXd>(J, false).eigenvalues().cwiseAbs().maxCoeff();
  }
};

}  // namespace

CrosscheckReport physical_space_crosscheck(const EvolveConfig& cfg, const std::vector<double>& t_samples) {
  cfg.validate();
  const double s = std::sqrt(1.0 - cfg.p);
  const double slope = s > 0.0 ? std::min(1.25, 0.5 * (1.0 + 1.0 / s)) : 1.25;
  const PhysicalSolver phys(cfg, slope);
  const PerturbationData data(cfg.perturbation, cfg.k);
  const int n = cfg.N + 1;

  CrosscheckReport rep;
  std::vector<double> samples;
  for (double t : t_samples) {
    if (!(t > 0.0 && t < cfg.T)) throw ConfigError(fmt::format("sample time {} outside (0, T)", t));
    if (-std::log1p(-t / cfg.T) > 8.0) {
      rep.excluded.push_back(t);
    } else {
      samples.push_back(t);
    }
  }
  std::sort(samples.begin(), samples.end());
  if (samples.empty()) return rep;

  Eigen::VectorXd w(n), v(n), w0(n), v0(n);
  for (int j = 0; j < n; ++j) {
    const double x = cfg.x0 + phys.xi(j) * slope * cfg.T;
    w0(j) = phys.profile_u(x, 0.0);
    v0(j) = phys.profile_ut(x, 0.0);
    w(j) = w0(j) + data.f(x - cfg.x0);
    v(j) = v0(j) + data.g(x - cfg.x0);
  }

  const SimilarityStepper stepper(assemble_Lp(cfg.p, cfg.N), cfg.filter);
  Eigen::VectorXd q = data.coefficients(cfg.N, cfg.T);
  double tau_now = 0.0;

  const double rho = phys.spectral_radius();
  double t = 0.0;
  const int ny = 201;
  for (double ts : samples) {
    while (t < ts) {
      double dt = (cfg.T - t) / (2.0 * rho * cfg.T);
      if (t + dt > ts) dt = ts - t;
      phys.step(w, v, t, dt);
      phys.step(w0, v0, t, dt);
      t += dt;
      ++rep.physical_steps;
      if (!w.allFinite() || !v.allFinite()) {
        throw NumericalFailure(fmt::format("physical solver blew up at t = {:.6g}", t));
      }
    }
    t = ts;

    const double tau = -std::log1p(-ts / cfg.T);
    const TimeGrid g = time_grid(cfg, tau - tau_now);
    double nq = q.norm();
    for (int i = 0; i < g.steps; ++i) {
      q = stepper.step(q, g.dt);
      const double nn = q.norm();
      check_growth(nq, nn, tau_now + (i + 1) * g.dt);
      nq = nn;
    }
    tau_now = tau;

    const Eigen::VectorXd wm = phys.grid.to_modal(w);
    const Eigen::VectorXd q1 = q.head(n);
    double err = 0.0;
    for (int i = 0; i < ny; ++i) {
      const double y = -1.0 + 2.0 * i / (ny - 1);
      const double u_phys = cheb::evaluate(wm, y / slope);
      const double u_sim = cfg.p * tau - cfg.p * std::log1p(s * y) + cfg.kappa + cheb::evaluate(q1, y);
      err = std::max(err, std::abs(u_phys - u_sim));
    }
    rep.t_samples.push_back(ts);
    rep.max_abs_err.push_back(err);
  }

  double perr = 0.0;
  for (int j = 0; j < n; ++j) {
    const double x = cfg.x0 + phys.xi(j) * slope * (cfg.T - t);
    perr = std::max(perr, std::abs(w0(j) - phys.profile_u(x, t)));
  }
  rep.profile_err = perr;
  return rep;
}

}  // namespace blowuplab
