#include "blowuplab/modulation.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <cmath>
#include <limits>

namespace blowuplab {

namespace {

// Chebyshev coefficients of the baseline profile at scale T minus the trial profile,
// first component without the kappa shift. Both series are geometric in r = s/(1 + sqrt(1 - s^2));
// the differences are formed from p - p0 and dT = T - T0 directly so that no O(1) terms cancel.
struct ProfileDifference {
  Eigen::VectorXd first;
  Eigen::VectorXd second;
};

ProfileDifference profile_difference(double p, double dT, const Baseline& base, int n) {
  const double p0 = base.p0;
  const double t = 1.0 + dT / base.T0;
  const double dp = p - p0;
  const double dt2 = dT * (2.0 * base.T0 + dT) / (base.T0 * base.T0);  // t^2 - 1
  const double s = std::sqrt(1.0 - p);
  const double sig = std::sqrt(1.0 - p0) * t;
  const double cs = std::sqrt(p);
  const double csig = std::sqrt(1.0 - sig * sig);
  const double r = s / (1.0 + cs);
  const double rho = sig / (1.0 + csig);

  // sig^2 - s^2 and the half-angle difference rho - r with s = sin(theta), sig = sin(phi)
  const double sq_diff = dp + (1.0 - p0) * dt2;
  const double sin_dphi = sq_diff / (sig * cs + s * csig);
  const double dphi = std::asin(sin_dphi);
  const double dr = std::sin(0.5 * dphi) / (std::cos(0.5 * std::asin(sig)) * std::cos(0.5 * std::asin(s)));
  const double log_ratio = std::log1p(dr / r);  // log(rho / r)

  // A - B with A = t p0 / csig, B = p / cs, from A^2 - B^2 = num / csig^2
  const double num = p0 * dt2 + dp * ((1.0 - p0) * t * t - 1.0);
  const double A = t * p0 / csig, B = p / cs;
  const double amp_diff = num / (csig * csig) / (A + B);

  ProfileDifference d{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  d.first(0) = -dp * std::log1p(r * r) - p0 * std::log1p(-dr * (r + rho) / (1.0 + rho * rho));
  double rk = 1.0;
  for (int k = 0; k < n; ++k) {
    const double rho_minus_r_k = k == 0 ? 0.0 : rk * std::expm1(k * log_ratio);  // rho^k - r^k
    if (k >= 1) {
      const double sign = (k % 2) ? 1.0 : -1.0;
      d.first(k) = 2.0 * sign / k * (dp * rk - p0 * rho_minus_r_k);
    }
    const double rho_k = rk + rho_minus_r_k;
    const double sign2 = (k % 2) ? -1.0 : 1.0;
    d.second(k) = (k == 0 ? 1.0 : 2.0) * sign2 * (amp_diff * rho_k + B * rho_minus_r_k);
    rk *= r;
  }
  return d;
}

// U at T = T0 + dT. The offset is carried separately so parameters near the baseline are not
// quantised to the spacing of doubles around T0.
Eigen::VectorXd data_offset(double p, double dT, double kappa, const Baseline& base, const PerturbationData& f,
                            int N) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError(fmt::format("p = {} outside (0,1)", p));
  if (!(base.p0 > 0.0 && base.p0 < 1.0)) throw DomainError(fmt::format("p0 = {} outside (0,1)", base.p0));
  const double T = base.T0 + dT;
  if (!(T > 0.0 && base.T0 > 0.0)) throw DomainError("T and T0 must be positive");
  const double s0 = std::sqrt(1.0 - base.p0);
  if (!(T < base.T0 / s0)) {
    throw DomainError(fmt::format("T = {} violates T < T0/sqrt(1-p0) = {}", T, base.T0 / s0));
  }
  const int n = N + 1;
  const ProfileDifference d = profile_difference(p, dT, base, n);
  Eigen::VectorXd u = f.coefficients(N, T);
  u.head(n) += d.first;
  u(0) += base.kappa0 - kappa;
  u.tail(n) += d.second;
  return u;
}

}  // namespace

Eigen::VectorXd initial_data_operator(double p, double T, double kappa, const Baseline& base,
                                      const PerturbationData& f, int N) {
  return data_offset(p, T - base.T0, kappa, base, f, N);
}

GramData gram_dual_basis(double p, int N, int k) {
  const EigenTriple t = eigen_triple(p, N);
  const EnergyInner E(N + 1, k);
  GramData g;
  g.basis = {t.g0, t.f0, t.f1};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) g.Gamma(i, j) = E(g.basis[i], g.basis[j]);
  }
  const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(g.Gamma, Eigen::EigenvaluesOnly).eigenvalues();
  g.condition = ev(0) > 0.0 ? ev(2) / ev(0) : std::numeric_limits<double>::infinity();
  if (!(g.condition < 1e10)) {
    throw NumericalFailure(fmt::format("Gram matrix ill-conditioned at p = {}: cond = {:.3e}", p, g.condition));
  }
  g.Gamma_inv = g.Gamma.inverse();
  for (int m = 0; m < 3; ++m) {
    g.dual[m] = Eigen::VectorXd::Zero(g.basis[0].size());
    for (int j = 0; j < 3; ++j) g.dual[m] += g.Gamma_inv(m, j) * g.basis[j];
  }
  return g;
}

OperatorData operator_data(double p, int N, int k) {
  OperatorData op;
  op.p = p;
  op.L = assemble_Lp(p, N);
  op.P = symmetry_projectors(op.L);
  op.gram = gram_dual_basis(p, N, k);
  return op;
}

namespace {

CorrectionResult correction_offset(double p, double dT, double kappa, const Baseline& base, const PerturbationData& f,
                                   const Trajectory& traj, const OperatorData& op, int k) {
  if (op.p != p) throw std::invalid_argument("operator data built for a different p");
  const int N = int(op.L.rows() / 2) - 1;
  const EnergyInner E(N + 1, k);

  CorrectionResult r;
  r.u = data_offset(p, dT, kappa, base, f, N);
  r.C = op.P.P0 * r.u + op.P.P1 * r.u;
  if (!traj.states.empty()) {
    const DuhamelIntegrals I = duhamel_integrals(traj);
    r.C += duhamel_correction(I, op.L, op.P);
    r.tail_bound = I.tail_bound;
  }
  for (int m = 0; m < 3; ++m) r.ell(m) = E(r.C, op.gram.dual[m]);
  r.correction_norm = E.norm(r.C);

  const double rel = dT / base.T0;
  r.F(0) = r.ell(0) - (base.p0 - p);
  r.F(1) = r.ell(1) - ((base.kappa0 - kappa) - p * rel + p * (base.p0 - p) / (2.0 * (1.0 - p)));
  r.F(2) = r.ell(2) + rel / std::sqrt(1.0 - p);
  return r;
}

// Fixed-point map in the coordinates (p, kappa, T - T0).
Eigen::Vector3d map_offset(const Eigen::Vector3d& x, const Eigen::Vector3d& F, const Baseline& base) {
  const double p = x(0), rel = x(2) / base.T0;
  return {base.p0 + F(0), base.kappa0 - p * rel + p * (base.p0 - p) / (2.0 * (1.0 - p)) + F(1),
          base.T0 * std::sqrt(1.0 - p) * F(2)};
}

}  // namespace

CorrectionResult correction_functional(double p, double T, double kappa, const Baseline& base,
                                       const PerturbationData& f, const Trajectory& traj, const OperatorData& op,
                                       int k) {
  return correction_offset(p, T - base.T0, kappa, base, f, traj, op, k);
}

Eigen::Vector3d modulation_map(const Eigen::Vector3d& x, const Eigen::Vector3d& F, const Baseline& base) {
  Eigen::Vector3d y = map_offset({x(0), x(1), x(2) - base.T0}, F, base);
  y(2) += base.T0;
  return y;
}

namespace {

struct TrajectoryCache {
  Eigen::Vector3d x = Eigen::Vector3d::Constant(std::nan(""));
  std::size_t fingerprint = 0;
  double seed_correction = std::numeric_limits<double>::infinity();  // |C| of the data the trajectory started from
  Trajectory traj;

  bool fresh(const Eigen::Vector3d& y, std::size_t fp, double tol, double seed_tol) const {
    return !traj.states.empty() && fp == fingerprint && (y - x).cwiseAbs().maxCoeff() <= tol &&
           seed_correction <= seed_tol;
  }
};

class OperatorCache {
 public:
  OperatorCache(int N, int k) : N_(N), k_(k) {}
  const OperatorData& get(double p) {
    for (auto& e : slots_) {
      if (e && e->p == p) return *e;
    }
    slots_[next_] = operator_data(p, N_, k_);
    const OperatorData& r = *slots_[next_];
    next_ = (next_ + 1) % slots_.size();
    return r;
  }

 private:
  int N_, k_;
  std::array<std::optional<OperatorData>, 2> slots_;
  std::size_t next_ = 0;
};

void check_parameters(const Eigen::Vector3d& x, const Baseline& base) {
  const double s0 = std::sqrt(1.0 - base.p0);
  const double T = base.T0 + x(2);
  if (!(x(0) > 0.0 && x(0) < 1.0) || !(T > 0.0 && T < base.T0 / s0) || !x.allFinite()) {
    throw NumericalFailure(fmt::format("modulation diverged: (p, kappa, T) = ({}, {}, {})", x(0), x(1), T));
  }
}

}  // namespace

ModulationState fit_parameters(const PerturbationData& f, const Baseline& base, const SearchConfig& cfg) {
  EvolveConfig ecfg;
  ecfg.p = base.p0;
  ecfg.N = cfg.N;
  ecfg.k = cfg.k;
  ecfg.tau_max = cfg.tau_max;
  ecfg.cfl = cfg.cfl;
  ecfg.filter = cfg.filter;
  ecfg.validate();
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) throw ConfigError("damping must lie in (0,1]");

  const double data_norm = EnergyInner(cfg.N + 1, cfg.k).norm(f.coefficients(cfg.N, base.T0));
  if (data_norm > cfg.max_data_norm) {
    throw DomainError(fmt::format("data norm {:.3e} exceeds the modulation bound {:.3e}", data_norm, cfg.max_data_norm));
  }

  const TimeGrid grid = time_grid(ecfg, cfg.tau_max);
  OperatorCache ops(cfg.N, cfg.k);
  TrajectoryCache cache;
  Trajectory none;

  ModulationState st;
  // iterate on (p, kappa, T - T0)
  Eigen::Vector3d x = cfg.start.value_or(Eigen::Vector3d(base.p0, base.kappa0, base.T0));
  x(2) -= base.T0;
  check_parameters(x, base);

  bool broyden = false;
  Eigen::Matrix3d J = -Eigen::Matrix3d::Identity();
  Eigen::Vector3d x_prev, G_prev;
  double first_norm = 0.0;
  int slow = 0;

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const Trajectory& traj = cache.traj.states.empty() ? none : cache.traj;
    const CorrectionResult r =
        correction_offset(x(0), x(2), x(1), base, f, traj, ops.get(x(0)), cfg.k);
    st.log.push_back({it, x(0), base.T0 + x(2), x(1), r.F, r.correction_norm, broyden});
    st.iterations = it;
    st.correction_norm = r.correction_norm;
    st.tail_bound = r.tail_bound;
    st.data = r.u;
    st.converged = r.correction_norm < cfg.tolerance;
    const double seed_tol = std::max(cfg.polish_tolerance, 10.0 * r.correction_norm);
    const bool consistent = f.is_zero() || cache.seed_correction <= seed_tol;
    const bool stalled = st.converged && st.log.size() >= 2 &&
                         r.correction_norm > 0.5 * st.log[st.log.size() - 2].correction_norm;
    if (consistent && (r.correction_norm < cfg.polish_tolerance || stalled)) break;
    if (it == 1) first_norm = r.correction_norm;
    if (r.correction_norm > 1e3 * std::max(first_norm, cfg.tolerance)) {
      throw NumericalFailure(fmt::format("modulation diverged: correction norm {:.3e}", r.correction_norm));
    }
    if (st.log.size() >= 2 && r.correction_norm > 0.9 * st.log[st.log.size() - 2].correction_norm) {
      ++slow;
    } else {
      slow = 0;
    }

    const Eigen::Vector3d G = map_offset(x, r.F, base) - x;
    Eigen::Vector3d x_new;
    if (!broyden && slow >= 2) {
      broyden = true;
      J = -Eigen::Matrix3d::Identity();
    } else if (broyden) {
      const Eigen::Vector3d dx = x - x_prev, dG = G - G_prev;
      const double d2 = dx.squaredNorm();
      if (d2 > 0.0) J += (dG - J * dx) * dx.transpose() / d2;
    }
    if (broyden) {
      x_new = x - J.fullPivLu().solve(G);
    } else {
      x_new = x + cfg.damping * G;
    }
    x_prev = x;
    G_prev = G;
    check_parameters(x_new, base);

    if (!f.is_zero() && !cache.fresh(x_new, f.fingerprint(), cfg.reuse_tol, seed_tol)) {
      const OperatorData& op = ops.get(x_new(0));
      const CorrectionResult rn = correction_offset(x_new(0), x_new(2), x_new(1), base, f, traj, op, cfg.k);
      Trajectory next = evolve_state(SimilarityStepper(op.L, cfg.filter), rn.u - rn.C, grid);
      cache.traj = std::move(next);
      cache.x = x_new;
      cache.fingerprint = f.fingerprint();
      cache.seed_correction = rn.correction_norm;
      ++st.evolutions;
    }
    x = x_new;
  }
  st.p_star = x(0);
  st.kappa_star = x(1);
  st.T_star = base.T0 + x(2);
  return st;
}

double parameter_displacement(const ModulationState& s, const Baseline& base) {
  return std::abs(base.p0 - s.p_star) + std::abs(base.kappa0 - s.kappa_star) + std::abs(1.0 - base.T0 / s.T_star);
}

DecayFit evolve_fitted(const ModulationState& s, const SearchConfig& cfg) {
  EvolveConfig ecfg;
  ecfg.p = s.p_star;
  ecfg.kappa = s.kappa_star;
  ecfg.T = s.T_star;
  ecfg.N = cfg.N;
  ecfg.k = cfg.k;
  ecfg.tau_max = cfg.tau_max;
  ecfg.cfl = cfg.cfl;
  ecfg.filter = cfg.filter;
  return evolve_from_state(ecfg, s.data);
}

}  // namespace blowuplab
