#include "blowuplab/profiles.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <string>

namespace blowuplab {

void ProfileParams::validate() const {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("p must lie in (0,1], got " + std::to_string(p));
  if (q != 1 && q != -1) throw DomainError("q must be +1 or -1");
  if (!(T > 0.0)) throw DomainError("T must be positive");
}

namespace {

double log_argument(const ProfileParams& prm, const ConePoint& pt) {
  return prm.T - pt.t + prm.q * std::sqrt(1.0 - prm.p) * (pt.x - prm.x0);
}

}  // namespace

ProfileValue eval_profile(const ProfileParams& prm, const ConePoint& pt) {
  prm.validate();
  const double den = log_argument(prm, pt);
  if (!(den > 0.0)) throw DomainError("profile log argument is not positive");
  const double s = std::sqrt(1.0 - prm.p);
  ProfileValue v;
  v.u = -prm.p * std::log(den) + prm.p * std::log(prm.T) + prm.kappa;
  v.u_t = prm.p / den;
  v.u_x = -prm.p * prm.q * s / den;
  return v;
}

bool in_cone(const ProfileParams& prm, const ConePoint& pt) {
  return pt.t >= 0.0 && pt.t < prm.T && std::abs(pt.x - prm.x0) <= prm.T - pt.t;
}

SimilarityPoint to_similarity(const ProfileParams& prm, const ConePoint& pt) {
  if (!(pt.t < prm.T)) throw DomainError("similarity coordinates undefined at t >= T");
  return {-std::log1p(-pt.t / prm.T), (pt.x - prm.x0) / (prm.T - pt.t)};
}

ConePoint from_similarity(const ProfileParams& prm, const SimilarityPoint& sp) {
  const double remaining = prm.T * std::exp(-sp.tau);
  return {prm.x0 + sp.y * remaining, -prm.T * std::expm1(-sp.tau)};
}

namespace {

// (-f(+2h) + 8 f(+h) - 8 f(-h) + f(-2h)) / 12h
double centred(double fm2, double fm1, double fp1, double fp2, double h) {
  return (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
}

// one-sided: (-25 f0 + 48 f1 - 36 f2 + 16 f3 - 3 f4) / 12h, dir = +1 forward, -1 backward
template <class F>
double one_sided(const F& f, double h, int dir) {
  const double hh = dir * h;
  return (-25.0 * f(0.0) + 48.0 * f(hh) - 36.0 * f(2 * hh) + 16.0 * f(3 * hh) - 3.0 * f(4 * hh)) /
         (12.0 * hh);
}

double signed_pde_residual(const FirstDerivField& u, const ConePoint& pt, double h,
                           const std::function<bool(double, double)>& inside) {
  for (int k = -2; k <= 2; ++k) {
    if (!inside(pt.x + k * h, pt.t) || !inside(pt.x, pt.t + k * h))
      throw DomainError("finite difference stencil leaves the domain");
  }
  const double utt = centred(u(pt.x, pt.t - 2 * h).u_t, u(pt.x, pt.t - h).u_t,
                             u(pt.x, pt.t + h).u_t, u(pt.x, pt.t + 2 * h).u_t, h);
  const double uxx = centred(u(pt.x - 2 * h, pt.t).u_x, u(pt.x - h, pt.t).u_x,
                             u(pt.x + h, pt.t).u_x, u(pt.x + 2 * h, pt.t).u_x, h);
  const double ut = u(pt.x, pt.t).u_t;
  return utt - uxx - ut * ut;
}

FirstDerivField profile_field(const ProfileParams& prm) {
  return [prm](double x, double t) { return eval_profile(prm, {x, t}); };
}

std::function<bool(double, double)> cone_interior(const ProfileParams& prm) {
  return [prm](double x, double t) { return t >= 0.0 && t < prm.T && std::abs(x - prm.x0) < prm.T - t; };
}

}  // namespace

double pde_residual(const FirstDerivField& u, const ConePoint& pt, double h,
                    const std::function<bool(double, double)>& inside) {
  return std::abs(signed_pde_residual(u, pt, h, inside));
}

double pde_residual(const ProfileParams& prm, const ConePoint& pt, double h) {
  prm.validate();
  return pde_residual(profile_field(prm), pt, h, cone_interior(prm));
}

double pde_residual_extrapolated(const FirstDerivField& u, const ConePoint& pt, double h,
                                 const std::function<bool(double, double)>& inside) {
  const double coarse = signed_pde_residual(u, pt, h, inside);
  const double fine = signed_pde_residual(u, pt, 0.5 * h, inside);
  return std::abs((16.0 * fine - coarse) / 15.0);
}

double pde_residual_extrapolated(const ProfileParams& prm, const ConePoint& pt, double h) {
  prm.validate();
  return pde_residual_extrapolated(profile_field(prm), pt, h, cone_interior(prm));
}

SimilarityValue similarity_profile(double p, double kappa, double tau, double y) {
  const double s = std::sqrt(1.0 - p);
  const double den = 1.0 + s * y;
  if (!(den > 0.0)) throw DomainError("similarity profile log argument is not positive");
  return {p * tau - p * std::log(den) + kappa, p, -p * s / den};
}

double similarity_residual(const SimilarityField& U, const SimilarityPoint& sp, double h) {
  const double tau = sp.tau;
  const double y = sp.y;
  if (std::abs(y) > 1.0 || tau < 0.0) throw DomainError("similarity point outside [0,inf)x[-1,1]");

  auto Ut = [&](double dtau, double dy) { return U(tau + dtau, y + dy).U_tau; };
  auto Uy = [&](double dtau, double dy) { return U(tau + dtau, y + dy).U_y; };

  double Utt = 0.0;
  double Uty = 0.0;
  if (tau >= 2.0 * h) {
    Utt = centred(Ut(-2 * h, 0), Ut(-h, 0), Ut(h, 0), Ut(2 * h, 0), h);
  } else {
    Utt = one_sided([&](double d) { return Ut(d, 0); }, h, +1);
  }

  double Uyy = 0.0;
  if (y - 2.0 * h >= -1.0 && y + 2.0 * h <= 1.0) {
    Uyy = centred(Uy(0, -2 * h), Uy(0, -h), Uy(0, h), Uy(0, 2 * h), h);
    Uty = centred(Ut(0, -2 * h), Ut(0, -h), Ut(0, h), Ut(0, 2 * h), h);
  } else {
    const int dir = (y > 0.0) ? -1 : +1;
    Uyy = one_sided([&](double d) { return Uy(0, d); }, h, dir);
    Uty = one_sided([&](double d) { return Ut(0, d); }, h, dir);
  }

  const SimilarityValue v = U(tau, y);
  const double lhs = Utt + v.U_tau + 2.0 * y * Uty + (y * y - 1.0) * Uyy + 2.0 * y * v.U_y;
  const double grp = v.U_tau + y * v.U_y;
  return std::abs(lhs - grp * grp);
}

double riccati_particular(double p, int sign, double y) {
  const double s = std::sqrt(1.0 - p);
  const double den = sign - y * s;
  if (den == 0.0) throw DomainError("Riccati particular solution evaluated at its pole");
  return p * s / den;
}

double riccati_residual(double p, int sign, double y) {
  const double s = std::sqrt(1.0 - p);
  const double den = sign - y * s;
  const double V = p * s / den;
  const double dV = p * s * s / (den * den);
  const double w = 1.0 - y * y;
  const double Q0 = p * (1.0 - p) / w;
  const double Q1 = 2.0 * (1.0 - p) * y / w;
  const double Q2 = -y * y / w;
  return dV - (Q0 + Q1 * V + Q2 * V * V);
}

double riccati_pole(double p) { return 1.0 / std::sqrt(1.0 - p); }

double exact_ss_denominator(double c, double y) {
  if (y <= -1.0) return -0.5;
  if (y >= 1.0) return 0.5;
  // log|(y+1)/(y-1)| = 2 atanh(y) on (-1,1)
  return (2.0 * y + (y * y - 1.0) * (c + 2.0 * std::atanh(y))) / 4.0;
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi, double tol,
                   int max_iter) {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) throw DomainError("bisection interval does not bracket a root");
  boost::uintmax_t iters = static_cast<boost::uintmax_t>(max_iter);
  auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol; };
  const auto bracket = boost::math::tools::bisect(f, lo, hi, stop, iters);
  return 0.5 * (bracket.first + bracket.second);
}

double find_denominator_zero(double c) {
  return bisect_root([c](double y) { return exact_ss_denominator(c, y); }, -1.0, 1.0);
}

double general_riccati_denominator(double p, double c, double y) {
  const double s = std::sqrt(1.0 - p);
  if (y <= -1.0) return -1.0 + s;
  if (y >= 1.0) return 1.0 - s;
  // ((1+y)/(1-y))^s = exp(2 s atanh y)
  const double e = std::exp(2.0 * s * std::atanh(y));
  return 1.0 - 2.0 / (1.0 + c * e) - y * s;
}

double find_general_denominator_zero(double p, double c) {
  return bisect_root([p, c](double y) { return general_riccati_denominator(p, c, y); }, -1.0, 1.0);
}

LorentzPoint lorentz_map(double gamma, double x, double t) {
  if (!(std::abs(gamma) < 1.0)) throw DomainError("Lorentz boost requires |gamma| < 1");
  const double w = std::sqrt(1.0 - gamma * gamma);
  return {(x - gamma * t) / w, (t - gamma * x) / w};
}

LorentzPoint lorentz_inverse(double gamma, double xp, double tp) {
  if (!(std::abs(gamma) < 1.0)) throw DomainError("Lorentz boost requires |gamma| < 1");
  const double w = std::sqrt(1.0 - gamma * gamma);
  return {(xp + gamma * tp) / w, (tp + gamma * xp) / w};
}

double boosted_ode_solution(double gamma, double T, double x0, double c2, double x, double t) {
  const double w = std::sqrt(1.0 - gamma * gamma);
  const double c1 = (T - gamma * x0) / w;
  const LorentzPoint pr = lorentz_map(gamma, x, t);
  const double arg = c1 - pr.t;
  if (!(arg > 0.0)) throw DomainError("boosted solution evaluated past its blow-up surface");
  return -(1.0 - gamma * gamma) * std::log(arg) + c2;
}

}  // namespace blowuplab
