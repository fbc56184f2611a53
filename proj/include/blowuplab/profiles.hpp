#pragma once

#include "blowuplab/errors.hpp"

#include <functional>

namespace blowuplab {

struct ProfileParams {
  double p = 0.75;
  int q = 1;
  double kappa = 0.0;
  double T = 1.0;
  double x0 = 0.0;

  void validate() const;
};

struct ConePoint {
  double x = 0.0;
  double t = 0.0;
};

struct SimilarityPoint {
  double tau = 0.0;
  double y = 0.0;
};

struct ProfileValue {
  double u = 0.0;
  double u_t = 0.0;
  double u_x = 0.0;
};

/// Exact blow-up solution u = -p log(T - t + q s (x - x0)) + p log T + kappa, s = sqrt(1-p),
/// together with its analytic first derivatives.
ProfileValue eval_profile(const ProfileParams& prm, const ConePoint& pt);

bool in_cone(const ProfileParams& prm, const ConePoint& pt);

SimilarityPoint to_similarity(const ProfileParams& prm, const ConePoint& pt);
ConePoint from_similarity(const ProfileParams& prm, const SimilarityPoint& sp);

/// A scalar field in (x,t) that exposes its exact first derivatives.
using FirstDerivField = std::function<ProfileValue(double x, double t)>;

/// |u_tt - u_xx - u_t^2| where the second derivatives come from 4th order centred
/// differences of the analytic first derivatives. `inside` decides stencil admissibility.
double pde_residual(const FirstDerivField& u, const ConePoint& pt, double h,
                    const std::function<bool(double x, double t)>& inside);
double pde_residual(const ProfileParams& prm, const ConePoint& pt, double h);
/// Richardson combination (16 r(h/2) - r(h)) / 15 of the signed residual, 6th order in h.
double pde_residual_extrapolated(const FirstDerivField& u, const ConePoint& pt, double h,
                                 const std::function<bool(double x, double t)>& inside);
double pde_residual_extrapolated(const ProfileParams& prm, const ConePoint& pt, double h);

struct SimilarityValue {
  double U = 0.0;
  double U_tau = 0.0;
  double U_y = 0.0;
};
using SimilarityField = std::function<SimilarityValue(double tau, double y)>;

/// Residual of U_tt + U_t + 2y U_ty + (y^2-1) U_yy + 2y U_y - (U_t + y U_y)^2 at (tau, y).
/// Centred stencils in the interior, one-sided 4th order stencils near y = +-1 and tau = 0.
double similarity_residual(const SimilarityField& U, const SimilarityPoint& sp, double h);

/// U_{p,1,kappa}(tau, y) = p tau - p log(1 + s y) + kappa.
SimilarityValue similarity_profile(double p, double kappa, double tau, double y);

/// V_pm(y) = p s / (pm 1 - s y).
double riccati_particular(double p, int sign, double y);
/// V' - (Q0 + Q1 V + Q2 V^2) for the Riccati equation satisfied by V_pm.
double riccati_residual(double p, int sign, double y);
/// Pole location 1/sqrt(1-p) of V_+ (p < 1 allowed to be negative).
double riccati_pole(double p);

/// p_c(y) = (2y + c(y^2-1) + (y^2-1) log|(y+1)/(y-1)|)/4, with the limits at +-1.
double exact_ss_denominator(double c, double y);
double find_denominator_zero(double c);

/// h_c(y) = 1 - 2/(1 + c ((1+y)/(1-y))^s) - y s.
double general_riccati_denominator(double p, double c, double y);
double find_general_denominator_zero(double p, double c);

struct LorentzPoint {
  double x = 0.0;
  double t = 0.0;
};
LorentzPoint lorentz_map(double gamma, double x, double t);
LorentzPoint lorentz_inverse(double gamma, double xp, double tp);

/// Boosted ODE blow-up -(1-g^2) log(c1 - t') + c2 written in unprimed coordinates.
/// Equals eval_profile with p = 1-g^2, q = sign(g), kappa = c2 + p log sqrt(1-g^2) - p log T.
double boosted_ode_solution(double gamma, double T, double x0, double c2, double x, double t);

/// Bisection to tolerance `tol` on a bracketing interval; throws if the signs agree.
double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   double tol = 1e-12, int max_iter = 200);

}  // namespace blowuplab
