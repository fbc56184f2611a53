#pragma once

#include "blowuplab/cheb.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace blowuplab {

using cplx = std::complex<double>;

/// Perturbation pair (q1, q2) stored as Chebyshev coefficients of equal length n = N + 1.
struct StateVector {
  Eigen::VectorXcd q1;
  Eigen::VectorXcd q2;

  static StateVector from_flat(const Eigen::VectorXcd& v);
  Eigen::VectorXcd flat() const;
  Eigen::Index n() const { return q1.size(); }
};

/// Energy inner product of regularity k on flat coefficient vectors [q1; q2]:
/// sum_{j=1}^{k+1} (D^j q1, D^j r1) + sum_{j=0}^{k} (D^j q2, D^j r2) + q1(-1) conj(r1(-1)).
class EnergyInner {
 public:
  EnergyInner(int n, int k);

  cplx operator()(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) const;
  double operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  double norm(const Eigen::VectorXd& a) const;
  double norm(const Eigen::VectorXcd& a) const;

  int n() const { return n_; }
  int k() const { return k_; }

 private:
  int n_;
  int k_;
  Eigen::MatrixXd G_;
};

cplx energy_inner(int k, const StateVector& q, const StateVector& r);

/// Coefficient-space matrix of L_p acting on [q1; q2], size 2(N+1).
Eigen::MatrixXd assemble_Lp(double p, int N);
/// Free-wave operator with the boundary trace subtracted in the first component.
Eigen::MatrixXd assemble_free_wave_modified(int N);

struct EigenTriple {
  Eigen::VectorXd f0;
  Eigen::VectorXd f1;
  Eigen::VectorXd g0;
};

/// Flat coefficient vectors of f_{0,p}, f_{1,p}, g_{0,p}, requires p in (0,1).
EigenTriple eigen_triple(double p, int N);

struct TripleResiduals {
  double f0 = 0.0;       // |L f0|
  double f1 = 0.0;       // |L f1 - f1| / |f1|
  double g0 = 0.0;       // |L g0 - f0| / |g0|
  double g0_sq = 0.0;    // |L^2 g0| / |g0|
  double max() const;
};

TripleResiduals eigen_triple_residuals(double p, int N, int k = 4);

double free_wave_dissipativity_check(int N, int k, int trials, unsigned long seed,
                                     bool second_component_only = false);

struct Contour {
  cplx center = 0.0;
  double radius = 0.5;
  int points = 64;
};

struct RieszResult {
  Eigen::MatrixXd P;
  int rank = 0;
  double idempotency = 0.0;  // |P^2 - P| / |P|
  double min_rcond = 0.0;    // smallest reciprocal condition estimate of zI - L on the contour
};

/// Trapezoidal contour quadrature of the resolvent, OpenMP-parallel over the contour nodes.
RieszResult riesz_projection(const Eigen::MatrixXd& L, const Contour& c);
/// Serial reference implementation.
RieszResult riesz_projection_serial(const Eigen::MatrixXd& L, const Contour& c);

struct SymmetryProjectors {
  Eigen::MatrixXd P0;
  Eigen::MatrixXd P1;
};

/// Projectors onto the clusters at 0 and 1 using the circles |z| = 1/4 and |z - 1| = 1/2.
SymmetryProjectors symmetry_projectors(const Eigen::MatrixXd& L, int points = 64);

struct SpectrumReport {
  int N = 0;
  double p = 0.0;
  std::vector<cplx> eigenvalues;
  std::vector<double> residuals;
  std::vector<bool> robust;
  double gap_raw = 0.0;       // -max Re over robust eigenvalues away from {0,1}
  double gap_omega0 = 0.0;    // min(1/2, gap_raw)
  bool gap_fallback = false;  // measured gap below 0.05
  bool contaminated = false;  // fewer than 25% robust modes
  int cluster0 = 0;           // robust eigenvalues within 1e-6 of 0
  int cluster1 = 0;           // robust eigenvalues within 1e-6 of 1
  int rank_P0 = 0;
  int rank_P1 = 0;
  double robust_fraction() const;
};

SpectrumReport spectrum(double p, int N, int k = 4, double match_tol = 1e-5);

struct SemigroupReport {
  double err_P1 = 0.0;           // |exp(tL)P1 - e^t P1| / |e^t P1|
  double err_P0 = 0.0;           // |exp(tL)P0 - (P0 + t L P0)| / |P0|
  double stable_slope = 0.0;     // fitted log-slope of |exp(tL) Pt q|_k
  double omega0 = 0.0;
  double projector_product = 0.0;  // |P0 P1| / (|P0||P1|)
  std::vector<double> taus;
  std::vector<double> stable_norms;
};

SemigroupReport semigroup_action_check(double p, int N, int k, double tau_check,
                                       const std::vector<double>& tau_samples, unsigned long seed);

struct AppendixBReport {
  double c_forced = 0.0;
  double singular_coeff_at_window = 0.0;  // max (1-y)^{1/2} |dv1| over the window
  double dv1_variation = 0.0;             // relative variation of dv1 over the window
  double slope_at_plus_one = 0.0;         // log-slope of |d2v1| vs log(1-y)
  double slope_at_minus_one = 0.0;        // log-slope of |d2v1| vs log(1+y)
  double ode_crosscheck = 0.0;            // max |dv1_ode - dv1_closed| on [-0.9, 0.9]
  double jump = 0.0;                      // u1(-1/2+) - u1(-1/2-)
  double jump_expected = 0.0;             // pi * prefactor(-1/2)
  double arg_left = 0.0;                  // arctan argument just left of -1/2
  double arg_right = 0.0;                 // arctan argument just right of -1/2
};

/// dv1 closed form for the inhomogeneous problem against g_{0,3/4}.
double appendixB_dv1(double c, double y);
double appendixB_d2v1(double c, double y);
/// lambda = 1 solution with c1 = c2 = 0.
double appendixB_u1(double y);

AppendixBReport appendixB_no_second_jordan_block();

}  // namespace blowuplab
