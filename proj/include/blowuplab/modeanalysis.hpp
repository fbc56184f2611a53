#pragma once

#include <complex>
#include <vector>

namespace blowuplab {

using cplx = std::complex<double>;

struct PartialFractionCoeffs {
  cplx A, B, C, D, E, F;
};

PartialFractionCoeffs pf_coeffs(double p, cplx lambda);

struct SimilarityCoords {
  double tau = 0.0;
  double y = 0.0;
};

/// Similarity-coordinate form of the Lorentz boost with gamma = sqrt(1-p).
SimilarityCoords lorentz_similarity_map(double p, double tau_prime, double y_prime);

struct HypergeomParams {
  cplx a, b, c;
};

/// a = lambda, b = lambda - 1, c = lambda - sqrt(1-p).
HypergeomParams lorentz_hypergeom_params(double p, cplx lambda);

struct SeriesValue {
  cplx value;
  double tail_estimate = 0.0;
  bool converged = true;
};

/// Partial sum of 2F1(a,b;c;z) with N terms. Throws if c is a non-positive integer.
SeriesValue hypergeom_2F1(cplx a, cplx b, cplx c, cplx z, int N);

/// r_n = (lambda+n)(lambda+n-1) / ((n+1)(lambda+s+n)).
cplx series_coeff_ratio(double p, cplx lambda, long n);
/// log alpha_n for the series with ratios r_k (alpha_0 = 1), accumulated in log space.
cplx series_coeff_log(double p, cplx lambda, long n);

/// Taylor data of z p(z) and z^2 q(z) around a regular singular point.
struct LocalData {
  std::vector<cplx> p;
  std::vector<cplx> q;
  double radius = 1.0;  // distance to the nearest other singular point
};

struct IndicialRoots {
  cplx s1;  // larger real part
  cplx s2;
};

IndicialRoots indicial_roots(cplx p0, cplx q0);

struct FrobeniusExpansion {
  cplx exponent;
  std::vector<cplx> coeffs;
  bool log_branch = false;
  cplx log_coeff = 0.0;
  std::vector<cplx> companion;  // coefficients of the log-free branch multiplying log z
  cplx companion_exponent;
  double radius_lower_bound = 0.0;
};

struct BranchValue {
  cplx value;
  cplx deriv;
};

/// Frobenius solution z^s sum a_n z^n with a_0 = 1. Throws on resonance.
FrobeniusExpansion frobenius_coeffs(const LocalData& d, cplx s, int N);
/// Second solution C y1 log z + z^{s_lo} sum b_n z^n for integer exponent gap.
FrobeniusExpansion frobenius_log_branch(const LocalData& d, cplx s_hi, cplx s_lo, int N);
BranchValue evaluate_branch(const FrobeniusExpansion& f, double z);

/// Heun form of the eigenequation in z = (y+1)/2 around z0 in {0, 1}.
LocalData heun_local_data(double p, cplx lambda, int z0, int N);
/// Hypergeometric equation around z = 0 (at_one = false) or in w = 1 - z (at_one = true).
LocalData hypergeom_local_data(const HypergeomParams& h, bool at_one, int N);

struct DefectOptions {
  double delta = 1e-2;
  int n_terms = 40;
  double rtol = 1e-11;
  int collar_points = 8;
  /// Use the secondary smooth branch at z'=1 (only meaningful when it is smooth).
  bool secondary_branch = false;
};

struct DefectResult {
  double defect = 0.0;
  cplx alpha;
  cplx beta;
  bool smooth_at_zero_all = false;   // every local solution at z'=0 is smooth
  bool secondary_smooth_at_one = false;
};

/// Connection defect: singular-branch content at z'=0 of the solution that is smooth at z'=1
/// for the Lorentz-frame hypergeometric equation.
DefectResult connection_defect(double p, cplx lambda, const DefectOptions& opt = {});

/// Dimension of the space of solutions smooth at both ends (0, 1 or 2).
int smooth_eigenspace_dim(double p, cplx lambda, double tol = 1e-8);

DefectOptions defect_options_for(int n_colloc);

struct ModeScanEntry {
  cplx lambda;
  double defect = 0.0;
  int n_colloc = 0;
};

std::vector<cplx> lambda_grid(double re_lo, double re_hi, double im_lo, double im_hi, double step);

/// OpenMP-parallel map over the grid.
std::vector<ModeScanEntry> mode_scan(double p, const std::vector<cplx>& grid, int n_colloc);
/// Serial reference implementation.
std::vector<ModeScanEntry> mode_scan_serial(double p, const std::vector<cplx>& grid, int n_colloc);

}  // namespace blowuplab
