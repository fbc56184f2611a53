#pragma once

#include "blowuplab/errors.hpp"
#include "blowuplab/linop.hpp"

#include <Eigen/Dense>

#include <functional>
#include <utility>
#include <vector>

namespace blowuplab {

enum class PerturbationFamily { Legendre, Bump };

/// Initial data (f, g). epsilon is the energy norm of (f, g) on [-1, 1] at regularity k.
struct Perturbation {
  PerturbationFamily family = PerturbationFamily::Legendre;
  double epsilon = 0.0;
  int degree = 3;
  double center = 0.0;
  double width = 0.5;
  unsigned long seed = 42;
};

/// Realised perturbation as functions on the real line, scaled to the requested amplitude.
class PerturbationData {
 public:
  PerturbationData() = default;
  PerturbationData(const Perturbation& spec, int k = 4);
  /// Polynomial data given by flat Chebyshev coefficients [f; g].
  static PerturbationData from_coefficients(const Eigen::VectorXd& flat);

  double f(double y) const;
  double g(double y) const;
  /// Flat coefficients of (f(T y), T g(T y)) on N + 1 modes.
  Eigen::VectorXd coefficients(int N, double T = 1.0) const;
  bool is_zero() const { return scale_ == 0.0; }
  double scale() const { return scale_; }
  /// Hash of the defining data, used to key trajectory caches.
  std::size_t fingerprint() const { return fingerprint_; }

 private:
  std::function<double(double)> f_;
  std::function<double(double)> g_;
  int native_modes_ = 0;  // exact modes for polynomial data, 0 for non-polynomial data
  double scale_ = 0.0;
  std::size_t fingerprint_ = 0;
};

struct EvolveConfig {
  double p = 0.75;
  double kappa = 0.0;
  double T = 1.0;
  double x0 = 0.0;
  int N = 48;
  double dt = 0.0;  // 0 selects cfl / N^2
  double cfl = 16.0;
  double tau_max = 12.0;
  int k = 4;
  bool filter = true;
  Perturbation perturbation;

  void validate() const;
};

inline constexpr double kMaxCfl = 16.0;
inline constexpr double kMaxTau = 15.0;

struct TimeGrid {
  double dt = 0.0;
  int steps = 0;
};

/// Uniform grid on [0, tau] with an even number of steps no longer than the configured dt.
TimeGrid time_grid(const EvolveConfig& cfg, double tau);

/// Exponential filter exp(-alpha eta^8) on the top third of the modes, alpha = -log(strength).
Eigen::VectorXd filter_weights(int n, double strength = 1e-13, double fraction = 1.0 / 3.0);

/// (0, q2^2) truncated to the state length.
Eigen::VectorXd nonlinearity(const Eigen::VectorXd& q);

/// Classical RK4 stepper for dq/dtau = L q + N(q) on flat coefficient vectors.
class SimilarityStepper {
 public:
  explicit SimilarityStepper(Eigen::MatrixXd L, bool filter = true, bool linear = false);

  Eigen::VectorXd rhs(const Eigen::VectorXd& q) const;
  Eigen::VectorXcd rhs(const Eigen::VectorXcd& q) const;
  Eigen::VectorXd step(const Eigen::VectorXd& q, double dt) const;
  Eigen::VectorXcd step(const Eigen::VectorXcd& q, double dt) const;
  const Eigen::MatrixXd& L() const { return L_; }

 private:
  Eigen::MatrixXd L_;
  Eigen::VectorXd sigma_;
  bool filter_;
  bool linear_;
};

StateVector step_similarity(const StateVector& q, double p, double dt, bool filter = true);

struct Trajectory {
  std::vector<double> taus;
  std::vector<Eigen::VectorXd> states;
};

/// Fixed-step evolution recording every state; aborts when the norm grows 10x in one step.
Trajectory evolve_state(const SimilarityStepper& stepper, const Eigen::VectorXd& q0, const TimeGrid& grid);

struct DuhamelIntegrals {
  Eigen::VectorXd I0;  // int N(q)
  Eigen::VectorXd I1;  // int (-tau) N(q)
  Eigen::VectorXd I2;  // int e^{-tau} N(q)
  double tail_bound = 0.0;
};

/// Composite Simpson integrals of the nonlinearity along a trajectory with an even step count.
/// Throws NumericalFailure when the trajectory attains its maximum norm at the horizon.
DuhamelIntegrals duhamel_integrals(const Trajectory& traj);

/// P0 I0 + L P0 I1 + P1 I2.
Eigen::VectorXd duhamel_correction(const DuhamelIntegrals& I, const Eigen::MatrixXd& L, const SymmetryProjectors& P);

struct DecayFit {
  std::vector<double> taus;
  std::vector<double> norms;
  std::vector<double> norms_L2;
  double fitted_rate = 0.0;
  double intercept = 0.0;
  std::pair<double, double> fit_window{2.0, 9.6};
  double r_squared = 0.0;
};

/// Least-squares fit of log(norm) against tau on [lo, hi].
DecayFit fit_decay(const std::vector<double>& taus, const std::vector<double>& norms, double lo, double hi);

/// L2 norm of the pair (q1, q2) on [-1, 1].
double l2_norm(const Eigen::VectorXd& q);

/// Evolves q0 under the full nonlinear flow and fits the decay on [2, 0.8 tau_max].
DecayFit evolve_from_state(const EvolveConfig& cfg, const Eigen::VectorXd& q0);

enum class Projection {
  None,
  Linear,          // I - P0 - P1 applied once at tau = 0
  LyapunovPerron,  // additionally subtracts the Duhamel correction of the nonlinear source
};

DecayFit evolve_perturbation(const EvolveConfig& cfg, Projection projection);
DecayFit evolve_perturbation(const EvolveConfig& cfg, bool project_out_unstable);

struct DivergenceCurve {
  double p = 0.0;
  double a = 0.0;
  std::vector<double> taus;
  std::vector<double> distance;
  double far_slope = 0.0;      // slope over the last two grid points
  double expected_slope = 0.0; // |p - 1| sqrt(2)
  bool increasing = false;     // distance increases for tau >= tau_far / 4
};

struct InstabilityReport {
  std::vector<double> p_values;
  std::vector<double> smallness;
  std::vector<DivergenceCurve> curves;
  bool smallness_decreasing = false;
};

/// Scaled Sobolev size of the Cauchy data at t = 0 relative to the ODE blow-up, minimised over a.
double smallness_functional(double p, double kappa, double T, double x0, int k);
/// || (p-1) tau - p log(1 + s y) + kappa - a ||_{L2(-1,1)}.
double ode_distance(double p, double kappa, double a, double tau);

InstabilityReport ode_blowup_instability(const std::vector<double>& p_values, double kappa,
                                         const std::vector<double>& a_values, int k = 4, double T = 1.0,
                                         double tau_far = 1e5);

struct CrosscheckReport {
  std::vector<double> t_samples;
  std::vector<double> max_abs_err;
  std::vector<double> excluded;  // samples beyond the similarity horizon
  double profile_err = 0.0;      // unperturbed physical solver against the closed form at the last sample
  int physical_steps = 0;
};

/// Evolves the same data on the shrinking interval |x - x0| <= 1.25 (T - t) and in similarity
/// variables, and compares U on [-1, 1] at each sample time.
CrosscheckReport physical_space_crosscheck(const EvolveConfig& cfg, const std::vector<double>& t_samples);

}  // namespace blowuplab
