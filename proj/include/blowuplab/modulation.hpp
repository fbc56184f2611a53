#pragma once

#include "blowuplab/evolve.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <vector>

namespace blowuplab {

struct Baseline {
  double p0 = 0.75;
  double T0 = 1.0;
  double kappa0 = 0.0;
};

/// U_{p,T,kappa}(f) = f^T + f0^T - f_{p,kappa} on N + 1 modes, with
/// f0^T the baseline profile seen at scale T and f_{p,kappa} the trial profile.
Eigen::VectorXd initial_data_operator(double p, double T, double kappa, const Baseline& base,
                                      const PerturbationData& f, int N);

struct GramData {
  Eigen::Matrix3d Gamma;
  Eigen::Matrix3d Gamma_inv;
  std::array<Eigen::VectorXd, 3> basis;  // g0, f0, f1
  std::array<Eigen::VectorXd, 3> dual;
  double condition = 0.0;
};

/// Gram matrix of {g0, f0, f1} in the energy inner product and the dual basis.
GramData gram_dual_basis(double p, int N, int k = 4);

/// Operator data at fixed p shared by all correction evaluations.
struct OperatorData {
  double p = 0.0;
  Eigen::MatrixXd L;
  SymmetryProjectors P;
  GramData gram;
};

OperatorData operator_data(double p, int N, int k = 4);

struct CorrectionResult {
  Eigen::Vector3d ell = Eigen::Vector3d::Zero();  // coefficients of C along g0, f0, f1
  Eigen::Vector3d F = Eigen::Vector3d::Zero();
  Eigen::VectorXd u;  // initial data U_{p,T,kappa}(f)
  Eigen::VectorXd C;  // correction
  double correction_norm = 0.0;
  double tail_bound = 0.0;
};

/// C = (P0 + P1) u + P0 int N + L P0 int (-tau) N + P1 int e^{-tau} N and its dual-basis pairings.
/// An empty trajectory stands for q = 0.
CorrectionResult correction_functional(double p, double T, double kappa, const Baseline& base,
                                       const PerturbationData& f, const Trajectory& traj, const OperatorData& op,
                                       int k = 4);

/// Fixed-point map (p, kappa, T) -> (p0 + F1, kappa0 - p(T/T0 - 1) + p(p0 - p)/(2(1 - p)) + F2, T0(1 + sqrt(1-p) F3)).
Eigen::Vector3d modulation_map(const Eigen::Vector3d& x, const Eigen::Vector3d& F, const Baseline& base);

struct SearchConfig {
  int N = 48;
  int k = 4;
  double tau_max = 12.0;
  double cfl = 16.0;
  bool filter = true;
  double damping = 1.0;
  int max_iterations = 30;
  double tolerance = 1e-8;         // correction norm required for convergence
  double polish_tolerance = 0.0;   // iteration continues towards this while the norm keeps halving
  double max_data_norm = 1e-3;
  double reuse_tol = 1e-12;  // parameter motion below which a cached trajectory is reused
  std::optional<Eigen::Vector3d> start;  // (p, kappa, T), defaults to the baseline
};

struct ModulationIterate {
  int iter = 0;
  double p = 0.0;
  double T = 0.0;
  double kappa = 0.0;
  Eigen::Vector3d F = Eigen::Vector3d::Zero();
  double correction_norm = 0.0;
  bool broyden = false;
};

struct ModulationState {
  double p_star = 0.0;
  double T_star = 0.0;
  double kappa_star = 0.0;
  double correction_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  int evolutions = 0;
  double tail_bound = 0.0;
  std::vector<ModulationIterate> log;
  Eigen::VectorXd data;  // U_{p*,T*,kappa*}(f)
};

ModulationState fit_parameters(const PerturbationData& f, const Baseline& base, const SearchConfig& cfg);

/// |p0 - p*| + |kappa0 - kappa*| + |1 - T0/T*|.
double parameter_displacement(const ModulationState& s, const Baseline& base);

/// Evolves U_{p*,T*,kappa*}(f) without projection at the fitted parameters.
DecayFit evolve_fitted(const ModulationState& s, const SearchConfig& cfg);

}  // namespace blowuplab
