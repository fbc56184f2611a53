#include "blowuplab/evolve.hpp"

#include "doctest.h"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

using namespace blowuplab;

TEST_CASE("filter weights") {
  const Eigen::VectorXd w = filter_weights(49);
  CHECK(w(0) == 1.0);
  CHECK(w(32) == 1.0);
  CHECK(w(48) == doctest::Approx(1e-13));
  for (int j = 1; j < 49; ++j) CHECK(w(j) <= w(j - 1));
}

TEST_CASE("nonlinearity is the truncated square of the second component") {
  const int n = 12;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(2 * n);
  q.head(n) = cheb::resized(cheb::interpolate([](double y) { return std::cos(y); }, 12), n);
  q.tail(n) = cheb::resized(cheb::interpolate([](double y) { return 1 + y - 0.5 * y * y; }, 3), n);
  const Eigen::VectorXd Nq = nonlinearity(q);
  CHECK(Nq.head(n).norm() == 0.0);
  for (double y : {-1.0, 0.1, 0.7}) {
    const double v = 1 + y - 0.5 * y * y;
    CHECK(cheb::evaluate(Eigen::VectorXd(Nq.tail(n)), y) == doctest::Approx(v * v).epsilon(1e-14));
  }
}

TEST_CASE("time grid has an even number of steps within the step bound") {
  EvolveConfig cfg;
  cfg.N = 40;
  for (double tau : {1.0, 3.3, 12.0}) {
    const TimeGrid g = time_grid(cfg, tau);
    CHECK(g.steps % 2 == 0);
    CHECK(g.dt <= 16.0 / (40.0 * 40.0) + 1e-15);
    CHECK(g.dt * g.steps == doctest::Approx(tau).epsilon(1e-14));
  }
}

TEST_CASE("configuration validation") {
  EvolveConfig cfg;
  cfg.cfl = 20;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = EvolveConfig{};
  cfg.tau_max = 20;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = EvolveConfig{};
  cfg.p = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = EvolveConfig{};
  cfg.N = 8;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_NOTHROW(EvolveConfig{}.validate());
}

TEST_CASE("linear RK4 converges to the matrix exponential at fourth order") {
  const int N = 16, n = N + 1;
  const Eigen::MatrixXd L = assemble_Lp(0.75, N);
  Eigen::VectorXd q0(2 * n);
  q0 << cheb::interpolate([](double y) { return std::sin(y); }, n), cheb::interpolate([](double y) { return y * y; }, n);
  const Eigen::VectorXd exact = (L * 1.0).exp() * q0;
  const SimilarityStepper st(L, false, true);
  auto run = [&](int steps) {
    Eigen::VectorXd q = q0;
    for (int i = 0; i < steps; ++i) q = st.step(q, 1.0 / steps);
    return (q - exact).norm();
  };
  const double e1 = run(20), e2 = run(40);
  CHECK(std::log2(e1 / e2) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("nonlinear evolution self-converges in time") {
  EvolveConfig cfg;
  cfg.N = 24;
  const int n = cfg.N + 1;
  const SimilarityStepper st(assemble_Lp(cfg.p, cfg.N), false, false);
  Eigen::VectorXd q0 = Eigen::VectorXd::Zero(2 * n);
  q0(1) = 1e-2;
  q0(n) = 2e-2;
  auto final_state = [&](int steps) { return evolve_state(st, q0, {2.0 / steps, steps}).states.back(); };
  const Eigen::VectorXd a = final_state(100), b = final_state(200), c = final_state(400);
  CHECK(std::log2((a - b).norm() / (b - c).norm()) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("Duhamel integrals of an exponentially decaying trajectory") {
  const int n = 6;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * n);
  v(n) = 1.0;
  v(n + 1) = 0.5;
  const double tm = 4.0;
  auto trajectory = [&](int steps, double rate) {
    Trajectory tr;
    for (int i = 0; i <= steps; ++i) {
      const double t = tm * i / steps;
      tr.taus.push_back(t);
      tr.states.push_back(std::exp(rate * t) * v);
    }
    return tr;
  };
  const Eigen::VectorXd w = nonlinearity(v);
  const double e2 = std::exp(-2 * tm), e3 = std::exp(-3 * tm);
  auto errors = [&](int steps) {
    const DuhamelIntegrals I = duhamel_integrals(trajectory(steps, -1.0));
    return Eigen::Vector3d((I.I0 - 0.5 * (1 - e2) * w).norm(), (I.I1 + (0.25 - e2 * (tm / 2 + 0.25)) * w).norm(),
                           (I.I2 - (1 - e3) / 3.0 * w).norm());
  };
  const Eigen::Vector3d coarse = errors(200), fine = errors(400);
  CHECK(fine.maxCoeff() < 1e-8);
  for (int j = 0; j < 3; ++j) CHECK(std::log2(coarse(j) / fine(j)) == doctest::Approx(4.0).epsilon(0.05));
  CHECK_THROWS_AS(duhamel_integrals(trajectory(200, 1.0)), NumericalFailure);
}

TEST_CASE("perturbation data is normalised, seeded and scaled") {
  Perturbation spec;
  spec.epsilon = 1e-3;
  const PerturbationData f(spec);
  for (int N : {16, 48}) CHECK(EnergyInner(N + 1, 4).norm(f.coefficients(N)) == doctest::Approx(1e-3).epsilon(1e-12));
  const Eigen::VectorXd c = f.coefficients(16, 0.5);
  for (double y : {-1.0, 0.3}) {
    CHECK(cheb::evaluate(Eigen::VectorXd(c.head(17)), y) == doctest::Approx(f.f(0.5 * y)).scale(1e-3).epsilon(1e-13));
    CHECK(cheb::evaluate(Eigen::VectorXd(c.tail(17)), y) == doctest::Approx(0.5 * f.g(0.5 * y)).scale(1e-3).epsilon(1e-13));
  }
  CHECK(PerturbationData(spec).fingerprint() == f.fingerprint());
  Perturbation other = spec;
  other.seed = 43;
  CHECK(PerturbationData(other).fingerprint() != f.fingerprint());
  CHECK(PerturbationData(other).f(0.2) != f.f(0.2));
  spec.epsilon = 0.0;
  CHECK(PerturbationData(spec).is_zero());
  spec.epsilon = -1.0;
  CHECK_THROWS_AS(PerturbationData{spec}, ConfigError);
}

TEST_CASE("ODE distance against direct quadrature") {
  CHECK(ode_distance(1.0, 0.3, 1.0, 50.0) == doctest::Approx(0.7 * std::sqrt(2.0)).epsilon(1e-12));
  const double p = 0.99, s = std::sqrt(1 - p), kappa = 0.2, a = 1.0, tau = 30.0;
  const int m = 20000;
  double acc = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double y = -1.0 + 2.0 * i / m;
    const double d = (p - 1) * tau - p * std::log1p(s * y) + kappa - a;
    acc += (i == 0 || i == m ? 0.5 : 1.0) * d * d * (2.0 / m);
  }
  CHECK(ode_distance(p, kappa, a, tau) == doctest::Approx(std::sqrt(acc)).epsilon(1e-7));
}

TEST_CASE("ODE blow-up instability report") {
  const InstabilityReport r = ode_blowup_instability({0.99, 0.999}, 0.0, {0.0, 1.0});
  CHECK(r.smallness_decreasing);
  CHECK(r.smallness[1] < r.smallness[0]);
  for (const auto& c : r.curves) {
    CHECK(c.increasing);
    CHECK(c.far_slope == doctest::Approx(c.expected_slope).epsilon(1e-6));
  }
}

TEST_CASE("projected evolution decays and unprojected evolution grows") {
  EvolveConfig cfg;
  cfg.N = 32;
  cfg.tau_max = 10;
  cfg.perturbation.epsilon = 1e-5;
  const DecayFit lp = evolve_perturbation(cfg, Projection::LyapunovPerron);
  CHECK(lp.fitted_rate < -0.8);
  const DecayFit none = evolve_perturbation(cfg, Projection::None);
  CHECK(none.norms.back() > none.norms.front());
}

TEST_CASE("physical-space and similarity solvers agree") {
  EvolveConfig cfg;
  cfg.N = 48;
  cfg.perturbation.epsilon = 1e-3;
  const CrosscheckReport r = physical_space_crosscheck(cfg, {0.25, 0.5});
  REQUIRE(r.max_abs_err.size() == 2);
  CHECK(r.max_abs_err[0] < 1e-6);
  CHECK(r.max_abs_err[1] < 1e-6);
  CHECK(r.profile_err < 1e-8);
}
