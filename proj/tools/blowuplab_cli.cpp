#include "blowuplab/errors.hpp"
#include "blowuplab/evolve.hpp"
#include "blowuplab/linop.hpp"
#include "blowuplab/modeanalysis.hpp"
#include "blowuplab/modulation.hpp"
#include "blowuplab/profiles.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <type_traits>
#include <vector>

#ifndef BLOWUPLAB_VERSION
#define BLOWUPLAB_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace blowuplab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitAcceptance = 4;

struct Params {
  std::vector<double> p{0.75};
  double T = 1.0;
  double kappa = 0.0;
  double x0 = 0.0;
  int N = 48;
  double dt = 0.0;
  double tau_max = 12.0;
  std::vector<double> epsilon{1e-4};
  double re_min = 0.0;
  double re_max = 3.0;
  double im_min = -3.0;
  double im_max = 3.0;
  double lambda_step = 0.1;
  int n_colloc = 40;
  unsigned long seed = 42;
  int k = 4;
  int samples = 500;
  int trials = 200;
  std::string projection = "lp";
  std::string family = "legendre";
  int crosscheck_N = 128;
  double crosscheck_epsilon = 1e-3;
  std::vector<double> t_sample{0.5};
  std::vector<double> a;
  double tau_far = 1e5;
  int max_iterations = 30;
  double tolerance = 1e-8;
  double damping = 1.0;
};

struct Key {
  std::string name;
  std::string help;
  std::function<CLI::Option*(CLI::App&, Params&)> bind;
  std::function<void(Params&, const Params&)> copy;
  std::function<std::string(const Params&)> show;
};

template <class M>
std::string show_value(const M& v) {
  if constexpr (std::is_same_v<M, std::vector<double>>) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : " ") + fmt::format("{:.17g}", x);
    return s;
  } else if constexpr (std::is_floating_point_v<M>) {
    return fmt::format("{:.17g}", v);
  } else {
    return fmt::format("{}", v);
  }
}

template <class M>
Key make_key(std::string name, std::string help, M Params::*m) {
  return {name, help,
          [name, help, m](CLI::App& app, Params& prm) {
            auto* opt = app.add_option("--" + name, prm.*m, help);
            if constexpr (std::is_same_v<M, std::vector<double>>) opt->delimiter(',');
            return opt;
          },
          [m](Params& dst, const Params& src) { dst.*m = src.*m; },
          [m](const Params& prm) { return show_value(prm.*m); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      make_key("p", "blow-up parameter(s), comma separated", &Params::p),
      make_key("T", "blow-up time", &Params::T),
      make_key("kappa", "additive constant", &Params::kappa),
      make_key("x0", "blow-up point", &Params::x0),
      make_key("N", "Chebyshev order", &Params::N),
      make_key("dt", "similarity time step, 0 selects 16/N^2", &Params::dt),
      make_key("tau_max", "similarity time horizon", &Params::tau_max),
      make_key("epsilon", "perturbation size(s) in the energy norm", &Params::epsilon),
      make_key("re_min", "lambda grid lower real bound", &Params::re_min),
      make_key("re_max", "lambda grid upper real bound", &Params::re_max),
      make_key("im_min", "lambda grid lower imaginary bound", &Params::im_min),
      make_key("im_max", "lambda grid upper imaginary bound", &Params::im_max),
      make_key("lambda_step", "lambda grid spacing", &Params::lambda_step),
      make_key("n_colloc", "Frobenius terms of the coarse scan (refined scan doubles it)", &Params::n_colloc),
      make_key("seed", "random seed", &Params::seed),
      make_key("k", "energy norm regularity", &Params::k),
      make_key("samples", "random cone points per p", &Params::samples),
      make_key("trials", "random states in the dissipativity check", &Params::trials),
      make_key("projection", "none | linear | lp", &Params::projection),
      make_key("family", "legendre | bump", &Params::family),
      make_key("crosscheck_N", "physical cross-check resolution, 0 disables", &Params::crosscheck_N),
      make_key("crosscheck_epsilon", "perturbation size of the cross-check", &Params::crosscheck_epsilon),
      make_key("t_sample", "cross-check sample times as fractions of T", &Params::t_sample),
      make_key("a", "ODE blow-up offsets, defaults to 0, kappa, 1", &Params::a),
      make_key("tau_far", "far similarity time of the divergence curves", &Params::tau_far),
      make_key("max_iterations", "modulation iteration cap", &Params::max_iterations),
      make_key("tolerance", "modulation convergence threshold", &Params::tolerance),
      make_key("damping", "modulation damping", &Params::damping),
  };
  return k;
}

Params defaults_for(const std::string& command) {
  Params d;
  if (command == "profile-check") d.p = {0.25, 0.5, 0.75, 1.0};
  if (command == "mode-scan") d.p = {0.25, 0.5, 0.75};
  if (command == "spectrum") {
    d.p = {0.25, 0.5, 0.75, 0.9};
    d.N = 64;
  }
  if (command == "instability-p1") d.p = {0.99, 0.999};
  if (command == "modulate") d.epsilon = {1e-5, 1e-4};
  return d;
}

void require(bool ok, const std::string& key, const std::string& domain) {
  if (!ok) throw ConfigError(fmt::format("{}: value outside its domain, expected {}", key, domain));
}

void validate(const std::string& command, const Params& prm) {
  const bool open_p = command == "spectrum" || command == "semigroup-check" || command == "evolve" ||
                      command == "modulate";
  require(!prm.p.empty(), "p", "at least one value");
  for (double p : prm.p) {
    if (open_p) require(p > 0.0 && p < 1.0, "p", "p in (0, 1)");
    else require(p > 0.0 && p <= 1.0, "p", "p in (0, 1]");
  }
  require(prm.T > 0.0, "T", "T > 0");
  require(std::isfinite(prm.kappa), "kappa", "a finite number");
  require(std::isfinite(prm.x0), "x0", "a finite number");
  require(prm.N >= 16 && prm.N <= 512, "N", "16 <= N <= 512");
  require(prm.dt >= 0.0, "dt", "dt >= 0");
  require(prm.tau_max > 0.0 && prm.tau_max <= kMaxTau, "tau_max", fmt::format("0 < tau_max <= {}", kMaxTau));
  for (double e : prm.epsilon) require(e >= 0.0, "epsilon", "epsilon >= 0");
  require(prm.re_min <= prm.re_max, "re_min", "re_min <= re_max");
  require(prm.im_min <= prm.im_max, "im_min", "im_min <= im_max");
  require(prm.lambda_step > 0.0, "lambda_step", "lambda_step > 0");
  require(prm.n_colloc >= 8, "n_colloc", "n_colloc >= 8");
  require(prm.k >= 1 && prm.k <= 8, "k", "1 <= k <= 8");
  require(prm.samples >= 1, "samples", "samples >= 1");
  require(prm.trials >= 1, "trials", "trials >= 1");
  require(prm.projection == "none" || prm.projection == "linear" || prm.projection == "lp", "projection",
          "one of none, linear, lp");
  require(prm.family == "legendre" || prm.family == "bump", "family", "one of legendre, bump");
  require(prm.crosscheck_N == 0 || (prm.crosscheck_N >= 16 && prm.crosscheck_N <= 512), "crosscheck_N",
          "0 or 16 <= crosscheck_N <= 512");
  require(prm.crosscheck_epsilon >= 0.0, "crosscheck_epsilon", "crosscheck_epsilon >= 0");
  for (double t : prm.t_sample) require(t > 0.0 && t < 1.0, "t_sample", "fractions in (0, 1)");
  require(prm.tau_far > 2.0, "tau_far", "tau_far > 2");
  require(prm.max_iterations >= 1, "max_iterations", "max_iterations >= 1");
  require(prm.tolerance > 0.0, "tolerance", "tolerance > 0");
  require(prm.damping > 0.0 && prm.damping <= 1.0, "damping", "0 < damping <= 1");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string cell(double v) { return fmt::format("{:.17g}", v); }
std::string cell(int v) { return fmt::format("{}", v); }
std::string cell(bool v) { return v ? "1" : "0"; }
std::string cell(const std::string& v) { return csv_field(v); }
std::string cell(const char* v) { return csv_field(v); }

/// Buffers rows in memory; commit() writes them to a temporary file and renames it into place.
class Csv {
 public:
  Csv(fs::path path, const std::vector<std::string>& header) : path_(std::move(path)) {
    std::string line;
    for (const auto& h : header) line += (line.empty() ? "" : ",") + csv_field(h);
    body_ = line + "\r\n";
    columns_ = header.size();
  }

  template <class... Ts>
  void row(const Ts&... vals) {
    static_assert(sizeof...(Ts) > 0);
    if (sizeof...(Ts) != columns_) throw std::logic_error("csv row width mismatch for " + path_.string());
    std::string line;
    ((line += (line.empty() ? "" : ",") + cell(vals)), ...);
    body_ += line + "\r\n";
  }

  fs::path commit() {
    const fs::path tmp = path_.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out << body_;
      if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path_);
    return path_;
  }

 private:
  fs::path path_;
  std::string body_;
  std::size_t columns_ = 0;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct StageResult {
  std::string command;
  std::string label;
  Params prm;
  std::vector<Check> checks;
  std::vector<fs::path> files;
  double seconds = 0.0;
  std::string error;
  int error_code = kExitOk;
};

std::string tag(const char* name, double v) { return fmt::format("{}{:g}", name, v); }

class Stage {
 public:
  Stage(StageResult& r, fs::path dir) : r_(r), dir_(std::move(dir)) {}
  Csv csv(const std::string& name, const std::vector<std::string>& header) { return Csv(dir_ / name, header); }
  void commit(Csv& c) { r_.files.push_back(c.commit()); }
  void check(std::string name, bool ok, std::string detail) { r_.checks.push_back({std::move(name), ok, std::move(detail)}); }
  const fs::path& dir() const { return dir_; }
  StageResult& result() { return r_; }

 private:
  StageResult& r_;
  fs::path dir_;
};

void run_profile_check(const Params& prm, Stage& st) {
  const std::vector<double> hs{8e-3, 4e-3, 2e-3, 1e-3};
  auto table = st.csv("profile_residuals.csv", {"p", "h", "max_residual", "observed_order", "max_extrapolated"});
  for (double p : prm.p) {
    ProfileParams pp{p, 1, prm.kappa, prm.T, prm.x0};
    std::mt19937_64 rng(prm.seed);
    std::uniform_real_distribution<double> ut(0.05 * prm.T, 0.5 * prm.T), ux(-0.5, 0.5);
    std::vector<ConePoint> pts(prm.samples);
    for (auto& pt : pts) {
      pt.t = ut(rng);
      pt.x = prm.x0 + ux(rng) * (prm.T - pt.t);
    }
    std::vector<double> res, ext;
    for (double h : hs) {
      double m = 0.0, e = 0.0;
      for (const auto& pt : pts) {
        m = std::max(m, pde_residual(pp, pt, h));
        e = std::max(e, pde_residual_extrapolated(pp, pt, h));
      }
      res.push_back(m);
      ext.push_back(e);
    }
    double min_order = 1e300;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      double order = std::nan("");
      if (i > 0 && res[i] > 0.0 && res[i - 1] > 0.0) {
        order = std::log(res[i - 1] / res[i]) / std::log(hs[i - 1] / hs[i]);
        if (res[i - 1] > 1e-12) min_order = std::min(min_order, order);
      }
      table.row(p, hs[i], res[i], order, ext[i]);
    }
    if (min_order == 1e300) min_order = 4.0;  // residual at roundoff for every h
    st.check(fmt::format("residual order p={:g}", p), min_order >= 3.5, fmt::format("min order {:.3f}", min_order));
    st.check(fmt::format("extrapolated residual at h=1e-3 p={:g}", p), ext.back() < 1e-9,
             fmt::format("{:.3e}, plain stencil {:.3e}", ext.back(), res.back()));
  }
  st.commit(table);

  auto roots = st.csv("denominator_roots.csv", {"function", "p", "c", "root", "value_left", "value_right"});
  auto bracket = [&](const std::string& fn, double p, double c, const std::function<double(double)>& f, double y) {
    const double l = f(y - 1e-12), r = f(y + 1e-12);
    roots.row(fn, p, c, y, l, r);
    st.check(fmt::format("{} root p={:g} c={:g}", fn, p, c), f(y) == 0.0 || l * r <= 0.0, fmt::format("y={:.15f}", y));
  };
  for (double c : {-5.0, 0.0, 5.0}) {
    bracket("p_c", 0.0, c, [c](double y) { return exact_ss_denominator(c, y); }, find_denominator_zero(c));
  }
  for (double p : {0.5, 0.75}) {
    for (double c : {0.5, 1.0, 2.0}) {
      bracket("h_c", p, c, [p, c](double y) { return general_riccati_denominator(p, c, y); },
              find_general_denominator_zero(p, c));
    }
  }
  st.commit(roots);
}

void run_mode_scan(const Params& prm, Stage& st) {
  const auto grid = lambda_grid(prm.re_min, prm.re_max, prm.im_min, prm.im_max, prm.lambda_step);
  for (double p : prm.p) {
    const auto coarse = mode_scan(p, grid, prm.n_colloc);
    const auto fine = mode_scan(p, grid, 2 * prm.n_colloc);
    auto out = st.csv(fmt::format("mode_scan_{}.csv", tag("p", p)), {"re", "im", "defect", "defect_refined", "near_symmetry"});
    int bad_small = 0, bad_large = 0, unstable = 0;
    double min_far = 1e300;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const cplx l = grid[i];
      bool near = std::min(std::abs(l), std::abs(l - 1.0)) <= 0.05;
      if (p == 1.0) {
        // the degenerate family has its only modes at 1 - n
        const double n = std::round(1.0 - l.real());
        near = n >= 0.0 && std::abs(l - cplx(1.0 - n, 0.0)) <= 0.05;
      }
      const double d0 = coarse[i].defect, d1 = fine[i].defect;
      out.row(l.real(), l.imag(), d0, d1, near);
      if (!near) {
        min_far = std::min({min_far, d0, d1});
        if (d0 < 1e-6 || d1 < 1e-6) ++bad_small;
        if (d0 <= 1e-3 || d1 <= 1e-3) ++bad_large;
      }
      if ((d0 < 1e-6) != (d1 < 1e-6)) ++unstable;
    }
    st.commit(out);
    st.check(fmt::format("no defect-free lambda away from symmetry p={:g}", p), bad_small == 0,
             fmt::format("{} offending points", bad_small));
    st.check(fmt::format("defect > 1e-3 away from symmetry p={:g}", p), bad_large == 0,
             fmt::format("min defect {:.3e}", min_far));
    st.check(fmt::format("classification stable under doubling p={:g}", p), unstable == 0,
             fmt::format("{} points change", unstable));
    if (p == 1.0) {
      const int d0 = smooth_eigenspace_dim(1.0, 0.0);
      const int d1 = smooth_eigenspace_dim(1.0, 1.0);
      st.check("p=1 lambda=0 admits constants and y", d0 == 2, fmt::format("dim {}", d0));
      st.check("p=1 lambda=1 simple", d1 == 1, fmt::format("dim {}", d1));
    }
  }
}

void run_spectrum(const Params& prm, Stage& st) {
  nlohmann::json report = nlohmann::json::array();
  for (double p : prm.p) {
    const SpectrumReport sp = spectrum(p, prm.N, prm.k);
    const TripleResiduals tr = eigen_triple_residuals(p, prm.N, prm.k);
    const Eigen::MatrixXd L = assemble_Lp(p, prm.N);
    const RieszResult r0 = riesz_projection(L, {0.0, 0.25, 64});
    const RieszResult r1 = riesz_projection(L, {1.0, 0.5, 64});
    const double prod = (r0.P * r1.P).norm() / (r0.P.norm() * r1.P.norm());

    auto out = st.csv(fmt::format("spectrum_{}_N{}.csv", tag("p", p), prm.N), {"re", "im", "residual", "robust"});
    nlohmann::json robust = nlohmann::json::array();
    for (std::size_t i = 0; i < sp.eigenvalues.size(); ++i) {
      out.row(sp.eigenvalues[i].real(), sp.eigenvalues[i].imag(), sp.residuals[i], bool(sp.robust[i]));
      if (sp.robust[i]) robust.push_back({sp.eigenvalues[i].real(), sp.eigenvalues[i].imag()});
    }
    st.commit(out);
    report.push_back({{"p", p},
                      {"N", prm.N},
                      {"robust_eigenvalues", robust},
                      {"robust_fraction", sp.robust_fraction()},
                      {"contaminated", sp.contaminated},
                      {"gap_raw", sp.gap_raw},
                      {"omega0", sp.gap_omega0},
                      {"gap_fallback", sp.gap_fallback},
                      {"cluster0", sp.cluster0},
                      {"cluster1", sp.cluster1},
                      {"rank_P0", r0.rank},
                      {"rank_P1", r1.rank},
                      {"idempotency_P0", r0.idempotency},
                      {"idempotency_P1", r1.idempotency},
                      {"projector_product", prod},
                      {"residual_f0", tr.f0},
                      {"residual_f1", tr.f1},
                      {"residual_g0", tr.g0},
                      {"residual_g0_squared", tr.g0_sq}});
    st.check(fmt::format("eigen triple residuals p={:g}", p), tr.max() < 1e-7, fmt::format("max {:.3e}", tr.max()));
    st.check(fmt::format("projector ranks p={:g}", p), r0.rank == 2 && r1.rank == 1,
             fmt::format("rank P0 {} rank P1 {}", r0.rank, r1.rank));
    st.check(fmt::format("projector idempotency p={:g}", p), std::max(r0.idempotency, r1.idempotency) < 1e-8,
             fmt::format("{:.3e}", std::max(r0.idempotency, r1.idempotency)));
    st.check(fmt::format("projector product p={:g}", p), prod < 1e-7, fmt::format("{:.3e}", prod));
    st.check(fmt::format("gap p={:g}", p), sp.gap_omega0 > 0.0 && sp.gap_omega0 <= 0.5,
             fmt::format("omega0 {:.6f}", sp.gap_omega0));
  }
  const double diss = free_wave_dissipativity_check(prm.N, prm.k, prm.trials, prm.seed);
  report.push_back({{"dissipativity_max", diss}, {"trials", prm.trials}});
  st.check("modified free wave dissipativity", diss <= -0.5 + 1e-3, fmt::format("max {:.6f}", diss));

  const fs::path path = st.dir() / "spectral_report.json";
  {
    std::ofstream out(path.string() + ".tmp");
    out << report.dump(2) << "\n";
  }
  fs::rename(path.string() + ".tmp", path);
  st.result().files.push_back(path);
}

void run_semigroup(const Params& prm, Stage& st) {
  std::vector<double> taus;
  for (int i = 1; i <= 8; ++i) taus.push_back(double(i));
  auto summary = st.csv("semigroup_summary.csv",
                        {"p", "N", "omega0", "omega0_doubled", "err_P1", "err_P0", "stable_slope", "projector_product"});
  for (double p : prm.p) {
    const SemigroupReport sg = semigroup_action_check(p, prm.N, prm.k, 1.0, taus, prm.seed);
    const double om2 = spectrum(p, 2 * prm.N, prm.k).gap_omega0;
    auto out = st.csv(fmt::format("semigroup_{}_N{}.csv", tag("p", p), prm.N), {"tau", "stable_norm"});
    for (std::size_t i = 0; i < sg.taus.size(); ++i) out.row(sg.taus[i], sg.stable_norms[i]);
    st.commit(out);
    summary.row(p, prm.N, sg.omega0, om2, sg.err_P1, sg.err_P0, sg.stable_slope, sg.projector_product);
    st.check(fmt::format("omega0 robust under doubling p={:g}", p),
             sg.omega0 > 0.0 && sg.omega0 <= 0.5 && std::abs(om2 - sg.omega0) <= 0.1 * sg.omega0,
             fmt::format("{:.6f} vs {:.6f}", sg.omega0, om2));
    st.check(fmt::format("exp(L) P1 = e P1 p={:g}", p), sg.err_P1 < 1e-6, fmt::format("{:.3e}", sg.err_P1));
    st.check(fmt::format("exp(L) P0 = P0 + L P0 p={:g}", p), sg.err_P0 < 1e-6, fmt::format("{:.3e}", sg.err_P0));
    st.check(fmt::format("stable decay p={:g}", p), sg.stable_slope <= -0.9 * sg.omega0,
             fmt::format("slope {:.4f}", sg.stable_slope));
  }
  st.commit(summary);
}

EvolveConfig evolve_config(const Params& prm, double p, double eps) {
  EvolveConfig cfg;
  cfg.p = p;
  cfg.kappa = prm.kappa;
  cfg.T = prm.T;
  cfg.x0 = prm.x0;
  cfg.N = prm.N;
  cfg.dt = prm.dt;
  cfg.tau_max = prm.tau_max;
  cfg.k = prm.k;
  cfg.perturbation.family = prm.family == "bump" ? PerturbationFamily::Bump : PerturbationFamily::Legendre;
  cfg.perturbation.epsilon = eps;
  cfg.perturbation.seed = prm.seed;
  return cfg;
}

void write_decay(Stage& st, const std::string& name, const DecayFit& fit) {
  auto out = st.csv(name, {"tau", "norm_k", "norm_L2"});
  for (std::size_t i = 0; i < fit.taus.size(); ++i) out.row(fit.taus[i], fit.norms[i], fit.norms_L2[i]);
  st.commit(out);
}

void run_evolve(const Params& prm, Stage& st) {
  const Projection proj = prm.projection == "none"     ? Projection::None
                          : prm.projection == "linear" ? Projection::Linear
                                                       : Projection::LyapunovPerron;
  auto summary = st.csv("evolve_summary.csv",
                        {"p", "epsilon", "projection", "omega0", "fitted_rate", "intercept", "r_squared", "fit_lo", "fit_hi"});
  for (double p : prm.p) {
    const double om = spectrum(p, prm.N, prm.k).gap_omega0;
    for (double eps : prm.epsilon) {
      const DecayFit fit = evolve_perturbation(evolve_config(prm, p, eps), proj);
      write_decay(st, fmt::format("decay_{}_{}.csv", tag("p", p), tag("eps", eps)), fit);
      summary.row(p, eps, prm.projection, om, fit.fitted_rate, fit.intercept, fit.r_squared, fit.fit_window.first,
                  fit.fit_window.second);
      if (proj != Projection::None && eps > 0.0) {
        st.check(fmt::format("decay p={:g} eps={:g}", p, eps), fit.fitted_rate <= -0.8 * om,
                 fmt::format("rate {:.4f}, omega0 {:.4f}", fit.fitted_rate, om));
      }
    }
    if (prm.crosscheck_N > 0) {
      EvolveConfig cfg = evolve_config(prm, p, prm.crosscheck_epsilon);
      cfg.N = prm.crosscheck_N;
      std::vector<double> ts;
      for (double f : prm.t_sample) ts.push_back(f * prm.T);
      const CrosscheckReport cc = physical_space_crosscheck(cfg, ts);
      auto out = st.csv(fmt::format("crosscheck_{}_N{}.csv", tag("p", p), cfg.N), {"t", "max_abs_err"});
      double worst = 0.0;
      for (std::size_t i = 0; i < cc.t_samples.size(); ++i) {
        out.row(cc.t_samples[i], cc.max_abs_err[i]);
        worst = std::max(worst, cc.max_abs_err[i]);
      }
      st.commit(out);
      st.check(fmt::format("physical vs similarity p={:g}", p), !cc.t_samples.empty() && worst < 1e-4,
               fmt::format("max err {:.3e} over {} samples, {} excluded", worst, cc.t_samples.size(), cc.excluded.size()));
    }
  }
  st.commit(summary);
}

void run_instability(const Params& prm, Stage& st) {
  std::vector<double> as = prm.a;
  if (as.empty()) as = {0.0, prm.kappa, 1.0};
  std::sort(as.begin(), as.end());
  as.erase(std::unique(as.begin(), as.end()), as.end());
  const InstabilityReport rep = ode_blowup_instability(prm.p, prm.kappa, as, prm.k, prm.T, prm.tau_far);
  auto summary = st.csv("instability_summary.csv",
                        {"p", "a", "smallness", "far_slope", "expected_slope", "relative_error", "increasing"});
  for (std::size_t i = 0; i < rep.p_values.size(); ++i) {
    const double p = rep.p_values[i];
    auto out = st.csv(fmt::format("instability_{}.csv", tag("p", p)), {"a", "tau", "distance"});
    for (const auto& c : rep.curves) {
      if (c.p != p) continue;
      for (std::size_t j = 0; j < c.taus.size(); ++j) out.row(c.a, c.taus[j], c.distance[j]);
      const double rel = std::abs(c.far_slope - c.expected_slope) / c.expected_slope;
      summary.row(p, c.a, rep.smallness[i], c.far_slope, c.expected_slope, rel, c.increasing);
      st.check(fmt::format("linear divergence p={:g} a={:g}", p, c.a), c.increasing && rel < 1e-3,
               fmt::format("slope {:.9f} vs {:.9f}", c.far_slope, c.expected_slope));
    }
    st.commit(out);
  }
  st.commit(summary);
  if (rep.p_values.size() > 1) {
    std::string vals;
    for (double s : rep.smallness) vals += fmt::format("{}{:.6f}", vals.empty() ? "" : " ", s);
    st.check("smallness decreases towards p=1", rep.smallness_decreasing, vals);
  }
}

void run_modulate(const Params& prm, Stage& st) {
  const double p0 = prm.p.front();
  const Baseline base{p0, prm.T, prm.kappa};
  SearchConfig sc;
  sc.N = prm.N;
  sc.k = prm.k;
  sc.tau_max = prm.tau_max;
  sc.max_iterations = prm.max_iterations;
  sc.tolerance = prm.tolerance;
  sc.damping = prm.damping;
  const double om = spectrum(p0, prm.N, prm.k).gap_omega0;

  auto summary = st.csv("modulation_summary.csv",
                        {"epsilon", "p_star", "T_star", "kappa_star", "correction_norm", "iterations", "converged",
                         "evolutions", "displacement", "fitted_rate", "r_squared", "omega0"});
  std::vector<double> log_eps, log_disp;
  for (double eps : prm.epsilon) {
    Perturbation pert;
    pert.family = prm.family == "bump" ? PerturbationFamily::Bump : PerturbationFamily::Legendre;
    pert.epsilon = eps;
    pert.seed = prm.seed;
    const PerturbationData f(pert, prm.k);
    const ModulationState s = fit_parameters(f, base, sc);

    auto log = st.csv(fmt::format("modulation_{}.csv", tag("eps", eps)),
                      {"iter", "p", "T", "kappa", "F1", "F2", "F3", "correction_norm", "broyden"});
    for (const auto& it : s.log) {
      log.row(it.iter, it.p, it.T, it.kappa, it.F(0), it.F(1), it.F(2), it.correction_norm, it.broyden);
    }
    st.commit(log);

    const DecayFit fit = evolve_fitted(s, sc);
    write_decay(st, fmt::format("decay_modulated_{}.csv", tag("eps", eps)), fit);
    const double disp = parameter_displacement(s, base);
    summary.row(eps, s.p_star, s.T_star, s.kappa_star, s.correction_norm, s.iterations, s.converged, s.evolutions, disp,
                fit.fitted_rate, fit.r_squared, om);
    if (eps > 0.0 && disp > 0.0) {
      log_eps.push_back(std::log(eps));
      log_disp.push_back(std::log(disp));
    }
    st.check(fmt::format("modulation converges eps={:g}", eps),
             s.converged && s.correction_norm < prm.tolerance && s.iterations <= prm.max_iterations,
             fmt::format("{} iterations, correction {:.3e}", s.iterations, s.correction_norm));
    st.check(fmt::format("fitted evolution decays eps={:g}", eps), fit.fitted_rate <= -0.8 * om,
             fmt::format("rate {:.4f}, omega0 {:.4f}", fit.fitted_rate, om));
    st.check(fmt::format("fitted evolution is exponential eps={:g}", eps), fit.r_squared >= 0.98,
             fmt::format("r^2 {:.5f}", fit.r_squared));
  }
  st.commit(summary);
  if (log_eps.size() > 1) {
    const std::size_t n = log_eps.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += log_eps[i] / n;
      my += log_disp[i] / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxy += (log_eps[i] - mx) * (log_disp[i] - my);
      sxx += (log_eps[i] - mx) * (log_eps[i] - mx);
    }
    const double slope = sxy / sxx;
    st.check("displacement slope against epsilon", std::abs(slope - 1.0) <= 0.1, fmt::format("slope {:.4f}", slope));
  }
}

void run_appendixB(const Params&, Stage& st) {
  const AppendixBReport b = appendixB_no_second_jordan_block();
  auto out = st.csv("appendixB.csv", {"quantity", "value"});
  out.row("c_forced", b.c_forced);
  out.row("singular_coeff_at_window", b.singular_coeff_at_window);
  out.row("dv1_variation", b.dv1_variation);
  out.row("slope_at_plus_one", b.slope_at_plus_one);
  out.row("slope_at_minus_one", b.slope_at_minus_one);
  out.row("ode_crosscheck", b.ode_crosscheck);
  out.row("jump", b.jump);
  out.row("jump_expected", b.jump_expected);
  out.row("arg_left", b.arg_left);
  out.row("arg_right", b.arg_right);
  st.commit(out);
  st.check("dv1 bounded near y=1", b.dv1_variation < 0.01, fmt::format("variation {:.3e}", b.dv1_variation));
  st.check("log-slope of |d2v1| near y=1", std::abs(b.slope_at_plus_one + 0.5) <= 0.05,
           fmt::format("slope {:.4f}", b.slope_at_plus_one));
  st.check("arctan jump across y=-1/2", std::abs(b.jump - b.jump_expected) < 1e-8,
           fmt::format("{:.12f} vs {:.12f}", b.jump, b.jump_expected));
}

using Runner = std::function<void(const Params&, Stage&)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> r = {
      {"profile-check", run_profile_check}, {"mode-scan", run_mode_scan},        {"spectrum", run_spectrum},
      {"semigroup-check", run_semigroup},   {"evolve", run_evolve},              {"instability-p1", run_instability},
      {"modulate", run_modulate},           {"appendixB", run_appendixB},
  };
  return r;
}

StageResult run_stage(const std::string& command, const std::string& label, const Params& prm, const fs::path& dir) {
  StageResult r;
  r.command = command;
  r.label = label;
  r.prm = prm;
  Stage st(r, dir);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    validate(command, prm);
    runners().at(command)(prm, st);
  } catch (const ConfigError& e) {
    r.error = e.what();
    r.error_code = kExitConfig;
  } catch (const std::exception& e) {
    r.error = e.what();
    r.error_code = kExitNumerical;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::vector<StageResult>& stages,
                    int status) {
  std::string m;
  m += fmt::format("command = {}\n", command);
  m += fmt::format("version = {}\n", BLOWUPLAB_VERSION);
  m += "rng = mt19937_64\n";
  m += fmt::format("output_dir = {}\n", dir.string());
  m += fmt::format("exit_status = {}\n", status);
  for (const auto& s : stages) {
    m += fmt::format("\n[{}]\n", s.label);
    for (const auto& k : keys()) m += fmt::format("{} = {}\n", k.name, k.show(s.prm));
    m += fmt::format("seconds = {:.3f}\n", s.seconds);
    if (!s.error.empty()) m += fmt::format("error = {}\n", s.error);
    for (const auto& f : s.files) m += fmt::format("file = {}\n", f.filename().string());
    for (const auto& c : s.checks) m += fmt::format("check = {} | {} | {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
  }
  const fs::path path = dir / "manifest.txt";
  std::ofstream(path.string() + ".tmp") << m;
  fs::rename(path.string() + ".tmp", path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks for generalised self-similar blow-up of u_tt - u_xx = (u_t)^2"};
  app.set_config("--config", "", "INI file with one [command] section of key = value lines");
  app.allow_config_extras(false);
  app.require_subcommand(1);
  std::string output_dir = "blowuplab_out";
  app.add_option("--output-dir", output_dir, "directory for CSV files and the manifest");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"profile-check", "PDE residuals of the explicit profiles and denominator roots"},
      {"mode-scan", "connection defect over a lambda grid"},
      {"spectrum", "eigenvalues, eigen-triple residuals and Riesz projectors of L_p"},
      {"semigroup-check", "action of exp(tau L) on the symmetry modes and the stable subspace"},
      {"evolve", "nonlinear evolution of projected perturbations and the physical-space cross-check"},
      {"instability-p1", "smallness functional and divergence from the ODE blow-up as p -> 1"},
      {"modulate", "modulation parameter fit and un-projected decay"},
      {"appendixB", "Jordan chain checks at p = 1"},
      {"all", "every stage with its own defaults"}};
  std::map<std::string, Params> params;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [c, help] : commands) {
    params[c] = defaults_for(c);
    subs[c] = app.add_subcommand(c, help);
    for (const auto& k : keys()) k.bind(*subs[c], params[c]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  }

  if (const char* env = std::getenv("BLOWUPLAB_OUT")) output_dir = env;
  const fs::path dir(output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    fmt::print(stderr, "config error: output_dir {}: {}\n", dir.string(), ec.message());
    return kExitConfig;
  }

  std::string command;
  for (const auto& [c, help] : commands) {
    if (subs[c]->parsed()) command = c;
  }

  std::vector<std::pair<std::string, std::pair<std::string, Params>>> plan;
  if (command == "all") {
    for (const auto& [c, help] : commands) {
      if (c == "all") continue;
      Params d = defaults_for(c);
      for (const auto& k : keys()) {
        if (subs["all"]->get_option("--" + k.name)->count() > 0) k.copy(d, params["all"]);
      }
      plan.push_back({c, {c, d}});
      if (c == "mode-scan") {
        Params d1 = d;
        d1.p = {1.0};
        d1.re_min = std::min(d.re_min, -0.9);
        plan.push_back({c, {"mode-scan p=1", d1}});
      }
    }
  } else {
    try {
      validate(command, params[command]);
    } catch (const ConfigError& e) {
      fmt::print(stderr, "config error: {}\n", e.what());
      return kExitConfig;
    }
    plan.push_back({command, {command, params[command]}});
  }

  std::vector<StageResult> results;
  int status = kExitOk;
  for (const auto& [cmd, lp] : plan) {
    results.push_back(run_stage(cmd, lp.first, lp.second, dir));
    const StageResult& r = results.back();
    for (const auto& c : r.checks) fmt::print("{} [{}] {}: {}\n", c.passed ? "PASS" : "FAIL", r.label, c.name, c.detail);
    if (!r.error.empty()) fmt::print(stderr, "{} [{}] {}\n", r.error_code == kExitConfig ? "config error" : "numerical failure", r.label, r.error);
    int code = r.error_code;
    if (code == kExitOk && std::any_of(r.checks.begin(), r.checks.end(), [](const Check& c) { return !c.passed; })) {
      code = kExitAcceptance;
    }
    if (code == kExitConfig || status == kExitConfig) status = kExitConfig;
    else if (code == kExitNumerical || status == kExitNumerical) status = kExitNumerical;
    else status = std::max(status, code);
  }
  write_manifest(dir, command, results, status);
  return status;
}
