#include "blowuplab/modeanalysis.hpp"

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace blowuplab {

namespace {

bool near_integer(cplx z, double tol = 1e-9) {
  return std::abs(z.imag()) < tol && std::abs(z.real() - std::round(z.real())) < tol;
}

}  // namespace

PartialFractionCoeffs pf_coeffs(double p, cplx lambda) {
  if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("p must lie in (0,1]");
  const double s = std::sqrt(1.0 - p);
  const cplx l = lambda;
  PartialFractionCoeffs c;
  c.A = l - s;
  c.B = l + s;
  c.C = 2.0 * s;
  c.D = l * l / 2.0 - l / 2.0 + l * s;
  c.E = -l * l / 2.0 + l / 2.0 + l * s;
  c.F = -2.0 * l * (1.0 - p);
  return c;
}

SimilarityCoords lorentz_similarity_map(double p, double tau_prime, double y_prime) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("p must lie in (0,1)");
  const double s = std::sqrt(1.0 - p);
  const double den = 1.0 - s * y_prime;
  if (!(den > 0.0)) throw std::domain_error("Lorentz similarity map undefined for 1 - s y' <= 0");
  return {tau_prime - std::log(den / p), (y_prime - s) / den};
}

HypergeomParams lorentz_hypergeom_params(double p, cplx lambda) {
  return {lambda, lambda - 1.0, lambda - std::sqrt(1.0 - p)};
}

SeriesValue hypergeom_2F1(cplx a, cplx b, cplx c, cplx z, int N) {
  if (near_integer(c, 1e-14) && c.real() <= 0.5) throw std::domain_error("2F1: c is a non-positive integer");
  SeriesValue out;
  cplx term = 1.0;
  cplx sum = 1.0;
  for (int n = 0; n < N - 1; ++n) {
    term *= (a + double(n)) * (b + double(n)) / ((c + double(n)) * double(n + 1)) * z;
    sum += term;
    if (term == 0.0) break;
  }
  out.value = sum;
  const double az = std::abs(z);
  if (az < 1.0) {
    out.tail_estimate = std::abs(term) * az / (1.0 - az);
    out.converged = out.tail_estimate <= 1e-14 * std::max(1.0, std::abs(sum));
  } else {
    out.tail_estimate = std::numeric_limits<double>::infinity();
    out.converged = false;
  }
  return out;
}

cplx series_coeff_ratio(double p, cplx lambda, long n) {
  const double s = std::sqrt(1.0 - p);
  const double nn = double(n);
  if (n >= 1 && (std::abs(lambda) < 1e-14 || std::abs(lambda - 1.0) < 1e-14))
    throw std::domain_error("series coefficients vanish for lambda in {0,1}");
  const cplx den = (nn + 1.0) * (lambda + s + nn);
  if (std::abs(den) == 0.0) throw std::domain_error("series coefficient ratio has a zero denominator");
  return (lambda + nn) * (lambda + nn - 1.0) / den;
}

cplx series_coeff_log(double p, cplx lambda, long n) {
  cplx acc = 0.0;
  for (long k = 0; k < n; ++k) {
    const cplx r = series_coeff_ratio(p, lambda, k);
    if (r == 0.0) throw std::domain_error("series terminates, coefficient is zero");
    acc += std::log(r);
  }
  return acc;
}

IndicialRoots indicial_roots(cplx p0, cplx q0) {
  // s^2 + (p0 - 1) s + q0 = 0
  const cplx b = p0 - 1.0;
  const cplx disc = std::sqrt(b * b - 4.0 * q0);
  cplx r1 = (-b + disc) / 2.0;
  cplx r2 = (-b - disc) / 2.0;
  if (r2.real() > r1.real()) std::swap(r1, r2);
  return {r1, r2};
}

namespace {

cplx indicial(const LocalData& d, cplx s) { return s * (s - 1.0) + d.p[0] * s + d.q[0]; }

cplx recurrence_sum(const LocalData& d, cplx s, const std::vector<cplx>& a, int n) {
  cplx acc = 0.0;
  for (int k = 0; k < n; ++k) acc += ((s + double(k)) * d.p[n - k] + d.q[n - k]) * a[k];
  return acc;
}

}  // namespace

FrobeniusExpansion frobenius_coeffs(const LocalData& d, cplx s, int N) {
  if (int(d.p.size()) < N || int(d.q.size()) < N) throw std::invalid_argument("local data too short");
  FrobeniusExpansion f;
  f.exponent = s;
  f.coeffs.assign(N, 0.0);
  f.coeffs[0] = 1.0;
  f.radius_lower_bound = d.radius;
  for (int n = 1; n < N; ++n) {
    const cplx den = indicial(d, s + double(n));
    if (std::abs(den) < 1e-13 * (1.0 + std::norm(s + double(n))))
      throw std::domain_error("Frobenius recurrence is resonant");
    f.coeffs[n] = -recurrence_sum(d, s, f.coeffs, n) / den;
  }
  return f;
}

FrobeniusExpansion frobenius_log_branch(const LocalData& d, cplx s_hi, cplx s_lo, int N) {
  const cplx gap = s_hi - s_lo;
  if (!near_integer(gap) || gap.real() < -0.5) throw std::invalid_argument("exponent gap is not in N_0");
  const int m = int(std::lround(gap.real()));
  const FrobeniusExpansion y1 = frobenius_coeffs(d, s_hi, N);

  std::vector<cplx> g(N, 0.0);
  for (int n = 0; n < N; ++n) {
    cplx acc = (2.0 * (double(n) + s_hi) - 1.0 + d.p[0]) * y1.coeffs[n];
    for (int k = 0; k < n; ++k) acc += d.p[n - k] * y1.coeffs[k];
    g[n] = acc;
  }

  FrobeniusExpansion f;
  f.exponent = s_lo;
  f.coeffs.assign(N, 0.0);
  f.coeffs[0] = 1.0;
  f.log_branch = true;
  f.companion = y1.coeffs;
  f.companion_exponent = s_hi;
  f.radius_lower_bound = d.radius;

  cplx C = (m == 0) ? cplx(1.0) : cplx(0.0);
  for (int n = 1; n < N; ++n) {
    const cplx sum = recurrence_sum(d, s_lo, f.coeffs, n);
    if (n == m) {
      C = -sum / g[0];
      f.coeffs[n] = 0.0;
      continue;
    }
    const cplx forcing = (n >= m) ? C * g[n - m] : cplx(0.0);
    f.coeffs[n] = -(sum + forcing) / indicial(d, s_lo + double(n));
  }
  f.log_coeff = C;
  return f;
}

BranchValue evaluate_branch(const FrobeniusExpansion& f, double z) {
  const double lz = std::log(z);
  auto series = [&](const std::vector<cplx>& c, cplx s) {
    cplx v = 0.0, dv = 0.0;
    double zn = 1.0;
    for (std::size_t n = 0; n < c.size(); ++n) {
      v += c[n] * zn;
      dv += c[n] * (s + double(n)) * zn;
      zn *= z;
    }
    const cplx zs = std::exp(s * lz);
    return BranchValue{zs * v, zs * dv / z};
  };
  BranchValue out = series(f.coeffs, f.exponent);
  if (f.log_branch && f.log_coeff != 0.0) {
    const BranchValue y1 = series(f.companion, f.companion_exponent);
    out.value += f.log_coeff * y1.value * lz;
    out.deriv += f.log_coeff * (y1.deriv * lz + y1.value / z);
  }
  return out;
}

namespace {

// residue/(z - w) expanded around z0, multiplied by (z - z0)^shift
void add_pole(std::vector<cplx>& out, cplx residue, cplx w, double z0, int shift) {
  const cplx d = w - z0;
  cplx pw = d;
  for (std::size_t n = 0; n + shift < out.size(); ++n) {
    out[n + shift] += -residue / pw;
    pw *= d;
  }
}

}  // namespace

LocalData heun_local_data(double p, cplx lambda, int z0, int N) {
  if (z0 != 0 && z0 != 1) throw std::invalid_argument("Heun expansion point must be 0 or 1");
  const PartialFractionCoeffs c = pf_coeffs(p, lambda);
  const double s = std::sqrt(1.0 - p);
  LocalData d;
  d.p.assign(N, 0.0);
  d.q.assign(N, 0.0);
  const double zs = (s > 0.0) ? (s - 1.0) / (2.0 * s) : 0.0;
  // p(z) = A/z + B/(z-1) + (C/s)/(z-zs), q(z) = 2E/z + 2D/(z-1) + (2F/s)/(z-zs)
  if (z0 == 0) {
    d.p[0] += c.A;
    add_pole(d.p, c.B, 1.0, 0.0, 1);
    if (N > 1) d.q[1] += 2.0 * c.E;
    add_pole(d.q, 2.0 * c.D, 1.0, 0.0, 2);
  } else {
    d.p[0] += c.B;
    add_pole(d.p, c.A, 0.0, 1.0, 1);
    if (N > 1) d.q[1] += 2.0 * c.D;
    add_pole(d.q, 2.0 * c.E, 0.0, 1.0, 2);
  }
  if (s > 0.0) {
    add_pole(d.p, c.C / s, zs, double(z0), 1);
    add_pole(d.q, 2.0 * c.F / s, zs, double(z0), 2);
    d.radius = std::min(1.0, std::abs(zs - double(z0)));
  }
  return d;
}

LocalData hypergeom_local_data(const HypergeomParams& h, bool at_one, int N) {
  const cplx a = h.a;
  const cplx b = h.b;
  const cplx c = at_one ? 1.0 + a + b - h.c : h.c;
  LocalData d;
  d.p.assign(N, c - (a + b + 1.0));
  d.q.assign(N, -a * b);
  d.p[0] = c;
  d.q[0] = 0.0;
  d.radius = 1.0;
  return d;
}

DefectOptions defect_options_for(int n_colloc) {
  DefectOptions o;
  o.n_terms = n_colloc;
  o.rtol = (n_colloc >= 80) ? 1e-13 : 1e-11;
  return o;
}

namespace {

struct LocalBasis {
  FrobeniusExpansion regular;
  FrobeniusExpansion other;
  bool other_smooth = false;
};

LocalBasis local_basis(const LocalData& d, int N) {
  // exponents {0, 1 - p0}
  const cplx e = 1.0 - d.p[0];
  LocalBasis b;
  if (!near_integer(e)) {
    b.regular = frobenius_coeffs(d, 0.0, N);
    b.other = frobenius_coeffs(d, e, N);
    b.other_smooth = false;
    return b;
  }
  const int m = int(std::lround(e.real()));
  const cplx s_hi = double(std::max(0, m));
  const cplx s_lo = double(std::min(0, m));
  b.regular = frobenius_coeffs(d, s_hi, N);
  b.other = frobenius_log_branch(d, s_hi, s_lo, N);
  double scale = 0.0;
  for (const auto& v : b.other.coeffs) scale = std::max(scale, std::abs(v));
  b.other_smooth = std::abs(b.other.log_coeff) <= 1e-12 * std::max(1.0, scale) && s_lo.real() >= 0.0;
  return b;
}

using OdeState = std::array<cplx, 2>;

}  // namespace

DefectResult connection_defect(double p, cplx lambda, const DefectOptions& opt) {
  const HypergeomParams h = lorentz_hypergeom_params(p, lambda);
  const int N = opt.n_terms;
  DefectResult res;

  const LocalBasis at_one = local_basis(hypergeom_local_data(h, true, N), N);
  res.secondary_smooth_at_one = at_one.other_smooth;
  const LocalBasis at_zero = local_basis(hypergeom_local_data(h, false, N), N);
  if (at_zero.other_smooth) {
    res.smooth_at_zero_all = true;
    res.defect = 0.0;
    res.alpha = 1.0;
    res.beta = 0.0;
    return res;
  }

  const double delta = opt.delta;
  const FrobeniusExpansion& start = opt.secondary_branch ? at_one.other : at_one.regular;
  const BranchValue w0 = evaluate_branch(start, delta);
  OdeState x{w0.value, -w0.deriv};

  const cplx a = h.a, b = h.b, c = h.c;
  auto rhs = [a, b, c](const OdeState& st, OdeState& dst, double z) {
    dst[0] = st[1];
    dst[1] = (a * b * st[0] - (c - (a + b + 1.0) * z) * st[1]) / (z * (1.0 - z));
  };

  const int M = opt.collar_points;
  std::vector<double> times;
  times.push_back(1.0 - delta);
  for (int i = 0; i < M; ++i) times.push_back(2.0 * delta - delta * double(i) / double(M - 1));

  std::vector<OdeState> samples;
  std::vector<double> sample_z;
  auto observer = [&](const OdeState& st, double z) {
    if (z < 1.0 - delta) {
      samples.push_back(st);
      sample_z.push_back(z);
    }
  };

  namespace odeint = boost::numeric::odeint;
  using Stepper = odeint::runge_kutta_dopri5<OdeState, double, OdeState, double>;
  const double scale = std::max({1.0, std::abs(x[0]), std::abs(x[1])});
  auto stepper = odeint::make_dense_output(opt.rtol * 1e-3 * scale, opt.rtol, Stepper());
  odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), -1e-3, observer);
  if (int(samples.size()) != M) throw std::runtime_error("continuation failed to reach the collar");

  Eigen::MatrixXcd A(2 * M, 2);
  Eigen::VectorXcd rhs_v(2 * M);
  for (int i = 0; i < M; ++i) {
    const double z = sample_z[i];
    const BranchValue r = evaluate_branch(at_zero.regular, z);
    const BranchValue o = evaluate_branch(at_zero.other, z);
    A(2 * i, 0) = r.value;
    A(2 * i, 1) = o.value;
    rhs_v(2 * i) = samples[i][0];
    A(2 * i + 1, 0) = z * r.deriv;
    A(2 * i + 1, 1) = z * o.deriv;
    rhs_v(2 * i + 1) = z * samples[i][1];
  }
  const Eigen::VectorXcd coef = A.colPivHouseholderQr().solve(rhs_v);
  res.alpha = coef(0);
  res.beta = coef(1);
  const double nrm = std::sqrt(std::norm(res.alpha) + std::norm(res.beta));
  res.defect = (nrm > 0.0) ? std::abs(res.beta) / nrm : 0.0;
  return res;
}

int smooth_eigenspace_dim(double p, cplx lambda, double tol) {
  DefectOptions opt;
  const DefectResult primary = connection_defect(p, lambda, opt);
  if (!primary.secondary_smooth_at_one) return primary.defect < tol ? 1 : 0;
  opt.secondary_branch = true;
  const DefectResult secondary = connection_defect(p, lambda, opt);
  return (primary.defect < tol && secondary.defect < tol) ? 2 : 1;
}

std::vector<cplx> lambda_grid(double re_lo, double re_hi, double im_lo, double im_hi, double step) {
  std::vector<cplx> g;
  const int nre = int(std::lround((re_hi - re_lo) / step));
  const int nim = int(std::lround((im_hi - im_lo) / step));
  for (int i = 0; i <= nre; ++i)
    for (int j = 0; j <= nim; ++j) g.emplace_back(re_lo + i * step, im_lo + j * step);
  return g;
}

namespace {

ModeScanEntry scan_point(double p, cplx lambda, const DefectOptions& opt) {
  ModeScanEntry e{lambda, std::numeric_limits<double>::quiet_NaN(), opt.n_terms};
  try {
    e.defect = connection_defect(p, lambda, opt).defect;
  } catch (const std::exception&) {
  }
  return e;
}

}  // namespace

std::vector<ModeScanEntry> mode_scan(double p, const std::vector<cplx>& grid, int n_colloc) {
  const DefectOptions opt = defect_options_for(n_colloc);
  std::vector<ModeScanEntry> out(grid.size());
  const long n = long(grid.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (long i = 0; i < n; ++i) out[i] = scan_point(p, grid[i], opt);
  return out;
}

std::vector<ModeScanEntry> mode_scan_serial(double p, const std::vector<cplx>& grid, int n_colloc) {
  const DefectOptions opt = defect_options_for(n_colloc);
  std::vector<ModeScanEntry> out;
  out.reserve(grid.size());
  for (const cplx& l : grid) out.push_back(scan_point(p, l, opt));
  return out;
}

}  // namespace blowuplab
