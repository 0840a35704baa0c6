#include "recoil/schmidt.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "lapack_svd.hpp"
#include "recoil/errors.hpp"
#include "recoil/parallel.hpp"

namespace recoil {

double schmidt_number(std::span<const double> eigenvalues) {
  double sum = 0.0;
  for (double l : eigenvalues) {
    if (!(l >= 0.0)) throw ConfigError("Schmidt eigenvalues must be nonnegative");
    sum += l;
  }
  if (!(sum > 0.0)) throw ConfigError("Schmidt number of an all-zero spectrum");
  double purity = 0.0;
  for (double l : eigenvalues) purity += (l / sum) * (l / sum);
  return 1.0 / purity;
}

SchmidtResult schmidt_decompose(const JointAmplitudeGrid& grid, double tol) {
  SchmidtOptions opt;
  opt.tol = tol;
  return schmidt_decompose(grid, opt);
}

SchmidtResult schmidt_decompose(const JointAmplitudeGrid& grid, const SchmidtOptions& opt) {
  if (grid.spec.scheme != GridScheme::uniform) {
    throw ConfigError("Schmidt decomposition needs a uniform (dq, dk) grid");
  }
  if (!(opt.tol > 0.0 && opt.tol < 1.0)) throw ConfigError("Schmidt tolerance must lie in (0, 1)");
  const auto n_q = grid.values.rows();
  const auto n_k = grid.values.cols();
  if (static_cast<std::size_t>(n_q) * static_cast<std::size_t>(n_k) > opt.budget.max_entries) {
    throw BudgetError("kernel matrix " + std::to_string(n_q) + " x " + std::to_string(n_k) +
                      " exceeds the decomposition budget; use a coarser grid (--grid-scale below 1) or raise max_schmidt_entries");
  }

  Eigen::ArrayXd sq(n_q);
  Eigen::ArrayXd sk(n_k);
  for (Eigen::Index i = 0; i < n_q; ++i) sq[i] = std::sqrt(grid.q.weights[static_cast<std::size_t>(i)]);
  for (Eigen::Index j = 0; j < n_k; ++j) sk[j] = std::sqrt(grid.second.weights[static_cast<std::size_t>(j)]);
  Eigen::MatrixXcd weighted = sq.matrix().asDiagonal() * grid.values * sk.matrix().asDiagonal();

  detail::SvdFactors f = detail::svd(std::move(weighted), opt.compute_modes);

  SchmidtResult out;
  out.q = grid.q;
  out.k = grid.second;
  std::vector<double> lambda(f.singular_values.size());
  std::transform(f.singular_values.begin(), f.singular_values.end(), lambda.begin(),
                 [](double s) { return s * s; });
  const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
  if (!(total > 0.0)) throw DegeneracyError("kernel has zero norm");
  for (double& l : lambda) l /= total;
  out.full_rank = static_cast<std::size_t>(
      std::count_if(lambda.begin(), lambda.end(), [](double l) { return l > 0.0; }));
  out.k_number = schmidt_number(lambda);

  std::size_t keep = 0;
  double mass = 0.0;
  while (keep < lambda.size() && mass < 1.0 - opt.tol) {
    if (opt.max_rank && keep == opt.max_rank) {
      out.truncated_by_budget = true;
      break;
    }
    mass += lambda[keep++];
  }
  out.retained = keep;
  out.retained_mass = mass;
  out.eigenvalues.assign(lambda.begin(), lambda.begin() + static_cast<std::ptrdiff_t>(keep));

  if (opt.compute_modes) {
    const auto r = static_cast<Eigen::Index>(keep);
    out.atomic_modes = (1.0 / sq).matrix().asDiagonal() * f.u.leftCols(r);
    out.photonic_modes = (1.0 / sk).matrix().asDiagonal() * f.vh.topRows(r).transpose();
    for (Eigen::Index n = 0; n < r; ++n) {
      auto psi = out.atomic_modes.col(n);
      const double floor = 1e-8 * psi.cwiseAbs().maxCoeff();
      Eigen::Index first = 0;
      while (first < n_q && std::abs(psi[first]) <= floor) ++first;
      if (first == n_q) continue;
      const complex phase = std::conj(psi[first]) / std::abs(psi[first]);
      psi *= phase;
      out.photonic_modes.col(n) *= std::conj(phase);
    }
  }
  return out;
}

namespace {

struct EntryIntegrand {
  const JointKernel* kernel;
  double qa;
  double qb;
  bool imag;
};

double entry_integrand(double k, void* data) {
  const auto* e = static_cast<const EntryIntegrand*>(data);
  const complex z = e->kernel->resonant(e->qa + k) * std::conj(e->kernel->resonant(e->qb + k));
  return e->imag ? z.imag() : z.real();
}

struct WorkspaceDeleter {
  void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};

constexpr std::size_t kQuadLimit = 2000;

// Roundoff and subdivision warnings are accepted when the error estimate still
// meets a looser bound; anything else is a failed integral.
void check(int status, double result, double err, double epsabs) {
  if (status == GSL_SUCCESS) return;
  const bool warning = status == GSL_EROUND || status == GSL_ESING || status == GSL_EMAXITER;
  if (warning && std::isfinite(err) && err <= std::max(1e-8 * std::abs(result), 10.0 * epsabs)) return;
  throw DegeneracyError(std::string("k quadrature did not converge: ") + gsl_strerror(status));
}

// integral over [range.lo, range.hi] with the interior split at the resonance points.
double integrate_k(EntryIntegrand& e, std::vector<double> breaks, KRange range, double epsabs,
                   gsl_integration_workspace* ws) {
  gsl_function fn{&entry_integrand, &e};
  const double epsrel = 1e-10;
  std::sort(breaks.begin(), breaks.end());
  // Near-coincident breakpoints leave sliver intervals that derail qagp's extrapolation.
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double a, double b) { return b - a <= 1e-9 * (1.0 + std::abs(a)); }),
               breaks.end());

  const double lo = std::isfinite(range.lo) ? range.lo : breaks.front() - 1.0;
  const double hi = std::isfinite(range.hi) ? range.hi : breaks.back() + 1.0;
  std::vector<double> pts{lo};
  for (double b : breaks)
    if (b > lo && b < hi) pts.push_back(b);
  pts.push_back(hi);

  double total = 0.0;
  double result = 0.0;
  double err = 0.0;
  check(gsl_integration_qagp(&fn, pts.data(), pts.size(), epsabs, epsrel, kQuadLimit, ws, &result, &err), result,
        err, epsabs);
  total += result;
  if (!std::isfinite(range.lo)) {
    check(gsl_integration_qagil(&fn, lo, epsabs, epsrel, kQuadLimit, ws, &result, &err), result, err, epsabs);
    total += result;
  }
  if (!std::isfinite(range.hi)) {
    check(gsl_integration_qagiu(&fn, hi, epsabs, epsrel, kQuadLimit, ws, &result, &err), result, err, epsabs);
    total += result;
  }
  return total;
}

}  // namespace

ReducedDensity reduced_density_atom(const AtomParams& params, const Axis& q_axis, KRange range,
                                    double abs_tol) {
  if (q_axis.size() < 2) throw ConfigError("reduced density needs at least two q nodes");
  if (!(range.lo < range.hi)) throw ConfigError("reduced density: empty k range");
  const JointKernel kernel = JointKernel::from_params(params);
  if (kernel.identically_zero()) throw DegeneracyError("identically zero amplitude, nothing to normalize");
  gsl_set_error_handler_off();

  const std::size_t n = q_axis.size();
  std::vector<double> centers;
  for (const PoleTerm& t : kernel.terms()) centers.push_back(-t.pole.imag());
  auto breaks_for = [&](double qa, double qb) {
    std::vector<double> b;
    for (double c : centers) b.push_back(c - qa), b.push_back(c - qb);
    return b;
  };

  // Diagonal first: it fixes the trace scale that the absolute tolerance refers to.
  std::vector<double> envelope(n);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) envelope[i] = kernel.envelope(q_axis.nodes[i]);
  parallel_for(n, [&](std::size_t i) {
    std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(gsl_integration_workspace_alloc(kQuadLimit));
    EntryIntegrand e{&kernel, q_axis.nodes[i], q_axis.nodes[i], false};
    diag[i] = integrate_k(e, breaks_for(e.qa, e.qb), range, 0.0, ws.get());
  });
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += q_axis.weights[i] * envelope[i] * envelope[i] * diag[i];
  if (!(trace > 0.0)) throw DegeneracyError("reduced density has zero trace");

  ReducedDensity out;
  out.q = q_axis;
  out.rho.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  parallel_for(n, [&](std::size_t i) {
    std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(gsl_integration_workspace_alloc(kQuadLimit));
    for (std::size_t j = i; j < n; ++j) {
      const double env = envelope[i] * envelope[j];
      complex value;
      if (env == 0.0) {
        value = 0.0;
      } else {
        const double epsabs = abs_tol * trace / env;
        const auto breaks = breaks_for(q_axis.nodes[i], q_axis.nodes[j]);
        EntryIntegrand re{&kernel, q_axis.nodes[i], q_axis.nodes[j], false};
        EntryIntegrand im{&kernel, q_axis.nodes[i], q_axis.nodes[j], true};
        value = {integrate_k(re, breaks, range, epsabs, ws.get()),
                 i == j ? 0.0 : integrate_k(im, breaks, range, epsabs, ws.get())};
        value *= env / trace;
      }
      const auto a = static_cast<Eigen::Index>(i);
      const auto b = static_cast<Eigen::Index>(j);
      out.rho(a, b) = value;
      out.rho(b, a) = std::conj(value);
    }
  });
  return out;
}

std::vector<double> density_spectrum(const ReducedDensity& d) {
  const auto n = d.rho.rows();
  Eigen::ArrayXd sw(n);
  for (Eigen::Index i = 0; i < n; ++i) sw[i] = std::sqrt(d.q.weights[static_cast<std::size_t>(i)]);
  const Eigen::MatrixXcd s = sw.matrix().asDiagonal() * d.rho * sw.matrix().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(s, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw DegeneracyError("density eigensolver failed");
  std::vector<double> ev(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  for (double& v : ev) v = std::max(v, 0.0);
  return ev;
}

double phase_entanglement(double k, double r) { return 2.2 * k / r; }

bool phase_entanglement_validated(const AtomParams& p) {
  if (std::abs(p.gamma_a - p.gamma_b) / p.gamma_a >= 1e-9 || !in_validated_regime(p)) return false;
  const double delta = p.omega_12 / p.gamma_a;
  return delta > 0.0 && p.eta / (delta * delta) >= 4.0 && p.eta <= 0.25;
}

ModeSuperpositions mode_superpositions(const SchmidtResult& res, std::optional<double> reference_dk) {
  if (res.atomic_modes.cols() == 0) throw ConfigError("mode superpositions need Schmidt modes");
  const auto n_q = res.atomic_modes.rows();
  const auto r = res.atomic_modes.cols();

  Eigen::VectorXcd align = Eigen::VectorXcd::Ones(r);
  if (reference_dk) {
    const auto& k = res.k.nodes;
    const auto it = std::min_element(k.begin(), k.end(), [&](double a, double b) {
      return std::abs(a - *reference_dk) < std::abs(b - *reference_dk);
    });
    const auto j = static_cast<Eigen::Index>(it - k.begin());
    for (Eigen::Index n = 0; n < r; ++n) {
      const complex phi = res.photonic_modes(j, n);
      if (std::abs(phi) > 0.0) align[n] = phi / std::abs(phi);
    }
  }

  ModeSuperpositions out;
  out.q = res.q.nodes;
  out.e_incoherent.assign(static_cast<std::size_t>(n_q), 0.0);
  out.e_coherent.assign(static_cast<std::size_t>(n_q), 0.0);
  for (Eigen::Index i = 0; i < n_q; ++i) {
    double inc = 0.0;
    complex coh = 0.0;
    for (Eigen::Index n = 0; n < r; ++n) {
      const double l = res.eigenvalues[static_cast<std::size_t>(n)];
      inc += l * std::norm(res.atomic_modes(i, n));
      coh += std::sqrt(l) * align[n] * res.atomic_modes(i, n);
    }
    out.e_incoherent[static_cast<std::size_t>(i)] = inc;
    out.e_coherent[static_cast<std::size_t>(i)] = std::norm(coh);
  }

  auto variance = [&](const std::vector<double>& e) {
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double w = res.q.weights[i] * e[i];
      m0 += w;
      m1 += w * res.q.nodes[i];
      m2 += w * res.q.nodes[i] * res.q.nodes[i];
    }
    const double mean = m1 / m0;
    return m2 / m0 - mean * mean;
  };
  out.var_incoherent = variance(out.e_incoherent);
  out.var_coherent = variance(out.e_coherent);
  return out;
}

int count_peaks(std::span<const double> p, double rel_threshold) {
  if (p.size() < 3) return p.empty() ? 0 : 1;
  const double top = *std::max_element(p.begin(), p.end());
  const double floor = rel_threshold * top;
  int peaks = 0;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    if (p[i] > p[i - 1] && p[i] >= p[i + 1] && p[i] >= floor) ++peaks;
  }
  // Maxima sitting on the ends of the axis.
  if (p.front() > p[1] && p.front() >= floor) ++peaks;
  if (p.back() > p[p.size() - 2] && p.back() >= floor) ++peaks;
  return peaks;
}

namespace {

double rms_width(const Axis& axis, const std::vector<double>& amplitude) {
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < amplitude.size(); ++i) {
    const double w = axis.weights[i] * amplitude[i] * amplitude[i];
    m0 += w;
    m1 += w * axis.nodes[i];
    m2 += w * axis.nodes[i] * axis.nodes[i];
  }
  const double mean = m1 / m0;
  return std::sqrt(std::max(0.0, m2 / m0 - mean * mean));
}

}  // namespace

ModeTable mode_profiles(const SchmidtResult& res, int n_modes) {
  if (n_modes < 1) throw ConfigError("n_modes must be >= 1");
  ModeTable t;
  t.q = res.q.nodes;
  t.k = res.k.nodes;
  t.eigenvalues = res.eigenvalues;
  const auto available = res.atomic_modes.cols();
  const auto count = std::min<Eigen::Index>(n_modes, available);
  t.clamped = count < n_modes;
  for (Eigen::Index n = 0; n < count; ++n) {
    ModeProfile m;
    m.index = static_cast<int>(n) + 1;
    m.eigenvalue = res.eigenvalues[static_cast<std::size_t>(n)];
    const Eigen::VectorXd a = res.atomic_modes.col(n).cwiseAbs();
    const Eigen::VectorXd p = res.photonic_modes.col(n).cwiseAbs();
    m.atomic_abs.assign(a.data(), a.data() + a.size());
    m.photonic_abs.assign(p.data(), p.data() + p.size());
    m.atomic_peaks = count_peaks(m.atomic_abs);
    m.photonic_peaks = count_peaks(m.photonic_abs);
    m.atomic_rms_width = rms_width(res.q, m.atomic_abs);
    m.photonic_gaussian_width = rms_width(res.k, m.photonic_abs);
    t.modes.push_back(std::move(m));
  }
  return t;
}

}  // namespace recoil

namespace recoil {

void check_schmidt_budget(const GridSpec& spec, const SchmidtBudget& budget) {
  const std::size_t n_second = second_axis_size(spec);
  const auto entries = static_cast<std::size_t>(spec.n_q) * n_second;
  if (entries > budget.max_entries) {
    throw BudgetError("kernel matrix " + std::to_string(spec.n_q) + " x " + std::to_string(n_second) +
                      " exceeds the decomposition budget; use a coarser grid (--grid-scale below 1) or raise max_schmidt_entries");
  }
}

}  // namespace recoil
