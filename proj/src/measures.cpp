#include "recoil/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace recoil {

PointMeasures measure_point(const AtomParams& params, const MeasureOptions& opt) {
  PointMeasures out;
  out.params = params;
  out.variance_grid = default_variance_grid(params, opt.variance_grid_scale);
  {
    const JointAmplitudeGrid grid = sample_grid(params, out.variance_grid, opt.grid_budget);
    out.variance = r_ratio(grid, opt.dk_policy);
    out.warnings = grid.warnings;
  }
  if (!opt.compute_k) return out;

  out.schmidt_grid = default_schmidt_grid(params, opt.schmidt_grid_scale);
  check_schmidt_budget(*out.schmidt_grid, opt.schmidt_budget);
  const JointAmplitudeGrid grid = sample_grid(params, *out.schmidt_grid, opt.grid_budget);
  for (const auto& w : grid.warnings) {
    if (std::find(out.warnings.begin(), out.warnings.end(), w) == out.warnings.end()) out.warnings.push_back(w);
  }
  SchmidtOptions so;
  so.tol = opt.schmidt_tol;
  so.compute_modes = opt.keep_modes;
  so.budget = opt.schmidt_budget;
  SchmidtResult res = schmidt_decompose(grid, so);
  out.k = res.k_number;
  out.pe = phase_entanglement(res.k_number, out.variance.r_ratio);
  out.pe_validated = phase_entanglement_validated(params);
  if (!out.pe_validated) out.warnings.push_back("PE outside validated regime");
  if (opt.keep_modes) out.schmidt = std::move(res);
  return out;
}

double schmidt_number_at(const AtomParams& params, double grid_scale, const SchmidtBudget& budget) {
  const GridSpec spec = default_schmidt_grid(params, grid_scale);
  check_schmidt_budget(spec, budget);
  const JointAmplitudeGrid grid = sample_grid(params, spec);
  SchmidtOptions so;
  so.compute_modes = false;
  so.budget = budget;
  return schmidt_decompose(grid, so).k_number;
}

double r_ratio_at(const AtomParams& params, double grid_scale) {
  return r_ratio(sample_grid(params, default_variance_grid(params, grid_scale))).r_ratio;
}

double r_max_estimate(double eta, double delta) {
  return std::sqrt(2.0 * std::numbers::pi) * eta / (delta * delta);
}

double k_max_estimate(double eta, double delta) {
  return 1.0 + 0.28 * (4.0 * eta / (delta * delta) - 1.0);
}

}  // namespace recoil

#include <boost/math/tools/roots.hpp>

#include "recoil/errors.hpp"

namespace recoil {

MatchedState match_schmidt_number(const AtomParams& reference, double displaced_eta, double r_lo,
                                  double r_hi, const MeasureOptions& opt) {
  if (!(r_lo < r_hi)) throw ConfigError("match_schmidt_number: empty r bracket");
  MatchedState m;
  m.reference = reference;
  m.k_reference = schmidt_number_at(reference, opt.schmidt_grid_scale, opt.schmidt_budget);
  m.r_reference = r_ratio_at(reference, opt.variance_grid_scale);

  auto displaced = [&](double r) {
    AtomParams p = reference;
    p.eta = displaced_eta;
    p.coherence_r = r;
    return p;
  };
  auto gap = [&](double r) {
    return schmidt_number_at(displaced(r), opt.schmidt_grid_scale, opt.schmidt_budget) - m.k_reference;
  };
  const double g_lo = gap(r_lo);
  const double g_hi = gap(r_hi);
  m.displaced = displaced(r_lo);
  if (g_lo * g_hi > 0.0) return m;

  std::uintmax_t iterations = 40;
  const auto bracket = boost::math::tools::toms748_solve(
      gap, r_lo, r_hi, g_lo, g_hi, boost::math::tools::eps_tolerance<double>(20), iterations);
  const double r = 0.5 * (bracket.first + bracket.second);
  m.displaced = displaced(r);
  m.k_displaced = schmidt_number_at(m.displaced, opt.schmidt_grid_scale, opt.schmidt_budget);
  m.r_displaced = r_ratio_at(m.displaced, opt.variance_grid_scale);
  m.found = true;
  return m;
}

}  // namespace recoil
