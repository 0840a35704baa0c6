#pragma once

#include <optional>
#include <string>
#include <vector>

#include "recoil/detection.hpp"
#include "recoil/schmidt.hpp"

namespace recoil {

struct MeasureOptions {
  double variance_grid_scale = 1.0;
  double schmidt_grid_scale = 1.0;
  bool compute_k = true;
  bool keep_modes = false;
  double schmidt_tol = 1e-6;
  DkPolicy dk_policy = DkPolicy::peak();
  GridBudget grid_budget;
  SchmidtBudget schmidt_budget;
};

/// R, K and PE at one parameter point, each on its own default grid.
struct PointMeasures {
  AtomParams params;
  VarianceReport variance;
  GridSpec variance_grid;
  std::optional<double> k;
  std::optional<double> pe;
  bool pe_validated = false;
  std::optional<GridSpec> schmidt_grid;
  std::optional<SchmidtResult> schmidt;
  std::vector<std::string> warnings;
};

PointMeasures measure_point(const AtomParams& params, const MeasureOptions& options = {});

/// Schmidt number alone on the default uniform grid.
double schmidt_number_at(const AtomParams& params, double grid_scale = 1.0,
                         const SchmidtBudget& budget = {});

/// R alone on the default rotated grid.
double r_ratio_at(const AtomParams& params, double grid_scale = 1.0);

/// sqrt(2 pi) eta / delta^2
double r_max_estimate(double eta, double delta);
/// 1 + 0.28 (4 eta / delta^2 - 1)
double k_max_estimate(double eta, double delta);

}  // namespace recoil

namespace recoil {

/// A coherence-displaced state with a wider wavepacket whose Schmidt number matches
/// a reference state.
struct MatchedState {
  AtomParams reference;
  AtomParams displaced;
  double k_reference = 0.0;
  double r_reference = 0.0;
  double k_displaced = 0.0;
  double r_displaced = 0.0;
  bool found = false;
};

/// Solves K(displaced) = K(reference) for coherence_r in [r_lo, r_hi] at the displaced
/// eta, keeping theta and delta of the reference. Returns found = false when K - K_ref
/// does not change sign on the bracket.
MatchedState match_schmidt_number(const AtomParams& reference, double displaced_eta, double r_lo,
                                  double r_hi, const MeasureOptions& options = {});

}  // namespace recoil
