#pragma once

#include <span>
#include <string>
#include <vector>

#include "recoil/amplitude.hpp"

namespace recoil {

/// <dq^2> - <dq>^2 over |B|^2 on the whole grid.
double unconditional_variance(const JointAmplitudeGrid& grid);

/// Atomic momentum distribution conditioned on a photon detected at dk0.
struct ConditionalSlice {
  double dk0 = 0.0;  ///< conditioning point actually used (uniform grids snap to a column)
  double mass = 0.0; ///< integral of |B(dq, dk0)|^2 over dq
  double mean = 0.0;
  double variance = 0.0;
};

/// Slice of the normalized grid at dk0. In the rotated scheme the slice is taken
/// through every v node at dq = v - dk0, interpolating along the smooth u direction;
/// in the uniform scheme the nearest dk column is used. Throws ConfigError when dk0
/// lies outside the grid and DegeneracyError when the slice mass is below 1e-12 of the
/// photon-marginal peak.
ConditionalSlice conditional_slice(const JointAmplitudeGrid& grid, double dk0);
double conditional_variance(const JointAmplitudeGrid& grid, double dk0);

/// P(dk) = integral of |B(dq, dk)|^2 over dq.
double photon_marginal(const JointAmplitudeGrid& grid, double dk);

/// argmax of the photon marginal.
double photon_marginal_peak(const JointAmplitudeGrid& grid);

struct DkPolicy {
  enum class Kind { peak_of_photon_marginal, explicit_value };
  Kind kind = Kind::peak_of_photon_marginal;
  double value = 0.0;

  static DkPolicy peak() { return {}; }
  static DkPolicy at(double dk0) { return {Kind::explicit_value, dk0}; }
};

struct VarianceReport {
  double var_single = 0.0;
  double var_coin = 0.0;
  double dk0 = 0.0;
  double r_ratio = 0.0;
  bool resolution_adequate = true;
  std::vector<std::string> warnings;
};

/// Unconditional over conditional variance of the atomic momentum.
VarianceReport r_ratio(const JointAmplitudeGrid& grid, DkPolicy policy = DkPolicy::peak());

struct FwhmResult {
  double width = 0.0;
  bool bounded = false;  ///< half maximum crossed on both sides of the peak
  double left = 0.0;
  double right = 0.0;
  double peak_x = 0.0;
  double peak_value = 0.0;
};

/// Width between the half-maximum crossings around the sampled maximum, linearly
/// interpolated. Missing samples (NaN) are ignored.
FwhmResult fwhm(std::span<const double> x, std::span<const double> y);

/// y ~ amplitude / (1 + ((x - center)/halfwidth)^2) + offset.
struct LorentzianFit {
  double amplitude = 0.0;
  double center = 0.0;
  double halfwidth = 0.0;
  double offset = 0.0;
  double rms_relative = 0.0;  ///< RMS residual over the peak value
  bool converged = false;
};

LorentzianFit fit_lorentzian(std::span<const double> x, std::span<const double> y);

}  // namespace recoil
