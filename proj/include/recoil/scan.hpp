#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recoil/measures.hpp"

namespace recoil {

enum class Metric { R, K, PE };

std::string to_string(Metric metric);
Metric metric_from_string(const std::string& name);

struct ScanPeak {
  double r = 0.0;
  double theta = 0.0;
  double value = 0.0;
};

/// Metric over an (r, theta) coherence grid. values(i, j) belongs to (axis_r[i],
/// axis_theta[j]); nodes that failed hold NaN and their message in node_errors.
struct ScanResult {
  Metric metric = Metric::R;
  std::vector<double> axis_r;
  std::vector<double> axis_theta;
  Eigen::MatrixXd values;
  std::vector<std::string> node_errors;  ///< row-major, empty string when the node succeeded
  std::size_t missing = 0;
  ScanPeak peak;
  std::optional<FwhmResult> fwhm_r;      ///< cut through the peak along r (needs >= 3 r nodes)
  std::optional<FwhmResult> fwhm_theta;
  std::optional<LorentzianFit> fit_r;
  std::optional<LorentzianFit> fit_theta;
};

ScanResult scan_coherence(const AtomParams& base, std::span<const double> r_axis,
                          std::span<const double> theta_axis, Metric metric,
                          const MeasureOptions& options = {});

/// n points over [-6 delta/eta, 6 delta/eta].
std::vector<double> default_r_axis(double delta, double eta, int n = 101);
/// n points over [0, 2 pi).
std::vector<double> default_theta_axis(int n = 101);

}  // namespace recoil
