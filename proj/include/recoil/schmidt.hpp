#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "recoil/amplitude.hpp"

namespace recoil {

struct SchmidtBudget {
  std::size_t max_entries = 12'000'000;  ///< n_q * n_k of the weighted kernel matrix
};

struct SchmidtOptions {
  double tol = 1e-6;          ///< stop retaining modes once the discarded mass is below tol
  std::size_t max_rank = 0;   ///< 0 = unlimited
  bool compute_modes = true;  ///< false gives eigenvalues and K only
  SchmidtBudget budget;
};

/// B(q, k) = sum_n sqrt(lambda_n) psi_n(q) phi_n(k) on the grid, with modes normalized
/// in the continuum sense: sum_i w_i |psi_n(q_i)|^2 = 1. Each pair's phase is fixed so the
/// first non-negligible component of psi_n is real and positive.
struct SchmidtResult {
  std::vector<double> eigenvalues;  ///< retained, nonincreasing; the full spectrum sums to 1
  Eigen::MatrixXcd atomic_modes;    ///< n_q x retained (empty without modes)
  Eigen::MatrixXcd photonic_modes;  ///< n_k x retained
  Axis q;
  Axis k;
  double k_number = 1.0;            ///< Schmidt number of the full spectrum
  std::size_t retained = 0;
  double retained_mass = 0.0;
  std::size_t full_rank = 0;
  bool truncated_by_budget = false;
};

/// Weighted SVD of the kernel: singular values of sqrt(w_q) B sqrt(w_k) squared are the
/// Schmidt eigenvalues. Requires a uniform (dq, dk) grid.
SchmidtResult schmidt_decompose(const JointAmplitudeGrid& grid, const SchmidtOptions& options = {});
SchmidtResult schmidt_decompose(const JointAmplitudeGrid& grid, double tol);

/// 1 / sum lambda_n^2 after normalizing the list to unit sum.
double schmidt_number(std::span<const double> eigenvalues);

struct KRange {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

/// Atomic reduced density rho(q, q') = integral B(q, k) conj(B(q', k)) dk, sampled on the
/// q axis with the k integral done by adaptive Gauss-Kronrod quadrature split at the
/// resonances. Normalized to unit trace under the axis weights.
struct ReducedDensity {
  Axis q;
  Eigen::MatrixXcd rho;
};

ReducedDensity reduced_density_atom(const AtomParams& params, const Axis& q_axis, KRange range = {},
                                    double abs_tol = 1e-12);

/// Nonincreasing eigenvalues of the weighted density sqrt(w) rho sqrt(w).
std::vector<double> density_spectrum(const ReducedDensity& density);

/// 2.2 K / R.
double phase_entanglement(double k, double r);

/// Regime in which the K ~ R/2.2 relation underlying PE holds (eta/delta^2 >= 4,
/// eta <= 0.25, symmetric linewidths, strong interference).
bool phase_entanglement_validated(const AtomParams& params);

/// E_i(q) = sum lambda_n |psi_n|^2 and E_c(q) = |sum sqrt(lambda_n) e^{i a_n} psi_n|^2.
/// With a reference photon detuning the phases a_n = arg phi_n(dk_ref) line the modes up as
/// they appear in the conditional slice at dk_ref; otherwise a_n = 0.
struct ModeSuperpositions {
  std::vector<double> q;
  std::vector<double> e_incoherent;
  std::vector<double> e_coherent;
  double var_incoherent = 0.0;
  double var_coherent = 0.0;  ///< variance of E_c after normalizing it to unit mass
};

ModeSuperpositions mode_superpositions(const SchmidtResult& result,
                                       std::optional<double> reference_dk = std::nullopt);

/// Local maxima above rel_threshold of the profile maximum.
int count_peaks(std::span<const double> profile, double rel_threshold = 0.05);

struct ModeProfile {
  int index = 0;
  double eigenvalue = 0.0;
  std::vector<double> atomic_abs;
  std::vector<double> photonic_abs;
  int atomic_peaks = 0;
  int photonic_peaks = 0;
  double atomic_rms_width = 0.0;
  double photonic_gaussian_width = 0.0;  ///< moment-matched Gaussian sigma of |phi|^2
};

struct ModeTable {
  std::vector<double> q;
  std::vector<double> k;
  std::vector<double> eigenvalues;
  std::vector<ModeProfile> modes;
  bool clamped = false;  ///< fewer modes than requested were available
};

ModeTable mode_profiles(const SchmidtResult& result, int n_modes);

}  // namespace recoil

namespace recoil {

/// Throws BudgetError when a grid of this shape could not be decomposed.
void check_schmidt_budget(const GridSpec& spec, const SchmidtBudget& budget);

}  // namespace recoil
