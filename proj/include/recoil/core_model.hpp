#pragma once

#include <complex>
#include <numbers>
#include <optional>
#include <string>

#include <json.hpp>

namespace recoil {

using complex = std::complex<double>;

/// Physical inputs of the interfering three-level emitter. Rates are in units of a
/// common scale; only ratios matter.
struct AtomParams {
  double gamma_a = 1.0;   ///< linewidth of transition a, sets the global rate scale
  double gamma_b = 1.0;   ///< linewidth of transition b
  double omega_12 = 0.0;  ///< upper-level splitting omega_a - omega_b
  double epsilon = 1.0;   ///< dipole alignment cosine, in [0, 1]
  double coherence_r = 0.0;                     ///< log |A10/A20|
  double coherence_theta = std::numbers::pi;    ///< arg(A10/A20)
  double eta = 0.1;       ///< wavepacket parameter (initial momentum spread in effective units)

  bool operator==(const AtomParams&) const = default;
};

/// Throws ConfigError when a field is non-finite or out of range.
void validate(const AtomParams& params);

/// True inside the strong-interference regime (omega_12 < min(gamma_a, gamma_b),
/// epsilon == 1) for which the model is exercised; anything else is reported as
/// extrapolated.
bool in_validated_regime(const AtomParams& params);

/// gamma_a = gamma_b = 1, epsilon = 1, omega_12 = delta at coherence (r, theta).
AtomParams symmetric_params(double delta, double eta, double r = 0.0,
                            double theta = std::numbers::pi);

/// Composite constants of the steady-state amplitude.
struct DerivedParams {
  complex lambda;
  complex s1;  ///< root carrying the + sign of the principal square root
  complex s2;
  complex c1;
  complex c2;
  complex a10;  ///< initial amplitudes, |a10|^2 + |a20|^2 = 1
  complex a20;
  std::optional<double> delta;  ///< omega_12 / gamma, only when gamma_a == gamma_b
  double g_ratio = 1.0;         ///< g_b / g_a = sqrt(gamma_b / gamma_a)
};

DerivedParams derive(const AtomParams& params);

/// Maps laboratory wave numbers onto the dimensionless detunings used everywhere
/// else. recoil_velocity is hbar*k0/m; all quantities in one consistent unit system.
struct EffectiveFrame {
  double k0 = 1.0;               ///< omega_a / c
  double gamma_a = 1.0;
  double speed_of_light = 1.0;
  double recoil_velocity = 1.0;

  double photon_detuning(double k) const { return (k - k0) / (gamma_a / speed_of_light); }
  double photon_wavenumber(double dk) const { return k0 + dk * gamma_a / speed_of_light; }
  double atom_detuning(double q) const { return recoil_velocity / gamma_a * (q - k0); }
  double atom_wavenumber(double dq) const { return k0 + dq * gamma_a / recoil_velocity; }
};

struct EffectiveCoordinates {
  double dk;
  double dq;
};

EffectiveCoordinates effective_coordinates(const EffectiveFrame& frame, double k_physical,
                                           double q_physical);

/// Stable hex digest identifying a parameter set.
std::string fingerprint(const AtomParams& params);

void to_json(nlohmann::json& j, const AtomParams& p);
void from_json(const nlohmann::json& j, AtomParams& p);

}  // namespace recoil
