#include "recoil/core_model.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "recoil/digest.hpp"
#include "recoil/errors.hpp"

namespace recoil {

std::string to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ok: return "ok";
    case ErrorCode::config: return "config_error";
    case ErrorCode::degeneracy: return "numerical_degeneracy";
    case ErrorCode::budget: return "resource_budget";
  }
  return "unknown";
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void validate(const AtomParams& p) {
  require(std::isfinite(p.gamma_a) && p.gamma_a > 0.0, "gamma_a must be finite and > 0");
  require(std::isfinite(p.gamma_b) && p.gamma_b > 0.0, "gamma_b must be finite and > 0");
  require(std::isfinite(p.omega_12) && p.omega_12 >= 0.0, "omega_12 must be finite and >= 0");
  require(std::isfinite(p.epsilon) && p.epsilon >= 0.0 && p.epsilon <= 1.0,
          "epsilon must lie in [0, 1]");
  require(std::isfinite(p.coherence_r), "coherence_r must be finite");
  require(std::isfinite(p.coherence_theta), "coherence_theta must be finite");
  require(std::isfinite(p.eta) && p.eta > 0.0, "eta must be finite and > 0");
}

bool in_validated_regime(const AtomParams& p) {
  return p.epsilon == 1.0 && p.omega_12 < std::min(p.gamma_a, p.gamma_b);
}

AtomParams symmetric_params(double delta, double eta, double r, double theta) {
  AtomParams p;
  p.gamma_a = 1.0;
  p.gamma_b = 1.0;
  p.omega_12 = delta;
  p.epsilon = 1.0;
  p.coherence_r = r;
  p.coherence_theta = theta;
  p.eta = eta;
  return p;
}

DerivedParams derive(const AtomParams& p) {
  validate(p);
  const complex i{0.0, 1.0};
  DerivedParams d;
  d.lambda = (p.gamma_a - p.gamma_b + 2.0 * i * p.omega_12) / 2.0;
  const double coupling = p.epsilon * std::sqrt(p.gamma_a * p.gamma_b);
  const complex root = std::sqrt(d.lambda * d.lambda + coupling * coupling);
  d.s1 = 0.5 * (d.lambda + root);
  d.s2 = 0.5 * (d.lambda - root);
  // The smaller root from the product avoids cancellation when |lambda| >> coupling.
  const complex product = -0.25 * coupling * coupling;
  if (std::abs(d.s1) >= std::abs(d.s2)) {
    if (std::abs(d.s1) > 0.0) d.s2 = product / d.s1;
  } else {
    d.s1 = product / d.s2;
  }
  if (std::abs(root) <= 1e-14 * (std::abs(d.lambda) + coupling)) {
    throw DegeneracyError("coalescing roots s1 == s2: amplitudes C1, C2 undefined");
  }

  // Unit total population with A10/A20 = exp(r + i theta), written so that large |r|
  // cannot overflow.
  const complex phase = std::exp(i * p.coherence_theta);
  const double r = p.coherence_r;
  if (r > 0.0) {
    const double n = std::sqrt(1.0 + std::exp(-2.0 * r));
    d.a10 = phase / n;
    d.a20 = std::exp(-r) / n;
  } else {
    const double n = std::sqrt(1.0 + std::exp(2.0 * r));
    d.a10 = std::exp(r) * phase / n;
    d.a20 = 1.0 / n;
  }

  const complex half_coupling = 0.5 * coupling;
  const complex gap = d.s2 - d.s1;
  d.c1 = (d.s2 * d.a10 + half_coupling * d.a20) / gap;
  d.c2 = -(d.s1 * d.a10 + half_coupling * d.a20) / gap;

  if (std::abs(p.gamma_a - p.gamma_b) / p.gamma_a < 1e-9) d.delta = p.omega_12 / p.gamma_a;
  d.g_ratio = std::sqrt(p.gamma_b / p.gamma_a);
  return d;
}

EffectiveCoordinates effective_coordinates(const EffectiveFrame& frame, double k_physical,
                                           double q_physical) {
  if (!std::isfinite(k_physical) || !std::isfinite(q_physical)) {
    throw ConfigError("effective_coordinates: non-finite wave number");
  }
  return {frame.photon_detuning(k_physical), frame.atom_detuning(q_physical)};
}

void to_json(nlohmann::json& j, const AtomParams& p) {
  j = nlohmann::json{{"gamma_a", p.gamma_a},
                     {"gamma_b", p.gamma_b},
                     {"omega_12", p.omega_12},
                     {"epsilon", p.epsilon},
                     {"coherence_r", p.coherence_r},
                     {"coherence_theta", p.coherence_theta},
                     {"eta", p.eta}};
}

void from_json(const nlohmann::json& j, AtomParams& p) {
  AtomParams def;
  p.gamma_a = j.value("gamma_a", def.gamma_a);
  p.gamma_b = j.value("gamma_b", def.gamma_b);
  p.omega_12 = j.value("omega_12", def.omega_12);
  p.epsilon = j.value("epsilon", def.epsilon);
  p.coherence_r = j.value("coherence_r", def.coherence_r);
  p.coherence_theta = j.value("coherence_theta", def.coherence_theta);
  p.eta = j.value("eta", def.eta);
}

std::string fingerprint(const AtomParams& p) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g", p.gamma_a,
                p.gamma_b, p.omega_12, p.epsilon, p.coherence_r, p.coherence_theta, p.eta);
  return sha256_hex(buf).substr(0, 16);
}

}  // namespace recoil
