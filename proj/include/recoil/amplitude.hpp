#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recoil/core_model.hpp"

namespace recoil {

/// One resonant term weight / (i v + pole) of the ridge factor, v = dq + dk.
struct PoleTerm {
  complex weight;
  complex pole;
};

/// Location and half-width of the narrowest populated resonance along v = dq + dk.
struct Ridge {
  double center = 0.0;
  double halfwidth = 0.0;
};

/// Steady-state joint amplitude
///   B(dq, dk) = exp(-(dq/eta)^2) * sum_n weight_n / (i (dq + dk) + pole_n),
/// unnormalized. Terms whose weight vanishes identically are dropped at construction,
/// which is what makes the trapped dark state an empty kernel rather than 0/0.
class JointKernel {
 public:
  JointKernel(std::vector<PoleTerm> terms, double eta);

  /// Full interfering model built from the derived constants.
  static JointKernel from_params(const AtomParams& params);
  /// Single-pole dark-state form centred at dq + dk = 0 with half-width delta^2/4.
  static JointKernel dark_state(double delta, double eta);

  complex operator()(double dq, double dk) const { return envelope(dq) * resonant(dq + dk); }
  double envelope(double dq) const;
  complex resonant(double v) const;

  const std::vector<PoleTerm>& terms() const { return terms_; }
  double eta() const { return eta_; }
  bool identically_zero() const { return terms_.empty(); }
  Ridge ridge() const;

 private:
  std::vector<PoleTerm> terms_;
  double eta_;
};

/// Pole terms of the full model; throws DegeneracyError at epsilon == 0 where the
/// amplitude prefactor is undefined.
std::vector<PoleTerm> pole_terms(const DerivedParams& derived, const AtomParams& params);

/// Unnormalized steady-state amplitude at effective detunings (dq, dk). Throws
/// DegeneracyError when a populated resonant denominator falls below 1e-14.
complex amplitude_at(const DerivedParams& derived, const AtomParams& params, double dq,
                     double dk);

/// exp(-(dq/eta)^2) / (i (dq + dk) - delta^2/4).
complex dark_state_amplitude_at(double delta, double eta, double dq, double dk);

enum class GridScheme { uniform, rotated };

std::string to_string(GridScheme scheme);
GridScheme grid_scheme_from_string(const std::string& name);

/// Rectangular sampling region. In the uniform scheme the axes are (dq, dk). In the
/// rotated scheme the first axis is u = dq and the second is v = dq + dk, with
/// [k_min, k_max] bounding v; when ridge_scale > 0 the v nodes are graded as
/// v = ridge_center + ridge_scale * sinh(t) with t uniform, concentrating samples on
/// the resonance. In the uniform scheme k_tail > 0 appends cells outside
/// [k_min, k_max] whose widths grow geometrically by k_tail_growth until they
/// reach k_tail beyond each edge; n_k counts the uniform core only.
struct GridSpec {
  double q_min = -1.0;
  double q_max = 1.0;
  double k_min = -1.0;
  double k_max = 1.0;
  int n_q = 2;
  int n_k = 2;
  GridScheme scheme = GridScheme::uniform;
  double ridge_center = 0.0;
  double ridge_scale = 0.0;
  double k_tail = 0.0;
  double k_tail_growth = 1.04;
};

void validate(const GridSpec& spec);

void to_json(nlohmann::json& j, const GridSpec& s);
void from_json(const nlohmann::json& j, GridSpec& s);

/// Quadrature nodes and weights of one grid direction (midpoint rule in the
/// generating coordinate).
struct Axis {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

Axis uniform_axis(double lo, double hi, int n);
Axis sinh_axis(double lo, double hi, int n, double center, double scale);
/// Uniform core on [lo, hi] with n cells plus geometric tails of total length `tail`.
Axis tailed_axis(double lo, double hi, int n, double tail, double growth);
/// Second-direction axis described by `spec` (dk or v nodes).
Axis second_axis(const GridSpec& spec);
/// Number of second-direction nodes including tails.
std::size_t second_axis_size(const GridSpec& spec);

struct GridBudget {
  std::size_t max_nodes = 40'000'000;
};

/// Sampled, L2-normalized joint amplitude.
struct JointAmplitudeGrid {
  GridSpec spec;
  Axis q;       ///< dq nodes (u in the rotated scheme)
  Axis second;  ///< dk nodes (uniform) or v = dq + dk nodes (rotated)
  Eigen::MatrixXcd values;  ///< n_q x n_k
  double norm = 1.0;        ///< raw values were divided by this
  std::string params_fingerprint;
  nlohmann::json params;    ///< producing AtomParams, null for synthetic kernels
  double ridge_spacing = 0.0;
  double ridge_halfwidth = 0.0;
  bool resolution_adequate = true;
  std::vector<std::string> warnings;

  double dq(Eigen::Index i) const { return q.nodes[static_cast<std::size_t>(i)]; }
  double dk(Eigen::Index i, Eigen::Index j) const;
  double weight(Eigen::Index i, Eigen::Index j) const {
    return q.weights[static_cast<std::size_t>(i)] * second.weights[static_cast<std::size_t>(j)];
  }
  /// sum |B|^2 w over all nodes
  double l2_mass() const;
};

/// Samples the full model onto spec and normalizes. Throws DegeneracyError for an
/// identically zero amplitude and BudgetError when the node count exceeds the budget.
JointAmplitudeGrid sample_grid(const AtomParams& params, const GridSpec& spec,
                               const GridBudget& budget = {});

/// Same for an arbitrary kernel f(dq, dk), used for fixtures and separable test states.
JointAmplitudeGrid sample_kernel(const std::function<complex(double, double)>& kernel,
                                 const GridSpec& spec, const GridBudget& budget = {});

/// Rotated grid for variance work: u over +-4 eta, v over the ridge centre
/// +-max(50 w, 5 eta), 16 * scale samples per min(w, eta) at the resonance core.
GridSpec default_variance_grid(const AtomParams& params, double scale = 1.0);

/// Uniform (dq, dk) grid for Schmidt decomposition: spacing min(w, eta/8)/scale,
/// dq over +-3 eta, dk covering the ridge band over that dq range.
GridSpec default_schmidt_grid(const AtomParams& params, double scale = 1.0);

}  // namespace recoil
