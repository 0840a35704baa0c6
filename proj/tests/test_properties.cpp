// Randomized invariants over parameter draws.
#include <doctest.h>

#include "approx.hpp"

#include <random>

#include "recoil/amplitude.hpp"
#include "recoil/detection.hpp"
#include "recoil/measures.hpp"
#include "recoil/schmidt.hpp"

using namespace recoil;

namespace {

constexpr double kPi = std::numbers::pi;

AtomParams draw_symmetric(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> delta(0.06, 0.3), eta(0.05, 0.2), r(-2.0, 2.0), theta(0.0, 2 * kPi);
  return symmetric_params(delta(rng), eta(rng), r(rng), theta(rng));
}

AtomParams draw_general(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> rate(0.5, 2.0), split(0.05, 0.4), eps(0.3, 1.0), r(-2.0, 2.0),
      theta(0.0, 2 * kPi), eta(0.05, 0.3);
  AtomParams p;
  p.gamma_a = rate(rng), p.gamma_b = rate(rng), p.omega_12 = split(rng), p.epsilon = eps(rng);
  p.coherence_r = r(rng), p.coherence_theta = theta(rng), p.eta = eta(rng);
  return p;
}

}  // namespace

TEST_CASE("normalization and finiteness for random parameters") {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 40; ++n) {
    const AtomParams p = n % 2 ? draw_general(rng) : draw_symmetric(rng);
    CAPTURE(fingerprint(p));
    const JointAmplitudeGrid g = sample_grid(p, default_variance_grid(p, 0.25));
    CHECK(std::abs(g.l2_mass() - 1.0) < 1e-10);
    CHECK(g.values.allFinite());
  }
}

TEST_CASE("R >= 1 and R(r) = R(-r) for random coherences") {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 30; ++n) {
    const AtomParams p = draw_symmetric(rng);
    CAPTURE(fingerprint(p));
    const double a = r_ratio_at(p, 0.5);
    AtomParams mirrored = p;
    mirrored.coherence_r = -p.coherence_r;
    CHECK(a >= 1.0 - 1e-3);
    CHECK(r_ratio_at(mirrored, 0.5) == approx(a).epsilon(0.02));
  }
}

TEST_CASE("Schmidt spectra: K >= 1, unit mass, K = 1 only for a dominant mode, E_i = marginal variance") {
  std::mt19937_64 rng(13);
  for (int n = 0; n < 12; ++n) {
    AtomParams p = draw_symmetric(rng);
    p.omega_12 = std::max(p.omega_12, 0.15);
    CAPTURE(fingerprint(p));
    const JointAmplitudeGrid g = sample_grid(p, default_schmidt_grid(p, 0.75));
    const SchmidtResult s = schmidt_decompose(g);
    CHECK(s.k_number >= 1.0);
    CHECK(std::abs(s.retained_mass - 1.0) < 1e-6 + 1e-12);
    CHECK((s.k_number <= 1.0 + 1e-9) == (s.eigenvalues.front() >= 1.0 - 1e-6));
    CHECK(s.k_number <= static_cast<double>(s.full_rank));
    const ModeSuperpositions m = mode_superpositions(s);
    // Truncation at 1e-6 retained mass limits the agreement.
    CHECK(std::abs(m.var_incoherent - unconditional_variance(g)) < 1e-6);
  }
}

TEST_CASE("K ignores the global phase of the initial amplitudes") {
  std::mt19937_64 rng(17);
  for (int n = 0; n < 4; ++n) {
    const AtomParams p = draw_symmetric(rng);
    const DerivedParams d = derive(p);
    const GridSpec s = default_schmidt_grid(p, 0.5);
    const JointKernel base = JointKernel::from_params(p);
    const complex u = std::polar(1.0, 0.3 + n);
    DerivedParams rotated = d;
    rotated.a10 *= u, rotated.a20 *= u, rotated.c1 *= u, rotated.c2 *= u;
    const auto a = sample_kernel([&](double q, double k) { return amplitude_at(d, p, q, k); }, s);
    const auto b = sample_kernel([&](double q, double k) { return amplitude_at(rotated, p, q, k); }, s);
    SchmidtOptions o;
    o.compute_modes = false;
    CHECK(schmidt_decompose(b, o).k_number == approx(schmidt_decompose(a, o).k_number).epsilon(1e-10));
    CHECK(std::abs(base(0.01, 0.02) - amplitude_at(d, p, 0.01, 0.02)) <= 1e-12 * std::abs(base(0.01, 0.02)));
  }
}

TEST_CASE("spectra agree between the SVD route and the density-matrix route on small instances") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> delta(0.12, 0.3), r(-0.6, 0.6), theta(2.2, 4.0);
  for (int n = 0; n < 3; ++n) {
    const AtomParams p = symmetric_params(delta(rng), 0.1, r(rng), theta(rng));
    CAPTURE(fingerprint(p));
    const GridSpec s = default_schmidt_grid(p, 0.75);
    const SchmidtResult svd = schmidt_decompose(sample_grid(p, s));
    const auto lam = density_spectrum(reduced_density_atom(p, uniform_axis(s.q_min, s.q_max, s.n_q)));
    for (std::size_t k = 0; k < 10; ++k) CHECK(lam[k] == approx(svd.eigenvalues[k]).epsilon(0.01));
  }
}
