#include <doctest.h>

#include "approx.hpp"

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "recoil/core_model.hpp"
#include "recoil/errors.hpp"

using namespace recoil;

namespace {

double rel(complex a, complex b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

AtomParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> rate(0.1, 3.0), split(0.0, 2.0), unit(0.01, 1.0),
      coh(-3.0, 3.0), phase(0.0, 2.0 * std::numbers::pi);
  AtomParams p;
  p.gamma_a = rate(rng);
  p.gamma_b = rate(rng);
  p.omega_12 = split(rng);
  p.epsilon = unit(rng);
  p.coherence_r = coh(rng);
  p.coherence_theta = phase(rng);
  p.eta = unit(rng);
  return p;
}

}  // namespace

TEST_CASE("degenerate symmetric case has lambda 0 and roots +-1/2") {
  AtomParams p;
  p.omega_12 = 0.0;
  const DerivedParams d = derive(p);
  CHECK(std::abs(d.lambda) == 0.0);
  CHECK(d.s1.real() == approx(0.5));
  CHECK(d.s2.real() == approx(-0.5));
  CHECK(std::abs(d.s1.imag()) < 1e-15);
}

TEST_CASE("small splitting roots match the 50-digit oracle") {
  const AtomParams p = symmetric_params(0.02, 0.1);
  const DerivedParams d = derive(p);
  CHECK(d.lambda.imag() == approx(0.02));
  CHECK(d.s1.real() == approx(0.49990).epsilon(1e-5));
  CHECK(d.s1.imag() == approx(0.01));
  CHECK(d.s2.real() == approx(-0.49990).epsilon(1e-5));
  CHECK(d.s2.imag() == approx(0.01));
  const auto o = oracle::roots({1, 1, 0.02, 1, 0, std::numbers::pi, 0.1});
  CHECK(rel(d.s1, oracle::to_double(o.s1)) < 1e-14);
  CHECK(rel(d.s2, oracle::to_double(o.s2)) < 1e-14);
}

TEST_CASE("derived constants match the oracle for asymmetric parameters") {
  AtomParams p;
  p.gamma_a = 1.3;
  p.gamma_b = 0.7;
  p.omega_12 = 0.4;
  p.epsilon = 0.8;
  p.coherence_r = 0.5;
  p.coherence_theta = 1.0;
  const DerivedParams d = derive(p);
  const auto o = oracle::roots({1.3, 0.7, 0.4, 0.8, 0.5, 1.0, 0.1});
  CHECK(rel(d.c1, oracle::to_double(o.c1)) < 1e-13);
  CHECK(rel(d.c2, oracle::to_double(o.c2)) < 1e-13);
  CHECK(rel(d.a10, oracle::to_double(o.a10)) < 1e-14);
  CHECK_FALSE(d.delta.has_value());
  CHECK(d.g_ratio == approx(std::sqrt(0.7 / 1.3)));
}

TEST_CASE("root and amplitude identities hold over random draws") {
  std::mt19937_64 rng(12345);
  double worst_sum = 0, worst_prod = 0, worst_c = 0, worst_pop = 0;
  for (int n = 0; n < 10000; ++n) {
    const AtomParams p = random_params(rng);
    const DerivedParams d = derive(p);
    const double scale = std::abs(d.s1) + std::abs(d.s2);
    worst_sum = std::max(worst_sum, std::abs(d.s1 + d.s2 - d.lambda) / scale);
    const complex prod = -p.epsilon * p.epsilon * p.gamma_a * p.gamma_b / 4.0;
    worst_prod = std::max(worst_prod, std::abs(d.s1 * d.s2 - prod) / std::abs(prod));
    worst_c = std::max(worst_c, std::abs(d.c1 + d.c2 - d.a10) / (std::abs(d.c1) + std::abs(d.c2)));
    worst_pop = std::max(worst_pop, std::abs(std::norm(d.a10) + std::norm(d.a20) - 1.0));
  }
  CHECK(worst_sum < 1e-12);
  CHECK(worst_prod < 1e-12);
  CHECK(worst_c < 1e-12);
  CHECK(worst_pop < 1e-14);
}

TEST_CASE("derive is covariant under a common rate rescaling") {
  AtomParams p;
  p.gamma_a = 0.9;
  p.gamma_b = 0.9;
  p.omega_12 = 0.3;
  p.coherence_r = 0.2;
  p.coherence_theta = 2.0;
  AtomParams q = p;
  const double s = 7.5;
  q.gamma_a *= s, q.gamma_b *= s, q.omega_12 *= s;
  const DerivedParams a = derive(p), b = derive(q);
  CHECK(rel(b.lambda, s * a.lambda) < 1e-14);
  CHECK(rel(b.s1, s * a.s1) < 1e-14);
  CHECK(rel(b.s2, s * a.s2) < 1e-14);
  CHECK(rel(b.c1, a.c1) < 1e-13);
  CHECK(rel(b.c2, a.c2) < 1e-13);
  REQUIRE(a.delta.has_value());
  CHECK(*b.delta == approx(*a.delta));
  CHECK(*a.delta == approx(0.3 / 0.9));
}

TEST_CASE("large coherence magnitudes stay finite and normalized") {
  for (double r : {-400.0, -40.0, 40.0, 400.0}) {
    AtomParams p = symmetric_params(0.05, 0.1, r, 1.0);
    const DerivedParams d = derive(p);
    CHECK(std::isfinite(std::abs(d.a10)));
    CHECK(std::norm(d.a10) + std::norm(d.a20) == approx(1.0));
  }
}

TEST_CASE("invalid parameters are config errors") {
  auto bad = [](auto mutate) {
    AtomParams p;
    mutate(p);
    CHECK_THROWS_AS(validate(p), ConfigError);
    CHECK_THROWS_AS(derive(p), ConfigError);
  };
  bad([](AtomParams& p) { p.gamma_a = 0.0; });
  bad([](AtomParams& p) { p.gamma_b = -1.0; });
  bad([](AtomParams& p) { p.eta = 0.0; });
  bad([](AtomParams& p) { p.epsilon = 1.5; });
  bad([](AtomParams& p) { p.omega_12 = -0.1; });
  bad([](AtomParams& p) { p.coherence_r = NAN; });
  bad([](AtomParams& p) { p.gamma_a = INFINITY; });
}

TEST_CASE("validated regime flags strong interference only") {
  CHECK(in_validated_regime(symmetric_params(0.05, 0.1)));
  AtomParams p = symmetric_params(1.5, 0.1);
  CHECK_FALSE(in_validated_regime(p));
  p = symmetric_params(0.05, 0.1);
  p.epsilon = 0.9;
  CHECK_FALSE(in_validated_regime(p));
}

TEST_CASE("effective coordinates are affine and invertible") {
  EffectiveFrame f{2.0, 0.3, 5.0, 0.01};
  const auto at_k0 = effective_coordinates(f, f.k0, f.k0);
  CHECK(at_k0.dk == 0.0);
  CHECK(at_k0.dq == 0.0);
  for (double x : {-3.0, 0.1, 2.5, 17.0}) {
    CHECK(f.photon_wavenumber(f.photon_detuning(x)) == approx(x).epsilon(1e-13));
    CHECK(f.atom_wavenumber(f.atom_detuning(x)) == approx(x).epsilon(1e-13));
  }
  CHECK(f.photon_detuning(f.k0 + 0.3 / 5.0) == approx(1.0));
}

TEST_CASE("fingerprint and JSON round trip") {
  const AtomParams p = symmetric_params(0.05, 0.1, 0.3, 2.0);
  nlohmann::json j = p;
  const AtomParams back = j.get<AtomParams>();
  CHECK(back == p);
  CHECK(fingerprint(back) == fingerprint(p));
  CHECK(fingerprint(p).size() == 16);
  CHECK(fingerprint(p) != fingerprint(symmetric_params(0.05, 0.1, 0.3, 2.0 + 1e-15 * 2)));
}

TEST_CASE("error codes map to exit statuses") {
  CHECK(static_cast<int>(ConfigError("x").code()) == 2);
  CHECK(static_cast<int>(DegeneracyError("x").code()) == 3);
  CHECK(static_cast<int>(BudgetError("x").code()) == 4);
}
