#include "doctest.h"

#include <cmath>

#include "spinlink/source.hpp"

using namespace spinlink;

TEST_CASE("ideal_psi2 matches the bell state at zero phase") {
  CHECK((ideal_psi2(0.0).rho() - bell_phi_plus().rho()).max_abs() < 1e-15);
}

TEST_CASE("ideal_psi2 phase moves only the coherence") {
  const auto pi_state = ideal_psi2(M_PI);
  CHECK(pi_state.rho()(0, 3).real() == doctest::Approx(-0.5).epsilon(1e-12));
  for (double phi : {0.0, 0.7, 2.3, M_PI}) {
    const auto s = ideal_psi2(phi);
    CHECK(s.rho()(0, 0).real() == doctest::Approx(0.5));
    CHECK(s.rho()(1, 1).real() == doctest::Approx(0.0));
    CHECK(s.rho()(2, 2).real() == doctest::Approx(0.0));
    CHECK(s.rho()(3, 3).real() == doctest::Approx(0.5));
    CHECK(s.purity() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(check_density(s.rho()).ok);
  }
}

TEST_CASE("spin-wave wave vector is the componentwise difference") {
  const WaveVector a{1.0, 0.0, 0.0};
  const WaveVector b{0.0, 1.0, 0.0};
  const auto d = spin_wave_wavevector(a, b);
  CHECK(d.kx == 1.0);
  CHECK(d.ky == -1.0);
  CHECK(d.kz == 0.0);

  const auto zero = spin_wave_wavevector(a, a);
  CHECK(zero.magnitude() == 0.0);

  // counter-propagating 795 nm beams: |k_drive - k_photon| = 2 * 2pi/795nm
  const double k = 2.0 * M_PI / 795e-9;
  const auto sw = spin_wave_wavevector(WaveVector{k, 0.0, 0.0}, WaveVector{-k, 0.0, 0.0});
  CHECK(sw.magnitude() == doctest::Approx(1.5806755e7).epsilon(1e-6));

  CHECK_THROWS_AS(spin_wave_wavevector(WaveVector{std::nan(""), 0, 0}, b), std::invalid_argument);
}

TEST_CASE("degenerate emission probabilities") {
  RandomStream base(11);
  SourceParams none;
  none.p_pair = 0.0;
  none.p_double = 0.0;
  EmissionSampler off(none);
  for (int c = 0; c < 1000; ++c) CHECK(off.sample(c, base).multiplicity == 0);

  SourceParams always;
  always.p_pair = 1.0;
  always.p_double = 0.0;
  EmissionSampler on(always);
  for (int c = 0; c < 1000; ++c) {
    const auto em = on.sample(c, base);
    CHECK(em.multiplicity == 1);
    CHECK(em.joint_state != nullptr);
  }
}

TEST_CASE("emission frequencies match configured probabilities within 4 sigma") {
  RandomStream base(2025);
  SourceParams params;
  params.p_pair = 3.3e-3;
  params.p_double = 2.0e-4;
  EmissionSampler sampler(params);
  const std::int64_t n = 1000000;
  std::int64_t n1 = 0, n2 = 0;
  for (std::int64_t c = 0; c < n; ++c) {
    const int m = sampler.sample(c, base).multiplicity;
    if (m == 1) ++n1;
    if (m == 2) ++n2;
  }
  const double s1 = std::sqrt(n * params.p_pair * (1 - params.p_pair));
  const double s2 = std::sqrt(n * params.p_double * (1 - params.p_double));
  CHECK(std::abs(n1 - n * params.p_pair) < 4.0 * s1);       // ~3300 +- 4*57
  CHECK(std::abs(n2 - n * params.p_double) < 4.0 * s2);
}

TEST_CASE("identical seeds reproduce identical emission sequences") {
  SourceParams params;
  params.p_pair = 0.02;
  params.p_double = 0.001;
  EmissionSampler sampler(params);
  RandomStream a(909), b(909);
  for (int c = 0; c < 20000; ++c)
    CHECK(sampler.sample(c, a).multiplicity == sampler.sample(c, b).multiplicity);
}

TEST_CASE("expected autocorrelation from the effective mode count") {
  CHECK(expected_autocorrelation(1e9) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(expected_autocorrelation(1.0) == doctest::Approx(2.0));
  CHECK(expected_autocorrelation(1.5625) == doctest::Approx(1.64));
  CHECK(expected_autocorrelation(1.25) == doctest::Approx(1.80));
  CHECK_THROWS_AS(expected_autocorrelation(0.5), std::invalid_argument);
}

TEST_CASE("source parameter validation") {
  SourceParams bad;
  bad.p_pair = 0.1;
  bad.p_double = 0.2;  // p_double > p_pair
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  SourceParams sum;
  sum.p_pair = 0.7;
  sum.p_double = 0.4;
  CHECK_THROWS_AS(sum.validate(), std::invalid_argument);
}
