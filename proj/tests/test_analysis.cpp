#include "doctest.h"

#include <cmath>
#include <vector>

#include "spinlink/analysis.hpp"
#include "spinlink/detection.hpp"
#include "spinlink/rng.hpp"
#include "support/oracles.hpp"

using namespace spinlink;

namespace {

// Table 1 occupation probabilities.
const ProbTable kInputRow{0.9516, 2.61e-2, 2.29e-2, 2.6e-5};
const ProbTable kOutputRow{0.9937, 3.33e-3, 2.98e-3, 1.0e-6};

}  // namespace

TEST_CASE("cauchy-schwarz ratio reference points") {
  const CorrelationEstimate unit{1.0, 0.0, true};
  CHECK(cauchy_schwarz_R(unit, unit, unit).value == doctest::Approx(1.0));

  // g12 = 11.29, g11 = 1.64, g22 = 1.80 -> R = 43.18
  const CorrelationEstimate g12{11.29, 0.0, true};
  const CorrelationEstimate g11{1.64, 0.0, true};
  const CorrelationEstimate g22{1.80, 0.0, true};
  CHECK(cauchy_schwarz_R(g12, g11, g22).value == doctest::Approx(43.1789).epsilon(1e-4));

  // doubling g12 quadruples R
  const CorrelationEstimate g12x2{22.58, 0.0, true};
  CHECK(cauchy_schwarz_R(g12x2, g11, g22).value ==
        doctest::Approx(4.0 * cauchy_schwarz_R(g12, g11, g22).value));

  CHECK_THROWS_AS(cauchy_schwarz_R(g12, CorrelationEstimate{0.0, 0.0, true}, g22),
                  std::invalid_argument);
}

TEST_CASE("cauchy-schwarz error propagation is first order") {
  const CorrelationEstimate g12{10.0, 0.5, true};
  const CorrelationEstimate g11{2.0, 0.1, true};
  const CorrelationEstimate g22{2.0, 0.0, true};
  const auto r = cauchy_schwarz_R(g12, g11, g22);
  const double expected_rel = std::sqrt(4.0 * 0.05 * 0.05 + 0.05 * 0.05);
  CHECK(r.stderr == doctest::Approx(r.value * expected_rel).epsilon(1e-12));
}

TEST_CASE("heralded autocorrelation reference points") {
  // pure single photon: no threefolds
  CHECK(heralded_autocorrelation(1000, 500, 500, 0).value == doctest::Approx(0.0));
  // two-photon source in expected-count form: the four equal-probability
  // routings of two photons give counts {P2,P21,P23,P213} = {4N,4N,4N,2N}.
  CHECK(heralded_autocorrelation(4000, 4000, 4000, 2000).value == doctest::Approx(0.5));
  // retrieved-photon scale: P2=1e6, P21=P23=1e3, P213 such that g = 0.1
  CHECK(heralded_autocorrelation(1000000, 1000, 1000, 0).value == doctest::Approx(0.0));
  const auto g = heralded_autocorrelation(1000000, 1000, 1000, 0);
  CHECK(g.stderr == doctest::Approx(0.0));
  CHECK(heralded_autocorrelation(1000000, 100000, 100000, 1000).value == doctest::Approx(0.1));

  CHECK_FALSE(heralded_autocorrelation(10, 0, 5, 0).defined);
  CHECK_THROWS_AS(heralded_autocorrelation(-1, 1, 1, 0), std::invalid_argument);
}

TEST_CASE("two-photon routing oracle reproduces g = 0.5 in the low-loss-count limit") {
  // Enumerate the four equal-probability routings of two photons with
  // photon-number tallies (each trial heralds; detectors count photons).
  std::int64_t p2 = 0, p21 = 0, p23 = 0, p213 = 0;
  const int routings[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};  // 0 -> arm a, 1 -> arm b
  for (const auto& r : routings) {
    ++p2;
    const int in_a = (r[0] == 0) + (r[1] == 0);
    const int in_b = (r[0] == 1) + (r[1] == 1);
    p21 += in_a;
    p23 += in_b;
    p213 += (in_a > 0 && in_b > 0) ? 1 : 0;
  }
  CHECK(heralded_autocorrelation(p2, p21, p23, p213).value == doctest::Approx(0.5));
}

TEST_CASE("fringe fit recovers synthetic visibilities") {
  // noiseless a=100, b=90.6 -> visibility 0.906
  std::vector<std::pair<double, double>> pts;
  for (int k = 0; k < 12; ++k) {
    const double x = 2.0 * M_PI * k / 12.0;
    pts.push_back({x, 100.0 + 90.6 * std::cos(x - 0.4)});
  }
  const auto fit = fit_fringe_visibility(pts);
  CHECK(fit.visibility == doctest::Approx(0.906).epsilon(1e-9));
  CHECK(fit.phase == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(fit.mean_level == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(fit.residual_norm < 1e-9);

  // constant counts -> 0; full contrast -> 1
  std::vector<std::pair<double, double>> flat, full;
  for (int k = 0; k < 12; ++k) {
    const double x = 2.0 * M_PI * k / 12.0;
    flat.push_back({x, 42.0});
    full.push_back({x, 50.0 * (1.0 + std::cos(x))});
  }
  CHECK(fit_fringe_visibility(flat).visibility == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(fit_fringe_visibility(full).visibility == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fringe fit rejects degenerate inputs") {
  std::vector<std::pair<double, double>> few = {{0.0, 1.0}, {1.0, 2.0}, {2.0, 1.0}, {3.0, 0.5}};
  CHECK_THROWS_AS(fit_fringe_visibility(few), FitError);

  std::vector<std::pair<double, double>> clumped(8, {1.3, 5.0});
  CHECK_THROWS_AS(fit_fringe_visibility(clumped), FitError);
}

TEST_CASE("which-path matrix from Table 1 rows") {
  // output row with V = 0.854: d = 0.854*(3.33e-3 + 2.98e-3)/2 = 2.6944e-3
  const auto rho = build_whichpath_rho(kOutputRow, 0.854);
  const double P = kOutputRow.total();
  CHECK(rho(1, 2).real() == doctest::Approx(2.6944e-3 / P).epsilon(1e-4));
  CHECK(rho.is_hermitian(1e-15));
  CHECK(std::abs(rho.trace() - cplx(1.0)) < 1e-12);

  // V = 0 -> diagonal
  const auto diag = build_whichpath_rho(kOutputRow, 0.0);
  CHECK(diag(1, 2) == cplx(0.0));

  // maximally entangled single excitation
  const ProbTable half{0.0, 0.5, 0.5, 0.0};
  const auto eig = hermitian_eigenvalues(build_whichpath_rho(half, 1.0));
  CHECK(eig[3] == doctest::Approx(1.0).epsilon(1e-12));
  for (int k = 0; k < 3; ++k) CHECK(std::abs(eig[k]) < 1e-12);

  ProbTable zero{0.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(build_whichpath_rho(zero, 0.5), std::invalid_argument);
}

TEST_CASE("which-path matrix is PSD for Table 1 rows and random tables") {
  for (const auto& [row, vis] :
       std::vector<std::pair<ProbTable, double>>{{kInputRow, 0.906}, {kOutputRow, 0.854}}) {
    CHECK(check_density(build_whichpath_rho(row, vis)).ok);
  }
  RandomStream rng(6021023);
  for (int rep = 0; rep < 1000; ++rep) {
    ProbTable p;
    p.p00 = rng.uniform();
    p.p01 = rng.uniform();
    p.p10 = rng.uniform();
    p.p11 = rng.uniform();
    const double scale = 1.0 / (p.total() * (1.0 + rng.uniform()));
    p.p00 *= scale;
    p.p01 *= scale;
    p.p10 *= scale;
    p.p11 *= scale;
    // d <= sqrt(p01 p10) keeps the center block PSD; V (p01+p10)/2 can exceed
    // it, so only geometric-mean-bounded visibilities are admissible here.
    const double vmax = 2.0 * std::sqrt(p.p01 * p.p10) / (p.p01 + p.p10);
    const auto rho = build_whichpath_rho(p, vmax * rng.uniform());
    CHECK(check_density(rho, 1e-12, 1e-12, -1e-9).ok);
  }
}

TEST_CASE("concurrence reproduces Table 1 and clamps at zero") {
  // Frozen oracle arithmetic:
  //   output row, V=0.854: (2*2.69440e-3 - 2*sqrt(0.9937e-6))/1.000011 = 3.39501e-3
  //   input row,  V=0.906: (2*2.21970e-2 - 2*sqrt(0.9516*2.6e-5))/1.000626 = 3.44243e-2
  CHECK(concurrence_whichpath(kOutputRow, 0.854) == doctest::Approx(3.39501e-3).epsilon(1e-5));
  CHECK(concurrence_whichpath(kInputRow, 0.906) == doctest::Approx(3.44243e-2).epsilon(1e-5));

  // large p00 p11 product clamps to zero
  const ProbTable clamped{0.5, 1e-3, 1e-3, 0.4};
  CHECK(concurrence_whichpath(clamped, 1.0) == 0.0);
}

TEST_CASE("concurrence is in [0,1] and monotone in V") {
  RandomStream rng(8);
  for (int rep = 0; rep < 200; ++rep) {
    ProbTable p;
    p.p00 = rng.uniform();
    p.p01 = rng.uniform();
    p.p10 = rng.uniform();
    p.p11 = rng.uniform();
    const double scale = 1.0 / (p.total() * (1.0 + rng.uniform()));
    p.p00 *= scale;
    p.p01 *= scale;
    p.p10 *= scale;
    p.p11 *= scale;
    double prev = -1.0;
    for (double v = 0.0; v <= 1.0; v += 0.1) {
      const double c = concurrence_whichpath(p, v);
      CHECK(c >= 0.0);
      CHECK(c <= 1.0);
      CHECK(c >= prev);
      prev = c;
    }
  }
}

TEST_CASE("closed-form concurrence agrees with the Wootters route") {
  for (const auto& [row, vis] :
       std::vector<std::pair<ProbTable, double>>{{kInputRow, 0.906}, {kOutputRow, 0.854}}) {
    const double closed = concurrence_whichpath(row, vis);
    const double wootters = oracles::wootters_concurrence(build_whichpath_rho(row, vis));
    CHECK(std::abs(closed - wootters) < 1e-9);
  }
}

TEST_CASE("chsh correlation reference points") {
  const auto bell = bell_phi_plus();
  // ideal phi+ at (0, pi/8): E = cos(pi/4)
  CHECK(chsh_E_born(bell, 0.0, M_PI / 8.0) == doctest::Approx(M_SQRT1_2).epsilon(1e-12));
  CHECK(chsh_E_born(bell, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  // werner scales E linearly
  for (double v : {0.25, 0.5, 0.81}) {
    CHECK(chsh_E_born(werner_state(v), 0.0, M_PI / 8.0) ==
          doctest::Approx(v * M_SQRT1_2).epsilon(1e-12));
  }
}

TEST_CASE("count-based E agrees with the Born oracle and stays in [-1,1]") {
  // Counts proportional to the Born probabilities reproduce E exactly.
  const auto bell = bell_phi_plus();
  const double t1 = 0.0, t2 = M_PI / 8.0;
  const auto table = make_born_table(bell, MeasurementSetting::custom(t1, t2));
  const auto scale = [](double p) { return static_cast<std::int64_t>(std::llround(p * 1e9)); };
  const auto e = chsh_E_from_counts(scale(table.p[0][0]), scale(table.p[1][1]),
                                    scale(table.p[1][0]), scale(table.p[0][1]));
  CHECK(e.value == doctest::Approx(chsh_E_born(bell, t1, t2)).epsilon(1e-8));
  CHECK(std::abs(e.value) <= 1.0);

  CHECK_FALSE(chsh_E_from_counts(0, 0, 0, 0).defined);
}

TEST_CASE("chsh S at the experiment angles") {
  const ChshAngles a;
  const auto S_of = [&](const TwoQubitState& st) {
    const auto E = [&](double x, double y) {
      return CorrelationEstimate{chsh_E_born(st, x, y), 0.0, true};
    };
    return chsh_S(E(a.theta1, a.theta2), E(a.theta1, a.theta2p), E(a.theta1p, a.theta2),
                  E(a.theta1p, a.theta2p));
  };
  CHECK(S_of(bell_phi_plus()).value == doctest::Approx(2.0 * M_SQRT2).epsilon(1e-12));
  CHECK(S_of(werner_state(0.810)).value == doctest::Approx(2.29103).epsilon(1e-5));

  // product state |HH>: S = sqrt(2), no violation
  TwoQubitVector hh{cplx(1.0), 0.0, 0.0, 0.0};
  CHECK(S_of(TwoQubitState::from_pure(hh)).value == doctest::Approx(M_SQRT2).epsilon(1e-12));
}

TEST_CASE("chsh S stderr adds in quadrature") {
  const CorrelationEstimate e{0.5, 0.01, true};
  const auto s = chsh_S(e, e, e, e);
  CHECK(s.stderr == doctest::Approx(0.02).epsilon(1e-12));
  CHECK_FALSE(chsh_S(e, e, e, CorrelationEstimate::undefined()).defined);
}

TEST_CASE("random states respect the tsirelson bound at the fixed analyzer angles") {
  RandomStream rng(112358);
  const ChshAngles a;
  for (int rep = 0; rep < 1000; ++rep) {
    // Ginibre-random density matrix.
    ComplexMatrix g(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) g(i, j) = cplx(rng.normal(), rng.normal());
    ComplexMatrix rho = g * g.dagger();
    rho = rho.scaled(1.0 / rho.trace().real());
    const TwoQubitState state(rho);
    const auto E = [&](double x, double y) {
      return CorrelationEstimate{chsh_E_born(state, x, y), 0.0, true};
    };
    const auto s = chsh_S(E(a.theta1, a.theta2), E(a.theta1, a.theta2p), E(a.theta1p, a.theta2),
                          E(a.theta1p, a.theta2p));
    CHECK(s.value <= 2.0 * M_SQRT2 + 1e-9);
  }
}

TEST_CASE("separable diagonal states stay below the classical bound") {
  RandomStream rng(13);
  const ChshAngles a;
  for (int rep = 0; rep < 100; ++rep) {
    ComplexMatrix rho(4, 4);
    double tot = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      rho(i, i) = rng.uniform() + 1e-3;
      tot += rho(i, i).real();
    }
    rho = rho.scaled(1.0 / tot);
    const TwoQubitState state(rho);
    const auto E = [&](double x, double y) {
      return CorrelationEstimate{chsh_E_born(state, x, y), 0.0, true};
    };
    const auto s = chsh_S(E(a.theta1, a.theta2), E(a.theta1, a.theta2p), E(a.theta1p, a.theta2),
                          E(a.theta1p, a.theta2p));
    CHECK(s.value <= 2.0 + 1e-9);
  }
}

TEST_CASE("poisson stderr") {
  CHECK(poisson_stderr(0) == 0.0);
  CHECK(poisson_stderr(100) == doctest::Approx(10.0));
  CHECK(poisson_stderr(3300) == doctest::Approx(57.4456).epsilon(1e-5));
  CHECK_THROWS_AS(poisson_stderr(-1), std::invalid_argument);
}

TEST_CASE("fringe fit recovers the generating visibility on sampled scans") {
  // Simulated 1e5-trial scans at three visibilities; the fit must land within
  // two statistical errors of the generator.
  RandomStream master(424242);
  for (double v : {0.85, 0.906, 0.62}) {
    const int points = 12;
    const std::int64_t per_point = 100000 / points;
    std::vector<std::pair<double, double>> pts;
    double total_counts = 0.0;
    for (int k = 0; k < points; ++k) {
      const double x = 2.0 * M_PI * k / points;
      const double p = 0.4 * (1.0 + v * std::cos(x));
      RandomStream rng = master.fork(k + static_cast<int>(v * 1000) * 100);
      std::int64_t n = 0;
      for (std::int64_t t = 0; t < per_point; ++t)
        if (rng.bernoulli(p)) ++n;
      pts.push_back({x, static_cast<double>(n)});
      total_counts += static_cast<double>(n);
    }
    const auto fit = fit_fringe_visibility(pts);
    const double sigma_v = std::sqrt(2.0 / total_counts);
    CHECK(std::abs(fit.visibility - v) < 2.0 * sigma_v + 0.003);
  }
}
