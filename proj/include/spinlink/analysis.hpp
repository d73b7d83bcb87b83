#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spinlink/detection.hpp"
#include "spinlink/errors.hpp"
#include "spinlink/matrix.hpp"
#include "spinlink/qcore.hpp"

namespace spinlink {

// Estimator value with a counting-statistics standard error. Estimators never
// fabricate values on empty data: `defined` is cleared instead.
struct CorrelationEstimate {
  double value = 0.0;
  double stderr = 0.0;
  bool defined = true;

  static CorrelationEstimate undefined() { return {0.0, 0.0, false}; }
};

inline double poisson_stderr(std::int64_t count) {
  if (count < 0) throw std::invalid_argument("poisson_stderr: negative count");
  return std::sqrt(static_cast<double>(count));
}

// Occupation probabilities of the which-path state: p_ij = probability of i
// excitations in path L and j in path R.
struct ProbTable {
  double p00 = 0.0, p01 = 0.0, p10 = 0.0, p11 = 0.0;

  double total() const { return p00 + p01 + p10 + p11; }

  void validate() const {
    for (double p : {p00, p01, p10, p11})
      if (!(p >= 0.0)) throw std::invalid_argument("ProbTable: probabilities must be >= 0");
    // Independently estimated occupation probabilities can overshoot a total
    // of one by rounding (the measured input-row values sum to 1.0006); the
    // estimators divide by P, so a percent-level overshoot is tolerated.
    if (total() > 1.0 + 1e-2) throw std::invalid_argument("ProbTable: probabilities sum above 1");
    if (!(total() > 0.0)) throw std::invalid_argument("ProbTable: total probability is zero");
  }
};

// R = g12^2 / (g11 g22); classical fields satisfy R <= 1.
inline CorrelationEstimate cauchy_schwarz_R(const CorrelationEstimate& g12,
                                            const CorrelationEstimate& g11,
                                            const CorrelationEstimate& g22) {
  if (!(g11.value > 0.0) || !(g22.value > 0.0))
    throw std::invalid_argument("cauchy_schwarz_R: autocorrelations must be positive");
  CorrelationEstimate out;
  out.value = g12.value * g12.value / (g11.value * g22.value);
  const double r12 = g12.value != 0.0 ? g12.stderr / g12.value : 0.0;
  const double r11 = g11.stderr / g11.value;
  const double r22 = g22.stderr / g22.value;
  out.stderr = out.value * std::sqrt(4.0 * r12 * r12 + r11 * r11 + r22 * r22);
  out.defined = g12.defined && g11.defined && g22.defined;
  return out;
}

// Heralded HBT autocorrelation g = P2 P213 / (P21 P23). P2 counts heralds,
// P21/P23 herald+split-arm twofolds, P213 threefolds. Zero twofold
// denominators yield a flagged undefined estimate.
inline CorrelationEstimate heralded_autocorrelation(std::int64_t p2, std::int64_t p21,
                                                    std::int64_t p23, std::int64_t p213) {
  for (std::int64_t c : {p2, p21, p23, p213})
    if (c < 0) throw std::invalid_argument("heralded_autocorrelation: negative count");
  if (p21 == 0 || p23 == 0) return CorrelationEstimate::undefined();
  const double P2 = static_cast<double>(p2);
  const double P21 = static_cast<double>(p21);
  const double P23 = static_cast<double>(p23);
  const double P213 = static_cast<double>(p213);
  CorrelationEstimate out;
  out.value = P2 * P213 / (P21 * P23);
  // First-order Poisson propagation in derivative form so zero counts
  // contribute zero variance instead of 0/0.
  const double d2 = P213 / (P21 * P23);
  const double d213 = P2 / (P21 * P23);
  const double d21 = -P2 * P213 / (P21 * P21 * P23);
  const double d23 = -P2 * P213 / (P21 * P23 * P23);
  out.stderr = std::sqrt(d2 * d2 * P2 + d213 * d213 * P213 + d21 * d21 * P21 + d23 * d23 * P23);
  return out;
}

// Least-squares fit of counts = a + b cos(x - c); visibility b/a equals
// (max-min)/(max+min) of the fitted sinusoid.
struct FringeFit {
  double visibility = 0.0;
  double phase = 0.0;       // rad
  double mean_level = 0.0;  // counts
  double residual_norm = 0.0;
};

inline FringeFit fit_fringe_visibility(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 5) throw FitError("fit_fringe_visibility: need at least 5 points");
  // Linear model y = a + B cos x + C sin x; b = |(B,C)|, c = atan2(C,B).
  double m[3][3] = {{0}};
  double rhs[3] = {0};
  for (const auto& [x, y] : points) {
    const double f[3] = {1.0, std::cos(x), std::sin(x)};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m[i][j] += f[i] * f[j];
      rhs[i] += f[i] * y;
    }
  }
  // 3x3 Gaussian elimination with partial pivoting.
  int perm[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[perm[r]][col]) > std::abs(m[perm[piv]][col])) piv = r;
    std::swap(perm[col], perm[piv]);
    const double diag = m[perm[col]][col];
    if (std::abs(diag) < 1e-9 * points.size())
      throw FitError("fit_fringe_visibility: degenerate phase span");
    for (int r = col + 1; r < 3; ++r) {
      const double f = m[perm[r]][col] / diag;
      for (int j = col; j < 3; ++j) m[perm[r]][j] -= f * m[perm[col]][j];
      rhs[perm[r]] -= f * rhs[perm[col]];
    }
  }
  double sol[3];
  for (int i = 2; i >= 0; --i) {
    double s = rhs[perm[i]];
    for (int j = i + 1; j < 3; ++j) s -= m[perm[i]][j] * sol[j];
    sol[i] = s / m[perm[i]][i];
  }
  const double a = sol[0];
  const double b = std::sqrt(sol[1] * sol[1] + sol[2] * sol[2]);
  if (!(a > 0.0)) throw FitError("fit_fringe_visibility: nonpositive mean level");

  FringeFit fit;
  fit.mean_level = a;
  fit.phase = std::atan2(sol[2], sol[1]);
  fit.visibility = std::min(1.0, b / a);
  double ss = 0.0;
  for (const auto& [x, y] : points) {
    const double model = a + b * std::cos(x - fit.phase);
    ss += (y - model) * (y - model);
  }
  fit.residual_norm = std::sqrt(ss);
  return fit;
}

// Reduced which-path density matrix
//   (1/P) [[p00,0,0,0],[0,p10,d,0],[0,d*,p01,0],[0,0,0,p11]]
// with d = V (p01 + p10)/2 taken real and nonnegative.
inline ComplexMatrix build_whichpath_rho(const ProbTable& p, double visibility) {
  p.validate();
  if (!(visibility >= 0.0 && visibility <= 1.0))
    throw std::invalid_argument("build_whichpath_rho: visibility must be in [0,1]");
  const double P = p.total();
  const double d = visibility * (p.p01 + p.p10) / 2.0;
  ComplexMatrix rho(4, 4);
  rho(0, 0) = p.p00 / P;
  rho(1, 1) = p.p10 / P;
  rho(2, 2) = p.p01 / P;
  rho(3, 3) = p.p11 / P;
  rho(1, 2) = d / P;
  rho(2, 1) = d / P;
  return rho;
}

// Con = (1/P) max(0, 2|d| - 2 sqrt(p00 p11)) with d = V (p01 + p10)/2.
inline double concurrence_whichpath(const ProbTable& p, double visibility) {
  p.validate();
  if (!(visibility >= 0.0 && visibility <= 1.0))
    throw std::invalid_argument("concurrence_whichpath: visibility must be in [0,1]");
  const double d = visibility * (p.p01 + p.p10) / 2.0;
  const double con = (2.0 * std::abs(d) - 2.0 * std::sqrt(p.p00 * p.p11)) / p.total();
  return con > 0.0 ? con : 0.0;
}

// Correlation E(theta1,theta2) from the four coincidence counts of the
// complementary analyzer settings:
//   E = (C(t1,t2) + C(t1+90,t2+90) - C(t1+90,t2) - C(t1,t2+90)) / (sum).
inline CorrelationEstimate chsh_E_from_counts(std::int64_t c_pp, std::int64_t c_mm,
                                              std::int64_t c_mp, std::int64_t c_pm) {
  for (std::int64_t c : {c_pp, c_mm, c_mp, c_pm})
    if (c < 0) throw std::invalid_argument("chsh_E: negative count");
  const double total = static_cast<double>(c_pp + c_mm + c_mp + c_pm);
  if (total <= 0.0) return CorrelationEstimate::undefined();
  CorrelationEstimate out;
  out.value = (static_cast<double>(c_pp + c_mm) - static_cast<double>(c_mp + c_pm)) / total;
  // Poisson propagation: dE/dC_same = (1-E)/T, dE/dC_opp = -(1+E)/T.
  const double same = static_cast<double>(c_pp + c_mm);
  const double opp = static_cast<double>(c_mp + c_pm);
  const double gp = (1.0 - out.value) / total;
  const double gm = (1.0 + out.value) / total;
  out.stderr = std::sqrt(gp * gp * same + gm * gm * opp);
  return out;
}

// Pulls the four complementary settings for (theta1, theta2) out of a tally
// map. Throws if any of the four settings was never armed.
inline CorrelationEstimate chsh_E(const CoincidenceCounts& counts, double theta1, double theta2,
                                  const std::string& basis = std::string()) {
  constexpr double kHalfPi = 1.57079632679489661923;
  const SettingKey keys[4] = {
      SettingKey::make(theta1, theta2, basis),
      SettingKey::make(theta1 + kHalfPi, theta2 + kHalfPi, basis),
      SettingKey::make(theta1 + kHalfPi, theta2, basis),
      SettingKey::make(theta1, theta2 + kHalfPi, basis),
  };
  std::int64_t c[4];
  for (int i = 0; i < 4; ++i) {
    const auto it = counts.by_setting.find(keys[i]);
    if (it == counts.by_setting.end())
      throw DataIntegrityError("chsh_E: missing counts for one of the four analyzer settings");
    c[i] = it->second.coincidences;
  }
  return chsh_E_from_counts(c[0], c[1], c[2], c[3]);
}

// Analytic Born-rule route to the same correlation, used as the oracle for
// the count-based estimator and for bound checks.
inline double chsh_E_born(const TwoQubitState& state, double theta1, double theta2) {
  constexpr double kHalfPi = 1.57079632679489661923;
  const double pp = joint_click_probability(state, MeasurementSetting::custom(theta1, theta2));
  const double mm =
      joint_click_probability(state, MeasurementSetting::custom(theta1 + kHalfPi, theta2 + kHalfPi));
  const double mp = joint_click_probability(state, MeasurementSetting::custom(theta1 + kHalfPi, theta2));
  const double pm = joint_click_probability(state, MeasurementSetting::custom(theta1, theta2 + kHalfPi));
  const double total = pp + mm + mp + pm;
  return (pp + mm - mp - pm) / total;
}

// S = |E(t1,t2) - E(t1,t2') + E(t1',t2) + E(t1',t2')|, errors in quadrature.
inline CorrelationEstimate chsh_S(const CorrelationEstimate& e11, const CorrelationEstimate& e12p,
                                  const CorrelationEstimate& e1p2,
                                  const CorrelationEstimate& e1p2p) {
  CorrelationEstimate out;
  out.defined = e11.defined && e12p.defined && e1p2.defined && e1p2p.defined;
  if (!out.defined) return CorrelationEstimate::undefined();
  out.value = std::abs(e11.value - e12p.value + e1p2.value + e1p2p.value);
  out.stderr = std::sqrt(e11.stderr * e11.stderr + e12p.stderr * e12p.stderr +
                         e1p2.stderr * e1p2.stderr + e1p2p.stderr * e1p2p.stderr);
  return out;
}

// The experiment's CHSH analyzer angles: xi1 = 0, xi2 = pi/8, xi1' = pi/4, xi2' = 3pi/8.
struct ChshAngles {
  double theta1 = 0.0;
  double theta2 = 0.39269908169872415481;   // pi/8
  double theta1p = 0.78539816339744830962;  // pi/4
  double theta2p = 1.17809724509617246442;  // 3pi/8
};

}  // namespace spinlink
