#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>

#include "spinlink/qcore.hpp"
#include "spinlink/rng.hpp"

namespace spinlink {

// Stream-purpose indices within a cycle substream (see rng.hpp).
inline constexpr std::uint64_t kStreamEmission = 0;
inline constexpr std::uint64_t kStreamMemory = 1;
inline constexpr std::uint64_t kStreamDetection = 2;
inline constexpr std::uint64_t kStreamRouting = 3;

struct WaveVector {
  double kx = 0.0, ky = 0.0, kz = 0.0;  // rad/m

  double magnitude() const { return std::sqrt(kx * kx + ky * ky + kz * kz); }
};

// Spin-wave wave vector from drive and photon wave vectors (k_drive - k_photon):
// pump - signal for the low-lying wave, coupling - signal for the high-lying one.
inline WaveVector spin_wave_wavevector(const WaveVector& k_drive, const WaveVector& k_photon) {
  for (double c : {k_drive.kx, k_drive.ky, k_drive.kz, k_photon.kx, k_photon.ky, k_photon.kz})
    if (!std::isfinite(c)) throw std::invalid_argument("spin_wave_wavevector: non-finite component");
  return {k_drive.kx - k_photon.kx, k_drive.ky - k_photon.ky, k_drive.kz - k_photon.kz};
}

struct SourceParams {
  double p_pair = 0.0;      // probability of one pair per cycle
  double p_double = 0.0;    // probability of two pairs per cycle
  double mode_number = 1.5625;  // effective Schmidt-mode count of the signal-1 field
  double phase_phi = 0.0;   // relative phase between the upper and lower paths

  void validate() const {
    if (!(p_double >= 0.0 && p_double <= p_pair && p_pair <= 1.0))
      throw std::invalid_argument("SourceParams: need 0 <= p_double <= p_pair <= 1");
    if (p_pair + p_double > 1.0)
      throw std::invalid_argument("SourceParams: p_pair + p_double must not exceed 1");
    if (mode_number < 1.0) throw std::invalid_argument("SourceParams: mode_number must be >= 1");
    if (!std::isfinite(phase_phi)) throw std::invalid_argument("SourceParams: non-finite phase");
  }
};

struct PairEmission {
  std::int64_t cycle_index = 0;
  int multiplicity = 0;  // 0, 1 or 2
  std::shared_ptr<const TwoQubitState> joint_state;  // null when multiplicity == 0
};

// (|U>|H> + e^{i phi}|D>|V>)/sqrt2 as a density matrix. For phi = 0 this is
// bell_phi_plus() under the basis mapping in qcore.hpp.
inline TwoQubitState ideal_psi2(double phase_phi) {
  return bell_phi_plus(phase_phi);
}

// Multimode-thermal autocorrelation g = 1 + 1/M for effective mode count M.
inline double expected_autocorrelation(double mode_number) {
  if (!(mode_number >= 1.0))
    throw std::invalid_argument("expected_autocorrelation: mode_number must be >= 1");
  return 1.0 + 1.0 / mode_number;
}

// Draws per-cycle emissions while sharing one immutable joint state across
// all of them. States are safe to share between threads.
class EmissionSampler {
 public:
  explicit EmissionSampler(const SourceParams& params)
      : params_(params),
        state_(std::make_shared<const TwoQubitState>(ideal_psi2(params.phase_phi))) {
    params_.validate();
  }

  // Deterministic in (params, cycle_index, base stream key): the draw comes
  // from base.fork(cycle_index).fork(kStreamEmission), independent of call order.
  PairEmission sample(std::int64_t cycle_index, const RandomStream& base) const {
    RandomStream s = base.fork(static_cast<std::uint64_t>(cycle_index)).fork(kStreamEmission);
    const double u = s.uniform();
    PairEmission em;
    em.cycle_index = cycle_index;
    if (u < params_.p_pair) {
      em.multiplicity = 1;
      em.joint_state = state_;
    } else if (u < params_.p_pair + params_.p_double) {
      em.multiplicity = 2;
      em.joint_state = state_;
    }
    return em;
  }

  const SourceParams& params() const { return params_; }
  const std::shared_ptr<const TwoQubitState>& state() const { return state_; }

 private:
  SourceParams params_;
  std::shared_ptr<const TwoQubitState> state_;
};

inline PairEmission sample_emission(const SourceParams& params, std::int64_t cycle_index,
                                    const RandomStream& base) {
  return EmissionSampler(params).sample(cycle_index, base);
}

// Expected heralded HBT autocorrelation g = P2 P213 / (P21 P23) for the
// multiplicity model: herald candidates detected with probability
// herald_eff each, signal photons surviving with probability survival each
// before a fair two-way split.
inline double expected_heralded_g2(double p_pair, double p_double, double herald_eff,
                                   double survival) {
  double p2 = 0.0, p21 = 0.0, p213 = 0.0;
  const double pm[3] = {1.0 - p_pair - p_double, p_pair, p_double};
  for (int m = 1; m <= 2; ++m) {
    const double ph = 1.0 - std::pow(1.0 - herald_eff, m);
    const double pa = 1.0 - std::pow(1.0 - survival / 2.0, m);
    const double pab = 1.0 - 2.0 * std::pow(1.0 - survival / 2.0, m) + std::pow(1.0 - survival, m);
    p2 += pm[m] * ph;
    p21 += pm[m] * ph * pa;
    p213 += pm[m] * ph * pab;
  }
  if (!(p21 > 0.0)) throw std::invalid_argument("expected_heralded_g2: no twofold rate");
  return p2 * p213 / (p21 * p21);
}

// Inverts expected_heralded_g2 for p_double by bisection. g grows
// monotonically with the double-pair rate, so the root is unique.
inline double tune_p_double_for_g2(double p_pair, double herald_eff, double survival,
                                   double g_target) {
  if (!(g_target >= 0.0)) throw std::invalid_argument("tune_p_double_for_g2: negative target");
  if (g_target == 0.0) return 0.0;
  double lo = 0.0, hi = p_pair;
  if (expected_heralded_g2(p_pair, hi, herald_eff, survival) < g_target)
    throw std::invalid_argument("tune_p_double_for_g2: target unreachable at this pair rate");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (expected_heralded_g2(p_pair, mid, herald_eff, survival) < g_target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace spinlink
