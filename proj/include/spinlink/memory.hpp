#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "spinlink/source.hpp"

namespace spinlink {

// Phenomenological storage channel: retrieval efficiency decays with a
// Gaussian Doppler term, an exponential Rydberg-lifetime term and an
// exponential catch-all extra-dephasing term; each retrieved shot picks up a
// Gaussian random phase on the |.1> branch.
struct MemoryParams {
  double eta0 = 1.0;                 // zero-time retrieval efficiency
  double tau_doppler_s = 4.2756e-6;  // Gaussian dephasing time
  double tau_life_s = 5.0e-6;        // Rydberg-state lifetime
  double tau_extra_s = 1.0e9;        // extra dephasing; large value = disabled
  double phase_jitter_sigma = 0.0;   // rad, per-shot L/R phase noise
  double storage_time_s = 300.0e-9;

  void validate() const {
    if (!(eta0 >= 0.0 && eta0 <= 1.0))
      throw std::invalid_argument("MemoryParams: eta0 must be in [0,1]");
    if (!(tau_doppler_s > 0.0 && tau_life_s > 0.0 && tau_extra_s > 0.0))
      throw std::invalid_argument("MemoryParams: time constants must be positive");
    if (!(storage_time_s >= 0.0))
      throw std::invalid_argument("MemoryParams: storage time must be nonnegative");
    if (!(phase_jitter_sigma >= 0.0) || !std::isfinite(phase_jitter_sigma))
      throw std::invalid_argument("MemoryParams: phase jitter must be finite and nonnegative");
  }
};

// Doppler dephasing time 1 / ((1/lambda1 - 1/lambda2) * v).
//
// Convention note: with the wave-vector mismatch written as
// dk = 2 pi (1/lambda1 - 1/lambda2), the dephasing time is 2 pi / (dk v),
// i.e. the phase across the ensemble is taken to wrap by a full turn rather
// than one radian. For (475 nm, 795 nm, 0.276 m/s) this gives 4.2756 us; the
// one-radian convention would give 0.68 us instead.
inline double doppler_dephasing_time(double lambda_coupling, double lambda_signal,
                                     double atom_speed) {
  if (!(lambda_coupling > 0.0) || !(lambda_signal > 0.0))
    throw std::invalid_argument("doppler_dephasing_time: wavelengths must be positive");
  if (!(atom_speed > 0.0))
    throw std::invalid_argument("doppler_dephasing_time: speed must be positive");
  const double inv_diff = 1.0 / lambda_coupling - 1.0 / lambda_signal;
  if (inv_diff == 0.0)
    throw std::domain_error("doppler_dephasing_time: equal wavelengths give no dephasing");
  return 1.0 / (std::abs(inv_diff) * atom_speed);
}

// eta(t) = eta0 * exp(-t/tau_life) * exp(-(t/tau_doppler)^2) * exp(-t/tau_extra).
inline double retrieval_efficiency(double t, const MemoryParams& params) {
  params.validate();
  if (t < 0.0) throw std::invalid_argument("retrieval_efficiency: negative time");
  const double g = t / params.tau_doppler_s;
  return params.eta0 * std::exp(-t / params.tau_life_s) * std::exp(-g * g) *
         std::exp(-t / params.tau_extra_s);
}

// Solve eta(t) = target for eta0 with the other parameters fixed.
inline double calibrate_eta0(double target_efficiency, double t, MemoryParams params) {
  params.eta0 = 1.0;
  const double decay = retrieval_efficiency(t, params);
  if (!(target_efficiency >= 0.0) || target_efficiency > decay)
    throw std::invalid_argument("calibrate_eta0: target efficiency unreachable");
  return target_efficiency / decay;
}

struct StoredOutcome {
  bool retrieved = false;
  int surviving = 0;  // excitations surviving the channel (multiplicity >= 1 input)
  std::optional<TwoQubitState> state;
};

// Phase e^{i delta} applied to the |.1> branch of qubit 1 (basis states
// |01> and |11>); the off-diagonal <00|rho|11> shrinks by e^{-sigma^2/2} on
// ensemble average.
inline TwoQubitState apply_branch_phase(const TwoQubitState& in, double delta) {
  const cplx ph = std::polar(1.0, delta);
  const cplx f[4] = {1.0, ph, 1.0, ph};  // U = diag(f), rho' = U rho U^dagger
  ComplexMatrix rho(4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) rho(i, j) = f[i] * in.rho()(i, j) * std::conj(f[j]);
  return TwoQubitState::unchecked(std::move(rho));  // unitary conjugation of a valid state
}

// Stores the emission for params.storage_time_s. Each excitation survives
// independently with probability eta(storage_time); survivors share one
// random phase draw per shot (a single interferometer phase per cycle).
inline StoredOutcome apply_memory_channel(const PairEmission& emission,
                                          const MemoryParams& params, RandomStream& rng) {
  params.validate();
  if (emission.multiplicity < 1)
    throw std::invalid_argument("apply_memory_channel: emission carries no excitation");
  const double eta = retrieval_efficiency(params.storage_time_s, params);

  StoredOutcome out;
  for (int i = 0; i < emission.multiplicity; ++i)
    if (rng.bernoulli(eta)) ++out.surviving;
  out.retrieved = out.surviving > 0;
  if (!out.retrieved) return out;

  const double delta =
      params.phase_jitter_sigma > 0.0 ? rng.normal(0.0, params.phase_jitter_sigma) : 0.0;
  out.state = apply_branch_phase(*emission.joint_state, delta);
  return out;
}

// Which-path state of a single stored excitation across the L/R paths:
// (|0_R 1_L> + e^{i phase}|1_R 0_L>)/sqrt2 in the {|n m>} number basis,
// i.e. support on |01> and |10> only.
inline TwoQubitState ideal_psi1(double phase) {
  const double r = 0.70710678118654752440;
  TwoQubitVector psi{0.0, cplx(r, 0.0), std::polar(r, phase), 0.0};
  return TwoQubitState::from_pure(psi);
}

// Joint low/high-lying state after storage: same matrix form as ideal_psi2
// with total phase phi + theta.
inline TwoQubitState ideal_psi3(double total_phase) {
  return bell_phi_plus(total_phase);
}

struct LossBudget {
  double detection_loss = 0.50;
  double fiber_loss = 0.30;
  double filtering_loss = 0.335;
  double excitation_loss = 0.77;

  void validate() const {
    for (double l : {detection_loss, fiber_loss, filtering_loss, excitation_loss})
      if (!(l >= 0.0 && l < 1.0))
        throw std::invalid_argument("LossBudget: each loss must be in [0,1)");
  }
};

struct Transmission {
  double transmission = 1.0;
  double total_loss = 0.0;
};

inline Transmission end_to_end_transmission(const LossBudget& budget) {
  budget.validate();
  Transmission out;
  out.transmission = (1.0 - budget.detection_loss) * (1.0 - budget.fiber_loss) *
                     (1.0 - budget.filtering_loss) * (1.0 - budget.excitation_loss);
  out.total_loss = 1.0 - out.transmission;
  return out;
}

}  // namespace spinlink
