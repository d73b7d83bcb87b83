#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "spinlink/matrix.hpp"

namespace spinlink {

// Basis conventions used throughout:
//   qubit 0 = first system  (low-lying spin wave / signal-2 photon),
//   qubit 1 = second system (high-lying spin wave / signal-1 photon),
//   joint basis order {|00>, |01>, |10>, |11>},
//   logical 0 = H / U / L-path, logical 1 = V / D / R-path.

using TwoQubitVector = std::array<cplx, 4>;

// Normalized single-photon polarization amplitude pair.
struct PolarizationVector {
  cplx amp_h;
  cplx amp_v;

  PolarizationVector(cplx h, cplx v) : amp_h(h), amp_v(v) {
    const double n2 = std::norm(amp_h) + std::norm(amp_v);
    if (std::abs(n2 - 1.0) > 1e-12)
      throw std::invalid_argument("PolarizationVector must be normalized");
  }

  static PolarizationVector h() { return {1.0, 0.0}; }
  static PolarizationVector v() { return {0.0, 1.0}; }
  static PolarizationVector diag() { return {kInvSqrt2, kInvSqrt2}; }       // (H+V)/sqrt2
  static PolarizationVector antidiag() { return {kInvSqrt2, -kInvSqrt2}; }  // (H-V)/sqrt2
  // Circular conventions: R = (H - iV)/sqrt2, L = (H + iV)/sqrt2.
  static PolarizationVector circ_r() { return {kInvSqrt2, cplx(0.0, -kInvSqrt2)}; }
  static PolarizationVector circ_l() { return {kInvSqrt2, cplx(0.0, kInvSqrt2)}; }

 private:
  static constexpr double kInvSqrt2 = 0.70710678118654752440;
};

// 4x4 density matrix of a qubit pair. Construction validates Hermiticity and
// unit trace to 1e-12 and positivity down to -1e-9.
class TwoQubitState {
 public:
  explicit TwoQubitState(ComplexMatrix rho) : rho_(std::move(rho)) {
    if (rho_.rows() != 4 || rho_.cols() != 4)
      throw std::invalid_argument("TwoQubitState requires a 4x4 matrix");
    const DensityCheck chk = check_density(rho_);
    if (!chk.ok)
      throw std::invalid_argument("TwoQubitState: matrix fails density-matrix checks");
  }

  static TwoQubitState from_pure(const TwoQubitVector& psi) {
    double n2 = 0.0;
    for (const auto& z : psi) n2 += std::norm(z);
    if (std::abs(n2 - 1.0) > 1e-12)
      throw std::invalid_argument("pure state vector must be normalized");
    ComplexMatrix rho(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) rho(i, j) = psi[i] * std::conj(psi[j]);
    // |psi><psi| of a normalized vector is a density matrix identically.
    return TwoQubitState(std::move(rho), Unchecked{});
  }

  // For transforms that preserve density validity exactly (unitary
  // conjugation of a valid state, projector outer products). The caller owns
  // the guarantee; the general constructor stays fully checked.
  static TwoQubitState unchecked(ComplexMatrix rho) {
    return TwoQubitState(std::move(rho), Unchecked{});
  }

  const ComplexMatrix& rho() const { return rho_; }

  double purity() const { return rho_.trace_of_product(rho_).real(); }

 private:
  struct Unchecked {};
  TwoQubitState(ComplexMatrix rho, Unchecked) : rho_(std::move(rho)) {}

  ComplexMatrix rho_;
};

// Jones matrix of a half-wave plate with fast axis at `angle`:
// [[cos2a, sin2a], [sin2a, -cos2a]]. Unitary, involutory, det = -1.
// Note the factor of two: a plate at pi/8 rotates H onto (H+V)/sqrt2 — i.e.
// the analyzer angle equals twice the physical plate angle.
inline ComplexMatrix hwp_operator(double angle) {
  if (!std::isfinite(angle)) throw std::invalid_argument("hwp_operator: non-finite angle");
  ComplexMatrix m(2, 2);
  m(0, 0) = std::cos(2.0 * angle);
  m(0, 1) = std::sin(2.0 * angle);
  m(1, 0) = std::sin(2.0 * angle);
  m(1, 1) = -std::cos(2.0 * angle);
  return m;
}

// (|00> + e^{i phase}|11>)/sqrt2 as a density matrix.
inline TwoQubitState bell_phi_plus(double phase = 0.0) {
  const double r = 0.70710678118654752440;
  TwoQubitVector psi{cplx(r, 0.0), 0.0, 0.0, std::polar(r, phase)};
  return TwoQubitState::from_pure(psi);
}

inline TwoQubitVector bell_phi_plus_vector() {
  const double r = 0.70710678118654752440;
  return {cplx(r, 0.0), 0.0, 0.0, cplx(r, 0.0)};
}

// V |Phi+><Phi+| + (1-V) I/4.
inline TwoQubitState werner_state(double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0))
    throw std::invalid_argument("werner_state: visibility must be in [0,1]");
  ComplexMatrix rho = bell_phi_plus().rho().scaled(visibility);
  const double bg = (1.0 - visibility) / 4.0;
  for (std::size_t i = 0; i < 4; ++i) rho(i, i) += bg;
  return TwoQubitState(std::move(rho));
}

// <psi|rho|psi> for a normalized pure target, clamped to [0,1].
inline double state_fidelity(const TwoQubitState& rho, const TwoQubitVector& target) {
  double n2 = 0.0;
  for (const auto& z : target) n2 += std::norm(z);
  if (std::abs(n2 - 1.0) > 1e-10)
    throw std::invalid_argument("state_fidelity: target must be normalized");
  cplx f = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) f += std::conj(target[i]) * rho.rho()(i, j) * target[j];
  double val = f.real();
  if (val < 0.0) val = 0.0;
  if (val > 1.0) val = 1.0;
  return val;
}

}  // namespace spinlink
