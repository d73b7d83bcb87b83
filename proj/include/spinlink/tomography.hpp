#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spinlink/analysis.hpp"
#include "spinlink/detection.hpp"
#include "spinlink/errors.hpp"
#include "spinlink/matrix.hpp"
#include "spinlink/qcore.hpp"
#include "spinlink/rng.hpp"

namespace spinlink {

struct TomoSetting {
  PolarizationVector projector_2;  // qubit 0, signal-2 side (first label letter)
  PolarizationVector projector_1;  // qubit 1, signal-1 side (second label letter)
  std::string label;
};

// The standard 16-projector two-qubit set (James-Kwiat ordering), spanning
// the space of 4x4 Hermitian matrices. Labels read (signal-2, signal-1).
inline const std::vector<TomoSetting>& tomo_settings_16() {
  static const std::vector<TomoSetting> settings = [] {
    const auto H = PolarizationVector::h();
    const auto V = PolarizationVector::v();
    const auto D = PolarizationVector::diag();
    const auto R = PolarizationVector::circ_r();
    const auto L = PolarizationVector::circ_l();
    std::vector<TomoSetting> s;
    s.push_back({H, H, "HH"});
    s.push_back({H, V, "HV"});
    s.push_back({V, V, "VV"});
    s.push_back({V, H, "VH"});
    s.push_back({R, H, "RH"});
    s.push_back({R, V, "RV"});
    s.push_back({D, V, "DV"});
    s.push_back({D, H, "DH"});
    s.push_back({D, R, "DR"});
    s.push_back({D, D, "DD"});
    s.push_back({R, D, "RD"});
    s.push_back({H, D, "HD"});
    s.push_back({V, D, "VD"});
    s.push_back({V, L, "VL"});
    s.push_back({H, L, "HL"});
    s.push_back({R, L, "RL"});
    return s;
  }();
  return settings;
}

inline ComplexMatrix polarization_projector(const PolarizationVector& v) {
  ComplexMatrix p(2, 2);
  const cplx a = v.amp_h, b = v.amp_v;
  p(0, 0) = a * std::conj(a);
  p(0, 1) = a * std::conj(b);
  p(1, 0) = b * std::conj(a);
  p(1, 1) = b * std::conj(b);
  return p;
}

inline ComplexMatrix tomo_projector(const TomoSetting& s) {
  return tensor_product(polarization_projector(s.projector_2),
                        polarization_projector(s.projector_1));
}

inline double tomo_probability(const TwoQubitState& state, const TomoSetting& s) {
  double p = state.rho().trace_of_product(tomo_projector(s)).real();
  if (p < 0.0) p = 0.0;
  if (p > 1.0) p = 1.0;
  return p;
}

// Per-setting coincidence counts and trial totals, parallel to the setting list.
struct TomoCounts {
  std::vector<std::int64_t> counts;
  std::vector<std::int64_t> trials;

  void validate(std::size_t n_settings) const {
    if (counts.size() != n_settings || trials.size() != n_settings)
      throw std::invalid_argument("TomoCounts: size mismatch with setting list");
    for (std::size_t i = 0; i < counts.size(); ++i)
      if (counts[i] < 0 || trials[i] <= 0 || counts[i] > trials[i])
        throw std::invalid_argument("TomoCounts: invalid count/trial pair");
  }
};

// Binomial draws per setting with Born-rule success probabilities thinned by
// the two detector efficiencies, plus an accidental dark-coincidence floor.
// Setting s draws from base.fork(s).
inline TomoCounts simulate_tomo_counts(const TwoQubitState& state, std::int64_t shots_per_setting,
                                       const DetectorParams& det, const RandomStream& base,
                                       const std::vector<TomoSetting>& settings = tomo_settings_16()) {
  if (shots_per_setting < 1)
    throw std::invalid_argument("simulate_tomo_counts: shots_per_setting must be >= 1");
  det.validate();
  TomoCounts out;
  for (std::size_t s = 0; s < settings.size(); ++s) {
    const double p_born = tomo_probability(state, settings[s]);
    double p = p_born * det.efficiency * det.efficiency + det.dark_prob * det.dark_prob;
    if (p > 1.0) p = 1.0;
    RandomStream rng = base.fork(s);
    std::int64_t n = 0;
    for (std::int64_t i = 0; i < shots_per_setting; ++i)
      if (rng.bernoulli(p)) ++n;
    out.counts.push_back(n);
    out.trials.push_back(shots_per_setting);
  }
  return out;
}

struct LinearInversionResult {
  ComplexMatrix rho;  // Hermitian, unit trace; may be non-PSD on noisy data
  bool psd = false;
  double min_eigenvalue = 0.0;
};

// Solves the 16x16 linear system tr(rho Pi_s) = n_s / N_s for rho, then
// enforces Hermiticity and unit trace. Positivity is reported, not enforced.
inline LinearInversionResult linear_inversion(const TomoCounts& counts,
                                              const std::vector<TomoSetting>& settings = tomo_settings_16()) {
  counts.validate(settings.size());
  const std::size_t n = settings.size();
  if (n != 16) throw ReconstructionError("linear_inversion: expected 16 settings");
  ComplexMatrix design(n, 16);
  std::vector<cplx> freq(n);
  for (std::size_t s = 0; s < n; ++s) {
    const ComplexMatrix proj = tomo_projector(settings[s]);
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 4; ++k) design(s, j * 4 + k) = proj(k, j);
    freq[s] = static_cast<double>(counts.counts[s]) / static_cast<double>(counts.trials[s]);
  }
  std::vector<cplx> x;
  try {
    x = solve_linear(design, freq);
  } catch (const std::invalid_argument& e) {
    throw ReconstructionError(std::string("linear_inversion: ") + e.what());
  }
  ComplexMatrix rho(4, 4);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t k = 0; k < 4; ++k) rho(j, k) = x[j * 4 + k];
  rho = rho.scaled(0.5) + rho.dagger().scaled(0.5);
  const double tr = rho.trace().real();
  if (std::abs(tr) < 1e-9) throw ReconstructionError("linear_inversion: vanishing trace");
  rho = rho.scaled(1.0 / tr);

  LinearInversionResult out{std::move(rho), false, 0.0};
  out.min_eigenvalue = hermitian_eigenvalues(out.rho).front();
  out.psd = out.min_eigenvalue >= -1e-9;
  return out;
}

struct MleOptions {
  int max_iters = 40000;
  double tolerance = 1e-9;  // relative gradient sup-norm stop
};

struct MleResult {
  TwoQubitState state;
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
  double grad_norm = 0.0;
};

namespace detail {

// Lower-triangular complex Cholesky of a strictly positive definite matrix.
inline ComplexMatrix cholesky_lower(const ComplexMatrix& a) {
  const std::size_t n = a.rows();
  ComplexMatrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      cplx s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      if (i == j) {
        const double d = s.real();
        if (!(d > 0.0)) throw ReconstructionError("cholesky: matrix not positive definite");
        l(i, j) = std::sqrt(d);
      } else {
        l(i, j) = s / l(j, j).real();
      }
    }
  }
  return l;
}

inline double safe_log(double x) { return std::log(x < 1e-300 ? 1e-300 : x); }

}  // namespace detail

// Maximum-likelihood reconstruction with the PSD-by-construction
// parameterization rho = L L^dagger / tr(L L^dagger), L lower triangular with
// real diagonal. The objective is the product-binomial log-likelihood
//   sum_s [ n_s log p_s + (N_s - n_s) log(1 - p_s) ],  p_s = tr(rho Pi_s),
// maximized by gradient ascent with a backtracking line search, so the
// objective is nondecreasing across accepted iterates. Zero counts need no
// pseudo-count regularization. Starts from the PSD-clipped linear inversion.
inline MleResult mle_reconstruct(const TomoCounts& counts, const MleOptions& options = {},
                                 const std::vector<TomoSetting>& settings = tomo_settings_16()) {
  counts.validate(settings.size());
  const std::size_t ns = settings.size();
  std::vector<ComplexMatrix> projectors;
  projectors.reserve(ns);
  for (const auto& s : settings) projectors.push_back(tomo_projector(s));

  double total_counts = 0.0;
  for (std::size_t s = 0; s < ns; ++s) total_counts += static_cast<double>(counts.trials[s]);

  // Starting point: PSD-clipped linear inversion, floored to keep L full rank.
  ComplexMatrix rho0 = ComplexMatrix::identity(4).scaled(0.25);
  try {
    const auto inv = linear_inversion(counts, settings);
    const EigenSystem eig = hermitian_eigensystem(inv.rho);
    ComplexMatrix rebuilt(4, 4);
    double tr = 0.0;
    std::vector<double> lam(4);
    for (std::size_t k = 0; k < 4; ++k) {
      lam[k] = std::max(eig.values[k], 1e-6);
      tr += lam[k];
    }
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        cplx v = 0.0;
        for (std::size_t k = 0; k < 4; ++k)
          v += eig.vectors(i, k) * (lam[k] / tr) * std::conj(eig.vectors(j, k));
        rebuilt(i, j) = v;
      }
    rho0 = rebuilt.scaled(0.5) + rebuilt.dagger().scaled(0.5);
  } catch (const ReconstructionError&) {
    // keep maximally mixed start
  }
  ComplexMatrix L = detail::cholesky_lower(rho0);

  const auto rho_of = [](const ComplexMatrix& l) {
    ComplexMatrix g = l * l.dagger();
    return g.scaled(1.0 / g.trace().real());
  };
  const auto loglik = [&](const ComplexMatrix& rho) {
    double ll = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      double p = rho.trace_of_product(projectors[s]).real();
      if (p < 0.0) p = 0.0;
      if (p > 1.0) p = 1.0;
      const double n = static_cast<double>(counts.counts[s]);
      const double miss = static_cast<double>(counts.trials[s]) - n;
      if (n > 0.0) ll += n * detail::safe_log(p);
      if (miss > 0.0) ll += miss * detail::safe_log(1.0 - p);
    }
    return ll;
  };

  MleResult result{TwoQubitState(rho_of(L)), false, 0, 0.0, 0.0};
  double ll = loglik(rho_of(L));
  double step = 1.0 / (1.0 + total_counts);
  const double grad_stop = options.tolerance * (1.0 + total_counts);

  for (int iter = 0; iter < options.max_iters; ++iter) {
    const ComplexMatrix G = L * L.dagger();
    const double tau = G.trace().real();
    const ComplexMatrix rho = G.scaled(1.0 / tau);
    // A = sum_s w_s Pi_s with w_s = n_s/p_s - (N_s - n_s)/(1 - p_s)
    ComplexMatrix A(4, 4);
    for (std::size_t s = 0; s < ns; ++s) {
      double p = rho.trace_of_product(projectors[s]).real();
      if (p < 1e-12) p = 1e-12;
      if (p > 1.0 - 1e-12) p = 1.0 - 1e-12;
      const double n = static_cast<double>(counts.counts[s]);
      const double miss = static_cast<double>(counts.trials[s]) - n;
      const double w = n / p - miss / (1.0 - p);
      if (w == 0.0) continue;
      A = A + projectors[s].scaled(w);
    }
    const double a_rho = A.trace_of_product(rho).real();
    ComplexMatrix B = (A - ComplexMatrix::identity(4).scaled(a_rho)).scaled(1.0 / tau);
    // Gradient in L-space: 2 (B L) masked to the lower triangle, diagonal real.
    ComplexMatrix grad = (B * L).scaled(2.0);
    double gnorm = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        if (j > i) {
          grad(i, j) = 0.0;
        } else if (j == i) {
          grad(i, j) = cplx(grad(i, j).real(), 0.0);
        }
        gnorm = std::max(gnorm, std::abs(grad(i, j)));
      }
    result.grad_norm = gnorm;
    result.iterations = iter;
    if (gnorm <= grad_stop) {
      result.converged = true;
      break;
    }
    // Backtracking ascent step; only strict improvement is accepted, so a
    // plateau at double-precision likelihood resolution ends the search.
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      ComplexMatrix trial = L + grad.scaled(step);
      const double ll_trial = loglik(rho_of(trial));
      if (ll_trial > ll) {
        L = std::move(trial);
        ll = ll_trial;
        step *= 1.6;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No ascent direction improves the objective at machine precision.
      result.converged = true;
      break;
    }
  }

  result.state = TwoQubitState(rho_of(L));
  result.log_likelihood = ll;
  return result;
}

inline double fidelity_to_bell(const TwoQubitState& rho) {
  return state_fidelity(rho, bell_phi_plus_vector());
}

struct BootstrapSpread {
  double mean = 0.0;
  double stddev = 0.0;
  int resamples = 0;
};

// Parametric bootstrap of the Bell fidelity: redraw each setting's counts
// from Binomial(N_s, n_s/N_s), rerun the MLE, report the spread.
inline BootstrapSpread bootstrap_fidelity_spread(const TomoCounts& counts, int resamples,
                                                 const RandomStream& base,
                                                 const MleOptions& options = {},
                                                 const std::vector<TomoSetting>& settings = tomo_settings_16()) {
  counts.validate(settings.size());
  if (resamples < 2) throw std::invalid_argument("bootstrap_fidelity_spread: need >= 2 resamples");
  std::vector<double> fids;
  fids.reserve(resamples);
  for (int b = 0; b < resamples; ++b) {
    RandomStream rng = base.fork(static_cast<std::uint64_t>(b));
    TomoCounts re = counts;
    for (std::size_t s = 0; s < counts.counts.size(); ++s) {
      const double f = static_cast<double>(counts.counts[s]) / static_cast<double>(counts.trials[s]);
      re.counts[s] = rng.binomial(counts.trials[s], f);
    }
    fids.push_back(fidelity_to_bell(mle_reconstruct(re, options, settings).state));
  }
  BootstrapSpread out;
  out.resamples = resamples;
  for (double f : fids) out.mean += f;
  out.mean /= fids.size();
  double var = 0.0;
  for (double f : fids) var += (f - out.mean) * (f - out.mean);
  out.stddev = std::sqrt(var / (fids.size() - 1));
  return out;
}

}  // namespace spinlink
