#pragma once

#include <Eigen/Dense>
#include <complex>

#include "qfb/grid.hpp"
#include "qfb/integrator.hpp"
#include "qfb/params.hpp"
#include "qfb/record.hpp"
#include "qfb/state.hpp"

namespace qfb {

// Two-excitation state over the standing-wave mode comb of the
// mirror-terminated waveguide.  Unlike the continuum state there are no
// quadrature weights: the mode sums are plain sums and the coupling
// prefactor sqrt(pi/(2L)) * g0 lives in the equations of motion, so the
// conserved norm is
//   |c_e|^2 + |c_g|^2 + sum(|c_eq|^2 + |c_gq|^2) + sumsum(|c_gpq|^2).
struct DiscreteAmplitudeState {
  double t = 0.0;
  std::complex<double> c_e{0.0, 0.0};  // atom + cavity photon
  std::complex<double> c_g{0.0, 0.0};  // two cavity photons
  Eigen::VectorXcd c_eq;               // atom excited + photon in mode q
  Eigen::VectorXcd c_gq;               // cavity photon + photon in mode q
  Eigen::MatrixXcd c_gpq;              // photons in modes p and q; symmetric
};

// All-zero state except c_e = 1, with blocks sized to the mode set.
DiscreteAmplitudeState initial_discrete_state(const DiscreteModeSet& modes);

// Discrete norm (unit weights) and its population split.
Populations discrete_populations(const DiscreteAmplitudeState& state);

// Exact right-hand side of the discrete-mode equations of motion.  Each mode
// q carries the phase factor phi_q(t) = (-1)^q exp(-i(c k_q - delta0) t) and
// couples with strength P = sqrt(pi/(2L)) * g0; the feedback delay is encoded
// entirely in the comb spacing, so the system is a memoryless ODE.
// Throws dimension_error when block sizes disagree with the mode set and
// config_error when the mode set was built from a different L than params.
void rhs_discrete(const DiscreteAmplitudeState& state,
                  const DiscreteModeSet& modes, const PhysicalParams& params,
                  double t, DiscreteAmplitudeState& deriv);

// Classical RK4 over [0, t_end] from the initial state.  Of the shared
// configuration only dt, t_end, sample_stride, snapshot_times,
// record_amplitudes, and norm_abort apply; the delay-line fields are ignored.
// Snapshots store c_gq (per-mode photon amplitudes) and the two-photon
// matrix.  Throws config_error on invalid configuration and numerics_error
// when the conserved norm drifts past norm_abort.
TimeSeriesRecord integrate_discrete(const PhysicalParams& params,
                                    const DiscreteModeSet& modes,
                                    const IntegratorConfig& config);

// Where the one-photon spectrum concentrates.  Indices are the integer mode
// numbers q, not storage positions.
struct ModeSpectrumPeak {
  int q_star = 0;              // mode with the largest |c_gq|
  double concentration = 0.0;  // |c_gq(q_star)| / max over the other modes
  int q_resonant = 0;          // mode minimizing |c k_q - delta0|
  bool at_resonance = false;   // q_star == q_resonant
};

// Peak of |c_gq| over the mode comb.  A single-mode set reports infinite
// concentration; an identically zero vector throws config_error.
ModeSpectrumPeak mode_spectrum_peak(const Eigen::VectorXcd& c_gq,
                                    const DiscreteModeSet& modes,
                                    const PhysicalParams& params);
ModeSpectrumPeak mode_spectrum_peak(const DiscreteAmplitudeState& state,
                                    const DiscreteModeSet& modes,
                                    const PhysicalParams& params);

// Parity-and-phase-weighted mode sum  sum_q c_gq(q) (-1)^q
// exp(-i(c k_q - delta0) t) — the in-phase superposition that feeds the
// cavity.  Destructive interference across the comb drives it toward zero
// relative to max|c_gq| in the narrow-linewidth regime.
std::complex<double> phased_mode_sum(const Eigen::VectorXcd& c_gq,
                                     const DiscreteModeSet& modes,
                                     const PhysicalParams& params, double t);

// Ratio of feedback to cavity mode-density factors, sin^2(kL) / sin^2(kl).
// Throws resonance_error at a cavity node (sin(kl) = 0).
double coupling_ratio_exact(double k, double l, double L);

// Narrowband Lorentzian approximation of the same ratio,
// (c Gamma / l) / ((c k - delta0)^2 + Gamma^2).  Requires params built with
// a cavity (l > 0) and a leaky mirror (r < 1) so Gamma > 0; throws
// config_error otherwise.
double coupling_ratio_lorentzian(double k, const PhysicalParams& params);

}  // namespace qfb
