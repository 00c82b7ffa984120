#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "qfb/grid.hpp"
#include "qfb/params.hpp"

namespace qfb {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Laplace-domain coefficient sets
// ---------------------------------------------------------------------------

// Scalar coefficients of the one-photon pole structure at mode frequency
// omega = c*k:
//   D = (sqrt(2)/2) [delta0 - omega - sin(delta0 tau) + i kappa (cos(delta0 tau) - 1)]
//   E = kappa (cos(delta0 tau) - 1)        (<= 0 always)
//   F = sin(delta0 tau)
//   R = kappa (e^{i delta0 tau} - 1)       (Re R == E)
struct ResidueCoeffs {
  cplx D;
  double E;
  double F;
  cplx R;
};

ResidueCoeffs coeffs_defr(const PhysicalParams& p, double omega);

// Small-delay residue coefficients of the one-photon waveguide amplitude.
// The printed approximate forms are real functions of omega:
//   H = (gamma + (omega-delta0)/3) / (2 gamma [-(gamma + omega - delta0)^2 + 2 gamma^2])
//   I = (gamma - (omega-delta0)/3) / (2 gamma [-(gamma - omega + delta0)^2 + 2 gamma^2])
//   J = (sqrt2 gamma + (2/3)(delta0-omega)) / (2 sqrt2 gamma [-(omega-delta0-sqrt2 gamma)^2 + gamma^2])
//   K = (sqrt2 gamma - (2/3)(delta0-omega)) / (2 sqrt2 gamma [-(omega-delta0+sqrt2 gamma)^2 + gamma^2])
// Throws resonance_error when a denominator collapses (omega at one of the
// per-coefficient resonance points).
struct Hijk {
  double H;
  double I;
  double J;
  double K;
};

Hijk coeffs_hijk(const PhysicalParams& p, double omega);

// ---------------------------------------------------------------------------
// Regime classification
// ---------------------------------------------------------------------------

enum class DampingRegime { overdamped, critical, underdamped };
enum class DelayPhaseClass { even_pi, odd_pi, generic };

const char* to_string(DampingRegime r);
const char* to_string(DelayPhaseClass c);

// omega0 = sqrt(|kappa^2/4 - 2 gamma^2|) is the oscillation/relaxation rate of
// the no-feedback window; the damping boundary sits at kappa = 2 sqrt(2) gamma.
// The delay phase delta0*tau is classified against multiples of pi with
// tolerance 1e-9 (absolute, on the multiple).  kappa_tau_class applies the
// same classification to kappa*tau; the efficient-generation statement is
// implemented on delta0*tau (consistent with the odd-pi simulations), and the
// kappa*tau variant is exposed alongside for completeness.
struct RegimeReport {
  double omega0 = 0.0;
  DampingRegime regime = DampingRegime::underdamped;
  DelayPhaseClass delta0_tau_class = DelayPhaseClass::generic;
  DelayPhaseClass kappa_tau_class = DelayPhaseClass::generic;
};

RegimeReport classify_regime(const PhysicalParams& p);

// ---------------------------------------------------------------------------
// Transfer functions (exact delayed forms)
// ---------------------------------------------------------------------------

// With A(s) = s + kappa (1 - e^{i delta0 tau} e^{-s tau}) and
//      B(s) = 1 - kappa tau e^{-s tau} e^{i delta0 tau}:
//   C_e(s) = A / (A^2 + 2 gamma^2 B)
//   C_g(s) = i sqrt(2) gamma B / (A^2 + 2 gamma^2 B)
// Throws resonance_error when |A^2 + 2 gamma^2 B| < 1e-12 (1 + |s|^2)
// (pole proximity), so callers sweeping s grids can skip poles gracefully.
cplx transfer_ce(cplx s, const PhysicalParams& p);
cplx transfer_cg(cplx s, const PhysicalParams& p);

// ---------------------------------------------------------------------------
// Closed-form time-domain solutions (small-delay regime)
// ---------------------------------------------------------------------------

// Scalar amplitudes for kappa*tau << 1:
//   c_e(t) = e^{-kappa[1-cos(delta0 tau)]t} e^{i sin(delta0 tau) t} cos(sqrt2 gamma t)
//   c_g(t) = i * (same envelope and phase) * sin(sqrt2 gamma t)
// Evaluated verbatim for any parameters (intended validity kappa*tau <= 0.1).
std::pair<cplx, cplx> closed_form_ce_cg(double t, const PhysicalParams& p);

// One-photon waveguide amplitude c_gk(t,k).  Two supported regimes:
//  * delta0*tau at a multiple of pi: exact partial fractions of the rational
//    transfer function
//      C_gk(s,k) = G0 sin(kL) [2 sqrt2 i gamma D - 3 gamma (s - E - iM)]
//                  / ((s^2 - 2Rs + gamma^2) ((s - E - iM)^2 + 2 gamma^2)),
//    M = omega - delta0 + F, with a confluent (a + b t) e^{pt} branch when the
//    first pole pair R -+ sqrt(R^2 - gamma^2) degenerates (gamma = 2 kappa).
//  * generic phase with kappa*tau <= 0.1: the printed small-delay form
//      -3 G0 sin(kL) gamma [H e^{-i gamma t} + I e^{i gamma t}
//        + J e^{(E + i(omega-delta0+F) - i sqrt2 gamma)t}
//        + K e^{(E + i(omega-delta0+F) + i sqrt2 gamma)t}].
// Outside both regimes the prediction is undefined: throws config_error.
cplx closed_form_cgk(double t, double k, const PhysicalParams& p);

// ---------------------------------------------------------------------------
// Long-waveguide (no-feedback window) solution
// ---------------------------------------------------------------------------

enum class ScalarAmplitude { c_e, c_g };

// Solves c'' + 3 kappa c' + (2 gamma^2 + 2 kappa^2) c = 0 on the pre-feedback
// window with initial data c_e(0)=1, c_e'(0)=-kappa, c_g(0)=0,
// c_g'(0)=i sqrt2 gamma; the branch (cosh/linear/cos) follows the damping
// regime.  Intended for t < tau of a long loop; pure function of t otherwise.
cplx long_waveguide_solution(double t, const PhysicalParams& p,
                             ScalarAmplitude which);

// ---------------------------------------------------------------------------
// Steady-state two-photon amplitude (odd-pi delay phase)
// ---------------------------------------------------------------------------

// printed: the eight-term small-delay residue expression with R = -2 kappa,
//   delta(k) = c k - delta0 and the H/I/J/K coefficients above (evaluated at
//   omega_1 = c k1 and omega_2 = c k2); exactly symmetric under k1 <-> k2.
// rational: evaluates the exact partial-fraction transfer function on the
//   imaginary axis, c_gkk(inf) = i G0 sin(k1 L) C_gk(-i delta(k1), k2) + (1<->2),
//   which stays finite at the gamma = 2 kappa pole degeneracy and tracks the
//   simulated steady state more closely.
enum class SteadyStateForm { printed, rational };

cplx steady_state_cgkk(double k1, double k2, const PhysicalParams& p,
                       SteadyStateForm form = SteadyStateForm::printed);

// Fills the symmetric grid matrix of steady_state_cgkk values.
Eigen::MatrixXcd steady_state_matrix(const ContinuousModeGrid& grid,
                                     const PhysicalParams& p,
                                     SteadyStateForm form);

// ---------------------------------------------------------------------------
// Numerical Laplace transform of a sampled trajectory
// ---------------------------------------------------------------------------

// Trapezoidal quadrature of integral_0^T e^{-st} f(t) dt over the samples.
// The truncation error is bounded by |f(T)| e^{-Re(s) T} / Re(s) for
// trajectories decaying no slower than the tail sample, so Re(s) >= 0.5 with
// T covering the decay keeps it below the comparison bands used here.
cplx laplace_numeric(const std::vector<double>& t, const std::vector<cplx>& f,
                     cplx s);

// Max |Re| / max |Im| along the main antidiagonal (i + j == n-1) of a square
// grid matrix; on a [0, 2 delta0] mode grid the antidiagonal is the locus
// omega_1 + omega_2 = 2 delta0.  Returns 0 when the antidiagonal vanishes.
double antidiagonal_imag_ratio(const Eigen::MatrixXcd& m);

}  // namespace qfb
