#pragma once

#include <Eigen/Dense>
#include <complex>

#include "qfb/grid.hpp"

namespace qfb {

// Amplitudes of the five two-excitation basis blocks:
//   c_e        atom excited, one cavity photon
//   c_g        atom ground, two cavity photons
//   c_ek(k)    atom excited, one waveguide photon
//   c_gk(k)    one cavity photon + one waveguide photon
//   c_gkk(k,k') atom ground, two waveguide photons (symmetric matrix)
// plus optional per-mode accumulators used by the delay-reduced formulation,
// which carries two running integrals per mode (of c_e G* and of c_gk).
struct AmplitudeState {
  double t = 0.0;
  std::complex<double> c_e{0.0, 0.0};
  std::complex<double> c_g{0.0, 0.0};
  Eigen::VectorXcd c_ek;
  Eigen::VectorXcd c_gk;
  Eigen::MatrixXcd c_gkk;
  Eigen::VectorXcd aux_a;  // integral of c_e(t') G*(k,t') dt'
  Eigen::VectorXcd aux_b;  // integral of c_gk(t',k) dt'
};

// The system starts with the atom excited, one photon in the cavity, and the
// waveguide empty.  with_aux sizes the accumulator blocks (delay-reduced
// formulation); otherwise they stay empty.
AmplitudeState initial_state(const ContinuousModeGrid& grid, bool with_aux);

// Population breakdown with the quadrature weights applied: the two vector
// blocks carry one weight factor, the two-photon block two.
struct Populations {
  double atom_e = 0.0;   // |c_e|^2
  double cavity2 = 0.0;  // |c_g|^2
  double one_ek = 0.0;   // sum_j w_j |c_ek_j|^2
  double one_gk = 0.0;   // sum_j w_j |c_gk_j|^2
  double two = 0.0;      // sum_ij w_i w_j |c_gkk_ij|^2
  double total() const { return atom_e + cavity2 + one_ek + one_gk + two; }
};

Populations populations(const AmplitudeState& state,
                        const ContinuousModeGrid& grid);

// Conserved quadratic form of the unitary evolution (weight 1 on the double
// k-sum).  Throws dimension_error if the state does not match the grid.
double total_norm(const AmplitudeState& state, const ContinuousModeGrid& grid);

// Largest asymmetry |M(i,j) - M(j,i)| of a square matrix; diagnostic for the
// exchange symmetry of the two-photon block.
double symmetrize_check(const Eigen::MatrixXcd& c_gkk);

}  // namespace qfb
