#pragma once

namespace qfb {

// Physical configuration of the atom–cavity–waveguide system.
//
// The two-excitation sector couples a two-level atom to a single cavity mode
// (exchange strength gamma, Rabi frequency sqrt(2)*gamma in this sector) and
// the cavity to a half-open waveguide of length L terminated by a mirror.
// The cavity–waveguide coupling profile is G(k,t) = g0 sin(kL) e^{-i(ck-delta0)t},
// which yields an effective cavity decay rate kappa = pi*g0^2/(2c) and a
// feedback round-trip delay tau = 2L/c.  For the discrete-mode scheme the
// cavity has length l and an output mirror of reflectivity r, giving the
// cavity linewidth Gamma = c(1-r)/(2l).
struct PhysicalParams {
  // Raw inputs.
  double gamma;   // atom-cavity coupling strength (rad/time)
  double g0;      // cavity-waveguide coupling magnitude
  double c;       // field propagation speed (length/time), default 1
  double delta0;  // central photon frequency (rad/time)
  double L;       // waveguide feedback length
  double l;       // cavity length (discrete scheme only; 0 = unused)
  double r;       // mirror reflectivity in [0,1] (discrete scheme only)

  // Derived quantities, populated by derive_params.
  double kappa;  // pi * g0^2 / (2c)
  double tau;    // 2L / c
  double Gamma;  // c(1-r)/(2l) when l > 0, else 0
};

// Validates the raw values and populates the derived fields.
// Throws config_error when gamma/c/delta0/L are non-positive, g0 < 0,
// l < 0, or r lies outside [0,1].  Pure function: equal inputs yield
// bit-identical outputs.
PhysicalParams derive_params(double gamma, double g0, double c, double delta0,
                             double L, double l = 0.0, double r = 1.0);

// Convenience: rebuild params with the waveguide coupling chosen so that the
// effective decay rate equals kappa_target (inverts kappa = pi*g0^2/(2c)).
PhysicalParams with_kappa(const PhysicalParams& base, double kappa_target);

}  // namespace qfb
