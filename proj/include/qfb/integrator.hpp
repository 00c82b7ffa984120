#pragma once

#include <vector>

#include "qfb/grid.hpp"
#include "qfb/history.hpp"
#include "qfb/params.hpp"
#include "qfb/record.hpp"
#include "qfb/state.hpp"

namespace qfb {

// The two equivalent formulations of the continuous-coupling dynamics: the
// integro-differential system over the mode grid, and the delay-differential
// system where the waveguide memory of the scalar pair is folded into
// explicitly delayed terms.
enum class ContinuousFormulation { full, reduced };

// The delay-reduced equations exist in two printed forms that differ only in
// the local damping rate of the two-cavity-photon amplitude: `printed` damps
// it at kappa, `appendix` at 2*kappa.
enum class ReducedVariant { printed, appendix };

struct IntegratorConfig {
  double dt = 1e-3;           // fixed step; must divide tau when delays are on
  double t_end = 1.0;
  int sample_stride = 1;      // record every stride-th node (plus first/last)
  int interpolation_order = 3;  // cubic Hermite dense output (only order 3)
  bool theta_zero_is_one = true;  // right-continuous Heaviside gate at t = tau
  bool fields = true;         // reduced model: evolve the waveguide blocks too
  bool disable_delay = false;  // drop every delayed term (no-feedback window)
  double norm_abort = 1e-2;   // full model: abort when |norm - 1| exceeds this
  std::vector<double> snapshot_times;  // node-matched block snapshots
  bool record_amplitudes = true;
};

// Right-hand side of the integro-differential system, with every k-integral
// replaced by the grid's quadrature sum.  `deriv` is resized to match.
void rhs_full(const AmplitudeState& state, const ContinuousModeGrid& grid,
              const PhysicalParams& params, double t, AmplitudeState& deriv);

// Right-hand side of the delay-differential system.  Delayed values are read
// from `history` (rows [c_e, c_g] followed by c_gk when fields are on) at
// t - tau with cubic Hermite interpolation.  `gate_open` is the step-level
// Heaviside state supplied by the method-of-steps driver; `theta_zero_is_one`
// resolves the single evaluation that lands exactly on t - tau = 0.  Pass
// grid = nullptr for the closed scalar pair alone.
void rhs_reduced(const AmplitudeState& state, const HistoryBuffer& history,
                 const ContinuousModeGrid* grid, const PhysicalParams& params,
                 ReducedVariant variant, bool gate_open, bool theta_zero_is_one,
                 double t, AmplitudeState& deriv);

// Fixed-step classical 4th-order run of either formulation from the standard
// initial state (atom excited, single cavity photon).  Samples populations,
// norm, and the scalar amplitudes; stores block snapshots at the requested
// node times.  The full model aborts (numerics_error) when the conserved norm
// drifts beyond norm_abort; the reduced model records its norm without
// aborting, since its scalar pair legitimately loses weight to the modeled
// waveguide.
TimeSeriesRecord integrate_full(const PhysicalParams& params,
                                const ContinuousModeGrid& grid,
                                const IntegratorConfig& config);

TimeSeriesRecord integrate_reduced(const PhysicalParams& params,
                                   const ContinuousModeGrid* grid,
                                   const IntegratorConfig& config,
                                   ReducedVariant variant =
                                       ReducedVariant::printed);

TimeSeriesRecord integrate(ContinuousFormulation model,
                           const PhysicalParams& params,
                           const ContinuousModeGrid* grid,
                           const IntegratorConfig& config,
                           ReducedVariant variant = ReducedVariant::printed);

}  // namespace qfb
