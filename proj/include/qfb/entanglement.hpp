#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qfb/analytic.hpp"
#include "qfb/grid.hpp"
#include "qfb/params.hpp"

namespace qfb {

// Schmidt spectrum of a two-photon amplitude.  The state factorizes into a
// product of single-photon wavefunctions exactly when one Schmidt mode
// carries all the weight (S = 0, K = 1); any spread over several modes
// certifies entanglement of the photon pair.
struct SchmidtReport {
  Eigen::VectorXd sigma;       // singular values, descending
  Eigen::VectorXd p;           // mode probabilities sigma^2 / sum(sigma^2)
  double entropy = 0.0;        // S = -sum p ln p
  double schmidt_number = 1.0; // K = 1 / sum p^2
  int rank = 0;                // modes with sigma >= 1e-10 * sigma(0)
  Eigen::VectorXcd u1;         // leading Schmidt mode (weighted basis)
};

// Decomposes the measure-weighted matrix sqrt(w_i) c_gkk(i,j) sqrt(w_j), so
// the diagnostic is stable under grid refinement.  Throws dimension_error if
// the matrix does not match the grid and config_error for a zero matrix.
SchmidtReport schmidt_decompose(const Eigen::MatrixXcd& c_gkk,
                                const ContinuousModeGrid& grid);

// One row of the entanglement-versus-decay-rate table.  Rows whose
// steady-state evaluation failed carry ok = false and the error text.
struct EntanglementRow {
  double kappa = 0.0;
  double entropy = 0.0;
  double schmidt_number = 1.0;
  bool ok = false;
  std::string message;
};

struct EntanglementTable {
  std::vector<EntanglementRow> rows;  // in kappa_list order
  // True when the entropy is non-increasing in kappa over the ok rows
  // (slower cavity decay leaves the emitted pair more entangled).
  bool entropy_decreasing_in_kappa = true;
};

// Evaluates the steady-state two-photon amplitude at each decay rate in
// kappa_list (rebuilding the coupling via with_kappa) and reports its
// Schmidt entropy and number.  Evaluation errors are flagged per row, never
// thrown, so one bad rate does not lose the rest of the table.
EntanglementTable entanglement_vs_kappa(
    const PhysicalParams& base, const std::vector<double>& kappa_list,
    const ContinuousModeGrid& grid,
    SteadyStateForm form = SteadyStateForm::rational);

}  // namespace qfb
