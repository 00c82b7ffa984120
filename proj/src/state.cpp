#include "qfb/state.hpp"

#include <cmath>

#include "qfb/errors.hpp"

namespace qfb {

AmplitudeState initial_state(const ContinuousModeGrid& grid, bool with_aux) {
  AmplitudeState s;
  s.t = 0.0;
  s.c_e = {1.0, 0.0};
  s.c_g = {0.0, 0.0};
  s.c_ek = Eigen::VectorXcd::Zero(grid.n_k);
  s.c_gk = Eigen::VectorXcd::Zero(grid.n_k);
  s.c_gkk = Eigen::MatrixXcd::Zero(grid.n_k, grid.n_k);
  if (with_aux) {
    s.aux_a = Eigen::VectorXcd::Zero(grid.n_k);
    s.aux_b = Eigen::VectorXcd::Zero(grid.n_k);
  }
  return s;
}

Populations populations(const AmplitudeState& state,
                        const ContinuousModeGrid& grid) {
  const int n = grid.n_k;
  if (grid.values.size() != n || grid.weights.size() != n) {
    throw dimension_error(
        "populations: grid arrays do not match n_k (build grids with "
        "ContinuousModeGrid::uniform)");
  }
  if (state.c_ek.size() != n || state.c_gk.size() != n ||
      state.c_gkk.rows() != n || state.c_gkk.cols() != n) {
    throw dimension_error("populations: state dimensions do not match grid");
  }

  Populations p;
  p.atom_e = std::norm(state.c_e);
  p.cavity2 = std::norm(state.c_g);
  // Fixed-order reductions so results are identical run to run.
  for (int j = 0; j < n; ++j) {
    p.one_ek += grid.weights[j] * std::norm(state.c_ek[j]);
  }
  for (int j = 0; j < n; ++j) {
    p.one_gk += grid.weights[j] * std::norm(state.c_gk[j]);
  }
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      row += grid.weights[j] * std::norm(state.c_gkk(i, j));
    }
    p.two += grid.weights[i] * row;
  }
  return p;
}

double total_norm(const AmplitudeState& state, const ContinuousModeGrid& grid) {
  return populations(state, grid).total();
}

double symmetrize_check(const Eigen::MatrixXcd& c_gkk) {
  if (c_gkk.rows() != c_gkk.cols()) {
    throw dimension_error("symmetrize_check: matrix must be square");
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < c_gkk.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < c_gkk.cols(); ++j) {
      worst = std::max(worst, std::abs(c_gkk(i, j) - c_gkk(j, i)));
    }
  }
  return worst;
}

}  // namespace qfb
