#pragma once

#include <Eigen/Dense>
#include <vector>

namespace qfb {

// Uniform wavenumber grid with trapezoidal quadrature weights, used to
// discretize the continuum of waveguide modes.  The weights satisfy
// sum(w) == k_max - k_min to machine precision, so quadrature sums over the
// grid approximate the corresponding k-integrals.
struct ContinuousModeGrid {
  double k_min = 0.0;
  double k_max = 0.0;
  int n_k = 0;
  Eigen::VectorXd values;   // k_j = k_min + j*dk, strictly increasing
  Eigen::VectorXd weights;  // dk at interior nodes, dk/2 at the two ends

  double dk() const { return (k_max - k_min) / (n_k - 1); }

  // Builds the grid; throws config_error for n_k < 2, k_min < 0, or
  // k_max <= k_min.
  static ContinuousModeGrid uniform(double k_min, double k_max, int n_k);
};

// Comb of standing-wave modes of the mirror-terminated waveguide,
// k_q = (2q+1)*pi/(2L).  Consecutive modes are spaced exactly pi/L apart and
// every mode sits on an antinode of sin(kL): sin(k_q L)^2 == 1.
struct DiscreteModeSet {
  double L = 0.0;
  int q_min = 0;
  int q_max = 0;
  Eigen::VectorXd values;  // k_q for q in [q_min, q_max]
  std::vector<int> q;      // the integer indices, for the (-1)^q parity

  int size() const { return static_cast<int>(values.size()); }
  // (-1)^q for the i-th stored mode.
  double parity(int i) const { return (q[i] % 2 == 0) ? 1.0 : -1.0; }

  // Builds the mode set; throws config_error for L <= 0 or q_max < q_min.
  static DiscreteModeSet range(double L, int q_min, int q_max);
};

}  // namespace qfb
