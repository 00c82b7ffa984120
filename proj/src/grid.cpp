#include "qfb/grid.hpp"

#include <cmath>

#include "qfb/errors.hpp"

namespace qfb {

ContinuousModeGrid ContinuousModeGrid::uniform(double k_min, double k_max,
                                               int n_k) {
  if (n_k < 2) throw config_error("ContinuousModeGrid: n_k must be >= 2");
  if (k_min < 0.0) throw config_error("ContinuousModeGrid: k_min must be >= 0");
  if (!(k_max > k_min)) {
    throw config_error("ContinuousModeGrid: k_max must exceed k_min");
  }

  ContinuousModeGrid g;
  g.k_min = k_min;
  g.k_max = k_max;
  g.n_k = n_k;
  g.values.resize(n_k);
  g.weights.resize(n_k);
  const double dk = (k_max - k_min) / (n_k - 1);
  for (int j = 0; j < n_k; ++j) {
    g.values[j] = k_min + j * dk;
    g.weights[j] = (j == 0 || j == n_k - 1) ? 0.5 * dk : dk;
  }
  // Pin the endpoint exactly so mirror-symmetric grids stay symmetric.
  g.values[n_k - 1] = k_max;
  return g;
}

DiscreteModeSet DiscreteModeSet::range(double L, int q_min, int q_max) {
  if (L <= 0.0) throw config_error("DiscreteModeSet: L must be > 0");
  if (q_max < q_min) {
    throw config_error("DiscreteModeSet: q_max must be >= q_min");
  }

  DiscreteModeSet m;
  m.L = L;
  m.q_min = q_min;
  m.q_max = q_max;
  const int n = q_max - q_min + 1;
  m.values.resize(n);
  m.q.resize(n);
  for (int i = 0; i < n; ++i) {
    const int qi = q_min + i;
    m.q[i] = qi;
    m.values[i] = (2.0 * qi + 1.0) * M_PI / (2.0 * L);
  }
  return m;
}

}  // namespace qfb
