#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "qfb/errors.hpp"
#include "qfb/grid.hpp"
#include "qfb/history.hpp"
#include "qfb/params.hpp"
#include "qfb/state.hpp"

using namespace qfb;
using cplx = std::complex<double>;

TEST_CASE("derived parameters follow the stated formulas") {
  // Reference decay rate for the standard coupling magnitude.
  auto p = derive_params(0.5, 0.5, 1.0, 50.0, 0.005);
  CHECK(p.kappa == doctest::Approx(0.3926990817).epsilon(1e-9));
  CHECK(p.kappa == M_PI * 0.25 / 2.0);
  CHECK(p.tau == 0.01);

  // The unit convention: delay 2L/c with c = 1 puts delta0*tau at pi
  // for L = 0.0314, delta0 = 50.
  auto q = derive_params(1.0, 0.5, 1.0, 50.0, 0.0314);
  CHECK(q.tau == doctest::Approx(0.0628));
  CHECK(q.delta0 * q.tau == doctest::Approx(3.14));

  // Decoupled waveguide.
  auto z = derive_params(1.0, 0.0, 1.0, 50.0, 1.0);
  CHECK(z.kappa == 0.0);

  // Cavity linewidth for the discrete scheme.
  auto d = derive_params(1.0, 0.05, 1.0, 50.0, 0.1, 0.01, 0.999);
  CHECK(d.Gamma == doctest::Approx(1.0 * 0.001 / 0.02).epsilon(1e-12));

  // Pure function: equal inputs give bit-identical outputs.
  auto a = derive_params(0.7, 0.3, 1.0, 41.0, 0.02, 0.01, 0.5);
  auto b = derive_params(0.7, 0.3, 1.0, 41.0, 0.02, 0.01, 0.5);
  CHECK(a.kappa == b.kappa);
  CHECK(a.tau == b.tau);
  CHECK(a.Gamma == b.Gamma);
}

TEST_CASE("parameter validation rejects unphysical input") {
  CHECK_THROWS_AS(derive_params(0.0, 0.5, 1.0, 50.0, 0.005), config_error);
  CHECK_THROWS_AS(derive_params(-1.0, 0.5, 1.0, 50.0, 0.005), config_error);
  CHECK_THROWS_AS(derive_params(1.0, -0.1, 1.0, 50.0, 0.005), config_error);
  CHECK_THROWS_AS(derive_params(1.0, 0.5, 0.0, 50.0, 0.005), config_error);
  CHECK_THROWS_AS(derive_params(1.0, 0.5, 1.0, -50.0, 0.005), config_error);
  CHECK_THROWS_AS(derive_params(1.0, 0.5, 1.0, 50.0, 0.0), config_error);
  CHECK_THROWS_AS(derive_params(1.0, 0.5, 1.0, 50.0, 0.005, 0.01, 1.5),
                  config_error);
  CHECK_THROWS_AS(derive_params(1.0, 0.5, 1.0, 50.0, 0.005, 0.01, -0.1),
                  config_error);
}

TEST_CASE("with_kappa inverts the decay-rate formula") {
  auto base = derive_params(1.0, 0.5, 1.0, 50.0, 0.005);
  auto p = with_kappa(base, 0.125);
  CHECK(p.kappa == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(p.gamma == base.gamma);
  CHECK(p.L == base.L);
}

TEST_CASE("trapezoid weights integrate exactly to the span") {
  auto g = ContinuousModeGrid::uniform(0.0, 100.0, 512);
  CHECK(g.weights.sum() == doctest::Approx(100.0).epsilon(1e-14));
  // Strictly increasing, uniform spacing.
  for (int j = 1; j < g.n_k; ++j) {
    CHECK(g.values[j] > g.values[j - 1]);
    CHECK(g.values[j] - g.values[j - 1] ==
          doctest::Approx(g.dk()).epsilon(1e-12));
  }
  // Mirror symmetry about the midpoint: node j pairs with node n-1-j.
  for (int j = 0; j < g.n_k; ++j) {
    CHECK(g.values[j] + g.values[g.n_k - 1 - j] ==
          doctest::Approx(100.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ContinuousModeGrid::uniform(-1.0, 10.0, 8), config_error);
  CHECK_THROWS_AS(ContinuousModeGrid::uniform(0.0, 10.0, 1), config_error);
  CHECK_THROWS_AS(ContinuousModeGrid::uniform(5.0, 5.0, 8), config_error);
}

TEST_CASE("discrete mode comb sits on the coupling antinodes") {
  const double L = 0.1;
  auto m = DiscreteModeSet::range(L, 1, 39);
  CHECK(m.size() == 39);
  for (int i = 0; i < m.size(); ++i) {
    // sin(k_q L)^2 == 1 within machine precision.
    const double s = std::sin(m.values[i] * L);
    CHECK(s * s == doctest::Approx(1.0).epsilon(1e-12));
    if (i > 0) {
      CHECK(m.values[i] - m.values[i - 1] ==
            doctest::Approx(M_PI / L).epsilon(1e-12));
    }
  }
  // Parity alternates with q.
  CHECK(m.parity(0) == -1.0);  // q = 1
  CHECK(m.parity(1) == 1.0);   // q = 2
  CHECK_THROWS_AS(DiscreteModeSet::range(0.0, 1, 5), config_error);
  CHECK_THROWS_AS(DiscreteModeSet::range(1.0, 5, 1), config_error);
}

TEST_CASE("norm accounting: initial, zero, and weighted blocks") {
  auto g = ContinuousModeGrid::uniform(0.0, 10.0, 33);
  auto s = initial_state(g, false);
  CHECK(total_norm(s, g) == 1.0);

  s.c_e = 0.0;
  CHECK(total_norm(s, g) == 0.0);

  // A pure one-photon block integrates with one weight factor...
  s.c_ek.setConstant(cplx{1.0, 0.0});
  CHECK(total_norm(s, g) == doctest::Approx(10.0).epsilon(1e-13));
  s.c_ek.setZero();
  // ...and the two-photon block with two.
  s.c_gkk.setConstant(cplx{1.0, 0.0});
  CHECK(total_norm(s, g) == doctest::Approx(100.0).epsilon(1e-12));

  // Populations sum to the norm.
  s.c_e = {0.3, 0.4};
  s.c_gk.setConstant(cplx{0.0, 0.5});
  auto p = populations(s, g);
  CHECK(p.total() == doctest::Approx(total_norm(s, g)).epsilon(1e-14));
  CHECK(p.atom_e == doctest::Approx(0.25).epsilon(1e-14));

  // Dimension mismatch is an error.
  auto g2 = ContinuousModeGrid::uniform(0.0, 10.0, 17);
  CHECK_THROWS_AS(total_norm(s, g2), dimension_error);
}

TEST_CASE("two-photon symmetry defect measurement") {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Random(24, 24);
  Eigen::MatrixXcd sym = m + m.transpose();
  CHECK(symmetrize_check(sym) == 0.0);

  sym(3, 7) += cplx{1e-6, 0.0};
  CHECK(symmetrize_check(sym) == doctest::Approx(1e-6).epsilon(1e-9));

  Eigen::MatrixXcd rect = Eigen::MatrixXcd::Zero(3, 4);
  CHECK_THROWS_AS(symmetrize_check(rect), dimension_error);
}

TEST_CASE("history buffer reproduces cubic trajectories exactly") {
  // y(t) = t^3 - 2t^2 + 5 is reproduced exactly by cubic Hermite.
  const double dt = 0.1;
  HistoryBuffer h(1, dt, 2.0);  // horizon covers the whole probed window
  auto f = [](double t) { return cplx{t * t * t - 2.0 * t * t + 5.0, 0.0}; };
  auto df = [](double t) { return cplx{3.0 * t * t - 4.0 * t, 0.0}; };
  for (int n = 0; n <= 20; ++n) {
    const double t = n * dt;
    Eigen::VectorXcd y(1), dy(1);
    y[0] = f(t);
    dy[0] = df(t);
    h.push(t, y, dy);
  }
  // Exact nodes.
  CHECK(h.node_value(7)[0].real() == doctest::Approx(f(0.7).real()).epsilon(1e-14));
  // Midpoints and general queries (cubic reproduced to machine precision).
  CHECK(h.midpoint_value(16)[0].real() ==
        doctest::Approx(f(1.65).real()).epsilon(1e-13));
  CHECK(h.eval(1.65)[0].real() == doctest::Approx(f(1.65).real()).epsilon(1e-13));
  CHECK(h.eval(1.234)[0].real() ==
        doctest::Approx(f(1.234).real()).epsilon(1e-13));
  // Midpoint and eval agree identically at the same point.
  CHECK(std::abs(h.midpoint_value(16)[0] - h.eval(1.65)[0]) < 1e-15);

  // Pre-history clamps to the first node.
  CHECK(h.eval(-3.0)[0] == f(0.0));

  // Broken timestamps are errors.
  Eigen::VectorXcd y(1), dy(1);
  y[0] = 0.0;
  dy[0] = 0.0;
  CHECK_THROWS_AS(h.push(2.5, y, dy), qfb_error);  // next node must be 2.1
}

TEST_CASE("history eviction honors the delay horizon") {
  const double dt = 0.05, tau = 0.4;
  HistoryBuffer h(2, dt, tau);
  Eigen::VectorXcd y(2), dy(2);
  dy.setZero();
  for (int n = 0; n <= 100; ++n) {
    y[0] = cplx(n, 0.0);
    y[1] = cplx(0.0, n);
    h.push(n * dt, y, dy);
  }
  const long newest = h.nodes_pushed() - 1;
  const long delayed = newest - static_cast<long>(tau / dt);
  // The full delay horizon stays readable...
  CHECK(h.node_value(delayed)[0].real() == doctest::Approx(92.0));
  CHECK_NOTHROW(h.midpoint_value(delayed));
  // ...while nodes far behind it have been evicted.
  CHECK_THROWS_AS(h.node_value(0), qfb_error);
}
