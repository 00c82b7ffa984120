#include "qfb/analytic.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qfb/errors.hpp"

namespace qfb {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
const cplx kI{0.0, 1.0};

// Classifies x against integer multiples of pi with absolute tolerance 1e-9.
DelayPhaseClass pi_multiple_class(double x) {
  const long n = std::lround(x / M_PI);
  if (std::abs(x - n * M_PI) <= 1e-9) {
    return (n % 2 == 0) ? DelayPhaseClass::even_pi : DelayPhaseClass::odd_pi;
  }
  return DelayPhaseClass::generic;
}

}  // namespace

ResidueCoeffs coeffs_defr(const PhysicalParams& p, double omega) {
  const double phase = p.delta0 * p.tau;
  const double cosp = std::cos(phase);
  const double sinp = std::sin(phase);
  ResidueCoeffs rc;
  rc.E = p.kappa * (cosp - 1.0);
  rc.F = sinp;
  rc.R = p.kappa * cplx{cosp - 1.0, sinp};
  rc.D = (kSqrt2 / 2.0) *
         cplx{p.delta0 - omega - sinp, p.kappa * (cosp - 1.0)};
  return rc;
}

Hijk coeffs_hijk(const PhysicalParams& p, double omega) {
  const double g = p.gamma;
  const double x = omega - p.delta0;
  const double scale = 2.0 * g * g + x * x;

  auto guarded = [&](double numer, double factor, double bracket) {
    if (std::abs(bracket) < 1e-12 * scale) {
      throw resonance_error(
          "coeffs_hijk: resonance denominator underflow at omega = " +
          std::to_string(omega));
    }
    return numer / (factor * bracket);
  };

  Hijk h;
  h.H = guarded(g + x / 3.0, 2.0 * g, -(g + x) * (g + x) + 2.0 * g * g);
  h.I = guarded(g - x / 3.0, 2.0 * g, -(g - x) * (g - x) + 2.0 * g * g);
  h.J = guarded(kSqrt2 * g - (2.0 / 3.0) * x, 2.0 * kSqrt2 * g,
                -(x - kSqrt2 * g) * (x - kSqrt2 * g) + g * g);
  h.K = guarded(kSqrt2 * g + (2.0 / 3.0) * x, 2.0 * kSqrt2 * g,
                -(x + kSqrt2 * g) * (x + kSqrt2 * g) + g * g);
  return h;
}

const char* to_string(DampingRegime r) {
  switch (r) {
    case DampingRegime::overdamped: return "overdamped";
    case DampingRegime::critical: return "critical";
    case DampingRegime::underdamped: return "underdamped";
  }
  return "unknown";
}

const char* to_string(DelayPhaseClass c) {
  switch (c) {
    case DelayPhaseClass::even_pi: return "even-multiple-of-pi";
    case DelayPhaseClass::odd_pi: return "odd-multiple-of-pi";
    case DelayPhaseClass::generic: return "generic";
  }
  return "unknown";
}

RegimeReport classify_regime(const PhysicalParams& p) {
  RegimeReport rep;
  rep.omega0 = std::sqrt(std::abs(0.25 * p.kappa * p.kappa -
                                  2.0 * p.gamma * p.gamma));
  const double boundary = 2.0 * kSqrt2 * p.gamma;
  const double tol = 1e-9 * std::max(p.kappa, boundary);
  if (std::abs(p.kappa - boundary) <= tol) {
    rep.regime = DampingRegime::critical;
  } else if (p.kappa > boundary) {
    rep.regime = DampingRegime::overdamped;
  } else {
    rep.regime = DampingRegime::underdamped;
  }
  rep.delta0_tau_class = pi_multiple_class(p.delta0 * p.tau);
  rep.kappa_tau_class = pi_multiple_class(p.kappa * p.tau);
  return rep;
}

namespace {

struct TransferParts {
  cplx A;
  cplx B;
  cplx den;
};

TransferParts transfer_parts(cplx s, const PhysicalParams& p) {
  const cplx loop = std::exp(cplx{0.0, p.delta0 * p.tau}) *
                    std::exp(-s * p.tau);
  TransferParts tp;
  tp.A = s + p.kappa * (1.0 - loop);
  tp.B = 1.0 - p.kappa * p.tau * loop;
  tp.den = tp.A * tp.A + 2.0 * p.gamma * p.gamma * tp.B;
  if (std::abs(tp.den) < 1e-12 * (1.0 + std::norm(s))) {
    throw resonance_error("transfer function evaluated too close to a pole");
  }
  return tp;
}

}  // namespace

cplx transfer_ce(cplx s, const PhysicalParams& p) {
  const auto tp = transfer_parts(s, p);
  return tp.A / tp.den;
}

cplx transfer_cg(cplx s, const PhysicalParams& p) {
  const auto tp = transfer_parts(s, p);
  return kI * kSqrt2 * p.gamma * tp.B / tp.den;
}

std::pair<cplx, cplx> closed_form_ce_cg(double t, const PhysicalParams& p) {
  const double phase = p.delta0 * p.tau;
  const double env = std::exp(-p.kappa * (1.0 - std::cos(phase)) * t);
  const cplx carrier = std::polar(env, std::sin(phase) * t);
  const double rabi = kSqrt2 * p.gamma * t;
  return {carrier * std::cos(rabi), kI * carrier * std::sin(rabi)};
}

cplx closed_form_cgk(double t, double k, const PhysicalParams& p) {
  const double omega = p.c * k;
  const auto rc = coeffs_defr(p, omega);
  const auto cls = classify_regime(p);
  const double gsin = p.g0 * std::sin(k * p.L);
  const double g = p.gamma;

  if (cls.delta0_tau_class != DelayPhaseClass::generic) {
    // Exact partial fractions of the rational transfer function.
    const double M = omega - p.delta0 + rc.F;
    const cplx EiM{rc.E, M};
    const cplx R = rc.R;
    auto N = [&](cplx s) {
      return 2.0 * kSqrt2 * kI * g * rc.D - 3.0 * g * (s - EiM);
    };
    const cplx sq = std::sqrt(R * R - g * g);
    const cplx p1 = R - sq;
    const cplx p2 = R + sq;
    const cplx p3 = EiM - kI * kSqrt2 * g;
    const cplx p4 = EiM + kI * kSqrt2 * g;

    if (std::abs(sq) < 1e-5 * g) {
      // Confluent first pole pair (gamma = 2 kappa): (a + b t) e^{Rt}.
      auto Q = [&](cplx s) { return (s - EiM) * (s - EiM) + 2.0 * g * g; };
      const cplx QR = Q(R);
      const cplx b = N(R) / QR;
      const cplx a = (-3.0 * g * QR - N(R) * 2.0 * (R - EiM)) / (QR * QR);
      const cplx r3 = N(p3) / ((p3 - p1) * (p3 - p2) * (p3 - p4));
      const cplx r4 = N(p4) / ((p4 - p1) * (p4 - p2) * (p4 - p3));
      return gsin * ((a + b * t) * std::exp(R * t) + r3 * std::exp(p3 * t) +
                     r4 * std::exp(p4 * t));
    }
    const cplx r1 = N(p1) / ((p1 - p2) * (p1 - p3) * (p1 - p4));
    const cplx r2 = N(p2) / ((p2 - p1) * (p2 - p3) * (p2 - p4));
    const cplx r3 = N(p3) / ((p3 - p1) * (p3 - p2) * (p3 - p4));
    const cplx r4 = N(p4) / ((p4 - p1) * (p4 - p2) * (p4 - p3));
    return gsin * (r1 * std::exp(p1 * t) + r2 * std::exp(p2 * t) +
                   r3 * std::exp(p3 * t) + r4 * std::exp(p4 * t));
  }

  if (p.kappa * p.tau <= 0.1) {
    // Printed small-delay coefficient form.
    const auto h = coeffs_hijk(p, omega);
    const cplx drift{rc.E, omega - p.delta0 + rc.F};
    return -3.0 * gsin * g *
           (h.H * std::exp(-kI * g * t) + h.I * std::exp(kI * g * t) +
            h.J * std::exp((drift - kI * kSqrt2 * g) * t) +
            h.K * std::exp((drift + kI * kSqrt2 * g) * t));
  }

  throw config_error(
      "closed_form_cgk: outside the supported regimes (delay phase not a "
      "multiple of pi and kappa*tau > 0.1)");
}

cplx long_waveguide_solution(double t, const PhysicalParams& p,
                             ScalarAmplitude which) {
  const double kap = p.kappa;
  const double g = p.gamma;
  const auto rep = classify_regime(p);
  const double om0 = rep.omega0;
  const double env = std::exp(-1.5 * kap * t);

  if (which == ScalarAmplitude::c_e) {
    switch (rep.regime) {
      case DampingRegime::critical:
        return cplx{env * (1.0 + 0.5 * kap * t), 0.0};
      case DampingRegime::overdamped:
        return cplx{env * (std::cosh(om0 * t) +
                           0.5 * kap / om0 * std::sinh(om0 * t)),
                    0.0};
      case DampingRegime::underdamped:
        return cplx{env * (std::cos(om0 * t) +
                           (kap > 0.0 ? 0.5 * kap / om0 * std::sin(om0 * t)
                                      : 0.0)),
                    0.0};
    }
  }
  switch (rep.regime) {
    case DampingRegime::critical:
      return kI * kSqrt2 * g * t * env;
    case DampingRegime::overdamped:
      return kI * kSqrt2 * g * std::sinh(om0 * t) / om0 * env;
    case DampingRegime::underdamped:
      return kI * kSqrt2 * g * std::sin(om0 * t) / om0 * env;
  }
  return cplx{0.0, 0.0};
}

cplx steady_state_cgkk(double k1, double k2, const PhysicalParams& p,
                       SteadyStateForm form) {
  const auto cls = classify_regime(p);
  if (cls.delta0_tau_class != DelayPhaseClass::odd_pi) {
    throw config_error(
        "steady_state_cgkk: requires delta0*tau at an odd multiple of pi");
  }
  const double d1 = p.c * k1 - p.delta0;
  const double d2 = p.c * k2 - p.delta0;
  const double g = p.gamma;

  if (form == SteadyStateForm::printed) {
    const double R = -2.0 * p.kappa;
    const cplx sq = std::sqrt(cplx{R * R - g * g, 0.0});
    const auto h1 = coeffs_hijk(p, p.c * k1);
    const auto h2 = coeffs_hijk(p, p.c * k2);
    const double s2g = kSqrt2 * g;
    const auto guarded = [&](cplx den) {
      if (std::abs(den) < 1e-12 * (1.0 + std::abs(R) + g)) {
        throw resonance_error(
            "steady_state_cgkk: emission-pole denominator underflow "
            "(kappa too small for this frequency pair)");
      }
      return den;
    };
    // Grouped pairwise so the value is bit-identical under k1 <-> k2.
    const cplx grp_h = h2.H / guarded(R - sq + kI * d1) +
                       h1.H / guarded(R - sq + kI * d2);
    const cplx grp_i = h2.I / guarded(R + sq + kI * d1) +
                       h1.I / guarded(R + sq + kI * d2);
    const cplx grp_j = (h2.J + h1.J) / guarded(R + kI * (d1 + d2 - s2g));
    const cplx grp_k = (h2.K + h1.K) / guarded(R + kI * (d1 + d2 + s2g));
    return -kI * p.g0 * p.g0 * std::sin(k1 * p.L) * std::sin(k2 * p.L) *
           (grp_h + grp_i + grp_j + grp_k);
  }

  // Rational form: the exact transfer function evaluated on the imaginary
  // axis at the emission frequency of the partner photon.
  auto cgk_rational = [&](double delta_outer, double k_inner) -> cplx {
    const double omega = p.c * k_inner;
    const auto rc = coeffs_defr(p, omega);
    const double M = omega - p.delta0 + rc.F;
    const cplx EiM{rc.E, M};
    const cplx s{0.0, -delta_outer};
    const cplx N = 2.0 * kSqrt2 * kI * g * rc.D - 3.0 * g * (s - EiM);
    const cplx den = (s * s - 2.0 * rc.R * s + g * g) *
                     ((s - EiM) * (s - EiM) + 2.0 * g * g);
    return p.g0 * std::sin(k_inner * p.L) * N / den;
  };
  return kI * p.g0 * std::sin(k1 * p.L) * cgk_rational(d1, k2) +
         kI * p.g0 * std::sin(k2 * p.L) * cgk_rational(d2, k1);
}

Eigen::MatrixXcd steady_state_matrix(const ContinuousModeGrid& grid,
                                     const PhysicalParams& p,
                                     SteadyStateForm form) {
  const int n = grid.n_k;
  if (grid.values.size() != n) {
    throw dimension_error(
        "steady_state_matrix: grid arrays do not match n_k (build grids "
        "with ContinuousModeGrid::uniform)");
  }
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const cplx v = steady_state_cgkk(grid.values[i], grid.values[j], p, form);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

cplx laplace_numeric(const std::vector<double>& t, const std::vector<cplx>& f,
                     cplx s) {
  if (t.size() != f.size() || t.size() < 2) {
    throw dimension_error("laplace_numeric: need matching samples, >= 2");
  }
  cplx acc{0.0, 0.0};
  cplx prev = std::exp(-s * t[0]) * f[0];
  for (std::size_t i = 1; i < t.size(); ++i) {
    const cplx cur = std::exp(-s * t[i]) * f[i];
    acc += 0.5 * (prev + cur) * (t[i] - t[i - 1]);
    prev = cur;
  }
  return acc;
}

double antidiagonal_imag_ratio(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols()) {
    throw dimension_error("antidiagonal_imag_ratio: matrix must be square");
  }
  const Eigen::Index n = m.rows();
  double max_re = 0.0;
  double max_im = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx v = m(i, n - 1 - i);
    max_re = std::max(max_re, std::abs(v.real()));
    max_im = std::max(max_im, std::abs(v.imag()));
  }
  return (max_im > 0.0) ? max_re / max_im : 0.0;
}

}  // namespace qfb
