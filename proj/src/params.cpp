#include "qfb/params.hpp"

#include <cmath>
#include <string>

#include "qfb/errors.hpp"

namespace qfb {

PhysicalParams derive_params(double gamma, double g0, double c, double delta0,
                             double L, double l, double r) {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(gamma) || !finite(g0) || !finite(c) || !finite(delta0) ||
      !finite(L) || !finite(l) || !finite(r)) {
    throw config_error("derive_params: all raw values must be finite");
  }
  if (gamma <= 0.0) throw config_error("derive_params: gamma must be > 0");
  if (g0 < 0.0) throw config_error("derive_params: g0 must be >= 0");
  if (c <= 0.0) throw config_error("derive_params: c must be > 0");
  if (delta0 <= 0.0) throw config_error("derive_params: delta0 must be > 0");
  if (L <= 0.0) throw config_error("derive_params: L must be > 0");
  if (l < 0.0) throw config_error("derive_params: l must be >= 0");
  if (r < 0.0 || r > 1.0) {
    throw config_error("derive_params: r must lie in [0,1], got " +
                       std::to_string(r));
  }

  PhysicalParams p{};
  p.gamma = gamma;
  p.g0 = g0;
  p.c = c;
  p.delta0 = delta0;
  p.L = L;
  p.l = l;
  p.r = r;
  p.kappa = M_PI * g0 * g0 / (2.0 * c);
  p.tau = 2.0 * L / c;
  p.Gamma = (l > 0.0) ? c * (1.0 - r) / (2.0 * l) : 0.0;
  return p;
}

PhysicalParams with_kappa(const PhysicalParams& base, double kappa_target) {
  if (kappa_target < 0.0) {
    throw config_error("with_kappa: kappa_target must be >= 0");
  }
  const double g0 = std::sqrt(2.0 * base.c * kappa_target / M_PI);
  return derive_params(base.gamma, g0, base.c, base.delta0, base.L, base.l,
                       base.r);
}

}  // namespace qfb
