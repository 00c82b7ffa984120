#include "qfb/discrete.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "qfb/errors.hpp"

namespace qfb {

namespace {

using cplx = std::complex<double>;
constexpr cplx kI{0.0, 1.0};

// Bilinear (non-conjugating) dot product of two complex vectors.
template <typename A, typename B>
cplx bdot(const A& a, const B& b) {
  return a.cwiseProduct(b).sum();
}

// Coupling prefactor of the standing-wave comb.
double mode_prefactor(const PhysicalParams& p) {
  return std::sqrt(std::numbers::pi / (2.0 * p.L)) * p.g0;
}

void check_compatible(const DiscreteAmplitudeState& st,
                      const DiscreteModeSet& modes,
                      const PhysicalParams& params) {
  const Eigen::Index n = modes.size();
  if (st.c_eq.size() != n || st.c_gq.size() != n || st.c_gpq.rows() != n ||
      st.c_gpq.cols() != n) {
    throw dimension_error("state blocks do not match the discrete mode set");
  }
  if (std::abs(modes.L - params.L) >
      1e-12 * std::max(1.0, std::abs(params.L))) {
    throw config_error(
        "discrete mode set was built for a different waveguide length");
  }
}

// phi_q(t) = (-1)^q exp(-i (c k_q - delta0) t) for every stored mode.
void mode_phases(const DiscreteModeSet& modes, const PhysicalParams& p,
                 double t, Eigen::VectorXcd& phi) {
  const Eigen::Index n = modes.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    phi(i) = modes.parity(static_cast<int>(i)) *
             std::polar(1.0, -(p.c * modes.values(i) - p.delta0) * t);
  }
}

long validated_step_count(const IntegratorConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) {
    throw config_error("integrator dt must be positive and finite");
  }
  if (!(cfg.t_end > 0.0) || !std::isfinite(cfg.t_end)) {
    throw config_error("integrator t_end must be positive and finite");
  }
  if (cfg.sample_stride < 1) {
    throw config_error("sample_stride must be at least 1");
  }
  if (cfg.interpolation_order != 3) {
    throw config_error("only cubic Hermite dense output (order 3) is supported");
  }
  long n = std::lround(cfg.t_end / cfg.dt);
  return n < 1 ? 1 : n;
}

bool is_sample_node(long node, long n_steps, int stride) {
  return node % stride == 0 || node == n_steps;
}

void take_snapshots(const IntegratorConfig& cfg, double dt, long node,
                    const DiscreteAmplitudeState& st, std::vector<bool>& done,
                    TimeSeriesRecord& rec) {
  for (std::size_t j = 0; j < cfg.snapshot_times.size(); ++j) {
    if (done[j]) continue;
    const double ts = cfg.snapshot_times[j];
    if (std::llround(ts / dt) == node && std::abs(node * dt - ts) <= 0.5 * dt) {
      rec.snapshot_times.push_back(node * dt);
      rec.snapshots_cgkk.push_back(st.c_gpq);
      rec.snapshots_cgq.push_back(st.c_gq);
      done[j] = true;
    }
  }
}

}  // namespace

DiscreteAmplitudeState initial_discrete_state(const DiscreteModeSet& modes) {
  const Eigen::Index n = modes.size();
  DiscreteAmplitudeState st;
  st.c_e = cplx{1.0, 0.0};
  st.c_eq = Eigen::VectorXcd::Zero(n);
  st.c_gq = Eigen::VectorXcd::Zero(n);
  st.c_gpq = Eigen::MatrixXcd::Zero(n, n);
  return st;
}

Populations discrete_populations(const DiscreteAmplitudeState& state) {
  Populations p;
  p.atom_e = std::norm(state.c_e);
  p.cavity2 = std::norm(state.c_g);
  p.one_ek = state.c_eq.squaredNorm();
  p.one_gk = state.c_gq.squaredNorm();
  p.two = state.c_gpq.squaredNorm();
  return p;
}

void rhs_discrete(const DiscreteAmplitudeState& state,
                  const DiscreteModeSet& modes, const PhysicalParams& params,
                  double t, DiscreteAmplitudeState& deriv) {
  check_compatible(state, modes, params);
  const Eigen::Index n = modes.size();
  const double g2 = std::numbers::sqrt2 * params.gamma;
  const double pref = mode_prefactor(params);

  Eigen::VectorXcd phi(n);
  mode_phases(modes, params, t, phi);
  const Eigen::VectorXcd phic = phi.conjugate();

  deriv.t = t;
  deriv.c_e = kI * g2 * state.c_g + (kI * pref) * bdot(phi, state.c_eq);
  deriv.c_g = kI * g2 * state.c_e +
              (kI * std::numbers::sqrt2 * pref) * bdot(phi, state.c_gq);
  deriv.c_eq = (kI * pref * state.c_e) * phic +
               (kI * params.gamma) * state.c_gq;
  deriv.c_gq = (kI * params.gamma) * state.c_eq +
               (kI * std::numbers::sqrt2 * pref * state.c_g) * phic +
               (2.0 * kI * pref) * (state.c_gpq * phi);
  // Symmetric two-photon source; P + P^T keeps the block exactly symmetric.
  const Eigen::MatrixXcd outer = state.c_gq * phic.transpose();
  deriv.c_gpq = (kI * pref) * (outer + outer.transpose());
}

TimeSeriesRecord integrate_discrete(const PhysicalParams& params,
                                    const DiscreteModeSet& modes,
                                    const IntegratorConfig& config) {
  const long n_steps = validated_step_count(config);
  const double dt = config.dt;

  DiscreteAmplitudeState st = initial_discrete_state(modes);
  check_compatible(st, modes, params);

  TimeSeriesRecord rec;
  std::vector<bool> snap_done(config.snapshot_times.size(), false);

  DiscreteAmplitudeState k1, k2, k3, k4, work;
  auto blend = [](DiscreteAmplitudeState& dst,
                  const DiscreteAmplitudeState& base, double a,
                  const DiscreteAmplitudeState& k) {
    dst.c_e = base.c_e + a * k.c_e;
    dst.c_g = base.c_g + a * k.c_g;
    dst.c_eq = base.c_eq + a * k.c_eq;
    dst.c_gq = base.c_gq + a * k.c_gq;
    dst.c_gpq = base.c_gpq + a * k.c_gpq;
  };

  auto sample = [&](long node) {
    const double t = node * dt;
    const Populations p = discrete_populations(st);
    rec.t.push_back(t);
    rec.pop_ce.push_back(p.atom_e);
    rec.pop_cg.push_back(p.cavity2);
    rec.pop_ek.push_back(p.one_ek);
    rec.pop_gk.push_back(p.one_gk);
    rec.pop_two.push_back(p.two);
    rec.norm.push_back(p.total());
    if (config.record_amplitudes) {
      rec.c_e.push_back(st.c_e);
      rec.c_g.push_back(st.c_g);
    }
    if (std::abs(p.total() - 1.0) > config.norm_abort) {
      throw numerics_error("conserved norm drifted past the abort bound at t=" +
                           std::to_string(t));
    }
  };

  sample(0);
  take_snapshots(config, dt, 0, st, snap_done, rec);

  for (long m = 0; m < n_steps; ++m) {
    const double t = m * dt;
    rhs_discrete(st, modes, params, t, k1);
    blend(work, st, 0.5 * dt, k1);
    rhs_discrete(work, modes, params, t + 0.5 * dt, k2);
    blend(work, st, 0.5 * dt, k2);
    rhs_discrete(work, modes, params, t + 0.5 * dt, k3);
    blend(work, st, dt, k3);
    rhs_discrete(work, modes, params, t + dt, k4);

    const double w1 = dt / 6.0, w2 = dt / 3.0;
    st.c_e += w1 * (k1.c_e + k4.c_e) + w2 * (k2.c_e + k3.c_e);
    st.c_g += w1 * (k1.c_g + k4.c_g) + w2 * (k2.c_g + k3.c_g);
    st.c_eq += w1 * (k1.c_eq + k4.c_eq) + w2 * (k2.c_eq + k3.c_eq);
    st.c_gq += w1 * (k1.c_gq + k4.c_gq) + w2 * (k2.c_gq + k3.c_gq);
    st.c_gpq += w1 * (k1.c_gpq + k4.c_gpq) + w2 * (k2.c_gpq + k3.c_gpq);
    st.t = (m + 1) * dt;

    const long node = m + 1;
    if (is_sample_node(node, n_steps, config.sample_stride)) sample(node);
    take_snapshots(config, dt, node, st, snap_done, rec);
  }

  for (std::size_t j = 0; j < snap_done.size(); ++j) {
    if (!snap_done[j]) {
      throw config_error("snapshot time does not land on an integration node");
    }
  }
  return rec;
}

ModeSpectrumPeak mode_spectrum_peak(const Eigen::VectorXcd& c_gq,
                                    const DiscreteModeSet& modes,
                                    const PhysicalParams& params) {
  const Eigen::Index n = modes.size();
  if (c_gq.size() != n) {
    throw dimension_error("amplitude vector does not match the mode set");
  }
  Eigen::Index i_star = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = std::abs(c_gq(i));
    if (a > best) {
      best = a;
      i_star = i;
    }
  }
  if (best <= 0.0) {
    throw config_error(
        "mode spectrum of an identically zero amplitude vector");
  }
  double second = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == i_star) continue;
    second = std::max(second, std::abs(c_gq(i)));
  }
  Eigen::Index i_res = 0;
  double det = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = std::abs(params.c * modes.values(i) - params.delta0);
    if (d < det) {
      det = d;
      i_res = i;
    }
  }
  ModeSpectrumPeak peak;
  peak.q_star = modes.q[static_cast<std::size_t>(i_star)];
  peak.concentration = second > 0.0
                           ? best / second
                           : std::numeric_limits<double>::infinity();
  peak.q_resonant = modes.q[static_cast<std::size_t>(i_res)];
  peak.at_resonance = peak.q_star == peak.q_resonant;
  return peak;
}

ModeSpectrumPeak mode_spectrum_peak(const DiscreteAmplitudeState& state,
                                    const DiscreteModeSet& modes,
                                    const PhysicalParams& params) {
  return mode_spectrum_peak(state.c_gq, modes, params);
}

cplx phased_mode_sum(const Eigen::VectorXcd& c_gq,
                     const DiscreteModeSet& modes, const PhysicalParams& params,
                     double t) {
  const Eigen::Index n = modes.size();
  if (c_gq.size() != n) {
    throw dimension_error("amplitude vector does not match the mode set");
  }
  Eigen::VectorXcd phi(n);
  mode_phases(modes, params, t, phi);
  return bdot(phi, c_gq);
}

double coupling_ratio_exact(double k, double l, double L) {
  const double denom = std::sin(k * l);
  if (std::abs(denom) < 1e-12) {
    throw resonance_error(
        "coupling ratio undefined at a cavity node (sin(kl) = 0)");
  }
  const double num = std::sin(k * L);
  return (num * num) / (denom * denom);
}

double coupling_ratio_lorentzian(double k, const PhysicalParams& params) {
  if (!(params.Gamma > 0.0) || !(params.l > 0.0)) {
    throw config_error(
        "Lorentzian coupling ratio requires a cavity (l > 0) with a leaky "
        "mirror (r < 1)");
  }
  const double det = params.c * k - params.delta0;
  return (params.c * params.Gamma / params.l) /
         (det * det + params.Gamma * params.Gamma);
}

}  // namespace qfb
