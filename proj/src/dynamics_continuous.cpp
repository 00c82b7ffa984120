#include "qfb/integrator.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
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

// Store block snapshots whose requested time rounds to this node.
void take_snapshots(const IntegratorConfig& cfg, double dt, long node,
                    const AmplitudeState& st, std::vector<bool>& done,
                    TimeSeriesRecord& rec) {
  for (std::size_t j = 0; j < cfg.snapshot_times.size(); ++j) {
    if (done[j]) continue;
    const double ts = cfg.snapshot_times[j];
    if (std::llround(ts / dt) == node && std::abs(node * dt - ts) <= 0.5 * dt) {
      rec.snapshot_times.push_back(node * dt);
      rec.snapshots_cgkk.push_back(st.c_gkk);
      rec.snapshots_cgk.push_back(st.c_gk);
      done[j] = true;
    }
  }
}

}  // namespace

void rhs_full(const AmplitudeState& state, const ContinuousModeGrid& grid,
              const PhysicalParams& params, double t, AmplitudeState& deriv) {
  const Eigen::Index n = grid.n_k;
  if (grid.values.size() != n || grid.weights.size() != n) {
    throw dimension_error(
        "mode grid arrays do not match n_k (build grids with "
        "ContinuousModeGrid::uniform)");
  }
  if (state.c_ek.size() != n || state.c_gk.size() != n ||
      state.c_gkk.rows() != n || state.c_gkk.cols() != n) {
    throw dimension_error("state blocks do not match the mode grid");
  }
  const double g2 = std::numbers::sqrt2 * params.gamma;

  Eigen::VectorXcd g(n), gc(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double k = grid.values(i);
    const double amp = params.g0 * std::sin(k * params.L);
    const double phase = (params.c * k - params.delta0) * t;
    g(i) = std::polar(amp, -phase);
    gc(i) = std::conj(g(i));
  }
  const Eigen::VectorXcd x = grid.weights.array() * g.array();

  deriv.t = t;
  deriv.c_e = kI * g2 * state.c_g + kI * bdot(x, state.c_ek);
  deriv.c_g = kI * g2 * state.c_e +
              kI * std::numbers::sqrt2 * bdot(x, state.c_gk);
  deriv.c_ek = (kI * state.c_e) * gc + (kI * params.gamma) * state.c_gk;
  deriv.c_gk = (kI * params.gamma) * state.c_ek +
               (kI * std::numbers::sqrt2 * state.c_g) * gc +
               (2.0 * kI) * (state.c_gkk * x);
  deriv.c_gkk = kI * (gc * state.c_gk.transpose() +
                      state.c_gk * gc.transpose());
  deriv.aux_a.resize(0);
  deriv.aux_b.resize(0);
}

TimeSeriesRecord integrate_full(const PhysicalParams& params,
                                const ContinuousModeGrid& grid,
                                const IntegratorConfig& config) {
  const long n_steps = validated_step_count(config);
  const double dt = config.dt;
  const Eigen::Index n = grid.n_k;
  const double g2 = std::numbers::sqrt2 * params.gamma;

  AmplitudeState st = initial_state(grid, false);

  // Loop-invariant mode data.
  Eigen::VectorXd gs(n), om(n), wg(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gs(i) = params.g0 * std::sin(grid.values(i) * params.L);
    om(i) = params.c * grid.values(i) - params.delta0;
    wg(i) = grid.weights(i) * gs(i);
  }

  // Workspaces (no allocation inside the step loop).
  Eigen::VectorXcd gca(n), gcb(n), gcc(n);
  Eigen::MatrixXcd X(n, 3), Y(n, 3), A(n, 3), Bt(n, 3), P(n, n);
  Eigen::VectorXcd ek2(n), ek3(n), ek4(n), gk2(n), gk3(n), gk4(n);
  Eigen::VectorXcd s1ek(n), s2ek(n), s3ek(n), s4ek(n);
  Eigen::VectorXcd s1gk(n), s2gk(n), s3gk(n), s4gk(n);
  Eigen::VectorXcd mx(n);

  TimeSeriesRecord rec;
  std::vector<bool> snap_done(config.snapshot_times.size(), false);

  auto sample = [&](long node) {
    const Populations pops = populations(st, grid);
    const double total = pops.total();
    rec.t.push_back(node * dt);
    rec.pop_ce.push_back(pops.atom_e);
    rec.pop_cg.push_back(pops.cavity2);
    rec.pop_ek.push_back(pops.one_ek);
    rec.pop_gk.push_back(pops.one_gk);
    rec.pop_two.push_back(pops.two);
    rec.norm.push_back(total);
    if (config.record_amplitudes) {
      rec.c_e.push_back(st.c_e);
      rec.c_g.push_back(st.c_g);
    }
    if (std::abs(total - 1.0) > config.norm_abort) {
      throw numerics_error("conserved norm drifted to " +
                           std::to_string(total) + " at t = " +
                           std::to_string(node * dt) +
                           "; reduce dt or loosen norm_abort");
    }
  };

  sample(0);
  take_snapshots(config, dt, 0, st, snap_done, rec);

  for (long m = 0; m < n_steps; ++m) {
    const double t = m * dt;
    const double th = t + 0.5 * dt;
    const double tf = t + dt;
    for (Eigen::Index i = 0; i < n; ++i) {
      const cplx pa = std::polar(1.0, -om(i) * t);
      const cplx pb = std::polar(1.0, -om(i) * th);
      const cplx pc = std::polar(1.0, -om(i) * tf);
      X(i, 0) = wg(i) * pa;
      X(i, 1) = wg(i) * pb;
      X(i, 2) = wg(i) * pc;
      gca(i) = gs(i) * std::conj(pa);
      gcb(i) = gs(i) * std::conj(pb);
      gcc(i) = gs(i) * std::conj(pc);
    }
    // One two-photon product serves all four stages; stage corrections to
    // the matrix are rank-2 and applied as O(n) dot products.
    Y.noalias() = st.c_gkk * X;

    // Stage 1 at (t, y_n).
    const cplx s1ce = kI * g2 * st.c_g + kI * bdot(X.col(0), st.c_ek);
    const cplx s1cg = kI * g2 * st.c_e +
                      kI * std::numbers::sqrt2 * bdot(X.col(0), st.c_gk);
    s1ek = (kI * st.c_e) * gca + (kI * params.gamma) * st.c_gk;
    s1gk = (kI * params.gamma) * st.c_ek +
           (kI * std::numbers::sqrt2 * st.c_g) * gca + (2.0 * kI) * Y.col(0);

    // Stage 2 at (t + dt/2, y_n + dt/2 k1).
    const cplx ce2 = st.c_e + 0.5 * dt * s1ce;
    const cplx cg2 = st.c_g + 0.5 * dt * s1cg;
    ek2 = st.c_ek + (0.5 * dt) * s1ek;
    gk2 = st.c_gk + (0.5 * dt) * s1gk;
    mx = Y.col(1) + (0.5 * dt) *
                        ((kI * bdot(st.c_gk, X.col(1))) * gca +
                         (kI * bdot(gca, X.col(1))) * st.c_gk);
    const cplx s2ce = kI * g2 * cg2 + kI * bdot(X.col(1), ek2);
    const cplx s2cg = kI * g2 * ce2 +
                      kI * std::numbers::sqrt2 * bdot(X.col(1), gk2);
    s2ek = (kI * ce2) * gcb + (kI * params.gamma) * gk2;
    s2gk = (kI * params.gamma) * ek2 +
           (kI * std::numbers::sqrt2 * cg2) * gcb + (2.0 * kI) * mx;

    // Stage 3 at (t + dt/2, y_n + dt/2 k2).
    const cplx ce3 = st.c_e + 0.5 * dt * s2ce;
    const cplx cg3 = st.c_g + 0.5 * dt * s2cg;
    ek3 = st.c_ek + (0.5 * dt) * s2ek;
    gk3 = st.c_gk + (0.5 * dt) * s2gk;
    mx = Y.col(1) + (0.5 * dt) *
                        ((kI * bdot(gk2, X.col(1))) * gcb +
                         (kI * bdot(gcb, X.col(1))) * gk2);
    const cplx s3ce = kI * g2 * cg3 + kI * bdot(X.col(1), ek3);
    const cplx s3cg = kI * g2 * ce3 +
                      kI * std::numbers::sqrt2 * bdot(X.col(1), gk3);
    s3ek = (kI * ce3) * gcb + (kI * params.gamma) * gk3;
    s3gk = (kI * params.gamma) * ek3 +
           (kI * std::numbers::sqrt2 * cg3) * gcb + (2.0 * kI) * mx;

    // Stage 4 at (t + dt, y_n + dt k3).
    const cplx ce4 = st.c_e + dt * s3ce;
    const cplx cg4 = st.c_g + dt * s3cg;
    ek4 = st.c_ek + dt * s3ek;
    gk4 = st.c_gk + dt * s3gk;
    mx = Y.col(2) + dt * ((kI * bdot(gk3, X.col(2))) * gcb +
                          (kI * bdot(gcb, X.col(2))) * gk3);
    const cplx s4ce = kI * g2 * cg4 + kI * bdot(X.col(2), ek4);
    const cplx s4cg = kI * g2 * ce4 +
                      kI * std::numbers::sqrt2 * bdot(X.col(2), gk4);
    s4ek = (kI * ce4) * gcc + (kI * params.gamma) * gk4;
    s4gk = (kI * params.gamma) * ek4 +
           (kI * std::numbers::sqrt2 * cg4) * gcc + (2.0 * kI) * mx;

    // Aggregated two-photon increment: the Runge-Kutta combination of the
    // four rank-2 stage derivatives is itself a rank-6 symmetric product,
    // applied as one matrix product plus its transpose so the block stays
    // exactly symmetric.  Built before c_gk is overwritten.
    A.col(0) = gca;
    A.col(1) = gcb;
    A.col(2) = gcc;
    Bt.col(0) = (dt / 6.0) * st.c_gk;
    Bt.col(1) = (dt / 3.0) * (gk2 + gk3);
    Bt.col(2) = (dt / 6.0) * gk4;
    P.noalias() = A * Bt.transpose();
    st.c_gkk += kI * (P + P.transpose());

    st.c_e += (dt / 6.0) * (s1ce + 2.0 * (s2ce + s3ce) + s4ce);
    st.c_g += (dt / 6.0) * (s1cg + 2.0 * (s2cg + s3cg) + s4cg);
    st.c_ek += (dt / 6.0) * (s1ek + 2.0 * (s2ek + s3ek) + s4ek);
    st.c_gk += (dt / 6.0) * (s1gk + 2.0 * (s2gk + s3gk) + s4gk);
    st.t = (m + 1) * dt;

    if (is_sample_node(m + 1, n_steps, config.sample_stride)) sample(m + 1);
    take_snapshots(config, dt, m + 1, st, snap_done, rec);
  }
  return rec;
}

void rhs_reduced(const AmplitudeState& state, const HistoryBuffer& history,
                 const ContinuousModeGrid* grid, const PhysicalParams& params,
                 ReducedVariant variant, bool gate_open, bool theta_zero_is_one,
                 double t, AmplitudeState& deriv) {
  const double g2 = std::numbers::sqrt2 * params.gamma;
  const bool fields = grid != nullptr && state.c_ek.size() > 0;

  // Step-level Heaviside gate; the single evaluation landing exactly on
  // t - tau = 0 follows the configured convention for the gate at zero.
  bool active = gate_open;
  if (active && !theta_zero_is_one &&
      std::abs(t - params.tau) <= 1e-12 * std::max(1.0, params.tau)) {
    active = false;
  }

  cplx ce_tau{0.0, 0.0};
  cplx cg_tau{0.0, 0.0};
  Eigen::VectorXcd gk_tau;
  if (active) {
    const Eigen::VectorXcd h = history.eval(t - params.tau);
    ce_tau = h(0);
    cg_tau = h(1);
    if (fields) gk_tau = h.segment(2, state.c_gk.size());
  }

  const cplx loop = std::polar(1.0, params.delta0 * params.tau);
  const double kappa = params.kappa;
  const double kappa_g =
      (variant == ReducedVariant::appendix) ? 2.0 * kappa : kappa;

  deriv.t = t;
  deriv.c_e = kI * g2 * state.c_g - kappa * state.c_e;
  deriv.c_g = kI * g2 * state.c_e - kappa_g * state.c_g;
  if (active) {
    deriv.c_e += kappa * loop * ce_tau;
    deriv.c_g += kappa * loop * cg_tau -
                 kI * g2 * kappa * params.tau * loop * ce_tau;
  }

  if (fields) {
    const Eigen::Index n = grid->n_k;
    if (grid->values.size() != n || grid->weights.size() != n) {
      throw dimension_error(
          "mode grid arrays do not match n_k (build grids with "
          "ContinuousModeGrid::uniform)");
    }
    if (state.c_ek.size() != n || state.c_gk.size() != n ||
        state.c_gkk.rows() != n || state.aux_a.size() != n ||
        state.aux_b.size() != n) {
      throw dimension_error("state blocks do not match the mode grid");
    }
    Eigen::VectorXcd gc(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double k = grid->values(i);
      gc(i) = std::polar(params.g0 * std::sin(k * params.L),
                         (params.c * k - params.delta0) * t);
    }
    deriv.c_ek = (kI * state.c_e) * gc + (kI * params.gamma) * state.c_gk;
    deriv.c_gk = (-2.0 * kappa) * state.c_gk +
                 (kI * std::numbers::sqrt2 * state.c_g) * gc -
                 params.gamma * state.aux_a -
                 (params.gamma * params.gamma) * state.aux_b;
    if (active) deriv.c_gk += (2.0 * kappa * loop) * gk_tau;
    deriv.aux_a = state.c_e * gc;
    deriv.aux_b = state.c_gk;
    deriv.c_gkk = kI * (gc * state.c_gk.transpose() +
                        state.c_gk * gc.transpose());
  } else {
    deriv.c_ek.resize(0);
    deriv.c_gk.resize(0);
    deriv.c_gkk.resize(0, 0);
    deriv.aux_a.resize(0);
    deriv.aux_b.resize(0);
  }
}

namespace {

// y = base + a * k over whichever blocks are present.
void blend(const AmplitudeState& base, double a, const AmplitudeState& k,
           AmplitudeState& out) {
  out.c_e = base.c_e + a * k.c_e;
  out.c_g = base.c_g + a * k.c_g;
  if (base.c_ek.size() > 0) {
    out.c_ek = base.c_ek + a * k.c_ek;
    out.c_gk = base.c_gk + a * k.c_gk;
    out.c_gkk = base.c_gkk + a * k.c_gkk;
    out.aux_a = base.aux_a + a * k.aux_a;
    out.aux_b = base.aux_b + a * k.aux_b;
  }
}

void combine_rk4(AmplitudeState& st, double dt, const AmplitudeState& k1,
                 const AmplitudeState& k2, const AmplitudeState& k3,
                 const AmplitudeState& k4) {
  const double w = dt / 6.0;
  st.c_e += w * (k1.c_e + 2.0 * (k2.c_e + k3.c_e) + k4.c_e);
  st.c_g += w * (k1.c_g + 2.0 * (k2.c_g + k3.c_g) + k4.c_g);
  if (st.c_ek.size() > 0) {
    st.c_ek += w * (k1.c_ek + 2.0 * (k2.c_ek + k3.c_ek) + k4.c_ek);
    st.c_gk += w * (k1.c_gk + 2.0 * (k2.c_gk + k3.c_gk) + k4.c_gk);
    st.c_gkk += w * (k1.c_gkk + 2.0 * (k2.c_gkk + k3.c_gkk) + k4.c_gkk);
    st.aux_a += w * (k1.aux_a + 2.0 * (k2.aux_a + k3.aux_a) + k4.aux_a);
    st.aux_b += w * (k1.aux_b + 2.0 * (k2.aux_b + k3.aux_b) + k4.aux_b);
  }
}

void pack_history_row(const AmplitudeState& s, Eigen::VectorXcd& out) {
  out(0) = s.c_e;
  out(1) = s.c_g;
  if (out.size() > 2) out.segment(2, s.c_gk.size()) = s.c_gk;
}

}  // namespace

TimeSeriesRecord integrate_reduced(const PhysicalParams& params,
                                   const ContinuousModeGrid* grid,
                                   const IntegratorConfig& config,
                                   ReducedVariant variant) {
  const long n_steps = validated_step_count(config);
  const double dt = config.dt;
  const bool fields = config.fields && grid != nullptr;
  if (config.fields && grid == nullptr) {
    throw config_error("reduced model with fields requires a mode grid");
  }
  if (!fields && !config.snapshot_times.empty()) {
    throw config_error(
        "block snapshots require the reduced model's field blocks");
  }

  // Delayed reads land on nodes and midpoints only when dt divides tau.
  long delay_nodes = 0;
  if (!config.disable_delay) {
    const double ratio = params.tau / dt;
    delay_nodes = std::lround(ratio);
    if (delay_nodes < 1 ||
        std::abs(ratio - static_cast<double>(delay_nodes)) > 1e-9 * ratio) {
      throw config_error("dt must divide the feedback delay exactly");
    }
  }

  AmplitudeState st;
  if (fields) {
    st = initial_state(*grid, true);
  } else {
    st.c_e = cplx{1.0, 0.0};
  }

  const Eigen::Index hdim = 2 + (fields ? grid->n_k : 0);
  HistoryBuffer hist(hdim, dt, params.tau > 0.0 ? params.tau : dt);
  Eigen::VectorXcd row_y(hdim), row_d(hdim), row_dr(hdim);

  AmplitudeState k1, k2, k3, k4, ytmp;

  TimeSeriesRecord rec;
  std::vector<bool> snap_done(config.snapshot_times.size(), false);

  auto sample = [&](long node) {
    rec.t.push_back(node * dt);
    if (fields) {
      const Populations pops = populations(st, *grid);
      rec.pop_ce.push_back(pops.atom_e);
      rec.pop_cg.push_back(pops.cavity2);
      rec.pop_ek.push_back(pops.one_ek);
      rec.pop_gk.push_back(pops.one_gk);
      rec.pop_two.push_back(pops.two);
      rec.norm.push_back(pops.total());
    } else {
      const double pe = std::norm(st.c_e);
      const double pg = std::norm(st.c_g);
      rec.pop_ce.push_back(pe);
      rec.pop_cg.push_back(pg);
      rec.pop_ek.push_back(0.0);
      rec.pop_gk.push_back(0.0);
      rec.pop_two.push_back(0.0);
      rec.norm.push_back(pe + pg);
    }
    if (config.record_amplitudes) {
      rec.c_e.push_back(st.c_e);
      rec.c_g.push_back(st.c_g);
    }
  };

  sample(0);
  if (fields) take_snapshots(config, dt, 0, st, snap_done, rec);

  for (long m = 0; m < n_steps; ++m) {
    const double t = m * dt;
    const bool gate = !config.disable_delay && m >= delay_nodes;

    if (!config.disable_delay && m == delay_nodes) {
      // The trajectory's derivative jumps where the feedback gate opens;
      // store both one-sided values so each adjacent history segment
      // interpolates its own smooth piece.
      AmplitudeState k_left;
      rhs_reduced(st, hist, fields ? grid : nullptr, params, variant, false,
                  config.theta_zero_is_one, t, k_left);
      rhs_reduced(st, hist, fields ? grid : nullptr, params, variant, true,
                  true, t, k1);
      pack_history_row(st, row_y);
      pack_history_row(k_left, row_d);
      pack_history_row(k1, row_dr);
      hist.push(t, row_y, row_d, row_dr);
      if (!config.theta_zero_is_one) k1 = k_left;
    } else {
      rhs_reduced(st, hist, fields ? grid : nullptr, params, variant, gate,
                  config.theta_zero_is_one, t, k1);
      pack_history_row(st, row_y);
      pack_history_row(k1, row_d);
      hist.push(t, row_y, row_d);
    }

    blend(st, 0.5 * dt, k1, ytmp);
    rhs_reduced(ytmp, hist, fields ? grid : nullptr, params, variant, gate,
                config.theta_zero_is_one, t + 0.5 * dt, k2);
    blend(st, 0.5 * dt, k2, ytmp);
    rhs_reduced(ytmp, hist, fields ? grid : nullptr, params, variant, gate,
                config.theta_zero_is_one, t + 0.5 * dt, k3);
    blend(st, dt, k3, ytmp);
    rhs_reduced(ytmp, hist, fields ? grid : nullptr, params, variant, gate,
                config.theta_zero_is_one, t + dt, k4);

    combine_rk4(st, dt, k1, k2, k3, k4);
    st.t = (m + 1) * dt;

    if (is_sample_node(m + 1, n_steps, config.sample_stride)) sample(m + 1);
    if (fields) take_snapshots(config, dt, m + 1, st, snap_done, rec);
  }
  return rec;
}

TimeSeriesRecord integrate(ContinuousFormulation model,
                           const PhysicalParams& params,
                           const ContinuousModeGrid* grid,
                           const IntegratorConfig& config,
                           ReducedVariant variant) {
  if (model == ContinuousFormulation::full) {
    if (grid == nullptr) {
      throw config_error("the full formulation requires a mode grid");
    }
    return integrate_full(params, *grid, config);
  }
  return integrate_reduced(params, grid, config, variant);
}

}  // namespace qfb
