// qfb — command-line front end for the two-excitation cavity-feedback
// simulator and its analysis toolkit.
//
// Subcommands:
//   list      show the built-in scenario presets
//   simulate  integrate a scenario and write CSV / snapshot / summary files
//   analytic  coefficient, transfer-function, and closed-form tables
//   schmidt   steady-state Schmidt analysis and coupling-strength sweep
//   modes     discrete mode-comb table with coupling ratios
//
// Exit codes: 0 success; 2 configuration, dimension, or resonance errors
// (including bad command lines); 3 numerical failure during integration;
// 4 --assert requested and at least one scenario check failed.
#include <CLI11.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "qfb/analytic.hpp"
#include "qfb/discrete.hpp"
#include "qfb/entanglement.hpp"
#include "qfb/errors.hpp"
#include "qfb/grid.hpp"
#include "qfb/params.hpp"
#include "qfb/scenario.hpp"

namespace {

using nlohmann::ordered_json;
using qfb::cplx;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerics = 3;
constexpr int kExitAssert = 4;

struct CommonOpts {
  std::string preset;
  std::string config;
  std::string out_dir = ".";
  bool json = false;
};

void add_source_options(CLI::App* cmd, CommonOpts* opts) {
  auto* p = cmd->add_option("--preset", opts->preset,
                            "Built-in scenario name (see `qfb list`)");
  auto* c = cmd->add_option("--config", opts->config,
                            "Scenario config file (plain-text or JSON)");
  p->excludes(c);
  cmd->add_option("--out-dir", opts->out_dir,
                  "Directory for output files (created if missing)");
  cmd->add_flag("--json", opts->json,
                "Print the machine-readable summary to stdout");
}

qfb::ScenarioPreset resolve_scenario(const CommonOpts& opts) {
  if (!opts.config.empty()) return qfb::load_config(opts.config);
  if (!opts.preset.empty()) return qfb::preset_by_name(opts.preset);
  throw qfb::config_error("pass either --preset NAME or --config FILE");
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw qfb::config_error("cannot open output file: " + path.string());
  }
  out << text;
  if (!out) {
    throw qfb::config_error("cannot finish writing " + path.string());
  }
}

std::filesystem::path ensure_out_dir(const std::string& dir) {
  std::filesystem::path p(dir.empty() ? "." : dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) {
    throw qfb::config_error("cannot create output directory '" + dir +
                            "': " + ec.message());
  }
  return p;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// list
// ---------------------------------------------------------------------------

int cmd_list(bool json) {
  if (json) {
    ordered_json out = ordered_json::array();
    for (const auto& p : qfb::builtin_presets()) out.push_back(qfb::to_json(p));
    std::printf("%s\n", out.dump(2).c_str());
    return kExitOk;
  }
  for (const auto& p : qfb::builtin_presets()) {
    std::printf("%-6s  %s\n", p.name.c_str(), p.title.c_str());
    for (const auto& run : p.runs) {
      std::printf("        run %-12s model=%-14s dt=%-12.6g t_end=%g\n",
                  run.label.c_str(), run.model.c_str(), run.dt,
                  run.t_end > 0.0 ? run.t_end : p.t_end);
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const CommonOpts& opts, const qfb::RunOverrides& overrides,
                 bool assert_checks) {
  const qfb::ScenarioPreset preset = resolve_scenario(opts);
  const qfb::ScenarioResult result =
      qfb::run_scenario(preset, opts.out_dir, overrides);
  if (opts.json) {
    std::printf("%s\n", result.summary.dump(2).c_str());
  } else {
    std::printf("scenario %s: %zu run(s), %zu file(s) in %s\n",
                result.preset.name.c_str(), result.records.size(),
                result.files.size(), opts.out_dir.c_str());
    for (const auto& [label, entry] : result.summary.at("runs").items()) {
      std::printf("  run %-12s samples=%-6lld norm_dev_max=%.3e\n",
                  label.c_str(), entry.at("samples").get<long long>(),
                  entry.at("norm_dev_max").get<double>());
    }
    for (const auto& [key, value] : result.summary.at("checks").items()) {
      if (value.is_boolean()) {
        std::printf("  check %-34s %s\n", key.c_str(),
                    value.get<bool>() ? "PASS" : "FAIL");
      }
    }
  }
  if (assert_checks && !result.checks_passed) return kExitAssert;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analytic
// ---------------------------------------------------------------------------

int cmd_analytic(const CommonOpts& opts) {
  const qfb::ScenarioPreset preset = resolve_scenario(opts);
  const qfb::PhysicalParams& p = preset.params;
  const auto dir = ensure_out_dir(opts.out_dir);

  ordered_json out;
  out["scenario"] = preset.name;
  out["params"] = qfb::to_json(preset)["params"];
  out["derived"] = {{"kappa", p.kappa}, {"tau", p.tau}, {"Gamma", p.Gamma}};
  const qfb::RegimeReport regime = qfb::classify_regime(p);
  out["regime"] = {
      {"window_rate", regime.omega0},
      {"damping", qfb::to_string(regime.regime)},
      {"delay_phase", qfb::to_string(regime.delta0_tau_class)},
      {"kappa_tau_phase", qfb::to_string(regime.kappa_tau_class)}};

  // Pole-structure coefficients at a few detunings around the feedback
  // carrier, spaced to avoid the tabulated resonance points.
  ordered_json coeff_rows = ordered_json::array();
  for (double offset : {-2.0, -0.5, 0.5, 2.0}) {
    const double omega = p.delta0 + offset * p.gamma;
    ordered_json row;
    row["omega"] = omega;
    const qfb::ResidueCoeffs rc = qfb::coeffs_defr(p, omega);
    row["D"] = {rc.D.real(), rc.D.imag()};
    row["E"] = rc.E;
    row["F"] = rc.F;
    row["R"] = {rc.R.real(), rc.R.imag()};
    try {
      const qfb::Hijk h = qfb::coeffs_hijk(p, omega);
      row["H"] = h.H;
      row["I"] = h.I;
      row["J"] = h.J;
      row["K"] = h.K;
    } catch (const qfb::resonance_error& e) {
      row["resonance"] = e.what();
    }
    coeff_rows.push_back(std::move(row));
  }
  out["residue_coefficients"] = std::move(coeff_rows);

  ordered_json transfer_rows = ordered_json::array();
  for (double s_re : {0.5, 0.875, 1.25, 1.625, 2.0}) {
    ordered_json row;
    row["s"] = {s_re, 0.0};
    try {
      const cplx ce = qfb::transfer_ce(cplx{s_re, 0.0}, p);
      const cplx cg = qfb::transfer_cg(cplx{s_re, 0.0}, p);
      row["Ce"] = {ce.real(), ce.imag()};
      row["Cg"] = {cg.real(), cg.imag()};
    } catch (const qfb::resonance_error& e) {
      row["resonance"] = e.what();
    }
    transfer_rows.push_back(std::move(row));
  }
  out["transfer"] = std::move(transfer_rows);

  // Closed-form scalar trajectory table.
  const std::string csv_name = preset.name + "_closed_form.csv";
  {
    std::string csv;
    csv += "# closed-form scalar amplitudes, scenario " + preset.name + "\n";
    csv += "# t is in propagation units (length/c with c = 1); [1] marks a "
           "dimensionless column\n";
    csv += "t [m/c],re_ce [1],im_ce [1],re_cg [1],im_cg [1],pop_ce [1],"
           "pop_cg [1]\n";
    const int rows = 400;
    for (int i = 0; i <= rows; ++i) {
      const double t = preset.t_end * static_cast<double>(i) / rows;
      const auto [ce, cg] = qfb::closed_form_ce_cg(t, p);
      csv += fmt17(t) + "," + fmt17(ce.real()) + "," + fmt17(ce.imag()) + "," +
             fmt17(cg.real()) + "," + fmt17(cg.imag()) + "," +
             fmt17(std::norm(ce)) + "," + fmt17(std::norm(cg)) + "\n";
    }
    write_file(dir / csv_name, csv);
  }
  out["closed_form_csv"] = csv_name;

  const std::string json_name = preset.name + "_analytic.json";
  write_file(dir / json_name, out.dump(2) + "\n");

  if (opts.json) {
    std::printf("%s\n", out.dump(2).c_str());
  } else {
    std::printf("scenario %s: wrote %s and %s\n", preset.name.c_str(),
                json_name.c_str(), csv_name.c_str());
    std::printf("  regime: %s damping, delay phase %s, window rate %.6g\n",
                qfb::to_string(regime.regime),
                qfb::to_string(regime.delta0_tau_class), regime.omega0);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// schmidt
// ---------------------------------------------------------------------------

int cmd_schmidt(const CommonOpts& opts, int nk_override) {
  const qfb::ScenarioPreset preset = resolve_scenario(opts);
  if (preset.n_k <= 0) {
    throw qfb::config_error(
        "schmidt analysis needs a continuous mode grid ([grid] section)");
  }
  const int n_k = nk_override > 0 ? nk_override : preset.n_k;
  const auto grid =
      qfb::ContinuousModeGrid::uniform(preset.k_min, preset.k_max, n_k);
  const qfb::PhysicalParams& p = preset.params;
  const auto dir = ensure_out_dir(opts.out_dir);

  const Eigen::MatrixXcd steady =
      qfb::steady_state_matrix(grid, p, qfb::SteadyStateForm::rational);
  const qfb::SchmidtReport rep = qfb::schmidt_decompose(steady, grid);

  ordered_json out;
  out["scenario"] = preset.name;
  out["grid"] = {{"k_min", preset.k_min}, {"k_max", preset.k_max},
                 {"n_k", n_k}};
  out["steady_state"] = {{"entropy", rep.entropy},
                         {"schmidt_number", rep.schmidt_number},
                         {"rank", rep.rank}};
  ordered_json top = ordered_json::array();
  for (Eigen::Index i = 0; i < rep.p.size() && i < 5; ++i) {
    top.push_back(rep.p(i));
  }
  out["steady_state"]["top_mode_weights"] = std::move(top);

  const std::vector<double> kappas = {p.kappa, p.kappa / 2.0, p.kappa / 4.0};
  const qfb::EntanglementTable table = qfb::entanglement_vs_kappa(
      p, kappas, grid, qfb::SteadyStateForm::rational);
  ordered_json rows = ordered_json::array();
  for (const auto& row : table.rows) {
    ordered_json r;
    r["kappa"] = row.kappa;
    r["ok"] = row.ok;
    if (row.ok) {
      r["entropy"] = row.entropy;
      r["schmidt_number"] = row.schmidt_number;
    } else {
      r["error"] = row.message;
    }
    rows.push_back(std::move(r));
  }
  out["kappa_sweep"] = std::move(rows);
  out["entropy_decreasing_in_kappa"] = table.entropy_decreasing_in_kappa;

  const std::string json_name = preset.name + "_schmidt.json";
  write_file(dir / json_name, out.dump(2) + "\n");

  if (opts.json) {
    std::printf("%s\n", out.dump(2).c_str());
  } else {
    std::printf(
        "scenario %s: steady-state Schmidt number %.4f, entropy %.4f, "
        "rank %d (wrote %s)\n",
        preset.name.c_str(), rep.schmidt_number, rep.entropy, rep.rank,
        json_name.c_str());
    std::printf("  entropy decreasing with coupling strength: %s\n",
                table.entropy_decreasing_in_kappa ? "yes" : "no");
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// modes
// ---------------------------------------------------------------------------

int cmd_modes(const CommonOpts& opts, int qmax_override) {
  const qfb::ScenarioPreset preset = resolve_scenario(opts);
  if (preset.q_max <= 0) {
    throw qfb::config_error(
        "mode table needs a discrete mode comb ([modes] section)");
  }
  const int q_max = qmax_override > 0 ? qmax_override : preset.q_max;
  const auto modes =
      qfb::DiscreteModeSet::range(preset.params.L, preset.q_min, q_max);
  const qfb::PhysicalParams& p = preset.params;
  const auto dir = ensure_out_dir(opts.out_dir);
  const bool leaky = p.Gamma > 0.0;

  std::string csv;
  csv += "# mode comb, scenario " + preset.name + "\n";
  csv += "# k and detuning are wavenumbers (rad/m); [1] marks a dimensionless "
         "column\n";
  csv += "q [1],k [rad/m],parity [1],detuning [rad/m],ratio_lorentzian [1],"
         "ratio_exact [1]\n";
  int q_resonant = modes.q.front();
  double best = std::abs(p.c * modes.values(0) - p.delta0);
  for (int i = 0; i < modes.size(); ++i) {
    const double k = modes.values(i);
    const double det = p.c * k - p.delta0;
    if (std::abs(det) < best) {
      best = std::abs(det);
      q_resonant = modes.q[i];
    }
    csv += std::to_string(modes.q[i]) + "," + fmt17(k) + "," +
           fmt17(modes.parity(i)) + "," + fmt17(det) + ",";
    csv += leaky ? fmt17(qfb::coupling_ratio_lorentzian(k, p)) : "nan";
    csv += ",";
    try {
      csv += fmt17(qfb::coupling_ratio_exact(k, p.l, p.L));
    } catch (const qfb::qfb_error&) {
      csv += "inf";  // cavity node: the exact ratio diverges
    }
    csv += "\n";
  }
  const std::string csv_name = preset.name + "_modes.csv";
  write_file(dir / csv_name, csv);

  ordered_json out;
  out["scenario"] = preset.name;
  out["modes"] = {{"q_min", preset.q_min}, {"q_max", q_max},
                  {"count", modes.size()}};
  out["spacing"] = M_PI / p.L;
  out["resonant_mode_q"] = q_resonant;
  out["cavity_linewidth"] = p.Gamma;
  out["csv"] = csv_name;
  if (opts.json) {
    std::printf("%s\n", out.dump(2).c_str());
  } else {
    std::printf(
        "scenario %s: %d modes, spacing %.6g, resonant mode q=%d, "
        "linewidth %.6g (wrote %s)\n",
        preset.name.c_str(), modes.size(), M_PI / p.L, q_resonant, p.Gamma,
        csv_name.c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "qfb — two-excitation cavity dynamics with time-delayed waveguide "
      "feedback"};
  app.require_subcommand(1);

  CommonOpts sim_opts, ana_opts, sch_opts, mod_opts;
  qfb::RunOverrides overrides;
  bool assert_checks = false;
  bool list_json = false;
  int sch_nk = 0;
  int mod_qmax = 0;

  auto* list_cmd = app.add_subcommand("list", "List the built-in presets");
  list_cmd->add_flag("--json", list_json, "Machine-readable preset dump");

  auto* sim_cmd =
      app.add_subcommand("simulate", "Integrate a scenario, write artifacts");
  add_source_options(sim_cmd, &sim_opts);
  sim_cmd->add_option("--dt", overrides.dt,
                      "Override the step size of every run");
  sim_cmd->add_option("--nk", overrides.n_k,
                      "Override the continuous-grid point count");
  sim_cmd->add_option("--qmax", overrides.q_max,
                      "Override the top discrete mode number");
  sim_cmd->add_flag("--assert", assert_checks,
                    "Exit with status 4 when a scenario check fails");

  auto* ana_cmd = app.add_subcommand(
      "analytic", "Coefficient / transfer-function / closed-form tables");
  add_source_options(ana_cmd, &ana_opts);

  auto* sch_cmd = app.add_subcommand(
      "schmidt", "Steady-state Schmidt analysis and coupling sweep");
  add_source_options(sch_cmd, &sch_opts);
  sch_cmd->add_option("--nk", sch_nk, "Override the grid point count");

  auto* mod_cmd =
      app.add_subcommand("modes", "Discrete mode-comb table");
  add_source_options(mod_cmd, &mod_opts);
  mod_cmd->add_option("--qmax", mod_qmax, "Override the top mode number");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (list_cmd->parsed()) return cmd_list(list_json);
    if (sim_cmd->parsed()) return cmd_simulate(sim_opts, overrides,
                                               assert_checks);
    if (ana_cmd->parsed()) return cmd_analytic(ana_opts);
    if (sch_cmd->parsed()) return cmd_schmidt(sch_opts, sch_nk);
    if (mod_cmd->parsed()) return cmd_modes(mod_opts, mod_qmax);
  } catch (const qfb::numerics_error& e) {
    std::fprintf(stderr, "numerics error: %s\n", e.what());
    return kExitNumerics;
  } catch (const qfb::qfb_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
