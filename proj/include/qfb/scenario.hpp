#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "qfb/params.hpp"
#include "qfb/record.hpp"

namespace qfb {

// One integration pass within a scenario.  gamma/t_end of 0 inherit the
// preset-level values, so a preset can sweep coupling strengths or shorten
// individual runs (each run still shares the scenario's grid and snapshots).
struct ModelRun {
  std::string label;     // unique within the preset; used in file names
  std::string model;     // "full" | "reduced_scalar" | "reduced_fields" |
                         // "discrete"
  double dt = 0.0;       // step size (must be positive)
  int sample_stride = 1; // record every n-th node
  double gamma = 0.0;    // 0 = inherit preset params.gamma
  double t_end = 0.0;    // 0 = inherit preset t_end
};

// A named, fully pinned simulation setup.  Continuous presets carry a
// wavenumber grid (n_k > 0); discrete presets carry a mode comb (q_max > 0).
// Snapshot times apply to each run that can take them: runs whose model has
// no field blocks skip snapshots, and runs ending before a snapshot time
// simply omit it.
struct ScenarioPreset {
  std::string name;
  std::string title;  // one-line description for listings
  PhysicalParams params;
  double k_min = 0.0;
  double k_max = 0.0;
  int n_k = 0;
  int q_min = 0;
  int q_max = 0;
  double t_end = 0.0;
  std::vector<double> snapshot_times;
  std::vector<ModelRun> runs;
};

bool operator==(const ModelRun& a, const ModelRun& b);
bool operator==(const ScenarioPreset& a, const ScenarioPreset& b);

// The built-in scenario library (stable order).
const std::vector<ScenarioPreset>& builtin_presets();

// Lookup by name; throws config_error for an unknown name.
const ScenarioPreset& preset_by_name(const std::string& name);

// Plain-text config format: [scenario]/[params]/[grid]/[modes]/[integrator]
// sections plus one [run:<label>] section per run.  Doubles are printed with
// 17 significant digits, so serialize -> parse reproduces the preset in
// every bit.
std::string to_ini(const ScenarioPreset& preset);
ScenarioPreset from_ini(const std::string& text);

// JSON equivalent of the same schema (also lossless).
nlohmann::ordered_json to_json(const ScenarioPreset& preset);
ScenarioPreset from_json(const nlohmann::json& j);

// Reads a config file, dispatching on a leading '{' to JSON, else the
// plain-text format.  Throws config_error when the file cannot be read or
// parsed.
ScenarioPreset load_config(const std::string& path);

// Command-line overrides applied before a run (0 = keep preset value).
// dt rescales every run of the preset; n_k/q_max resize the mode sets.
struct RunOverrides {
  double dt = 0.0;
  int n_k = 0;
  int q_max = 0;
};

// Everything run_scenario produced: per-run records (in preset order), the
// summary document, and the list of files written (relative to out_dir).
struct ScenarioResult {
  ScenarioPreset preset;  // after overrides
  std::vector<TimeSeriesRecord> records;
  nlohmann::ordered_json summary;
  bool checks_passed = true;  // all scenario-level boolean checks
  std::vector<std::string> files;
};

// Runs every pass of the scenario and writes, into out_dir: one CSV time
// series per run (time column first, units in the header), flat re/im pair
// files with a JSON index for each snapshot, and <name>_summary.json holding
// final populations, norm drift, regime labels, and the scenario's check
// booleans (plus a Schmidt report where the scenario takes a two-photon
// snapshot).  Identical configs produce byte-identical files.  Throws
// config_error for invalid setups; numerics aborts propagate.
ScenarioResult run_scenario(const ScenarioPreset& preset,
                            const std::string& out_dir,
                            const RunOverrides& overrides = {});

}  // namespace qfb
