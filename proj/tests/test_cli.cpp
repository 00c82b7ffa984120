// End-to-end tests of the qfb command-line tool (driven as a subprocess via
// QFB_CLI_PATH) plus the scenario config round-trip contracts they rely on.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qfb/params.hpp"
#include "qfb/scenario.hpp"

using namespace qfb;
namespace fs = std::filesystem;

namespace {

// Runs the CLI with the given arguments, stdout+stderr captured to a file;
// returns the process exit status.
int run_cli(const std::string& args, const fs::path& capture) {
  const std::string cmd =
      std::string(QFB_CLI_PATH) + " " + args + " > " + capture.string() +
      " 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

// Fresh scratch directory, removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("qfb_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path operator/(const std::string& name) const { return path / name; }
};

std::vector<std::string> dir_listing(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

// A small, fast scenario used for config-driven invocations.
ScenarioPreset tiny_scenario() {
  ScenarioPreset s;
  s.name = "tiny";
  s.title = "half-wave loop, trimmed for tests";
  s.params = derive_params(M_PI / 4.0, 0.5, 1.0, 50.0, M_PI / 100.0);
  s.k_min = 0.0;
  s.k_max = 100.0;
  s.n_k = 48;
  s.t_end = 8.0 * s.params.tau;
  s.snapshot_times = {8.0 * s.params.tau};
  s.runs = {{"full", "full", s.params.tau / 64.0, 8, 0.0, 0.0}};
  return s;
}

}  // namespace

TEST_CASE("every built-in preset round-trips losslessly through both config "
          "formats") {
  for (const auto& preset : builtin_presets()) {
    CAPTURE(preset.name);
    const ScenarioPreset via_ini = from_ini(to_ini(preset));
    CHECK(via_ini == preset);
    const ScenarioPreset via_json = from_json(to_json(preset));
    CHECK(via_json == preset);
  }
  // And a custom scenario with every optional field exercised.
  ScenarioPreset custom = tiny_scenario();
  custom.q_min = 1;
  custom.q_max = 7;
  custom.runs.push_back({"alt", "discrete", 1e-3, 4, 2.5, 0.125});
  CHECK(from_ini(to_ini(custom)) == custom);
  CHECK(from_json(to_json(custom)) == custom);
}

TEST_CASE("list prints the preset library") {
  TempDir tmp("list");
  CHECK(run_cli("list", tmp / "out.txt") == 0);
  const std::string text = read_file(tmp / "out.txt");
  for (const char* name : {"fig2", "fig3a", "fig3b", "fig4", "fig5"}) {
    CHECK(text.find(name) != std::string::npos);
  }

  CHECK(run_cli("list --json", tmp / "out.json") == 0);
  const auto j = nlohmann::json::parse(read_file(tmp / "out.json"));
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 5);
  CHECK(j[0]["scenario"]["name"] == "fig2");
  CHECK(j[4]["scenario"]["name"] == "fig5");
  // The machine-readable listing is itself a valid config document.
  const ScenarioPreset back = from_json(j[1]);
  CHECK(back == builtin_presets()[1]);
}

TEST_CASE("simulate writes the documented artifact set") {
  TempDir tmp("sim");
  const fs::path out = tmp / "artifacts";
  const int rc = run_cli(
      "simulate --preset fig2 --nk 64 --out-dir " + out.string() + " --json",
      tmp / "stdout.json");
  CHECK(rc == 0);

  const auto summary = nlohmann::json::parse(read_file(tmp / "stdout.json"));
  CHECK(summary["scenario"] == "fig2");
  CHECK(summary["checks"]["all_passed"] == true);
  CHECK(summary["checks"]["full_reduced_agree"] == true);
  CHECK(summary["checks"]["closed_form_tracks"] == true);
  CHECK(summary["checks"]["antidiagonal_imag_dominated"] == true);
  CHECK(summary["runs"]["full"]["norm_dev_max"].get<double>() <= 1e-3);
  CHECK(summary["runs"]["full"]["regime"].contains("damping"));
  CHECK(summary["schmidt"][0]["schmidt_number"].get<double>() > 0.0);

  // stdout mirrors the summary file byte for byte.
  const auto on_disk =
      nlohmann::json::parse(read_file(out / "fig2_summary.json"));
  CHECK(on_disk == summary);

  for (const char* name :
       {"fig2_full.csv", "fig2_reduced.csv", "fig2_full_snap0_two_re.dat",
        "fig2_full_snap0_two_im.dat", "fig2_full_snap0_one_re.dat",
        "fig2_full_snap0_one_im.dat", "fig2_full_snapshots.json",
        "fig2_summary.json"}) {
    CAPTURE(name);
    CHECK(fs::exists(out / name));
  }
  // The scalar-pair run has no field blocks, so no snapshot files.
  CHECK(!fs::exists(out / "fig2_reduced_snapshots.json"));

  // CSV shape: comment lines, a units header, then t-first rows from t = 0.
  std::istringstream csv(read_file(out / "fig2_full.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("# scenario fig2", 0) == 0);
  std::getline(csv, line);
  std::getline(csv, line);
  CHECK(line ==
        "t [m/c],pop_ce [1],pop_cg [1],pop_ek [1],pop_gk [1],pop_two [1],"
        "norm [1],re_ce [1],im_ce [1],re_cg [1],im_cg [1]");
  std::getline(csv, line);
  CHECK(line.rfind("0,1,0,", 0) == 0);
  int rows = 1;
  while (std::getline(csv, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 641);

  // The two-photon snapshot grid holds n_k^2 values per component.
  std::istringstream snap(read_file(out / "fig2_full_snap0_two_re.dat"));
  int count = 0;
  while (std::getline(snap, line)) {
    if (!line.empty()) ++count;
  }
  CHECK(count == 64 * 64);

  const auto index =
      nlohmann::json::parse(read_file(out / "fig2_full_snapshots.json"));
  CHECK(index["run"] == "full");
  CHECK(index["grid"]["n_k"] == 64);
  CHECK(index["snapshots"][0]["time"].get<double>() ==
        doctest::Approx(0.8).epsilon(1e-12));
  CHECK(index["snapshots"][0]["two_photon"]["rows"] == 64);
}

TEST_CASE("identical invocations produce byte-identical artifacts") {
  TempDir tmp("det");
  const fs::path a = tmp / "a";
  const fs::path b = tmp / "b";
  const std::string args = "simulate --preset fig5 --qmax 7 --out-dir ";
  CHECK(run_cli(args + a.string(), tmp / "log_a.txt") == 0);
  CHECK(run_cli(args + b.string(), tmp / "log_b.txt") == 0);

  const auto names_a = dir_listing(a);
  const auto names_b = dir_listing(b);
  REQUIRE(names_a == names_b);
  REQUIRE(!names_a.empty());
  for (const auto& name : names_a) {
    CAPTURE(name);
    CHECK(read_file(a / name) == read_file(b / name));
  }
}

TEST_CASE("config files drive simulate in both formats") {
  TempDir tmp("cfg");
  const ScenarioPreset scenario = tiny_scenario();

  write_file(tmp / "tiny.ini", to_ini(scenario));
  const int rc_ini = run_cli("simulate --config " +
                                 (tmp / "tiny.ini").string() + " --out-dir " +
                                 (tmp / "out_ini").string() + " --json",
                             tmp / "ini.json");
  CHECK(rc_ini == 0);
  const auto sum_ini = nlohmann::json::parse(read_file(tmp / "ini.json"));
  CHECK(sum_ini["scenario"] == "tiny");
  CHECK(sum_ini["runs"]["full"]["samples"].get<int>() == 65);

  write_file(tmp / "tiny.json", to_json(scenario).dump(2));
  const int rc_json = run_cli("simulate --config " +
                                  (tmp / "tiny.json").string() +
                                  " --out-dir " + (tmp / "out_json").string() +
                                  " --json",
                              tmp / "json.json");
  CHECK(rc_json == 0);

  // Same scenario, same artifacts, regardless of the config syntax.
  const auto names_ini = dir_listing(tmp / "out_ini");
  const auto names_json = dir_listing(tmp / "out_json");
  REQUIRE(names_ini == names_json);
  for (const auto& name : names_ini) {
    CAPTURE(name);
    CHECK(read_file(tmp / "out_ini" / name) ==
          read_file(tmp / "out_json" / name));
  }
}

TEST_CASE("configuration problems exit with status 2") {
  TempDir tmp("err2");
  CHECK(run_cli("simulate --preset nosuch --out-dir " + (tmp / "o").string(),
                tmp / "a.txt") == 2);
  CHECK(run_cli("simulate --out-dir " + (tmp / "o").string(), tmp / "b.txt") ==
        2);
  CHECK(run_cli("frobnicate", tmp / "c.txt") == 2);
  CHECK(run_cli("", tmp / "d.txt") == 2);
  CHECK(run_cli("simulate --no-such-flag", tmp / "e.txt") == 2);

  write_file(tmp / "garbage.ini", "not a config at all\n");
  CHECK(run_cli("simulate --config " + (tmp / "garbage.ini").string(),
                tmp / "f.txt") == 2);

  write_file(tmp / "broken.json", "{\"scenario\": {\"name\": 3}}");
  CHECK(run_cli("simulate --config " + (tmp / "broken.json").string(),
                tmp / "g.txt") == 2);

  // A step size that cannot tile the feedback delay of the reduced run.
  CHECK(run_cli("simulate --preset fig2 --nk 32 --dt 0.003 --out-dir " +
                    (tmp / "o2").string(),
                tmp / "h.txt") == 2);

  // Subcommand / preset shape mismatches.
  CHECK(run_cli("schmidt --preset fig5", tmp / "i.txt") == 2);
  CHECK(run_cli("modes --preset fig2", tmp / "j.txt") == 2);
  // Generic delay phase: no steady-state expression to analyze.
  CHECK(run_cli("schmidt --preset fig2 --nk 48 --out-dir " +
                    (tmp / "o3").string(),
                tmp / "k.txt") == 2);
}

TEST_CASE("a numerical abort exits with status 3") {
  TempDir tmp("err3");
  ScenarioPreset boom = tiny_scenario();
  boom.name = "boom";
  boom.snapshot_times.clear();
  boom.t_end = 1.0;
  boom.runs = {{"full", "full", 0.25, 1, 0.0, 0.0}};  // far beyond stability
  write_file(tmp / "boom.json", to_json(boom).dump(2));
  CHECK(run_cli("simulate --config " + (tmp / "boom.json").string() +
                    " --out-dir " + (tmp / "out").string(),
                tmp / "log.txt") == 3);
  const std::string log = read_file(tmp / "log.txt");
  CHECK(log.find("numerics error") != std::string::npos);
}

TEST_CASE("--assert turns a failed scenario check into exit status 4") {
  TempDir tmp("err4");
  // The narrowband suppression statement fails at this mirror leakage, so
  // the check block reports it and --assert propagates the failure.
  const int rc = run_cli("simulate --preset fig5 --qmax 9 --assert --out-dir " +
                             (tmp / "out").string() + " --json",
                         tmp / "sum.json");
  CHECK(rc == 4);
  const auto summary = nlohmann::json::parse(read_file(tmp / "sum.json"));
  CHECK(summary["checks"]["phased_sum_suppressed"] == false);
  CHECK(summary["checks"]["all_passed"] == false);
  // Without --assert the same scenario reports the failure but exits 0.
  CHECK(run_cli("simulate --preset fig5 --qmax 9 --out-dir " +
                    (tmp / "out0").string(),
                tmp / "plain.txt") == 0);
}

TEST_CASE("analytic writes coefficient, transfer, and closed-form tables") {
  TempDir tmp("ana");
  const fs::path out = tmp / "o";
  CHECK(run_cli("analytic --preset fig2 --out-dir " + out.string() + " --json",
                tmp / "a.json") == 0);
  const auto j = nlohmann::json::parse(read_file(tmp / "a.json"));
  CHECK(j["regime"]["damping"] == "underdamped");
  REQUIRE(j["residue_coefficients"].size() == 4);
  for (const auto& row : j["residue_coefficients"]) {
    CHECK(row.contains("D"));
    CHECK(row.contains("H"));  // offsets chosen away from the poles
  }
  REQUIRE(j["transfer"].size() == 5);
  CHECK(j["transfer"][0]["s"][0].get<double>() == doctest::Approx(0.5));
  CHECK(fs::exists(out / "fig2_analytic.json"));

  std::istringstream csv(read_file(out / "fig2_closed_form.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  CHECK(rows == 402);  // header + 401 sample times
}

TEST_CASE("schmidt reports the steady-state entanglement sweep") {
  TempDir tmp("sch");
  const fs::path out = tmp / "o";
  CHECK(run_cli("schmidt --preset fig3a --nk 64 --out-dir " + out.string() +
                    " --json",
                tmp / "s.json") == 0);
  const auto j = nlohmann::json::parse(read_file(tmp / "s.json"));
  CHECK(j["steady_state"]["schmidt_number"].get<double>() > 1.0);
  CHECK(j["steady_state"]["entropy"].get<double>() > 0.0);
  REQUIRE(j["kappa_sweep"].size() == 3);
  for (const auto& row : j["kappa_sweep"]) CHECK(row["ok"] == true);
  CHECK(fs::exists(out / "fig3a_schmidt.json"));
}

TEST_CASE("modes writes the comb table with coupling ratios") {
  TempDir tmp("mod");
  const fs::path out = tmp / "o";
  CHECK(run_cli("modes --preset fig5 --out-dir " + out.string() + " --json",
                tmp / "m.json") == 0);
  const auto j = nlohmann::json::parse(read_file(tmp / "m.json"));
  CHECK(j["modes"]["count"] == 39);
  CHECK(j["resonant_mode_q"] == 1);
  std::istringstream csv(read_file(out / "fig5_modes.csv"));
  std::string line;
  int rows = 0;
  bool header_seen = false;
  while (std::getline(csv, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      CHECK(line ==
            "q [1],k [rad/m],parity [1],detuning [rad/m],"
            "ratio_lorentzian [1],ratio_exact [1]");
      header_seen = true;
    } else {
      ++rows;
    }
  }
  CHECK(rows == 39);
}
