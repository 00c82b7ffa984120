#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace qfb {

// Sampled trajectory of a run: population columns at each sample time plus
// optional full snapshots of the waveguide blocks at requested times.
// Populations are non-negative and sum to the recorded norm at each sample.
struct TimeSeriesRecord {
  std::vector<double> t;
  std::vector<double> pop_ce;    // |c_e|^2
  std::vector<double> pop_cg;    // |c_g|^2
  std::vector<double> pop_ek;    // weighted one-photon (atom excited) block
  std::vector<double> pop_gk;    // weighted one-photon (cavity) block
  std::vector<double> pop_two;   // weighted two-photon block
  std::vector<double> norm;      // sum of the five columns above

  // Complex scalar amplitudes (same sample times); kept for transform work.
  std::vector<std::complex<double>> c_e;
  std::vector<std::complex<double>> c_g;

  // Snapshots of the waveguide blocks, aligned index-for-index.
  std::vector<double> snapshot_times;
  std::vector<Eigen::MatrixXcd> snapshots_cgkk;
  std::vector<Eigen::VectorXcd> snapshots_cgk;
  // Discrete-scheme runs store the per-mode photon amplitudes instead.
  std::vector<Eigen::VectorXcd> snapshots_cgq;

  std::size_t size() const { return t.size(); }
};

// Returns the stored two-photon snapshot taken at time t_snap (matched within
// half a sample step); throws qfb_error if no snapshot was requested there.
const Eigen::MatrixXcd& snapshot_cgkk(const TimeSeriesRecord& record,
                                      double t_snap);

// Companion lookup for the one-photon cavity-channel snapshot.
const Eigen::VectorXcd& snapshot_cgk(const TimeSeriesRecord& record,
                                     double t_snap);

}  // namespace qfb
