#include "qfb/record.hpp"

#include <cmath>
#include <string>

#include "qfb/errors.hpp"

namespace qfb {

namespace {
std::size_t find_snapshot(const TimeSeriesRecord& record, double t_snap) {
  std::size_t best = record.snapshot_times.size();
  double best_gap = 0.0;
  for (std::size_t i = 0; i < record.snapshot_times.size(); ++i) {
    const double gap = std::abs(record.snapshot_times[i] - t_snap);
    if (best == record.snapshot_times.size() || gap < best_gap) {
      best = i;
      best_gap = gap;
    }
  }
  // Accept only a genuine match: within half a sample spacing of the request.
  double spacing = 0.0;
  if (record.t.size() >= 2) spacing = record.t[1] - record.t[0];
  if (best == record.snapshot_times.size() ||
      best_gap > 0.5 * spacing + 1e-12 * (1.0 + std::abs(t_snap))) {
    throw qfb_error("snapshot lookup: no snapshot stored at t = " +
                    std::to_string(t_snap));
  }
  return best;
}
}  // namespace

const Eigen::MatrixXcd& snapshot_cgkk(const TimeSeriesRecord& record,
                                      double t_snap) {
  const std::size_t i = find_snapshot(record, t_snap);
  if (i >= record.snapshots_cgkk.size()) {
    throw qfb_error("snapshot lookup: two-photon block missing at requested t");
  }
  return record.snapshots_cgkk[i];
}

const Eigen::VectorXcd& snapshot_cgk(const TimeSeriesRecord& record,
                                     double t_snap) {
  const std::size_t i = find_snapshot(record, t_snap);
  if (i >= record.snapshots_cgk.size()) {
    throw qfb_error("snapshot lookup: one-photon block missing at requested t");
  }
  return record.snapshots_cgk[i];
}

}  // namespace qfb
