#pragma once

#include <stdexcept>
#include <string>

namespace qfb {

// Base class for all library failures so callers can map them to exit codes.
struct qfb_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid physical parameters, grids, or configuration input.
struct config_error : qfb_error {
  using qfb_error::qfb_error;
};

// Mismatched vector/matrix dimensions between state and grid.
struct dimension_error : qfb_error {
  using qfb_error::qfb_error;
};

// A closed-form denominator collapsed below the safe-evaluation threshold.
struct resonance_error : qfb_error {
  using qfb_error::qfb_error;
};

// Numerical failure during integration (e.g. norm drift beyond bound).
struct numerics_error : qfb_error {
  using qfb_error::qfb_error;
};

}  // namespace qfb
