#include "qfb/history.hpp"

#include <cmath>
#include <string>

#include "qfb/errors.hpp"

namespace qfb {

HistoryBuffer::HistoryBuffer(int dim, double dt, double tau_max) : dim_(dim) {
  if (dim <= 0) throw config_error("HistoryBuffer: dim must be > 0");
  if (dt <= 0.0) throw config_error("HistoryBuffer: dt must be > 0");
  if (tau_max < 0.0) throw config_error("HistoryBuffer: tau_max must be >= 0");
  dt_ = dt;
  cap_ = static_cast<int>(std::ceil(tau_max / dt)) + 3;
  y_.assign(cap_, Eigen::VectorXcd());
  dyl_.assign(cap_, Eigen::VectorXcd());
  dyr_.assign(cap_, Eigen::VectorXcd());
}

void HistoryBuffer::push(double t, const Eigen::VectorXcd& y,
                         const Eigen::VectorXcd& dy) {
  push(t, y, dy, dy);
}

void HistoryBuffer::push(double t, const Eigen::VectorXcd& y,
                         const Eigen::VectorXcd& dy_left,
                         const Eigen::VectorXcd& dy_right) {
  if (y.size() != dim_ || dy_left.size() != dim_ ||
      dy_right.size() != dim_) {
    throw dimension_error("HistoryBuffer::push: vector length mismatch");
  }
  if (!have_first_) {
    t_first_ = t;
    have_first_ = true;
  } else {
    const double expected = t_first_ + count_ * dt_;
    if (std::abs(t - expected) > 1e-9 * (1.0 + std::abs(expected))) {
      throw qfb_error("HistoryBuffer::push: timestamps must advance by dt");
    }
  }
  const int slot = static_cast<int>(count_ % cap_);
  y_[slot] = y;
  dyl_[slot] = dy_left;
  dyr_[slot] = dy_right;
  ++count_;
}

void HistoryBuffer::check_retained(long node) const {
  if (node < 0 || node >= count_) {
    throw qfb_error("HistoryBuffer: node " + std::to_string(node) +
                    " was never pushed");
  }
  if (node < count_ - cap_) {
    throw qfb_error("HistoryBuffer: insufficient history span (node " +
                    std::to_string(node) + " evicted)");
  }
}

const Eigen::VectorXcd& HistoryBuffer::slot_y(long node) const {
  return y_[static_cast<int>(node % cap_)];
}

const Eigen::VectorXcd& HistoryBuffer::slot_dy_left(long node) const {
  return dyl_[static_cast<int>(node % cap_)];
}

const Eigen::VectorXcd& HistoryBuffer::slot_dy_right(long node) const {
  return dyr_[static_cast<int>(node % cap_)];
}

const Eigen::VectorXcd& HistoryBuffer::node_value(long node) const {
  check_retained(node);
  return slot_y(node);
}

const Eigen::VectorXcd& HistoryBuffer::node_deriv(long node) const {
  check_retained(node);
  return slot_dy_right(node);
}

Eigen::VectorXcd HistoryBuffer::midpoint_value(long node) const {
  check_retained(node);
  check_retained(node + 1);
  // Cubic Hermite at the interval midpoint.
  return 0.5 * (slot_y(node) + slot_y(node + 1)) +
         0.125 * dt_ * (slot_dy_right(node) - slot_dy_left(node + 1));
}

Eigen::VectorXcd HistoryBuffer::eval(double t_query) const {
  if (count_ == 0) throw qfb_error("HistoryBuffer::eval: buffer empty");
  if (t_query <= t_first_) {
    // Pre-history: the state before the run start is frozen at its initial
    // values; delayed terms are gated off there anyway.
    check_retained(0);
    return slot_y(0);
  }
  const double x = (t_query - t_first_) / dt_;
  long i = static_cast<long>(std::floor(x));
  double theta = x - i;
  if (i >= count_ - 1) {
    // Clamp queries at (or within rounding of) the newest node.
    if (x > (count_ - 1) + 1e-9) {
      throw qfb_error("HistoryBuffer::eval: query beyond newest node");
    }
    check_retained(count_ - 1);
    return slot_y(count_ - 1);
  }
  check_retained(i);
  const Eigen::VectorXcd& y0 = slot_y(i);
  const Eigen::VectorXcd& y1 = slot_y(i + 1);
  const Eigen::VectorXcd& d0 = slot_dy_right(i);
  const Eigen::VectorXcd& d1 = slot_dy_left(i + 1);
  const double t2 = theta * theta;
  const double t3 = t2 * theta;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + theta;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * y0 + h10 * dt_ * d0 + h01 * y1 + h11 * dt_ * d1;
}

}  // namespace qfb
