#pragma once

#include <Eigen/Dense>
#include <vector>

namespace qfb {

// Ring buffer of (t, value, derivative) nodes on a fixed step grid, retaining
// at least the trailing delay horizon so delayed reads never extrapolate.
// Dense output between nodes is cubic Hermite.  Queries earlier than the
// first stored node return the pre-history (the t = 0 values), matching the
// convention that every delayed term is gated off before one round trip.
class HistoryBuffer {
 public:
  // dim: vector length per node; dt: node spacing; tau_max: delay horizon.
  HistoryBuffer(int dim, double dt, double tau_max);

  // Appends the node at t = t_first + n*dt; timestamps must arrive in strict
  // step order (throws qfb_error otherwise).
  void push(double t, const Eigen::VectorXcd& y, const Eigen::VectorXcd& dy);

  // Node where the stored trajectory has a one-sided derivative jump (the
  // feedback gate opening): the segment ending here interpolates with
  // dy_left, the segment starting here with dy_right.  A single derivative
  // per node cannot represent the jump without degrading the dense output
  // by two orders.
  void push(double t, const Eigen::VectorXcd& y,
            const Eigen::VectorXcd& dy_left, const Eigen::VectorXcd& dy_right);

  long nodes_pushed() const { return count_; }
  int dim() const { return dim_; }
  double dt() const { return dt_; }

  // Exact node access (no interpolation); node indices count from 0 at the
  // first push.  Throws qfb_error when the node has left the retained window.
  // node_deriv returns the right-sided derivative (they coincide except at a
  // jump node).
  const Eigen::VectorXcd& node_value(long node) const;
  const Eigen::VectorXcd& node_deriv(long node) const;

  // Cubic Hermite value halfway between node and node+1.
  Eigen::VectorXcd midpoint_value(long node) const;

  // General dense-output query at an arbitrary time.
  Eigen::VectorXcd eval(double t_query) const;

 private:
  const Eigen::VectorXcd& slot_y(long node) const;
  const Eigen::VectorXcd& slot_dy_left(long node) const;
  const Eigen::VectorXcd& slot_dy_right(long node) const;
  void check_retained(long node) const;

  int dim_;
  double dt_;
  int cap_;
  long count_ = 0;  // nodes pushed so far
  double t_first_ = 0.0;
  bool have_first_ = false;
  std::vector<Eigen::VectorXcd> y_;
  std::vector<Eigen::VectorXcd> dyl_;
  std::vector<Eigen::VectorXcd> dyr_;
};

}  // namespace qfb
