#include "qfb/entanglement.hpp"

#include <algorithm>
#include <cmath>

#include "qfb/errors.hpp"

namespace qfb {

SchmidtReport schmidt_decompose(const Eigen::MatrixXcd& c_gkk,
                                const ContinuousModeGrid& grid) {
  const Eigen::Index n = grid.n_k;
  if (grid.values.size() != n || grid.weights.size() != n) {
    throw dimension_error(
        "schmidt_decompose: grid arrays do not match n_k (build grids with "
        "ContinuousModeGrid::uniform)");
  }
  if (c_gkk.rows() != n || c_gkk.cols() != n) {
    throw dimension_error("schmidt_decompose: matrix does not match the grid");
  }
  if (c_gkk.cwiseAbs().maxCoeff() == 0.0) {
    throw config_error("schmidt_decompose: zero matrix has no Schmidt modes");
  }

  const Eigen::VectorXd root_w = grid.weights.cwiseSqrt();
  const Eigen::MatrixXcd weighted =
      root_w.asDiagonal() * c_gkk * root_w.asDiagonal();

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(weighted, Eigen::ComputeThinU);

  SchmidtReport rep;
  rep.sigma = svd.singularValues();
  const double total = rep.sigma.squaredNorm();
  rep.p = rep.sigma.array().square() / total;

  rep.entropy = 0.0;
  double sum_p2 = 0.0;
  for (Eigen::Index i = 0; i < rep.p.size(); ++i) {
    const double pi = rep.p(i);
    if (pi > 0.0) rep.entropy -= pi * std::log(pi);
    sum_p2 += pi * pi;
  }
  rep.schmidt_number = 1.0 / sum_p2;

  const double cutoff = 1e-10 * rep.sigma(0);
  rep.rank = 0;
  for (Eigen::Index i = 0; i < rep.sigma.size(); ++i) {
    if (rep.sigma(i) >= cutoff) ++rep.rank;
  }
  rep.u1 = svd.matrixU().col(0);
  return rep;
}

EntanglementTable entanglement_vs_kappa(const PhysicalParams& base,
                                        const std::vector<double>& kappa_list,
                                        const ContinuousModeGrid& grid,
                                        SteadyStateForm form) {
  EntanglementTable table;
  table.rows.reserve(kappa_list.size());
  for (double kap : kappa_list) {
    EntanglementRow row;
    row.kappa = kap;
    try {
      if (!(kap > 0.0)) {
        throw config_error("entanglement_vs_kappa: kappa must be positive");
      }
      const PhysicalParams p = with_kappa(base, kap);
      const Eigen::MatrixXcd m = steady_state_matrix(grid, p, form);
      const SchmidtReport rep = schmidt_decompose(m, grid);
      row.entropy = rep.entropy;
      row.schmidt_number = rep.schmidt_number;
      row.ok = true;
    } catch (const qfb_error& e) {
      row.ok = false;
      row.message = e.what();
    }
    table.rows.push_back(row);
  }

  std::vector<const EntanglementRow*> ok_rows;
  for (const auto& row : table.rows) {
    if (row.ok) ok_rows.push_back(&row);
  }
  std::sort(ok_rows.begin(), ok_rows.end(),
            [](const EntanglementRow* a, const EntanglementRow* b) {
              return a->kappa < b->kappa;
            });
  table.entropy_decreasing_in_kappa = true;
  for (std::size_t i = 1; i < ok_rows.size(); ++i) {
    if (ok_rows[i]->entropy > ok_rows[i - 1]->entropy) {
      table.entropy_decreasing_in_kappa = false;
    }
  }
  return table;
}

}  // namespace qfb
