#include "oracles/grid_bayes_oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace prstl::oracle {
namespace {

// Cell centers over center ± halfwidth, one row per point.
Eigen::MatrixXd make_grid(const Eigen::VectorXd& center,
                          const Eigen::VectorXd& halfwidth, int cells) {
  const int d = static_cast<int>(center.size());
  auto coord = [&](int axis, int i) {
    return center(axis) - halfwidth(axis) +
           2.0 * halfwidth(axis) * (i + 0.5) / cells;
  };
  if (d == 1) {
    Eigen::MatrixXd pts(cells, 1);
    for (int i = 0; i < cells; ++i) pts(i, 0) = coord(0, i);
    return pts;
  }
  Eigen::MatrixXd pts(static_cast<long>(cells) * cells, 2);
  long r = 0;
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j, ++r) {
      pts(r, 0) = coord(0, i);
      pts(r, 1) = coord(1, j);
    }
  return pts;
}

double quad_form(const Eigen::MatrixXd& P, double a, double b, int d) {
  if (d == 1) return P(0, 0) * a * a;
  return P(0, 0) * a * a + 2.0 * P(0, 1) * a * b + P(1, 1) * b * b;
}

} // namespace

GridMoments grid_bayes_step(const Eigen::VectorXd& mean0,
                            const Eigen::MatrixXd& cov0,
                            const Eigen::MatrixXd& F,
                            const Eigen::VectorXd& dvec,
                            const Eigen::MatrixXd& Qn,
                            const Eigen::MatrixXd& H, const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& Rn, int cells, double span) {
  const int d = static_cast<int>(mean0.size());
  if (d != 1 && d != 2)
    throw std::invalid_argument("grid_bayes_step: dimension must be 1 or 2");

  const Eigen::MatrixXd P0 = cov0.inverse();
  const Eigen::MatrixXd Qi = Qn.inverse();
  const Eigen::MatrixXd Ri = Rn.inverse();

  // Box sizing only; all probability mass below comes from the grid sums.
  const Eigen::VectorXd sd0 = cov0.diagonal().cwiseSqrt();
  const Eigen::MatrixXd pred_cov = F * cov0 * F.transpose() + Qn;
  const Eigen::VectorXd pred_center = F * mean0 + dvec;
  const Eigen::VectorXd sd1 = pred_cov.diagonal().cwiseSqrt();

  const Eigen::MatrixXd xs = make_grid(mean0, span * sd0, cells);
  const Eigen::MatrixXd zs = make_grid(pred_center, span * sd1, cells);
  const long Nx = xs.rows();
  const long Nz = zs.rows();

  std::vector<double> pw(Nx);
  Eigen::MatrixXd fx(Nx, d); // F x_i + dvec per prior point
  for (long i = 0; i < Nx; ++i) {
    Eigen::VectorXd xi = xs.row(i).transpose();
    Eigen::VectorXd dv = xi - mean0;
    pw[i] = std::exp(-0.5 * dv.dot(P0 * dv));
    fx.row(i) = (F * xi + dvec).transpose();
  }

  std::vector<double> w(Nz);
  for (long j = 0; j < Nz; ++j) {
    double acc = 0.0;
    const double z0 = zs(j, 0);
    const double z1 = d == 2 ? zs(j, 1) : 0.0;
    for (long i = 0; i < Nx; ++i) {
      const double a = z0 - fx(i, 0);
      const double b = d == 2 ? z1 - fx(i, 1) : 0.0;
      acc += pw[i] * std::exp(-0.5 * quad_form(Qi, a, b, d));
    }
    Eigen::VectorXd inn = y - H * zs.row(j).transpose();
    w[j] = acc * std::exp(-0.5 * inn.dot(Ri * inn));
  }

  double tot = 0.0;
  for (double v : w) tot += v;
  if (!(tot > 0.0))
    throw std::runtime_error("grid_bayes_step: no posterior mass on the grid");

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (long j = 0; j < Nz; ++j) mean += (w[j] / tot) * zs.row(j).transpose();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (long j = 0; j < Nz; ++j) {
    Eigen::VectorXd dv = zs.row(j).transpose() - mean;
    cov += (w[j] / tot) * dv * dv.transpose();
  }
  return {mean, cov};
}

} // namespace prstl::oracle
