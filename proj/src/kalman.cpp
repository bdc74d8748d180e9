#include "prstl/kalman.hpp"

#include <stdexcept>

namespace prstl {

namespace {

void check_input(const Eigen::VectorXd& u, const SwitchedSystem& sys) {
  if (!sys.input_polytope.contains(u, 1e-9))
    throw std::invalid_argument("kalman: input outside input polytope");
}

// Covariance half of the Kalman update; shared by kf_step and mlo_step. The
// noise matrix V is evaluated per sys.noise_at.
struct CovUpdate {
  Eigen::MatrixXd sigma_prior, innovation_cov, gain, posterior;
};

CovUpdate cov_update(const GaussianBelief& b, const Mode& md,
                     const Eigen::VectorXd& u, const SwitchedSystem& sys) {
  CovUpdate out;
  out.sigma_prior =
      psd_repair(md.A * b.cov * md.A.transpose() + md.W * md.W.transpose());
  Eigen::VectorXd noise_point =
      sys.noise_at == NoiseAt::Predicted ? (md.A * b.mean + md.B * u).eval()
                                         : b.mean;
  Eigen::MatrixXd V = noise_matrix(md, noise_point);
  Eigen::MatrixXd S =
      md.C * out.sigma_prior * md.C.transpose() + V * V.transpose();
  S = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  double lmax = es.eigenvalues().maxCoeff();
  double lmin = es.eigenvalues().minCoeff();
  if (lmin <= 0.0 || lmax / lmin > 1e12)
    throw std::runtime_error("kalman: singular innovation covariance");
  out.innovation_cov = S;
  out.gain = out.sigma_prior * md.C.transpose() * S.inverse();
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(sys.n, sys.n);
  out.posterior = psd_repair((I - out.gain * md.C) * out.sigma_prior);
  return out;
}

} // namespace

std::pair<GaussianBelief, KalmanIntermediates> kf_step(
    const GaussianBelief& b, int q, const Eigen::VectorXd& u,
    const Eigen::VectorXd& y, const SwitchedSystem& sys) {
  check_input(u, sys);
  const Mode& md = sys.mode(q);
  CovUpdate cu = cov_update(b, md, u, sys);
  Eigen::VectorXd predicted = md.A * b.mean + md.B * u;
  Eigen::VectorXd mean = predicted + cu.gain * (y - md.C * predicted);
  GaussianBelief out(mean, cu.posterior);
  return {out, KalmanIntermediates{cu.sigma_prior, cu.innovation_cov, cu.gain}};
}

GaussianBelief mlo_step(const GaussianBelief& b, int q, const Eigen::VectorXd& u,
                        const SwitchedSystem& sys) {
  check_input(u, sys);
  const Mode& md = sys.mode(q);
  CovUpdate cu = cov_update(b, md, u, sys);
  return GaussianBelief(md.A * b.mean + md.B * u, cu.posterior);
}

GaussianBelief open_loop_cov(const GaussianBelief& b, int q,
                             const Eigen::VectorXd& u,
                             const SwitchedSystem& sys) {
  const Mode& md = sys.mode(q);
  return GaussianBelief(md.A * b.mean + md.B * u,
                        md.A * b.cov * md.A.transpose() +
                            md.W * md.W.transpose());
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> simulate_step(
    const Eigen::VectorXd& x, int q, const Eigen::VectorXd& u,
    const SwitchedSystem& sys, Rng& rng) {
  check_input(u, sys);
  const Mode& md = sys.mode(q);
  Eigen::VectorXd w(sys.n);
  for (int i = 0; i < sys.n; ++i) w(i) = rng.normal();
  Eigen::VectorXd next = md.A * x + md.B * u + md.W * w;
  Eigen::VectorXd v(sys.p);
  for (int i = 0; i < sys.p; ++i) v(i) = rng.normal();
  Eigen::VectorXd y = md.C * next + noise_matrix(md, next) * v;
  return {next, y};
}

} // namespace prstl
