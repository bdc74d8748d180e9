#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "prstl/lqr.hpp"

using namespace prstl;

namespace {

Eigen::MatrixXd scalar(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return m;
}

} // namespace

TEST_CASE("scalar Riccati recursion, short horizons by hand") {
  const Eigen::MatrixXd one = scalar(1.0);
  auto g1 = lqr_gains(one, one, one, one, 1);
  REQUIRE(g1.size() == 1);
  CHECK(g1[0](0, 0) == doctest::Approx(0.5).epsilon(1e-12));

  auto g2 = lqr_gains(one, one, one, one, 2);
  REQUIRE(g2.size() == 2);
  CHECK(g2[0](0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(g2[1](0, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("long horizons converge to the stationary gain") {
  const Eigen::MatrixXd one = scalar(1.0);
  auto g = lqr_gains(one, one, one, one, 60);
  REQUIRE(g.size() == 60);
  // stationary cost solves P = 1 + P/(1+P), the golden ratio; the gain
  // is its reciprocal
  const double k_inf = 2.0 / (1.0 + std::sqrt(5.0));
  CHECK(std::fabs(g[0](0, 0) - k_inf) < 1e-6);
  CHECK(g[59](0, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("no actuation means zero gains") {
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2) * 1.1;
  const Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2, 1);
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd R = scalar(2.0);
  auto g = lqr_gains(A, B, Q, R, 4);
  REQUIRE(g.size() == 4);
  for (const auto& K : g) {
    CHECK(K.rows() == 1);
    CHECK(K.cols() == 2);
    CHECK(K.norm() == 0.0);
  }
}

TEST_CASE("per-mode state costs fall back to the shared one") {
  LqrParams p;
  p.Q = Eigen::MatrixXd::Identity(2, 2);
  p.R = scalar(1.0);
  p.Q_by_mode[2] = 3.0 * Eigen::MatrixXd::Identity(2, 2);
  CHECK(p.q_for(2) == p.Q_by_mode.at(2));
  CHECK(p.q_for(1) == p.Q);
  CHECK(p.q_for(99) == p.Q);
}

TEST_CASE("argument validation") {
  const Eigen::MatrixXd one = scalar(1.0);
  CHECK_THROWS_AS((void)lqr_gains(one, one, one, one, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)lqr_gains(one, one, one, scalar(0.0), 1),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)lqr_gains(one, one, one, scalar(-1.0), 1),
                  std::invalid_argument);

  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  const Eigen::MatrixXd A2 = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd B2 = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS((void)lqr_gains(A2, B2, A2, indefinite, 1),
                  std::invalid_argument);

  const Eigen::MatrixXd B_bad = Eigen::MatrixXd::Zero(3, 1);
  CHECK_THROWS_AS((void)lqr_gains(A2, B_bad, A2, one, 1),
                  std::invalid_argument);
  const Eigen::MatrixXd Q_bad = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS((void)lqr_gains(A2, B2, Q_bad, one, 1),
                  std::invalid_argument);
  const Eigen::MatrixXd R_bad = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS((void)lqr_gains(A2, Eigen::MatrixXd::Zero(2, 1), A2, R_bad,
                                  1),
                  std::invalid_argument);
}
