#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "prstl/polytope.hpp"
#include "prstl/rng.hpp"

using namespace prstl;

// Halfspaces are h·x + c ≤ 0 throughout.

namespace {

Polytope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Polytope p;
  const int d = static_cast<int>(lo.size());
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(d);
    h(i) = 1.0;
    p.halfspaces.push_back({h, -hi(i)}); // x_i <= hi
    p.halfspaces.push_back({-h, lo(i)}); // x_i >= lo
  }
  return p;
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

// Inscribed-ball radius at x; the objective chebyshev_center maximizes.
double ball_radius(const Polytope& p, const Eigen::VectorXd& x) {
  double r = std::numeric_limits<double>::infinity();
  for (const Halfspace& hs : p.halfspaces)
    r = std::min(r, (-hs.c - hs.h.dot(x)) / hs.h.norm());
  return r;
}

} // namespace

TEST_CASE("contains and intersect") {
  const Polytope p = box(vec2(-1, -1), vec2(1, 1));
  CHECK(p.dim() == 2);
  CHECK(p.contains(vec2(0, 0)));
  CHECK(p.contains(vec2(1, 1)));
  CHECK(p.contains(vec2(1 + 1e-10, 0)));   // inside default tol
  CHECK(!p.contains(vec2(1 + 1e-6, 0)));
  CHECK(p.contains(vec2(1.5, 0), 0.5));
  Eigen::VectorXd bad(3);
  bad.setZero();
  CHECK_THROWS_AS((void)p.contains(bad), std::invalid_argument);

  const Polytope q = box(vec2(0, 0), vec2(2, 2));
  const Polytope both = p.intersect(q);
  CHECK(both.halfspaces.size() == 8);
  CHECK(both.contains(vec2(0.5, 0.5)));
  CHECK(!both.contains(vec2(-0.5, 0.5)));
  CHECK(!both.contains(vec2(1.5, 0.5)));
}

TEST_CASE("chebyshev_center on boxes") {
  {
    const auto [center, radius] = chebyshev_center(box(vec2(-1, -1), vec2(1, 1)), 2);
    CHECK(center.norm() < 1e-9);
    CHECK(radius == doctest::Approx(1.0).epsilon(1e-9));
  }
  {
    Eigen::VectorXd lo(1), hi(1);
    lo << -1.0;
    hi << 3.0;
    const auto [center, radius] = chebyshev_center(box(lo, hi), 1);
    CHECK(center(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(radius == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("chebyshev_center matches a zooming grid search") {
  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    Polytope p = box(vec2(-2, -2), vec2(2, 2));
    const int extras = rng.uniform_int(1, 4);
    for (int e = 0; e < extras; ++e) {
      Eigen::VectorXd h(2);
      h << rng.normal(), rng.normal();
      if (h.norm() < 1e-3) h << 1.0, 0.0;
      h.normalize();
      // keep the origin inside with slack so the polytope stays fat
      p.halfspaces.push_back({h, -rng.uniform(0.3, 1.5)});
    }
    const auto [center, radius] = chebyshev_center(p, 2);
    CHECK(ball_radius(p, center) == doctest::Approx(radius).epsilon(1e-7));

    // The radius is concave in x, so a shrinking grid converges.
    Eigen::VectorXd best = vec2(0, 0);
    double span = 4.0, best_r = ball_radius(p, best);
    for (int stage = 0; stage < 9; ++stage) {
      const Eigen::VectorXd base = best;
      for (int i = -16; i <= 16; ++i)
        for (int j = -16; j <= 16; ++j) {
          const Eigen::VectorXd x =
              base + vec2(i * span / 32.0, j * span / 32.0);
          const double r = ball_radius(p, x);
          if (r > best_r) {
            best_r = r;
            best = x;
          }
        }
      span *= 0.3;
    }
    CHECK(std::fabs(best_r - radius) < 1e-4);
  }
}

TEST_CASE("chebyshev_center degenerate inputs") {
  {
    // x <= -1 and x >= 0
    Polytope p;
    Eigen::VectorXd h(1);
    h << 1.0;
    p.halfspaces.push_back({h, 1.0});
    p.halfspaces.push_back({-h, 0.0});
    CHECK_THROWS_AS((void)chebyshev_center(p, 1), std::runtime_error);
  }
  {
    Polytope p;
    Eigen::VectorXd h(1);
    h << 1.0;
    p.halfspaces.push_back({h, -1.0}); // half-line: ball radius unbounded
    CHECK_THROWS_AS((void)chebyshev_center(p, 1), std::runtime_error);
  }
}

TEST_CASE("axis_aligned_box") {
  {
    const auto [lo, hi] = axis_aligned_box(box(vec2(-1, -2), vec2(3, 2)), 2);
    CHECK(lo(0) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(lo(1) == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(hi(0) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(hi(1) == doctest::Approx(2.0).epsilon(1e-9));
  }
  {
    // diamond |x| + |y| <= 1
    Polytope p;
    p.halfspaces.push_back({vec2(1, 1), -1.0});
    p.halfspaces.push_back({vec2(1, -1), -1.0});
    p.halfspaces.push_back({vec2(-1, 1), -1.0});
    p.halfspaces.push_back({vec2(-1, -1), -1.0});
    const auto [lo, hi] = axis_aligned_box(p, 2);
    CHECK(lo(0) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(hi(1) == doctest::Approx(1.0).epsilon(1e-9));
  }
  {
    Polytope p;
    Eigen::VectorXd h(1);
    h << 1.0;
    p.halfspaces.push_back({h, -1.0});
    CHECK_THROWS_AS((void)axis_aligned_box(p, 1), std::runtime_error);
  }
}

TEST_CASE("uniform_sample") {
  const Polytope bounds = box(vec2(-1, -1), vec2(1, 1));
  {
    // triangle x + y <= 0 inside the box
    Polytope p = bounds;
    p.halfspaces.push_back({vec2(1, 1), 0.0});
    Rng a(9), b(9);
    for (int i = 0; i < 200; ++i) {
      const Eigen::VectorXd x = uniform_sample(p, bounds, a);
      CHECK(p.contains(x));
      CHECK(x == uniform_sample(p, bounds, b));
    }
  }
  {
    const Polytope far_away = box(vec2(10, 10), vec2(11, 11));
    Rng rng(1);
    CHECK_THROWS_AS((void)uniform_sample(far_away, bounds, rng),
                    std::runtime_error);
  }
}
