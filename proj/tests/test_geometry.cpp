// Copyright (c) opmm contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include <random>

#include "opmm/geometry.hpp"
#include "test_support.hpp"

using namespace opmm;
using namespace opmm::test;
using Set = SimpleSet<double>;
using Metric = WeightedMetric<double>;

namespace {

std::vector<Set> sample_sets() {
  return {Set::box(vec({-1, -2, 0}), vec({1, 0.5, 3})),
          Set::ball(vec({0.5, -0.5, 1}), 1.5), Set::simplex(3)};
}

// Brute-force nearest point of the 2-simplex on a grid of pitch 1/n.
Vec simplex_grid_projection(const Vec& x, int n) {
  Vec best;
  double best_d = 1e300;
  for (int i = 0; i <= n; ++i) {
    const Vec z = vec({double(i) / n, 1.0 - double(i) / n});
    const double d = (z - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = z;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("projection onto a box clamps each coordinate", "[geometry]") {
  const auto box = Set::box(vec({-1, -1}), vec({1, 1}));
  CHECK(project(box, vec({2, -0.5})).isApprox(vec({1, -0.5})));
}

TEST_CASE("projection fixes interior ball points", "[geometry]") {
  const auto ball = Set::ball(vec({0, 0}), 1.0);
  CHECK(project(ball, vec({0, 0})) == vec({0, 0}));
  CHECK(project(ball, vec({3, 4})).isApprox(vec({0.6, 0.8})));
}

TEST_CASE("simplex projection matches a grid search", "[geometry]") {
  const auto simplex = Set::simplex(2);
  CHECK(project(simplex, vec({2, 0})).isApprox(vec({1, 0})));
  std::mt19937_64 rng(11);
  for (int k = 0; k < 50; ++k) {
    const Vec x = uniform_vec(rng, 2, -2, 3);
    const Vec grid = simplex_grid_projection(x, 20000);
    CHECK((project(simplex, x) - grid).norm() <= 1e-4);
  }
}

TEST_CASE("projection rejects wrong dimensions", "[geometry]") {
  const auto box = Set::box(vec({0, 0}), vec({1, 1}));
  CHECK_THROWS_AS(project(box, vec({1, 2, 3})), DimensionMismatch);
}

TEST_CASE("weighted projection examples", "[geometry]") {
  const auto unit = Set::box(vec({0}), vec({1}));
  CHECK(weighted_project(unit, Metric::scalar_identity(3), vec({2})) == vec({1}));
  const auto box = Set::box(vec({-1, -1}), vec({1, 1}));
  CHECK(weighted_project(box, Metric::diagonal(vec({1, 4})), vec({2, 2})) ==
        vec({1, 1}));
  const auto simplex = Set::simplex(2);
  CHECK(weighted_project(simplex, Metric::scalar_identity(1), vec({0.5, 0.5}))
            .isApprox(vec({0.5, 0.5})));
  CHECK_THROWS_AS(weighted_project(simplex, Metric::diagonal(vec({1, 2})),
                                   vec({0.5, 0.5})),
                  UnsupportedMetricSetPair);
  CHECK_THROWS_AS(Metric::diagonal(vec({1, 0})), InvalidArgument);
  CHECK_THROWS_AS(Metric::scalar_identity(-1), InvalidArgument);
}

TEST_CASE("scalar metric projection equals plain projection", "[geometry]") {
  std::mt19937_64 rng(5);
  for (const auto& set : sample_sets()) {
    for (int k = 0; k < 100; ++k) {
      const Vec x = uniform_vec(rng, 3, -4, 4);
      CHECK(weighted_project(set, Metric::scalar_identity(2.5), x) == project(set, x));
    }
  }
}

TEST_CASE("weighted squared distance examples", "[geometry]") {
  const auto unit = Set::box(vec({0}), vec({1}));
  auto r1 = weighted_dist_sq(unit, Metric::scalar_identity(1), vec({2}));
  CHECK(r1.value == Approx(0.5));
  CHECK(r1.gradient(0) == Approx(1));
  auto r2 = weighted_dist_sq(unit, Metric::scalar_identity(2), vec({2}));
  CHECK(r2.value == Approx(1));
  CHECK(r2.gradient(0) == Approx(2));
  for (const auto& set : sample_sets()) {
    std::mt19937_64 rng(3);
    const Vec x = set.sample(rng);
    auto r = weighted_dist_sq(set, Metric::scalar_identity(1), x);
    CHECK(r.value == 0.0);
    CHECK(r.gradient.norm() == 0.0);
  }
}

TEST_CASE("projection properties", "[geometry][property]") {
  std::mt19937_64 rng(2024);
  for (const auto& set : sample_sets()) {
    for (int k = 0; k < 200; ++k) {
      const Vec x = uniform_vec(rng, 3, -5, 5);
      const Vec y = uniform_vec(rng, 3, -5, 5);
      const Vec px = project(set, x);
      const Vec py = project(set, y);
      REQUIRE(set.contains(px));
      CHECK((project(set, px) - px).norm() <= 1e-12);
      CHECK((px - py).norm() <= (x - y).norm() + 1e-12);
      for (int j = 0; j < 5; ++j) {
        const Vec z = set.sample(rng);
        CHECK((x - px).dot(z - px) <= 1e-9);
      }
    }
  }
}

TEST_CASE("weighted distance gradient matches finite differences",
          "[geometry][property]") {
  std::mt19937_64 rng(77);
  const auto box = Set::box(vec({-1, -2, 0}), vec({1, 0.5, 3}));
  const std::vector<Metric> metrics{Metric::scalar_identity(1.7),
                                    Metric::diagonal(vec({0.5, 2, 3}))};
  for (const auto& set : sample_sets()) {
    for (int k = 0; k < 100; ++k) {
      Vec x = uniform_vec(rng, 3, -5, 5);
      if (set.contains(x, 1e-3)) continue;
      for (const auto& metric : metrics) {
        if (metric.form() == Metric::Form::Diagonal && set.kind() != Set::Kind::Box) {
          continue;
        }
        auto f = [&](const Vec& z) { return weighted_dist_sq(set, metric, z).value; };
        const Vec fd = central_difference(f, x, 1e-6);
        CHECK(relative_error(weighted_dist_sq(set, metric, x).gradient, fd) <= 1e-6);
      }
    }
  }
  (void)box;
}

TEST_CASE("normal cone violation examples", "[geometry]") {
  const auto unit = Set::box(vec({0}), vec({1}));
  CHECK(normal_cone_violation(unit, vec({0.3}), vec({0})) == 0.0);
  CHECK(normal_cone_violation(unit, vec({1}), vec({1})) <= 0.0);
  CHECK(normal_cone_violation(unit, vec({0.5}), vec({1})) == Approx(0.5));
  CHECK_THROWS_AS(normal_cone_violation(unit, vec({1.5}), vec({1})), InfeasiblePoint);
}

TEST_CASE("normal cone violation at faces and vertices", "[geometry]") {
  const auto box = Set::box(vec({-1, -1}), vec({1, 1}));
  CHECK(normal_cone_violation(box, vec({1, 1}), vec({2, 3})) <= 0.0);
  CHECK(normal_cone_violation(box, vec({1, 0}), vec({2, 0})) <= 0.0);
  CHECK(normal_cone_violation(box, vec({1, 0}), vec({2, 1})) == Approx(1.0));
  const auto ball = Set::ball(vec({0, 0}), 1.0);
  CHECK(normal_cone_violation(ball, vec({0.6, 0.8}), vec({0.6, 0.8})) <= 1e-15);
  const auto simplex = Set::simplex(3);
  CHECK(normal_cone_violation(simplex, vec({1, 0, 0}), vec({1, 0, 0})) <= 0.0);
  CHECK(normal_cone_violation(simplex, vec({1, 0, 0}), vec({1, 1, 1})) ==
        Approx(0.0).margin(1e-15));
}

TEST_CASE("set geometry", "[geometry]") {
  CHECK(Set::box(vec({0, 0}), vec({3, 4})).diameter() == Approx(5));
  CHECK(Set::ball(vec({1, 1}), 2).diameter() == Approx(4));
  CHECK(Set::simplex(4).diameter() == Approx(std::sqrt(2.0)));
  CHECK(Set::box(vec({0, 0}), vec({1, 1})).vertices().size() == 4);
  CHECK_THROWS_AS(Set::box(vec({1}), vec({0})), InvalidArgument);
  CHECK_THROWS_AS(Set::ball(vec({0}), -1), InvalidArgument);
  CHECK_THROWS_AS(Set::simplex(0), InvalidArgument);
  std::mt19937_64 rng(9);
  for (const auto& set : sample_sets()) {
    for (int k = 0; k < 100; ++k) CHECK(set.contains(set.sample(rng)));
  }
}
