// Copyright 2026 The dpsco Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpsco/geometry.hpp"

#include <cmath>

#include "catch2/catch_amalgamated.hpp"
#include "dpsco/rng.hpp"
#include "../support/oracles.hpp"

using namespace dpsco;
using Catch::Approx;

TEST_CASE("dual exponent", "[geometry]") {
  CHECK(dual_exponent(2.0) == Approx(2.0));
  CHECK(dual_exponent(4.0 / 3.0) == Approx(4.0));
  // q = p/(p-1) at p = 1 + 1/ln 16, evaluated by hand: 1 + ln 16.
  CHECK(dual_exponent(1.0 + 1.0 / std::log(16.0)) == Approx(3.7725887222397812).epsilon(1e-14));
  CHECK_THROWS_AS(dual_exponent(1.0), std::domain_error);
  CHECK_THROWS_AS(dual_exponent(0.5), std::domain_error);

  SECTION("involution") {
    for (double p : {1.1, 1.2, 1.5, 1.75, 2.0}) {
      CHECK(dual_exponent(dual_exponent(p)) == Approx(p).margin(1e-12));
      CHECK(1.0 / p + 1.0 / dual_exponent(p) == Approx(1.0).margin(1e-12));
    }
  }
}

TEST_CASE("lp norm", "[geometry]") {
  const Vec a = {3, 4};
  CHECK(lp_norm(a, 2.0) == Approx(5.0));
  const Vec b = {1, -1};
  CHECK(lp_norm(b, 1.0) == Approx(2.0));
  const Vec ones = {1, 1, 1, 1};
  // 4^{1/p} at p = 1 + 1/ln 4, from a high-precision side computation.
  CHECK(lp_norm(ones, 1.0 + 1.0 / std::log(4.0)) ==
        Approx(2.2374887546875913685).epsilon(1e-14));
  CHECK(lp_norm(b, kInfinity) == Approx(1.0));
  CHECK_THROWS_AS(lp_norm(a, 0.5), std::domain_error);
}

TEST_CASE("bregman divergence matches the definition", "[geometry]") {
  SECTION("quadratic case reduces to squared euclidean distance") {
    LpGeometry geom(2.0);
    const Vec x = {1, 0}, y = {0, 0};
    CHECK(bregman_divergence(geom, x, y) == Approx(1.0));
  }
  SECTION("identity of indiscernibles") {
    LpGeometry geom(1.5, {0.3, -0.2});
    const Vec x = {0.7, 0.1};
    CHECK(bregman_divergence(geom, x, x) == 0.0);
  }
  SECTION("p = 1.5 frozen value") {
    LpGeometry geom(1.5);
    const Vec x = {1, 0}, y = {0, 1};
    // Direct evaluation of the definition: 4.0 exactly.
    CHECK(bregman_divergence(geom, x, y) == Approx(4.0).epsilon(1e-12));
  }
  SECTION("non-finite input") {
    LpGeometry geom(2.0);
    const Vec x = {std::nan(""), 0}, y = {0, 0};
    CHECK_THROWS_AS(bregman_divergence(geom, x, y), std::domain_error);
  }

  SECTION("nonnegativity and agreement with the finite-difference oracle") {
    for (double p : {1.1, 1.5, 2.0}) {
      CounterRng rng(41, static_cast<std::uint64_t>(p * 100));
      const Vec center = {0.1, -0.3, 0.2};
      LpGeometry geom(p, center);
      for (int trial = 0; trial < 1000; ++trial) {
        Vec x(3), y(3);
        for (int j = 0; j < 3; ++j) {
          x[j] = 2.0 * rng.uniform01() - 1.0;
          y[j] = 2.0 * rng.uniform01() - 1.0;
        }
        const double db = bregman_divergence(geom, x, y);
        CHECK(db >= -1e-12);
        if (trial < 50) {
          const double oracle = testing::bregman_direct(x, y, center, p);
          CHECK(db == Approx(oracle).margin(5e-5));
        }
      }
    }
  }

  SECTION("strong convexity in the p-norm") {
    for (double p : {1.1, 1.5, 2.0}) {
      CounterRng rng(43, static_cast<std::uint64_t>(p * 100));
      LpGeometry geom(p);
      for (int trial = 0; trial < 200; ++trial) {
        Vec x(4), y(4), diff(4);
        for (int j = 0; j < 4; ++j) {
          x[j] = 2.0 * rng.uniform01() - 1.0;
          y[j] = 2.0 * rng.uniform01() - 1.0;
          diff[j] = x[j] - y[j];
        }
        const double gap = lp_norm(diff, p);
        CHECK(bregman_divergence(geom, x, y) >= 0.5 * gap * gap - 1e-10);
      }
    }
  }
}

TEST_CASE("inverse link inverts the mirror map", "[geometry]") {
  CounterRng rng(47);
  for (double p : {1.2, 1.5, 1.8, 2.0}) {
    LpGeometry geom(p, {0.2, -0.1, 0.0});
    for (int trial = 0; trial < 200; ++trial) {
      Vec x(3), theta(3), back(3);
      for (int j = 0; j < 3; ++j) x[j] = 2.0 * rng.uniform01() - 1.0;
      geom.grad_potential(x, theta);
      geom.inverse_link(theta, back);
      for (int j = 0; j < 3; ++j) CHECK(back[j] == Approx(x[j]).margin(1e-9));
    }
  }
}

TEST_CASE("constraint sets", "[geometry]") {
  SECTION("l1 ball vertices") {
    auto ball = ConstraintSet::l1_ball(3, 2.0);
    CHECK(ball.vertex_count() == 6);
    Vec v(3);
    for (int i = 0; i < 6; ++i) {
      ball.vertex(i, v);
      CHECK(ball.contains(v));
      CHECK(l1_norm(v) == Approx(2.0));
      Vec probe = {0.3, -1.1, 0.7};
      CHECK(ball.vertex_dot(i, probe) == Approx(dot(v, probe)));
    }
  }
  SECTION("simplex vertices") {
    auto simplex = ConstraintSet::simplex(4);
    CHECK(simplex.vertex_count() == 4);
    Vec v(4);
    for (int i = 0; i < 4; ++i) {
      simplex.vertex(i, v);
      CHECK(simplex.contains(v));
    }
  }
  SECTION("intersection membership") {
    auto both = ConstraintSet::intersection(
        {ConstraintSet::l1_ball(2, 1.0), ConstraintSet::lp_ball(2, 2.0, 0.5, {0.5, 0.0})});
    const Vec inside = {0.4, 0.0};
    const Vec only_l1 = {-0.5, 0.0};
    CHECK(both.contains(inside));
    CHECK_FALSE(both.contains(only_l1));
  }
  SECTION("invalid radius") {
    CHECK_THROWS_AS(ConstraintSet::l1_ball(2, 0.0), std::domain_error);
  }
}

namespace {

double prox_objective(const LpGeometry& geom, std::span<const double> g,
                      std::span<const double> x_k, double eta, std::span<const double> x) {
  return dot(g, x) + bregman_divergence(geom, x, x_k) / eta;
}

}  // namespace

TEST_CASE("mirror step closed forms", "[geometry]") {
  SECTION("euclidean case") {
    LpGeometry geom(2.0);
    auto ball = ConstraintSet::l1_ball(2, 1e6);
    const Vec x_k = {0, 0}, g = {1, 0};
    const Vec got = mirror_step(geom, ball, x_k, g, 1.0);
    CHECK(got[0] == Approx(-0.5));
    CHECK(got[1] == Approx(0.0).margin(1e-15));
  }
  SECTION("zero gradient is a fixed point") {
    LpGeometry geom(1.5);
    auto ball = ConstraintSet::l1_ball(2, 1.0);
    const Vec x_k = {0.2, -0.1}, g = {0, 0};
    const Vec got = mirror_step(geom, ball, x_k, g, 0.7);
    CHECK(got[0] == Approx(0.2).margin(1e-10));
    CHECK(got[1] == Approx(-0.1).margin(1e-10));
  }
  SECTION("infeasible start") {
    LpGeometry geom(2.0);
    auto ball = ConstraintSet::l1_ball(2, 1.0);
    const Vec x_k = {2, 0}, g = {1, 0};
    CHECK_THROWS_AS(mirror_step(geom, ball, x_k, g, 1.0), std::invalid_argument);
  }
  SECTION("simplex is rejected") {
    LpGeometry geom(2.0);
    auto simplex = ConstraintSet::simplex(2);
    const Vec x_k = {0.5, 0.5}, g = {1, 0};
    CHECK_THROWS_AS(mirror_step(geom, simplex, x_k, g, 1.0), std::domain_error);
  }
}

TEST_CASE("mirror step matches the grid oracle", "[geometry]") {
  // p = 1.5, unit l1 ball, x_k = 0, g = (-3, 1), eta = 1: the derived example,
  // checked against a dense grid with refinement.
  LpGeometry geom(1.5);
  auto ball = ConstraintSet::l1_ball(2, 1.0);
  const Vec x_k = {0, 0}, g = {-3, 1};
  const Vec got = mirror_step(geom, ball, x_k, g, 1.0);
  REQUIRE(ball.contains(got, 1e-8));
  auto oracle = testing::grid_minimize(
      [&](std::span<const double> x) { return prox_objective(geom, g, x_k, 1.0, x); },
      [&](std::span<const double> x) { return ball.contains(x, 0.0); },
      2, 1.0, 81, 4);
  CHECK(prox_objective(geom, g, x_k, 1.0, got) <= oracle.value + 1e-4);

  SECTION("random small instances, all constraint kinds") {
    CounterRng rng(321);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const int d = 2 + static_cast<int>(rng.uniform_index(2));
      const double p = std::vector<double>{1.2, 1.5, 2.0}[rng.uniform_index(3)];
      Vec center(d);
      for (auto& c : center) c = 0.4 * (2.0 * rng.uniform01() - 1.0);
      LpGeometry geo(p, center);
      const int kind = static_cast<int>(rng.uniform_index(3));
      ConstraintSet cons = kind == 0 ? ConstraintSet::l1_ball(d, 1.0)
                           : kind == 1
                               ? ConstraintSet::lp_ball(d, p, 0.8, center)
                               : ConstraintSet::intersection(
                                     {ConstraintSet::lp_ball(d, p, 0.8, center),
                                      ConstraintSet::l1_ball(d, 1.0)});
      Vec gv(d), xk(d, 0.0);
      for (auto& v : gv) v = 4.0 * (2.0 * rng.uniform01() - 1.0);
      if (!cons.contains(xk, 1e-9)) continue;
      const double eta = 0.2 + rng.uniform01();
      const Vec got = mirror_step(geo, cons, xk, gv, eta);
      REQUIRE(cons.contains(got, 1e-7));
      auto orc = testing::grid_minimize(
          [&](std::span<const double> x) { return prox_objective(geo, gv, xk, eta, x); },
          [&](std::span<const double> x) { return cons.contains(x, 0.0); },
          d, 1.0, d == 2 ? 61 : 31, 4);
      CHECK(prox_objective(geo, gv, xk, eta, got) <= orc.value + 1e-4);
      ++checked;
    }
    CHECK(checked >= 150);
  }
}

TEST_CASE("entropic step", "[geometry]") {
  SECTION("zero gradient") {
    const Vec x = {0.5, 0.5}, g = {0, 0};
    const Vec got = entropic_md_step(x, g, 1.0);
    CHECK(got[0] == Approx(0.5));
    CHECK(got[1] == Approx(0.5));
  }
  SECTION("frozen multiplicative-weights value") {
    const Vec x = {0.5, 0.5}, g = {-std::log(2.0), 0.0};
    const Vec got = entropic_md_step(x, g, 1.0);
    CHECK(got[0] == Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(got[1] == Approx(1.0 / 3.0).epsilon(1e-14));
  }
  SECTION("vertices absorb") {
    const Vec x = {1.0, 0.0}, g = {5.0, -7.0};
    const Vec got = entropic_md_step(x, g, 1.0);
    CHECK(got[0] == Approx(1.0));
    CHECK(got[1] == 0.0);
  }
}
