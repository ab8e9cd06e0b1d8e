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

#include "dpsco/hard_instances.hpp"

#include <cmath>

#include "catch2/catch_amalgamated.hpp"
#include "../support/oracles.hpp"

using namespace dpsco;
using Catch::Approx;

namespace {

SignInstance manual_instance(std::vector<Vec> points, double D) {
  SignInstance inst;
  inst.D = D;
  inst.data.n = static_cast<std::int64_t>(points.size());
  inst.data.d = static_cast<int>(points.front().size());
  for (const auto& p : points)
    inst.data.features.insert(inst.data.features.end(), p.begin(), p.end());
  inst.z_bar.assign(inst.data.d, 0.0);
  for (const auto& p : points)
    for (int j = 0; j < inst.data.d; ++j) inst.z_bar[j] += p[j];
  for (auto& v : inst.z_bar) v /= static_cast<double>(inst.data.n);
  return inst;
}

}  // namespace

TEST_CASE("sign instance generator", "[hard-instances]") {
  SECTION("bias one puts every coordinate at +D/d") {
    auto inst = gen_sign_instance(16, 4, 2.0, BiasProfile::uniform(4, 1.0), 3);
    for (std::int64_t i = 0; i < inst.data.n; ++i)
      for (int j = 0; j < 4; ++j) CHECK(inst.data.point(i)[j] == Approx(0.5));
    for (int j = 0; j < 4; ++j) CHECK(inst.z_bar[j] == Approx(0.5));
  }
  SECTION("paired construction zeroes the mean exactly") {
    auto inst = gen_sign_instance(32, 5, 1.0, BiasProfile::paired_symmetric(5), 7);
    for (int j = 0; j < 5; ++j) CHECK(inst.z_bar[j] == 0.0);
  }
  SECTION("every coordinate is exactly +-D/d and the mean matches a recount") {
    auto inst = gen_sign_instance(64, 6, 3.0, BiasProfile::uniform(6, 0.3), 11);
    Vec recount(6, 0.0);
    for (std::int64_t i = 0; i < inst.data.n; ++i)
      for (int j = 0; j < 6; ++j) {
        CHECK(std::abs(inst.data.point(i)[j]) == Approx(0.5));
        recount[j] += inst.data.point(i)[j];
      }
    for (int j = 0; j < 6; ++j)
      CHECK(std::abs(recount[j] / 64.0 - inst.z_bar[j]) <= 1e-15);
  }
  SECTION("seeded reproducibility") {
    auto a = gen_sign_instance(32, 4, 1.0, BiasProfile::uniform(4, 0.6), 13);
    auto b = gen_sign_instance(32, 4, 1.0, BiasProfile::uniform(4, 0.6), 13);
    CHECK(a.data.features == b.data.features);
  }
}

TEST_CASE("sign error", "[hard-instances]") {
  auto inst = manual_instance({{1, -1}, {1, 1}, {1, -1}, {1, -1}, {1, 1}}, 2.0);
  // z_bar = (1, -0.2).
  SECTION("matching signs cost nothing") {
    CHECK(sign_error(Vec{0.3, -7.0}, inst) == 0.0);
  }
  SECTION("single mismatch pays the coordinate weight") {
    CHECK(sign_error(Vec{-2.0, -1.0}, inst) == Approx(1.0));
    CHECK(sign_error(Vec{1.0, 1.0}, inst) == Approx(0.2));
  }
  SECTION("invariant to positive scaling") {
    CounterRng rng(17);
    for (int t = 0; t < 200; ++t) {
      Vec x = {2 * rng.uniform01() - 1, 2 * rng.uniform01() - 1};
      CHECK(sign_error(x, inst) == sign_error(Vec{3 * x[0], 3 * x[1]}, inst));
    }
  }
  SECTION("agrees with an independent per-coordinate loop") {
    CounterRng rng(19);
    auto rnd = gen_sign_instance(21, 5, 1.5, BiasProfile::uniform(5, 0.45), 23);
    for (int t = 0; t < 500; ++t) {
      Vec x(5);
      for (auto& v : x) v = 2 * rng.uniform01() - 1;
      double oracle = 0;
      for (int j = 0; j < 5; ++j) {
        const double sx = x[j] < 0 ? -1 : 1;
        const double sz = rnd.z_bar[j] < 0 ? -1 : 1;
        if (sx != sz) oracle += std::abs(rnd.z_bar[j]);
      }
      CHECK(sign_error(x, rnd) == Approx(oracle).margin(1e-15));
    }
  }
}

TEST_CASE("median excess evaluator", "[hard-instances]") {
  SECTION("one dimension, frozen value") {
    auto inst = manual_instance({{1.0}, {1.0}}, 1.0);
    CHECK(l1_median_excess(Vec{-1.0}, inst, 1.0) == Approx(2.0));
    CHECK(l1_median_excess(Vec{-1.0}, inst, 2.5) == Approx(5.0));
    CHECK(l1_median_excess(Vec{1.0}, inst, 1.0) == 0.0);
  }
  SECTION("optimum is a zero of the evaluator") {
    auto inst = gen_sign_instance(40, 6, 2.0, BiasProfile::uniform(6, 0.35), 29);
    Vec x_star(6);
    for (int j = 0; j < 6; ++j) x_star[j] = sign_plus(inst.z_bar[j]) * 2.0 / 6.0;
    CHECK(l1_median_excess(x_star, inst, 1.0) == Approx(0.0).margin(1e-15));
  }
  SECTION("dominates L times the sign error") {
    auto inst = gen_sign_instance(30, 4, 1.0, BiasProfile::uniform(4, 0.4), 31);
    CounterRng rng(37);
    const double L = 1.7;
    for (int t = 0; t < 1000; ++t) {
      Vec x(4);
      for (auto& v : x) v = 2 * rng.uniform01() - 1;
      const double s = l1_norm(x);
      if (s > 1)
        for (auto& v : x) v /= s;
      CHECK(l1_median_excess(x, inst, L) >= L * sign_error(x, inst) - 1e-12);
    }
  }
  SECTION("infeasible point is rejected") {
    auto inst = manual_instance({{1.0}}, 1.0);
    CHECK_THROWS_AS(l1_median_excess(Vec{1.5}, inst, 1.0), std::invalid_argument);
  }
}

TEST_CASE("brute-force minimizer check at small scale", "[hard-instances]") {
  // All sign-count profiles (per-coordinate counts of +D/d) at d = 2, n = 5:
  // the grid minimizer of the empirical loss over the l1 ball must match the
  // median point sign(z_bar) D/d.
  const int d = 2;
  const std::int64_t n = 5;
  const double D = 1.0;
  auto fam = LossFamily::abs_l1(1.0);
  for (int c0 = 0; c0 <= n; ++c0) {
    for (int c1 = 0; c1 <= n; ++c1) {
      std::vector<Vec> pts;
      for (std::int64_t i = 0; i < n; ++i)
        pts.push_back({i < c0 ? D / d : -D / d, i < c1 ? D / d : -D / d});
      auto inst = manual_instance(pts, D);
      auto obj = [&](std::span<const double> x) {
        return empirical_loss(fam, Vec(x.begin(), x.end()), inst.data);
      };
      auto feasible = [&](std::span<const double> x) {
        double s = 0;
        for (double v : x) s += std::abs(v);
        return s <= D;
      };
      auto got = testing::grid_minimize(obj, feasible, d, D, 41, 4);
      Vec x_star(d);
      for (int j = 0; j < d; ++j) x_star[j] = sign_plus(inst.z_bar[j]) * D / d;
      // Ties (z_bar_j = 0) make the minimizer non-unique; compare values.
      CHECK(obj(x_star) <= got.value + 1e-3);
    }
  }
}

TEST_CASE("non-contractivity ratios", "[hard-instances]") {
  const auto small = md_counterexample_check(0.1);
  CHECK(small.l1 >= 1.025);
  CHECK(small.kl >= 1.025);
  const auto big = md_counterexample_check(1.0);
  CHECK(big.l1 >= 1.25);
  CHECK(big.kl >= 1.25);
  SECTION("ratios approach 1 from above as eta vanishes") {
    const auto tiny = md_counterexample_check(1e-4);
    CHECK(tiny.l1 > 1.0);
    CHECK(tiny.l1 < 1.001);
    CHECK(tiny.kl > 1.0);
    CHECK(tiny.kl < 1.001);
  }
  CHECK_THROWS_AS(md_counterexample_check(0.0), std::domain_error);
  CHECK_THROWS_AS(md_counterexample_check(1.5), std::domain_error);
}

TEST_CASE("shuffled-smd linear stability", "[hard-instances]") {
  SECTION("identical datasets do not diverge") {
    CHECK(md_linear_stability_check(16, 4, 2, 0.1, 0.0, 1) == 0.0);
  }
  SECTION("bound holds across seeds") {
    const double eta = 0.05, L = 1.0;
    const int R = 1;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const double div = md_linear_stability_check(12, 5, R, eta, L, seed);
      CHECK(div <= 4.0 * eta * eta * L * L * R * R);
    }
  }
  SECTION("doubling eta quadruples the bound and the value stays under it") {
    const double L = 1.0;
    const int R = 2;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const double v2 = md_linear_stability_check(10, 4, R, 0.2, L, seed);
      CHECK(v2 <= 4.0 * 0.2 * 0.2 * L * L * R * R);
    }
  }
}
