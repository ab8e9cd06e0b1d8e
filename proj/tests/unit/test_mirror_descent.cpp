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

#include "dpsco/mirror_descent.hpp"

#include <cmath>

#include "catch2/catch_amalgamated.hpp"
#include "../support/oracles.hpp"

using namespace dpsco;
using Catch::Approx;

TEST_CASE("step formulas", "[mirror-descent]") {
  CHECK(default_step_convex(1.0, 2.0, 0.0, 8, 100.0) == Approx(1.0 / (2.0 * 10.0)));
  // D=1, L=1, sigma=1, d=e, T=4: 1 / (2 sqrt(3)).
  CHECK(default_step_convex(1.0, 1.0, 1.0, std::exp(1.0), 4.0) ==
        Approx(1.0 / (2.0 * std::sqrt(3.0))).epsilon(1e-12));
  CHECK(default_step_convex(3.0, 1.0, 0.5, 8, 64.0) ==
        Approx(3.0 * default_step_convex(1.0, 1.0, 0.5, 8, 64.0)));

  CHECK(default_step_sc(1.0, 1) == Approx(1.0));
  CHECK(default_step_sc(2.0, 3) == Approx(0.25));
  CHECK(default_step_sc(1.0, 1000000) == Approx(2.0 / 1000001.0));
  CHECK_THROWS_AS(default_step_sc(0.0, 1), std::domain_error);
}

namespace {

MdConfig basic_config(int d, double p, std::int64_t T, std::int64_t b, double eta) {
  MdConfig cfg{LpGeometry(p), ConstraintSet::lp_ball(d, p, 1.0)};
  cfg.iterations = T;
  cfg.batch = b;
  cfg.steps = StepSchedule::constant(eta);
  return cfg;
}

}  // namespace

TEST_CASE("degenerate runs", "[mirror-descent]") {
  auto fam = LossFamily::linear(1.0);
  Dataset ds = gen_linear_instance(16, 2, 1.0, 5);
  SECTION("T = 1 returns the initial point") {
    MdConfig cfg = basic_config(2, 2.0, 1, 4, 1e-9);
    MdResult r = noisy_md(fam, ds, cfg, Vec{0.1, -0.2});
    CHECK(r.x[0] == 0.1);
    CHECK(r.x[1] == -0.2);
  }
  SECTION("infeasible start") {
    MdConfig cfg = basic_config(2, 2.0, 4, 4, 0.1);
    CHECK_THROWS_AS(noisy_md(fam, ds, cfg, Vec{2.0, 0.0}), std::invalid_argument);
  }
  SECTION("sigma inconsistent with the budget") {
    MdConfig cfg = basic_config(2, 2.0, 4, 4, 0.1);
    cfg.sigma_form = SigmaForm::kL1;
    cfg.sigma = 0.123;  // not the calibrated value
    cfg.delta = 1e-6;
    CHECK_THROWS_AS(noisy_md(fam, ds, cfg, Vec{0.0, 0.0}), ParameterizationError);
    cfg.sigma_form = SigmaForm::kNonPrivate;
    cfg.sigma = 0.5;
    CHECK_THROWS_AS(noisy_md(fam, ds, cfg, Vec{0.0, 0.0}), ParameterizationError);
  }
}

TEST_CASE("iterate feasibility and determinism", "[mirror-descent]") {
  auto fam = LossFamily::linear(1.0);
  const int d = 4;
  Dataset ds = gen_linear_instance(64, d, 1.0, 7);
  MdConfig cfg{LpGeometry(1.5), ConstraintSet::l1_ball(d, 1.0)};
  cfg.iterations = 200;
  cfg.batch = 8;
  cfg.steps = StepSchedule::constant(0.25);
  cfg.sigma_form = SigmaForm::kL1;
  cfg.delta = 1e-6;
  cfg.epsilon = 1.0;
  cfg.lipschitz = 1.0;
  cfg.sigma = sigma_noisy_md(1.0, d, 1e-6, 8, 1.0);
  cfg.seed = 99;
  cfg.trace_stride = 1;

  auto ball = cfg.constraint;
  int checked = 0;
  auto feasibility_probe = [&](std::span<const double> x) {
    ++checked;
    REQUIRE(ball.contains(x, 1e-8));
    return 0.0;
  };
  MdResult r1 = noisy_md(fam, ds, cfg, Vec(d, 0.0), feasibility_probe);
  CHECK(checked == 200);
  CHECK(ball.contains(r1.x, 1e-8));

  MdResult r2 = noisy_md(fam, ds, cfg, Vec(d, 0.0));
  CHECK(r1.x == r2.x);  // bit-identical
  CHECK(r1.grad_count == r2.grad_count);
  CHECK(r1.grad_count == 200 * 8);
}

TEST_CASE("noise accounting audit", "[mirror-descent]") {
  // Exactly b Gaussian d-vectors per iteration, folded into the batch mean.
  auto fam = LossFamily::linear(1.0);
  const int d = 6;  // even: each vector consumes d uniforms via Box-Muller
  const std::int64_t T = 20, b = 8;
  Dataset ds = gen_linear_instance(32, d, 1.0, 11);
  MdConfig cfg{LpGeometry(2.0), ConstraintSet::lp_ball(d, 2.0, 1.0)};
  cfg.iterations = T;
  cfg.batch = b;
  cfg.steps = StepSchedule::constant(0.05);
  cfg.sigma_form = SigmaForm::kLp;
  cfg.delta = 1e-5;
  cfg.epsilon = 2.0;
  cfg.lipschitz = 1.0;
  cfg.sigma = sigma_noisy_md(1.0, d, 1e-5, static_cast<double>(b), 2.0, 100.0, 2.0);
  MdResult r = noisy_md(fam, ds, cfg, Vec(d, 0.0));
  CHECK(r.noise_vectors == T * b);
  // Per iteration: b index draws + b vectors each d uniforms (d even).
  CHECK(r.rng_draws == static_cast<std::uint64_t>(T * (b + b * d)));
  CHECK(r.effective_sigma == Approx(cfg.sigma / std::sqrt(static_cast<double>(b))));
}

TEST_CASE("convex-mode rate on linear losses", "[mirror-descent]") {
  // sigma = 0, theorem step: excess <= 2 D L / sqrt(T) on the l2 ball.
  const int d = 8;
  const double D = 1.0;
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull, 6ull, 7ull, 8ull, 9ull, 10ull}) {
    Dataset ds = gen_linear_instance(512, d, 1.0, seed);
    auto fam = LossFamily::linear(1.0);
    const double L = fam.lipschitz(2.0, d);  // l2 dual bound
    const std::int64_t T = 400;
    MdConfig cfg{LpGeometry(2.0), ConstraintSet::lp_ball(d, 2.0, D)};
    cfg.iterations = T;
    cfg.batch = 256;
    cfg.steps = StepSchedule::constant(
        default_step_convex(D, L, 0.0, d, static_cast<double>(T), 2.0));
    cfg.seed = seed;
    MdResult r = noisy_md(fam, ds, cfg, Vec(d, 0.0));

    Vec gbar(d, 0.0);
    for (std::int64_t i = 0; i < ds.n; ++i)
      for (int j = 0; j < d; ++j) gbar[j] += ds.point(i)[j];
    for (int j = 0; j < d; ++j) gbar[j] /= static_cast<double>(ds.n);
    const double excess = dot(gbar, r.x) + D * lp_norm(gbar, 2.0);
    CHECK(excess <= 2.0 * D * L / std::sqrt(static_cast<double>(T)));
    // The average approaches the boundary minimizer -D g/||g||.
    const double align = -dot(gbar, r.x) / (lp_norm(gbar, 2.0) * std::max(lp_norm(r.x, 2.0), 1e-12));
    CHECK(align > 0.9);
  }
}

TEST_CASE("strongly convex mode converges at 1/T", "[mirror-descent]") {
  // Regularized quadratic with an exactly solvable minimizer; the weighted
  // average should roughly halve its excess when T doubles.
  const int d = 3;
  const double w = 0.5;  // regularization weight = relative strong convexity
  Dataset ds = gen_quadratic_instance(256, d, 1.0, 1.0, 31);
  auto fam = LossFamily::quadratic(1.0, 1.0);
  RegularizedLoss reg{&fam, w, Vec(d, 0.0), 2.0};

  // Exact minimizer of (1/n) sum (a^T x - b)^2 + w ||x||^2 by solving the
  // normal equations with a tiny dense elimination.
  Vec M(d * d, 0.0), rhs(d, 0.0);
  for (std::int64_t i = 0; i < ds.n; ++i) {
    auto a = ds.point(i);
    for (int r = 0; r < d; ++r) {
      rhs[r] += ds.scalar(i) * a[r];
      for (int c = 0; c < d; ++c) M[r * d + c] += a[r] * a[c];
    }
  }
  for (int r = 0; r < d; ++r) {
    rhs[r] /= static_cast<double>(ds.n);
    for (int c = 0; c < d; ++c) M[r * d + c] /= static_cast<double>(ds.n);
    M[r * d + r] += w;
  }
  Vec x_star(d, 0.0);
  {  // Gaussian elimination, d = 3.
    Vec A = M, bvec = rhs;
    for (int col = 0; col < d; ++col) {
      int piv = col;
      for (int r = col + 1; r < d; ++r)
        if (std::abs(A[r * d + col]) > std::abs(A[piv * d + col])) piv = r;
      for (int c = 0; c < d; ++c) std::swap(A[col * d + c], A[piv * d + c]);
      std::swap(bvec[col], bvec[piv]);
      for (int r = 0; r < d; ++r) {
        if (r == col) continue;
        const double f = A[r * d + col] / A[col * d + col];
        for (int c = 0; c < d; ++c) A[r * d + c] -= f * A[col * d + c];
        bvec[r] -= f * bvec[col];
      }
    }
    for (int r = 0; r < d; ++r) x_star[r] = bvec[r] / A[r * d + r];
  }
  const double f_star = empirical_loss(reg, x_star, ds);

  auto run_excess = [&](std::int64_t T, std::uint64_t seed) {
    MdConfig cfg{LpGeometry(2.0), ConstraintSet::lp_ball(d, 2.0, 4.0)};
    cfg.iterations = T;
    cfg.batch = 4;
    cfg.steps = StepSchedule::strongly_convex(w);
    cfg.averaging = Averaging::kWeightedByK;
    cfg.seed = seed;
    MdResult r = noisy_md(reg, ds, cfg, Vec(d, 0.0));
    return empirical_loss(reg, r.x, ds) - f_star;
  };

  std::vector<double> ratios;
  for (std::uint64_t seed = 0; seed < 30; ++seed)
    ratios.push_back(run_excess(1024, seed) / run_excess(512, seed));
  const double med = testing::median(ratios);
  CHECK(med > 0.3);
  CHECK(med < 0.7);
}
