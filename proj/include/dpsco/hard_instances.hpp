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

#ifndef DPSCO_HARD_INSTANCES_HPP_
#define DPSCO_HARD_INSTANCES_HPP_

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "dpsco/geometry.hpp"
#include "dpsco/losses.hpp"
#include "dpsco/rng.hpp"

namespace dpsco {

// sign(0) = +1 throughout this module; the zero-mean ties it breaks carry
// weight |z_bar_j| = 0 in every quantity below.
inline double sign_plus(double v) { return v < 0 ? -1.0 : 1.0; }

// Dataset over {-D/d, +D/d}^d with its mean cached.
struct SignInstance {
  Dataset data;
  double D;
  Vec z_bar;

  int dim() const { return data.d; }
};

struct BiasProfile {
  Vec probs;           // per-coordinate P(z_j = +D/d); scalar profile = all equal
  bool paired = false;  // n even: draw in (z, -z) pairs so z_bar = 0 exactly

  static BiasProfile uniform(int d, double prob) { return {Vec(d, prob), false}; }
  static BiasProfile paired_symmetric(int d) { return {Vec(d, 0.5), true}; }
};

inline SignInstance gen_sign_instance(std::int64_t n, int d, double D, const BiasProfile& bias,
                                      std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("gen_sign_instance: n, d >= 1");
  if (bias.paired && n % 2 != 0)
    throw std::invalid_argument("gen_sign_instance: paired profile needs even n");
  SignInstance inst;
  inst.D = D;
  inst.data.n = n;
  inst.data.d = d;
  inst.data.features.resize(static_cast<std::size_t>(n) * d);
  inst.data.meta = {{"family", "sign"}, {"D", D}, {"seed", seed}};
  CounterRng rng(seed, /*stream=*/0x51a);
  const double c = D / d;
  for (std::int64_t i = 0; i < n; ++i) {
    double* row = inst.data.features.data() + i * d;
    if (bias.paired && i % 2 == 1) {
      const double* prev = row - d;
      for (int j = 0; j < d; ++j) row[j] = -prev[j];
    } else {
      for (int j = 0; j < d; ++j) row[j] = rng.uniform01() < bias.probs[j] ? c : -c;
    }
  }
  inst.z_bar.assign(d, 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    auto z = inst.data.point(i);
    for (int j = 0; j < d; ++j) inst.z_bar[j] += z[j];
  }
  for (int j = 0; j < d; ++j) inst.z_bar[j] /= static_cast<double>(n);
  return inst;
}

// Weighted sign-mismatch error sum_j |z_bar_j| [sign(x_j) != sign(z_bar_j)].
inline double sign_error(std::span<const double> x_hat, const SignInstance& inst) {
  if (static_cast<int>(x_hat.size()) != inst.dim())
    throw std::invalid_argument("sign_error: dimension mismatch");
  double s = 0;
  for (int j = 0; j < inst.dim(); ++j)
    if (sign_plus(x_hat[j]) != sign_plus(inst.z_bar[j])) s += std::abs(inst.z_bar[j]);
  return s;
}

// Exact excess empirical loss of x_hat for f(x; z) = L ||x - z||_1 over the l1
// ball of radius D. The per-coordinate median sign(z_bar_j) D/d has l1 norm
// exactly D, so the separable minimum is feasible and hence the constrained
// minimum; no search is needed.
inline double l1_median_excess(std::span<const double> x_hat, const SignInstance& inst,
                               double L) {
  if (l1_norm(x_hat) > inst.D + 1e-9)
    throw std::invalid_argument("l1_median_excess: x_hat outside the l1 ball");
  const LossFamily family = LossFamily::abs_l1(L);
  Vec x_star(inst.dim());
  for (int j = 0; j < inst.dim(); ++j) x_star[j] = sign_plus(inst.z_bar[j]) * inst.D / inst.dim();
  return empirical_loss(family, x_hat, inst.data) - empirical_loss(family, x_star, inst.data);
}

struct ContractionRatios {
  double l1;
  double kl;
};

inline double kl_divergence(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] == 0) continue;
    s += a[j] * std::log(a[j] / b[j]);
  }
  return s;
}

// The non-contractivity construction: f(x) = -x_2 - x_3 on the 2-simplex with
// starting points x0 = (1 - 3/n, 1/n, 2/n), y0 = (1 - 3/n, 2/n, 1/n) and
// n = ceil(100 (e^eta - 1) / eta). Returns the l1 and KL expansion ratios of
// one entropic step; both exceed 1 + eta/4.
inline ContractionRatios md_counterexample_check(double eta) {
  if (!(eta > 0) || eta > 1) throw std::domain_error("md_counterexample_check: 0 < eta <= 1");
  const double n = std::ceil(100.0 * (std::exp(eta) - 1.0) / eta);
  const Vec x0 = {1.0 - 3.0 / n, 1.0 / n, 2.0 / n};
  const Vec y0 = {1.0 - 3.0 / n, 2.0 / n, 1.0 / n};
  const Vec g = {0.0, -1.0, -1.0};
  const Vec x1 = entropic_md_step(x0, g, eta);
  const Vec y1 = entropic_md_step(y0, g, eta);

  double l1_before = 0, l1_after = 0;
  for (int j = 0; j < 3; ++j) {
    l1_before += std::abs(x0[j] - y0[j]);
    l1_after += std::abs(x1[j] - y1[j]);
  }
  const double kl_before = kl_divergence(x0, y0);
  const double kl_after = kl_divergence(x1, y1);
  return {l1_after / l1_before, kl_after / kl_before};
}

// Shuffled stochastic mirror descent on the simplex with linear losses
// f(x; z) = <z, x>: runs R passes over a random permutation per pass, coupling
// two neighboring datasets (differing in point 0) to the same permutations.
// Returns ||x_T - y_T||_1^2, which the stability bound caps at 4 eta^2 L^2 R^2.
inline double md_linear_stability_check(std::int64_t n, int d, int R, double eta, double L,
                                        std::uint64_t seed) {
  if (n < 1 || d < 2 || R < 1) throw std::invalid_argument("md_linear_stability_check: bad sizes");
  CounterRng data_rng(seed, /*stream=*/0xa2);
  // z entries uniform in [-L, L]; the neighboring dataset redraws point 0.
  std::vector<Vec> z(n, Vec(d));
  for (auto& row : z)
    for (double& v : row) v = L * (2.0 * data_rng.uniform01() - 1.0);
  Vec z0_prime(d);
  for (double& v : z0_prime) v = L * (2.0 * data_rng.uniform01() - 1.0);

  Vec x(d, 1.0 / d), y(d, 1.0 / d);
  CounterRng perm_rng(seed, /*stream=*/0xa3);
  std::vector<std::int64_t> perm(n);
  for (int r = 0; r < R; ++r) {
    std::iota(perm.begin(), perm.end(), 0);
    perm_rng.shuffle(perm);
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int64_t idx = perm[i];
      x = entropic_md_step(x, z[idx], eta);
      y = entropic_md_step(y, idx == 0 ? z0_prime : z[idx], eta);
    }
  }
  double l1 = 0;
  for (int j = 0; j < d; ++j) l1 += std::abs(x[j] - y[j]);
  return l1 * l1;
}

}  // namespace dpsco

#endif  // DPSCO_HARD_INSTANCES_HPP_
