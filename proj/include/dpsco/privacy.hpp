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

#ifndef DPSCO_PRIVACY_HPP_
#define DPSCO_PRIVACY_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "dpsco/rng.hpp"

namespace dpsco {

struct PrivacyBudget {
  double epsilon;
  double delta;

  PrivacyBudget(double eps, double del) : epsilon(eps), delta(del) {
    if (!(eps > 0)) throw std::domain_error("PrivacyBudget: epsilon must be positive");
    if (del < 0 || del >= 1) throw std::domain_error("PrivacyBudget: delta must be in [0, 1)");
  }

  bool pure() const { return delta == 0; }
};

// Parameterization errors carry the violated inequality by name.
struct ParameterizationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Gaussian scale for the noisy mirror-descent gradient:
//   sigma = constant * L * sqrt(d_eff * log(1/delta)) / (b * epsilon),
// where d_eff = d for the l1 route and d^{1-2/q} for the general-geometry
// route (pass q; q = infinity selects the l1 form). The leading constant is an
// analysis artifact, exposed as a knob and recorded in outputs.
inline double sigma_noisy_md(double L, double d, double delta, double b, double epsilon,
                             double constant = 100.0, double q = kInfinity) {
  if (L < 0) throw std::domain_error("sigma_noisy_md: L must be nonnegative");
  if (L == 0) return 0.0;
  if (!(d > 0) || !(b > 0) || !(epsilon > 0))
    throw std::domain_error("sigma_noisy_md: d, b, epsilon must be positive");
  if (!(delta > 0) || delta >= 1)
    throw std::domain_error("sigma_noisy_md: the Gaussian mechanism needs delta in (0, 1)");
  const double d_eff = std::isinf(q) ? d : std::pow(d, 1.0 - 2.0 / q);
  return constant * L * std::sqrt(d_eff * std::log(1.0 / delta)) / (b * epsilon);
}

// Laplace scale for the pure-DP tree selection at phase t:
//   lambda = 2 L D 2^t / (b epsilon), valid while 2^T <= b.
inline double lambda_pure_fw(double L, double D, int t, double b, double epsilon) {
  if (!(L > 0) || !(D > 0) || !(b > 0) || !(epsilon > 0))
    throw std::domain_error("lambda_pure_fw: positive inputs required");
  const double two_t = std::ldexp(1.0, t);
  if (two_t > b)
    throw ParameterizationError("lambda_pure_fw: requires 2^t <= b, got 2^" + std::to_string(t) +
                                " > b = " + std::to_string(b));
  return 2.0 * L * D * two_t / (b * epsilon);
}

// Laplace scale for the approximate-DP tree selection:
//   lambda = L D 2^{T/2} log(n/delta) / (b epsilon),
// valid while delta <= 1/n and epsilon <= sqrt(2^{-T} log(1/delta)).
inline double lambda_approx_fw(double L, double D, int T, double n, double delta, double b,
                               double epsilon) {
  if (!(L > 0) || !(D > 0) || !(b > 0) || !(epsilon > 0) || !(n > 0) || !(delta > 0))
    throw std::domain_error("lambda_approx_fw: positive inputs required");
  if (delta > 1.0 / n)
    throw ParameterizationError("lambda_approx_fw: requires delta <= 1/n");
  const double cap = std::sqrt(std::ldexp(1.0, -T) * std::log(1.0 / delta));
  if (epsilon > cap)
    throw ParameterizationError(
        "lambda_approx_fw: requires epsilon <= sqrt(2^{-T} log(1/delta)) = " +
        std::to_string(cap));
  return L * D * std::exp2(0.5 * T) * std::log(n / delta) / (b * epsilon);
}

// Index of the minimum of scores_i + Laplace(scale) noise; scale 0 is the
// exact argmin with first-index tie break.
inline int report_noisy_max(std::span<const double> scores, double laplace_scale,
                            CounterRng& rng) {
  if (scores.empty()) throw std::invalid_argument("report_noisy_max: empty scores");
  int best = 0;
  double best_v = kInfinity;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double noise = laplace_scale > 0 ? rng.laplace(laplace_scale) : 0.0;
    const double v = scores[i] + noise;
    if (v < best_v) {
      best_v = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

// k-fold composition of epsilon-DP mechanisms.
inline double compose_basic(int k, double epsilon) {
  if (k < 0) throw std::domain_error("compose_basic: k must be nonnegative");
  return k * epsilon;
}

struct ComposedBudget {
  double epsilon;
  double delta;
};

// Advanced composition of k (epsilon, delta)-DP mechanisms with slack delta':
//   (sqrt(2k log(1/delta')) eps + k eps (e^eps - 1), delta' + k delta).
inline ComposedBudget compose_advanced(int k, double epsilon, double delta, double delta_prime) {
  if (k < 1) throw std::domain_error("compose_advanced: k must be >= 1");
  if (!(delta_prime > 0) || delta_prime >= 1)
    throw std::domain_error("compose_advanced: delta' must be in (0, 1)");
  const double eps_total = std::sqrt(2.0 * k * std::log(1.0 / delta_prime)) * epsilon +
                           k * epsilon * (std::exp(epsilon) - 1.0);
  return {eps_total, delta_prime + k * delta};
}

// Amplification-by-shuffling budget, c * eps0 * sqrt(log(1/delta) / n). The
// constant hides the lemma's O(.); it is advisory bookkeeping, not a certified
// bound, and defaults to 8.
inline double shuffle_amplified_epsilon(double epsilon0, double n, double delta,
                                        double constant = 8.0) {
  if (epsilon0 < 0) throw std::domain_error("shuffle_amplified_epsilon: epsilon0 >= 0");
  if (epsilon0 == 0) return 0.0;
  if (!(n > 0) || !(delta > 0) || delta >= 1)
    throw std::domain_error("shuffle_amplified_epsilon: n > 0, delta in (0, 1)");
  const double cap = std::log(n / (16.0 * std::log(2.0 / delta)));
  if (epsilon0 > cap)
    throw ParameterizationError(
        "shuffle_amplified_epsilon: requires epsilon0 <= log(n / (16 log(2/delta))) = " +
        std::to_string(cap));
  return constant * epsilon0 * std::sqrt(std::log(1.0 / delta) / n);
}

}  // namespace dpsco

#endif  // DPSCO_PRIVACY_HPP_
